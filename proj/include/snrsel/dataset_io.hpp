#pragma once

#include <cstdint>
#include <filesystem>

#include "snrsel/dataset.hpp"

namespace snrsel {

/// Dataset container: `<name>.bin` holds little-endian float32 I/Q pairs,
/// frame-major; `<name>.meta.json` records classes, grid, frame count, the
/// frame ordering, the generating spec (if any) and a CRC-32 of the payload.
std::filesystem::path sidecar_path(const std::filesystem::path& container);

/// CRC-32 (zlib polynomial) of the serialized payload.
std::uint32_t payload_checksum(const Dataset& dataset);

void export_dataset(const Dataset& dataset, const std::filesystem::path& container);

/// Reads a container written by export_dataset or by an external tool.
/// Failures raise DataError with kChecksum, kTruncated, kConsistency,
/// kFormat or kNonFinite; a missing file raises IoError.
Dataset import_dataset(const std::filesystem::path& container);

}  // namespace snrsel

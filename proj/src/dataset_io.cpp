#include "snrsel/dataset_io.hpp"

#include <zlib.h>

#include <cmath>
#include <fstream>

#include "snrsel/config.hpp"
#include "snrsel/error.hpp"

namespace snrsel {

namespace {

constexpr const char* kFormat = "snrsel-dataset";
constexpr int kVersion = 1;

std::vector<unsigned char> serialize(const Dataset& ds) {
    std::vector<unsigned char> bytes;
    bytes.reserve(ds.frames.size() * ds.frame_len * 8);
    auto put = [&](float v) {
        std::uint32_t u;
        std::memcpy(&u, &v, 4);
        for (int b = 0; b < 4; ++b) bytes.push_back(static_cast<unsigned char>(u >> (8 * b)));
    };
    for (const auto& f : ds.frames)
        for (const auto& s : f.iq) {
            put(s.real());
            put(s.imag());
        }
    return bytes;
}

std::uint32_t crc32_of(const std::vector<unsigned char>& bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - pos, 1u << 30));
        crc = crc32(crc, bytes.data() + pos, chunk);
        pos += chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

bool is_lattice(const Dataset& ds, std::size_t& frames_per_cell) {
    const std::size_t cells = ds.n_cells();
    if (cells == 0 || ds.frames.size() % cells != 0) return false;
    frames_per_cell = ds.frames.size() / cells;
    for (std::size_t i = 0; i < ds.frames.size(); ++i) {
        const std::size_t cell = i / frames_per_cell;
        if (std::size_t(ds.frames[i].label) != cell / ds.grid.size()) return false;
        if (ds.grid.index_of(ds.frames[i].snr_db) != cell % ds.grid.size()) return false;
    }
    return true;
}

[[noreturn]] void consistency(const std::string& msg) { throw DataError(DataErrorCode::kConsistency, msg); }

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& container) {
    auto p = container;
    p.replace_extension(".meta.json");
    return p;
}

std::uint32_t payload_checksum(const Dataset& dataset) { return crc32_of(serialize(dataset)); }

void export_dataset(const Dataset& ds, const std::filesystem::path& container) {
    for (const auto& f : ds.frames)
        if (f.iq.size() != ds.frame_len) throw InputError("export_dataset: frame length mismatch");
    const auto bytes = serialize(ds);
    {
        std::ofstream out(container, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open for writing: " + container.string());
        out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
        if (!out) throw IoError("write failed: " + container.string());
    }

    Json meta;
    meta["format"] = kFormat;
    meta["version"] = kVersion;
    meta["sample_format"] = "complex64-le-interleaved";
    meta["frame_len"] = ds.frame_len;
    meta["frame_count"] = ds.frames.size();
    meta["classes"] = ds.class_names;
    meta["grid"] = ds.grid;
    std::size_t fpc = 0;
    if (is_lattice(ds, fpc)) {
        meta["ordering"] = "lattice";
        meta["frames_per_cell"] = fpc;
    } else {
        meta["ordering"] = "explicit";
        Json labels = Json::array(), snrs = Json::array();
        for (const auto& f : ds.frames) {
            labels.push_back(f.label);
            snrs.push_back(f.snr_db);
        }
        meta["labels"] = labels;
        meta["snr_db"] = snrs;
    }
    meta["spec"] = ds.spec ? Json(*ds.spec) : Json(nullptr);
    char hex[11];
    std::snprintf(hex, sizeof hex, "0x%08x", crc32_of(bytes));
    meta["checksum"] = {{"algorithm", "crc32"}, {"value", hex}};
    write_text_file(sidecar_path(container), meta.dump(2) + "\n");
}

Dataset import_dataset(const std::filesystem::path& container) {
    const auto meta_path = sidecar_path(container);
    if (!std::filesystem::exists(meta_path)) throw IoError("missing sidecar " + meta_path.string());
    if (!std::filesystem::exists(container)) throw IoError("missing container " + container.string());
    const Json meta = read_json_file(meta_path);

    Dataset ds;
    std::size_t frame_count = 0;
    std::string ordering, checksum;
    Json labels, snrs;
    std::size_t fpc = 0;
    try {
        if (meta.at("format").get<std::string>() != kFormat) throw DataError(DataErrorCode::kFormat, "not a dataset sidecar");
        ds.frame_len = meta.at("frame_len").get<std::size_t>();
        frame_count = meta.at("frame_count").get<std::size_t>();
        ds.class_names = meta.at("classes").get<std::vector<std::string>>();
        ordering = meta.at("ordering").get<std::string>();
        checksum = meta.at("checksum").at("value").get<std::string>();
        if (ordering == "lattice") fpc = meta.at("frames_per_cell").get<std::size_t>();
        else if (ordering == "explicit") {
            labels = meta.at("labels");
            snrs = meta.at("snr_db");
        } else {
            throw DataError(DataErrorCode::kFormat, "unknown ordering '" + ordering + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(DataErrorCode::kFormat, std::string("dataset sidecar: ") + e.what());
    }
    try {
        ds.grid = meta.at("grid").get<SnrGrid>();
    } catch (const ValidationError& e) {
        throw DataError(DataErrorCode::kFormat, std::string("dataset sidecar grid: ") + e.what());
    }
    if (ds.frame_len == 0 || ds.class_names.empty()) consistency("empty class list or zero frame length");

    if (ordering == "lattice") {
        if (frame_count != ds.class_names.size() * ds.grid.size() * fpc)
            consistency("frame_count " + std::to_string(frame_count) + " != classes x grid x frames_per_cell");
    } else if (labels.size() != frame_count || snrs.size() != frame_count) {
        consistency("label/SNR arrays do not match frame_count");
    }
    if (meta.contains("spec") && !meta["spec"].is_null()) {
        DatasetSpec spec;
        try {
            spec = meta["spec"].get<DatasetSpec>();
        } catch (const ValidationError& e) {
            throw DataError(DataErrorCode::kFormat, std::string("dataset sidecar spec: ") + e.what());
        }
        if (!(spec.grid == ds.grid) || spec.frame_len != ds.frame_len || spec.classes.size() != ds.class_names.size())
            consistency("embedded spec disagrees with sidecar grid/classes");
        for (std::size_t c = 0; c < spec.classes.size(); ++c)
            if (to_string(spec.classes[c]) != ds.class_names[c]) consistency("embedded spec class list differs");
        if (ordering == "lattice" && spec.frames_per_cell != fpc) consistency("embedded spec frames_per_cell differs");
        ds.spec = spec;
    }

    std::ifstream in(container, std::ios::binary);
    if (!in) throw IoError("cannot open " + container.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::size_t frame_bytes = ds.frame_len * 8;
    if (bytes.size() % frame_bytes != 0)
        throw DataError(DataErrorCode::kTruncated, "payload of " + std::to_string(bytes.size()) +
                                                       " bytes is not a whole number of frames");
    if (bytes.size() / frame_bytes != frame_count)
        consistency("payload holds " + std::to_string(bytes.size() / frame_bytes) + " frames, sidecar claims " +
                    std::to_string(frame_count));
    char hex[11];
    std::snprintf(hex, sizeof hex, "0x%08x", crc32_of(bytes));
    if (checksum != hex) throw DataError(DataErrorCode::kChecksum, "payload crc32 " + std::string(hex) + ", sidecar " + checksum);

    ds.frames.resize(frame_count);
    std::size_t pos = 0;
    auto get = [&] {
        std::uint32_t u = 0;
        for (int b = 0; b < 4; ++b) u |= std::uint32_t(bytes[pos++]) << (8 * b);
        float v;
        std::memcpy(&v, &u, 4);
        return v;
    };
    const std::size_t n_grid = ds.grid.size();
    for (std::size_t i = 0; i < frame_count; ++i) {
        Frame& f = ds.frames[i];
        f.iq.resize(ds.frame_len);
        for (auto& s : f.iq) {
            const float re = get();
            const float im = get();
            if (!std::isfinite(re) || !std::isfinite(im))
                throw DataError(DataErrorCode::kNonFinite, "frame " + std::to_string(i));
            s = Sample(re, im);
        }
        f.frame_id = std::int64_t(i);
        if (ordering == "lattice") {
            const std::size_t cell = i / fpc;
            f.label = int(cell / n_grid);
            f.snr_db = ds.grid[cell % n_grid];
            if (ds.spec)
                f.seed_path = {std::int64_t(ds.spec->master_seed), std::int64_t(cell / n_grid),
                               std::int64_t(cell % n_grid), std::int64_t(i % fpc)};
        } else {
            f.label = labels[i].get<int>();
            f.snr_db = snrs[i].get<double>();
            if (f.label < 0 || std::size_t(f.label) >= ds.class_names.size()) consistency("label out of range");
            if (!ds.grid.contains(f.snr_db)) consistency("frame SNR off grid");
        }
    }
    return ds;
}

}  // namespace snrsel

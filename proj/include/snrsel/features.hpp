#pragma once

#include <complex>
#include <span>
#include <vector>

#include "snrsel/dataset.hpp"

namespace snrsel {

enum class Normalization { kNone, kPerFrame, kGlobal };

std::string to_string(Normalization n);
Normalization parse_normalization(const std::string& name);

struct PipelineConfig {
    bool use_fft = false;
    Normalization normalization = Normalization::kPerFrame;
    bool operator==(const PipelineConfig&) const = default;
};

enum class Domain { kTime, kFrequency };

/// 2 x N real matrix stored row-major: row 0 real parts, row 1 imaginary parts.
struct FeatureMatrix {
    std::vector<double> values;
    std::size_t length = 0;
    Domain domain = Domain::kTime;

    std::size_t dim() const noexcept { return values.size(); }
    double re(std::size_t k) const { return values[k]; }
    double im(std::size_t k) const { return values[length + k]; }
};

/// Per-dimension statistics over a training split (global standardization).
struct FeatureStats {
    std::vector<double> mean;
    std::vector<double> stddev;
    bool operator==(const FeatureStats&) const = default;
};

inline constexpr double kStdFloor = 1e-8;

/// Unitary DFT with DC moved to bin N/2 (fftshift ordering).
std::vector<std::complex<double>> centered_dft(std::span<const std::complex<double>> x);
/// Inverse of centered_dft.
std::vector<std::complex<double>> inverse_centered_dft(std::span<const std::complex<double>> bins);

/// Raw I/Q or spectrum of a frame, then normalization. Global normalization
/// requires stats. Throws DataError on non-finite samples.
FeatureMatrix to_feature(const Frame& frame, const PipelineConfig& cfg,
                         const FeatureStats* stats = nullptr);

/// Mean and std (population, floored at kStdFloor) of the pre-normalization
/// features over `frames`.
FeatureStats fit_stats(std::span<const Frame> frames, const PipelineConfig& cfg);

/// Statistics over dataset[indices]. Every index must belong to split.train;
/// validation or test indices are rejected with InputError.
FeatureStats fit_stats(const Dataset& dataset, const IndexSet& indices, const Split& split,
                       const PipelineConfig& cfg);

}  // namespace snrsel

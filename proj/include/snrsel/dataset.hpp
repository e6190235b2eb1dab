#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace snrsel {

/// Modulation classes. Eight digital followed by two analog.
enum class ModType {
    kBpsk,
    kQpsk,
    k8psk,
    kPam4,
    kQam16,
    kQam64,
    kGfsk,
    kCpfsk,
    kAmDsb,
    kWbfm,
};

inline constexpr ModType kAllModTypes[] = {
    ModType::kBpsk,  ModType::kQpsk,  ModType::k8psk, ModType::kPam4,  ModType::kQam16,
    ModType::kQam64, ModType::kGfsk,  ModType::kCpfsk, ModType::kAmDsb, ModType::kWbfm,
};

std::string to_string(ModType mod);
/// Throws ValidationError for an unknown name.
ModType parse_mod_type(const std::string& name);
bool is_analog(ModType mod) noexcept;

/// Ordered, uniformly spaced SNR values in dB.
class SnrGrid {
public:
    SnrGrid() : SnrGrid(-20.0, 2.0, 20) {}
    /// Grid of `count` values start, start+step, ... Throws on step <= 0 or count == 0.
    SnrGrid(double start_db, double step_db, std::size_t count);

    /// The -20..18 dB, 2 dB grid.
    static SnrGrid standard();
    /// Accepts an explicit list; it must be strictly increasing with a uniform step.
    static SnrGrid from_values(const std::vector<double>& values);

    double start() const noexcept { return start_; }
    double step() const noexcept { return step_; }
    std::size_t size() const noexcept { return count_; }
    double operator[](std::size_t i) const noexcept { return start_ + step_ * double(i); }
    std::vector<double> values() const;

    /// Index of an on-grid value, nullopt when off grid. No rounding beyond 1e-9 dB.
    std::optional<std::size_t> index_of(double snr_db) const noexcept;
    bool contains(double snr_db) const noexcept { return index_of(snr_db).has_value(); }

    bool operator==(const SnrGrid&) const = default;

private:
    double start_;
    double step_;
    std::size_t count_;
};

using Sample = std::complex<float>;

struct Frame {
    std::vector<Sample> iq;
    int label = 0;  ///< index into the owning dataset's class list
    double snr_db = 0.0;
    std::int64_t frame_id = 0;
    /// (master_seed, class index, snr index, index within cell)
    std::vector<std::int64_t> seed_path;
};

/// Simplified channel and hardware impairments, applied in the order
/// timing offset, carrier frequency offset, phase jitter, fading.
struct ImpairmentConfig {
    double cfo_max = 0.005;            ///< cycles/sample, must be < 0.5
    double phase_jitter_std = 0.001;   ///< radians per sample (random walk)
    double timing_offset_max = 0.5;    ///< fraction of a symbol
    bool fading = false;               ///< single-tap Rayleigh, unit mean power

    static ImpairmentConfig none() { return {0.0, 0.0, 0.0, false}; }
    bool is_identity() const noexcept {
        return cfo_max == 0.0 && phase_jitter_std == 0.0 && timing_offset_max == 0.0 && !fading;
    }
    void validate() const;
    bool operator==(const ImpairmentConfig&) const = default;
};

struct DatasetSpec {
    std::vector<ModType> classes;
    SnrGrid grid = SnrGrid::standard();
    std::size_t frames_per_cell = 1;
    std::size_t sps = 8;
    std::size_t frame_len = 128;
    double rolloff = 0.35;
    ImpairmentConfig impairments;
    std::uint64_t master_seed = 0;

    void validate() const;
    std::size_t total_frames() const noexcept {
        return classes.size() * grid.size() * frames_per_cell;
    }
    bool operator==(const DatasetSpec&) const = default;
};

using IndexSet = std::vector<std::size_t>;

/// A labeled collection of frames on a class x SNR lattice.
///
/// Generated datasets keep the lattice order (class-major, then SNR, then
/// index within cell) and carry the spec they were built from; imported
/// datasets may arrive in any order and have no spec.
struct Dataset {
    std::vector<std::string> class_names;
    SnrGrid grid = SnrGrid::standard();
    std::size_t frame_len = 128;
    std::vector<Frame> frames;
    std::optional<DatasetSpec> spec;

    std::size_t size() const noexcept { return frames.size(); }
    std::size_t n_classes() const noexcept { return class_names.size(); }
    /// Grid index of frame i. Frames are validated to lie on the grid.
    std::size_t snr_index(std::size_t i) const;
    /// Cell key label * |grid| + snr index.
    std::size_t cell_of(std::size_t i) const { return std::size_t(frames[i].label) * grid.size() + snr_index(i); }
    std::size_t n_cells() const noexcept { return n_classes() * grid.size(); }
    /// Indices grouped by cell, each group in ascending order.
    std::vector<IndexSet> cells(const IndexSet& subset) const;
    std::vector<IndexSet> cells() const;
    IndexSet all_indices() const;
};

/// Train / validation / test partition of a dataset, as sorted index lists.
struct Split {
    IndexSet train;
    IndexSet validation;
    IndexSet test;

    /// train ∪ validation, sorted.
    IndexSet available() const;
};

/// Sizes of the pairwise intersections of a split. All zero for a valid split.
struct SplitAudit {
    std::size_t train_validation = 0;
    std::size_t train_test = 0;
    std::size_t validation_test = 0;
    bool clean() const noexcept { return train_validation + train_test + validation_test == 0; }
};

SplitAudit audit_split(const Split& split);
std::size_t intersection_size(const IndexSet& a, const IndexSet& b);

}  // namespace snrsel

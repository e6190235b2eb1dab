#include "snrsel/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>

#include "snrsel/error.hpp"

namespace snrsel {

namespace {

struct ModName {
    ModType mod;
    const char* name;
};

constexpr ModName kModNames[] = {
    {ModType::kBpsk, "BPSK"},   {ModType::kQpsk, "QPSK"},   {ModType::k8psk, "8PSK"},
    {ModType::kPam4, "PAM4"},   {ModType::kQam16, "QAM16"}, {ModType::kQam64, "QAM64"},
    {ModType::kGfsk, "GFSK"},   {ModType::kCpfsk, "CPFSK"}, {ModType::kAmDsb, "AM-DSB"},
    {ModType::kWbfm, "WBFM"},
};

constexpr double kGridTolerance = 1e-9;

}  // namespace

std::string to_string(ModType mod) {
    for (const auto& m : kModNames)
        if (m.mod == mod) return m.name;
    throw ValidationError("unsupported modulation type");
}

ModType parse_mod_type(const std::string& name) {
    for (const auto& m : kModNames)
        if (name == m.name) return m.mod;
    throw ValidationError("unknown modulation type '" + name + "'");
}

bool is_analog(ModType mod) noexcept { return mod == ModType::kAmDsb || mod == ModType::kWbfm; }

SnrGrid::SnrGrid(double start_db, double step_db, std::size_t count)
    : start_(start_db), step_(step_db), count_(count) {
    if (!std::isfinite(start_db) || !std::isfinite(step_db))
        throw ValidationError("SNR grid: non-finite start or step");
    if (count == 0) throw ValidationError("SNR grid: empty");
    if (count > 1 && !(step_db > 0.0)) throw ValidationError("SNR grid: step must be positive");
    if (count == 1 && !(step_db > 0.0)) step_ = 1.0;
}

SnrGrid SnrGrid::standard() { return SnrGrid(-20.0, 2.0, 20); }

SnrGrid SnrGrid::from_values(const std::vector<double>& values) {
    if (values.empty()) throw ValidationError("SNR grid: empty");
    if (values.size() == 1) return SnrGrid(values[0], 1.0, 1);
    const double step = values[1] - values[0];
    if (!(step > 0.0)) throw ValidationError("SNR grid: values must be strictly increasing");
    for (std::size_t i = 1; i < values.size(); ++i) {
        const double d = values[i] - values[i - 1];
        if (!(d > 0.0)) throw ValidationError("SNR grid: values must be strictly increasing");
        if (std::abs(d - step) > 1e-6) throw ValidationError("SNR grid: step must be uniform");
    }
    return SnrGrid(values[0], step, values.size());
}

std::vector<double> SnrGrid::values() const {
    std::vector<double> v(count_);
    for (std::size_t i = 0; i < count_; ++i) v[i] = (*this)[i];
    return v;
}

std::optional<std::size_t> SnrGrid::index_of(double snr_db) const noexcept {
    if (!std::isfinite(snr_db)) return std::nullopt;
    const double pos = (snr_db - start_) / step_;
    const double r = std::round(pos);
    if (r < 0.0 || r >= double(count_)) return std::nullopt;
    if (std::abs(snr_db - (start_ + step_ * r)) > kGridTolerance) return std::nullopt;
    return static_cast<std::size_t>(r);
}

void ImpairmentConfig::validate() const {
    if (!(cfo_max >= 0.0) || !(phase_jitter_std >= 0.0) || !(timing_offset_max >= 0.0))
        throw ValidationError("impairments: bounds must be >= 0");
    if (!(cfo_max < 0.5)) throw ValidationError("impairments: cfo_max must be < 0.5");
    if (!(timing_offset_max <= 1.0))
        throw ValidationError("impairments: timing_offset_max must be <= 1 symbol");
}

void DatasetSpec::validate() const {
    if (classes.empty()) throw ValidationError("dataset: no classes");
    for (std::size_t i = 0; i < classes.size(); ++i)
        for (std::size_t j = i + 1; j < classes.size(); ++j)
            if (classes[i] == classes[j]) throw ValidationError("dataset: duplicate class");
    if (frames_per_cell == 0) throw ValidationError("dataset: frames_per_cell must be > 0");
    if (sps < 2) throw ValidationError("dataset: sps must be >= 2");
    if (frame_len == 0) throw ValidationError("dataset: frame_len must be > 0");
    if (!(rolloff > 0.0 && rolloff <= 1.0)) throw ValidationError("dataset: rolloff must be in (0, 1]");
    impairments.validate();
}

std::size_t Dataset::snr_index(std::size_t i) const {
    const auto idx = grid.index_of(frames.at(i).snr_db);
    if (!idx) throw DataError(DataErrorCode::kConsistency, "frame SNR off grid");
    return *idx;
}

std::vector<IndexSet> Dataset::cells(const IndexSet& subset) const {
    std::vector<IndexSet> out(n_cells());
    for (std::size_t i : subset) out[cell_of(i)].push_back(i);
    for (auto& c : out) std::sort(c.begin(), c.end());
    return out;
}

std::vector<IndexSet> Dataset::cells() const { return cells(all_indices()); }

IndexSet Dataset::all_indices() const {
    IndexSet all(frames.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return all;
}

IndexSet Split::available() const {
    IndexSet out;
    out.reserve(train.size() + validation.size());
    std::merge(train.begin(), train.end(), validation.begin(), validation.end(),
               std::back_inserter(out));
    return out;
}

std::size_t intersection_size(const IndexSet& a, const IndexSet& b) {
    IndexSet sa = a, sb = b;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    IndexSet common;
    std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(common));
    return common.size();
}

SplitAudit audit_split(const Split& split) {
    return {intersection_size(split.train, split.validation),
            intersection_size(split.train, split.test),
            intersection_size(split.validation, split.test)};
}

}  // namespace snrsel

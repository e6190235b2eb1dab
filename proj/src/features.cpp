#include "snrsel/features.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include "snrsel/error.hpp"

namespace snrsel {

namespace {

using cd = std::complex<double>;

// FFTW plans bound to their own aligned buffers, one pair per length.
class DftPlan {
public:
    explicit DftPlan(std::size_t n) : n_(n) {
        in_ = fftw_alloc_complex(n);
        out_ = fftw_alloc_complex(n);
        forward_ = fftw_plan_dft_1d(int(n), in_, out_, FFTW_FORWARD, FFTW_ESTIMATE);
        backward_ = fftw_plan_dft_1d(int(n), in_, out_, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    ~DftPlan() {
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(backward_);
        fftw_free(in_);
        fftw_free(out_);
    }
    DftPlan(const DftPlan&) = delete;
    DftPlan& operator=(const DftPlan&) = delete;

    std::vector<cd> run(std::span<const cd> x, bool forward) {
        std::copy(x.begin(), x.end(), reinterpret_cast<cd*>(in_));
        fftw_execute(forward ? forward_ : backward_);
        const auto* o = reinterpret_cast<const cd*>(out_);
        return {o, o + n_};
    }

private:
    std::size_t n_;
    fftw_complex* in_;
    fftw_complex* out_;
    fftw_plan forward_;
    fftw_plan backward_;
};

std::mutex g_plan_mutex;

std::vector<cd> transform(std::span<const cd> x, bool forward) {
    static std::map<std::size_t, std::unique_ptr<DftPlan>> plans;
    std::lock_guard lock(g_plan_mutex);
    auto& plan = plans[x.size()];
    if (!plan) plan = std::make_unique<DftPlan>(x.size());
    return plan->run(x, forward);
}

std::vector<double> raw_feature(const Frame& frame, bool use_fft) {
    const std::size_t n = frame.iq.size();
    std::vector<cd> z(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto& s = frame.iq[k];
        if (!std::isfinite(s.real()) || !std::isfinite(s.imag()))
            throw DataError(DataErrorCode::kNonFinite, "frame " + std::to_string(frame.frame_id));
        z[k] = cd(s.real(), s.imag());
    }
    if (use_fft) z = centered_dft(z);
    std::vector<double> v(2 * n);
    for (std::size_t k = 0; k < n; ++k) {
        v[k] = z[k].real();
        v[n + k] = z[k].imag();
    }
    return v;
}

}  // namespace

std::string to_string(Normalization n) {
    switch (n) {
        case Normalization::kNone: return "none";
        case Normalization::kPerFrame: return "per_frame";
        case Normalization::kGlobal: return "global";
    }
    return "none";
}

Normalization parse_normalization(const std::string& name) {
    if (name == "none") return Normalization::kNone;
    if (name == "per_frame") return Normalization::kPerFrame;
    if (name == "global") return Normalization::kGlobal;
    throw ValidationError("unknown normalization '" + name + "'");
}

std::vector<cd> centered_dft(std::span<const cd> x) {
    const std::size_t n = x.size();
    if (n == 0) return {};
    auto bins = transform(x, true);
    const double scale = 1.0 / std::sqrt(double(n));
    std::vector<cd> out(n);
    const std::size_t shift = n / 2;
    for (std::size_t k = 0; k < n; ++k) out[(k + shift) % n] = bins[k] * scale;
    return out;
}

std::vector<cd> inverse_centered_dft(std::span<const cd> bins) {
    const std::size_t n = bins.size();
    if (n == 0) return {};
    std::vector<cd> natural(n);
    const std::size_t shift = n / 2;
    for (std::size_t k = 0; k < n; ++k) natural[k] = bins[(k + shift) % n];
    auto x = transform(natural, false);
    const double scale = 1.0 / std::sqrt(double(n));
    for (auto& v : x) v *= scale;
    return x;
}

FeatureMatrix to_feature(const Frame& frame, const PipelineConfig& cfg, const FeatureStats* stats) {
    FeatureMatrix m;
    m.length = frame.iq.size();
    m.domain = cfg.use_fft ? Domain::kFrequency : Domain::kTime;
    m.values = raw_feature(frame, cfg.use_fft);
    switch (cfg.normalization) {
        case Normalization::kNone: break;
        case Normalization::kPerFrame: {
            double power = 0.0;
            for (double v : m.values) power += v * v;
            power /= double(m.length);
            if (power > 0.0) {
                const double g = 1.0 / std::sqrt(power);
                for (double& v : m.values) v *= g;
            }
            break;
        }
        case Normalization::kGlobal: {
            if (!stats) throw InputError("to_feature: global normalization requires training statistics");
            if (stats->mean.size() != m.dim() || stats->stddev.size() != m.dim())
                throw InputError("to_feature: statistics dimension mismatch");
            for (std::size_t i = 0; i < m.dim(); ++i)
                m.values[i] = (m.values[i] - stats->mean[i]) / stats->stddev[i];
            break;
        }
    }
    return m;
}

FeatureStats fit_stats(std::span<const Frame> frames, const PipelineConfig& cfg) {
    if (frames.empty()) throw InputError("fit_stats: empty training split");
    const std::size_t dim = 2 * frames.front().iq.size();
    std::vector<double> sum(dim, 0.0), sq(dim, 0.0);
    for (const auto& f : frames) {
        if (2 * f.iq.size() != dim) throw InputError("fit_stats: frames differ in length");
        const auto v = raw_feature(f, cfg.use_fft);
        for (std::size_t i = 0; i < dim; ++i) sum[i] += v[i];
    }
    const double n = double(frames.size());
    FeatureStats st;
    st.mean.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) st.mean[i] = sum[i] / n;
    // Second pass keeps the variance free of cancellation.
    for (const auto& f : frames) {
        const auto v = raw_feature(f, cfg.use_fft);
        for (std::size_t i = 0; i < dim; ++i) {
            const double d = v[i] - st.mean[i];
            sq[i] += d * d;
        }
    }
    st.stddev.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) st.stddev[i] = std::max(std::sqrt(sq[i] / n), kStdFloor);
    return st;
}

FeatureStats fit_stats(const Dataset& dataset, const IndexSet& indices, const Split& split,
                       const PipelineConfig& cfg) {
    IndexSet train = split.train;
    std::sort(train.begin(), train.end());
    std::vector<Frame> frames;
    frames.reserve(indices.size());
    for (std::size_t i : indices) {
        if (!std::binary_search(train.begin(), train.end(), i))
            throw InputError("fit_stats: frame " + std::to_string(i) + " is not in the training split");
        frames.push_back(dataset.frames.at(i));
    }
    return fit_stats(frames, cfg);
}

}  // namespace snrsel

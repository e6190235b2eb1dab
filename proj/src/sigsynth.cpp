#include "snrsel/sigsynth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "snrsel/error.hpp"
#include "snrsel/random.hpp"

namespace snrsel {

namespace {

constexpr double kPi = std::numbers::pi;

// Analog message: AR(1) low-pass Gaussian process with a 3 kHz cutoff at a
// 1 MHz sample rate, unit stationary variance.
constexpr double kMessageCutoff = 3e3 / 1e6;
constexpr double kAmIndex = 0.5;
// Instantaneous WBFM frequency per unit message, in cycles/sample; a 3-sigma
// message excursion reaches a quarter of the sample rate.
constexpr double kFmDeviation = 0.25 / 3.0;

constexpr double kGfskBt = 0.5;
constexpr double kGfskIndex = 0.32;
constexpr double kCpfskIndex = 0.5;
constexpr std::size_t kGaussSpanSymbols = 4;

std::vector<Complex> square_qam(int m) {
    std::vector<Complex> pts;
    double energy = 0.0;
    for (int i = 0; i < m; ++i)
        for (int q = 0; q < m; ++q) {
            Complex p(2.0 * i - (m - 1), 2.0 * q - (m - 1));
            pts.push_back(p);
            energy += std::norm(p);
        }
    const double scale = 1.0 / std::sqrt(energy / double(pts.size()));
    for (auto& p : pts) p *= scale;
    return pts;
}

std::vector<Complex> psk(int m) {
    std::vector<Complex> pts;
    for (int k = 0; k < m; ++k) pts.push_back(std::polar(1.0, 2.0 * kPi * k / m));
    return pts;
}

Waveform lowpass_message(std::size_t n, Rng& rng) {
    const double a = std::exp(-2.0 * kPi * kMessageCutoff);
    const double drive = std::sqrt(1.0 - a * a);
    Waveform m(n);
    double y = rng.normal();
    for (std::size_t k = 0; k < n; ++k) {
        if (k > 0) y = a * y + drive * rng.normal();
        m[k] = Complex(y, 0.0);
    }
    return m;
}

/// Continuous-phase FSK from +-1 symbols. With bt > 0 the rectangular
/// frequency pulse is smoothed by a Gaussian filter (GFSK).
Waveform fsk(std::span<const Complex> symbols, std::size_t sps, double index, double bt,
             std::size_t n_samples) {
    std::vector<double> freq(symbols.size() * sps);
    for (std::size_t s = 0; s < symbols.size(); ++s)
        std::fill_n(freq.begin() + std::ptrdiff_t(s * sps), sps, symbols[s].real());
    if (bt > 0.0) {
        const double sigma = std::sqrt(std::log(2.0)) / (2.0 * kPi * bt) * double(sps);
        const std::size_t half = kGaussSpanSymbols * sps / 2;
        std::vector<double> g(2 * half + 1);
        double sum = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double t = double(i) - double(half);
            g[i] = std::exp(-t * t / (2.0 * sigma * sigma));
            sum += g[i];
        }
        for (auto& v : g) v /= sum;
        std::vector<double> smooth(freq.size(), 0.0);
        for (std::size_t k = 0; k < freq.size(); ++k) {
            double acc = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) {
                const std::ptrdiff_t src = std::ptrdiff_t(k) + std::ptrdiff_t(i) - std::ptrdiff_t(half);
                if (src >= 0 && src < std::ptrdiff_t(freq.size())) acc += g[i] * freq[std::size_t(src)];
            }
            smooth[k] = acc;
        }
        freq = std::move(smooth);
    }
    Waveform out(n_samples);
    // Skip the first symbols so the Gaussian filter edge never reaches the output.
    const std::size_t skip = kGaussSpanSymbols * sps;
    double phase = 0.0;
    for (std::size_t k = 0; k < skip + n_samples; ++k) {
        phase += kPi * index * freq[k] / double(sps);
        if (k >= skip) out[k - skip] = std::polar(1.0, phase);
    }
    return out;
}

}  // namespace

std::vector<Complex> constellation(ModType mod) {
    switch (mod) {
        case ModType::kBpsk: return {{1.0, 0.0}, {-1.0, 0.0}};
        case ModType::kQpsk: return psk(4);
        case ModType::k8psk: return psk(8);
        case ModType::kPam4: {
            const double s = 1.0 / std::sqrt(5.0);
            return {{-3 * s, 0}, {-s, 0}, {s, 0}, {3 * s, 0}};
        }
        case ModType::kQam16: return square_qam(4);
        case ModType::kQam64: return square_qam(8);
        case ModType::kGfsk:
        case ModType::kCpfsk:
        case ModType::kAmDsb:
        case ModType::kWbfm: return {};
    }
    throw ValidationError("unsupported modulation type");
}

Waveform generate_symbols(ModType mod, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw InputError("generate_symbols: n must be > 0");
    Rng rng(seed);
    switch (mod) {
        case ModType::kGfsk:
        case ModType::kCpfsk: {
            Waveform out(n);
            for (auto& s : out) s = Complex(rng.below(2) ? 1.0 : -1.0, 0.0);
            return out;
        }
        case ModType::kAmDsb:
        case ModType::kWbfm: return lowpass_message(n, rng);
        default: break;
    }
    const auto alphabet = constellation(mod);
    if (alphabet.empty()) throw ValidationError("unsupported modulation type");
    Waveform out(n);
    for (auto& s : out) s = alphabet[rng.below(alphabet.size())];
    return out;
}

std::vector<double> rrc_taps(std::size_t sps, double rolloff, std::size_t span_symbols) {
    if (sps < 2) throw InputError("rrc_taps: sps must be >= 2");
    if (!(rolloff > 0.0 && rolloff <= 1.0)) throw InputError("rrc_taps: rolloff must be in (0, 1]");
    const std::size_t n = span_symbols * sps + 1;
    const double beta = rolloff;
    std::vector<double> h(n);
    double energy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = (double(i) - double(n - 1) / 2.0) / double(sps);
        double v;
        if (std::abs(t) < 1e-12) {
            v = 1.0 - beta + 4.0 * beta / kPi;
        } else if (std::abs(std::abs(4.0 * beta * t) - 1.0) < 1e-9) {
            v = beta / std::sqrt(2.0) *
                ((1.0 + 2.0 / kPi) * std::sin(kPi / (4.0 * beta)) +
                 (1.0 - 2.0 / kPi) * std::cos(kPi / (4.0 * beta)));
        } else {
            v = (std::sin(kPi * t * (1.0 - beta)) + 4.0 * beta * t * std::cos(kPi * t * (1.0 + beta))) /
                (kPi * t * (1.0 - (4.0 * beta * t) * (4.0 * beta * t)));
        }
        h[i] = v;
        energy += v * v;
    }
    const double scale = 1.0 / std::sqrt(energy);
    for (auto& v : h) v *= scale;
    return h;
}

Waveform pulse_shape(std::span<const Complex> symbols, std::size_t sps, double rolloff) {
    if (symbols.empty()) throw InputError("pulse_shape: empty symbol sequence");
    auto taps = rrc_taps(sps, rolloff, kRrcSpanSymbols);
    const double gain = std::sqrt(double(sps));
    for (auto& t : taps) t *= gain;
    Waveform out(symbols.size() * sps + taps.size() - 1, Complex(0.0, 0.0));
    // Upsampled input is nonzero only every sps samples; accumulate each pulse.
    for (std::size_t s = 0; s < symbols.size(); ++s) {
        const Complex sym = symbols[s];
        Complex* dst = out.data() + s * sps;
        for (std::size_t i = 0; i < taps.size(); ++i) dst[i] += sym * taps[i];
    }
    return out;
}

Waveform modulate(ModType mod, std::size_t n_samples, std::size_t sps, double rolloff,
                  std::uint64_t seed) {
    if (n_samples == 0) throw InputError("modulate: n_samples must be > 0");
    switch (mod) {
        case ModType::kGfsk:
        case ModType::kCpfsk: {
            const std::size_t n_sym = (n_samples + sps - 1) / sps + kGaussSpanSymbols + 1;
            const auto bits = generate_symbols(mod, n_sym, seed);
            return mod == ModType::kGfsk ? fsk(bits, sps, kGfskIndex, kGfskBt, n_samples)
                                         : fsk(bits, sps, kCpfskIndex, 0.0, n_samples);
        }
        case ModType::kAmDsb: {
            auto m = generate_symbols(mod, n_samples, seed);
            // E|1 + a m|^2 = 1 + a^2 for a unit-variance zero-mean message.
            const double norm = 1.0 / std::sqrt(1.0 + kAmIndex * kAmIndex);
            for (auto& v : m) v = Complex((1.0 + kAmIndex * v.real()) * norm, 0.0);
            return m;
        }
        case ModType::kWbfm: {
            auto m = generate_symbols(mod, n_samples, seed);
            double phase = 0.0;
            for (auto& v : m) {
                phase += 2.0 * kPi * kFmDeviation * v.real();
                v = std::polar(1.0, phase);
            }
            return m;
        }
        default: break;
    }
    const std::size_t transient = kRrcSpanSymbols * sps;
    const std::size_t n_sym = (n_samples + transient + sps - 1) / sps + 1;
    const auto symbols = generate_symbols(mod, n_sym, seed);
    const auto shaped = pulse_shape(symbols, sps, rolloff);
    return Waveform(shaped.begin() + std::ptrdiff_t(transient),
                    shaped.begin() + std::ptrdiff_t(transient + n_samples));
}

ImpairmentDraw draw_impairments(const ImpairmentConfig& cfg, std::size_t sps, std::uint64_t seed) {
    cfg.validate();
    Rng rng(seed);
    ImpairmentDraw d;
    // Every variate is drawn unconditionally so streams stay aligned across configs.
    const double u_timing = rng.uniform();
    const double u_cfo = rng.uniform();
    const double fi = rng.normal();
    const double fq = rng.normal();
    d.jitter_seed = rng.next_u64();
    d.timing_offset_samples = u_timing * cfg.timing_offset_max * double(sps);
    d.cfo = (2.0 * u_cfo - 1.0) * cfg.cfo_max;
    if (cfg.fading) d.fading_tap = Complex(fi, fq) / std::sqrt(2.0);
    return d;
}

Waveform apply_impairments(std::span<const Complex> wave, const ImpairmentConfig& cfg,
                           std::uint64_t seed, std::size_t sps) {
    if (wave.empty()) throw InputError("apply_impairments: empty waveform");
    const ImpairmentDraw d = draw_impairments(cfg, sps, seed);
    Waveform out(wave.begin(), wave.end());
    const std::size_t n = out.size();

    if (d.timing_offset_samples > 0.0) {
        const double whole = std::floor(d.timing_offset_samples);
        const double frac = d.timing_offset_samples - whole;
        const auto shift = static_cast<std::ptrdiff_t>(whole);
        auto at = [&](std::ptrdiff_t k) {
            return (k >= 0 && k < std::ptrdiff_t(n)) ? wave[std::size_t(k)] : Complex(0.0, 0.0);
        };
        for (std::size_t k = 0; k < n; ++k) {
            const std::ptrdiff_t src = std::ptrdiff_t(k) - shift;
            out[k] = (1.0 - frac) * at(src) + frac * at(src - 1);
        }
    }
    if (d.cfo != 0.0) {
        for (std::size_t k = 0; k < n; ++k) out[k] *= std::polar(1.0, 2.0 * kPi * d.cfo * double(k));
    }
    if (cfg.phase_jitter_std > 0.0) {
        Rng jitter(d.jitter_seed);
        double phase = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            phase += cfg.phase_jitter_std * jitter.normal();
            out[k] *= std::polar(1.0, phase);
        }
    }
    if (cfg.fading) {
        for (auto& v : out) v *= d.fading_tap;
    }
    return out;
}

double mean_power(std::span<const Complex> wave) {
    if (wave.empty()) return 0.0;
    double p = 0.0;
    for (const auto& v : wave) p += std::norm(v);
    return p / double(wave.size());
}

Waveform apply_awgn(std::span<const Complex> wave, double snr_db, std::uint64_t seed) {
    const double power = mean_power(wave);
    if (!(power > 0.0) || !std::isfinite(power)) throw InputError("apply_awgn: input has no measurable power");
    if (std::isinf(snr_db) && snr_db > 0) return Waveform(wave.begin(), wave.end());
    if (std::isnan(snr_db)) throw InputError("apply_awgn: SNR is NaN");
    const double sigma = std::sqrt(power * std::pow(10.0, -snr_db / 10.0) / 2.0);
    Rng rng(seed);
    Waveform out(wave.begin(), wave.end());
    for (auto& v : out) {
        const double re = rng.normal();
        const double im = rng.normal();
        v += Complex(sigma * re, sigma * im);
    }
    return out;
}

Waveform frame_signal(const DatasetSpec& spec, std::size_t class_index, std::size_t snr_index,
                      std::size_t index_in_cell) {
    const auto ci = std::int64_t(class_index), si = std::int64_t(snr_index), fi = std::int64_t(index_in_cell);
    const std::uint64_t seed = derive_seed(spec.master_seed, "frame", {ci, si, fi});
    const ModType mod = spec.classes.at(class_index);

    // Leading margin absorbs the fractional delay, then the start is drawn
    // uniformly over one RRC span.
    const auto lead = static_cast<std::size_t>(std::ceil(spec.impairments.timing_offset_max * double(spec.sps))) + 1;
    const std::size_t start_range = kRrcSpanSymbols * spec.sps;
    const std::size_t length = lead + start_range + spec.frame_len;

    const auto clean = modulate(mod, length, spec.sps, spec.rolloff, derive_seed(seed, "symbols"));
    const auto impaired = apply_impairments(clean, spec.impairments, derive_seed(seed, "impair"), spec.sps);
    Rng offset_rng(derive_seed(seed, "offset"));
    const std::size_t start = lead + offset_rng.below(start_range);
    return Waveform(impaired.begin() + std::ptrdiff_t(start), impaired.begin() + std::ptrdiff_t(start + spec.frame_len));
}

Frame generate_frame(const DatasetSpec& spec, std::size_t class_index, std::size_t snr_index,
                     std::size_t index_in_cell) {
    const auto ci = std::int64_t(class_index), si = std::int64_t(snr_index), fi = std::int64_t(index_in_cell);
    const std::uint64_t seed = derive_seed(spec.master_seed, "frame", {ci, si, fi});
    const double snr_db = spec.grid[snr_index];
    const auto noisy = apply_awgn(frame_signal(spec, class_index, snr_index, index_in_cell), snr_db,
                                  derive_seed(seed, "awgn"));

    Frame f;
    f.iq.resize(spec.frame_len);
    for (std::size_t k = 0; k < spec.frame_len; ++k)
        f.iq[k] = Sample(float(noisy[k].real()), float(noisy[k].imag()));
    f.label = int(class_index);
    f.snr_db = snr_db;
    f.frame_id = (ci * std::int64_t(spec.grid.size()) + si) * std::int64_t(spec.frames_per_cell) + fi;
    f.seed_path = {std::int64_t(spec.master_seed), ci, si, fi};
    return f;
}

Dataset build_dataset(const DatasetSpec& spec) {
    spec.validate();
    Dataset ds;
    for (auto m : spec.classes) ds.class_names.push_back(to_string(m));
    ds.grid = spec.grid;
    ds.frame_len = spec.frame_len;
    ds.spec = spec;
    ds.frames.resize(spec.total_frames());
    for (std::size_t c = 0; c < spec.classes.size(); ++c)
        for (std::size_t s = 0; s < spec.grid.size(); ++s)
            for (std::size_t i = 0; i < spec.frames_per_cell; ++i) {
                Frame f = generate_frame(spec, c, s, i);
                ds.frames[std::size_t(f.frame_id)] = std::move(f);
            }
    return ds;
}

}  // namespace snrsel

#pragma once

#include <complex>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "snrsel/dataset.hpp"

namespace snrsel {

using Complex = std::complex<double>;
using Waveform = std::vector<Complex>;

/// Symbol stream for a digital class (i.i.d. uniform over the unit-energy
/// alphabet; binary +-1 frequency symbols for GFSK/CPFSK) or a unit-variance
/// band-limited Gaussian message for an analog class.
Waveform generate_symbols(ModType mod, std::size_t n, std::uint64_t seed);

/// Constellation points of a linearly modulated class, unit average energy.
/// Empty for frequency-modulated and analog classes.
std::vector<Complex> constellation(ModType mod);

/// Root-raised-cosine taps covering `span_symbols` symbols (span*sps + 1
/// taps), normalized to unit energy.
std::vector<double> rrc_taps(std::size_t sps, double rolloff, std::size_t span_symbols);

inline constexpr std::size_t kRrcSpanSymbols = 8;

/// Upsamples by sps and filters with an RRC pulse (full convolution, so the
/// output has symbols.size()*sps + taps - 1 samples). Taps are scaled so a
/// unit-energy symbol stream gives unit mean output power.
Waveform pulse_shape(std::span<const Complex> symbols, std::size_t sps, double rolloff = 0.35);

/// Baseband waveform of `n_samples` samples for any class.
Waveform modulate(ModType mod, std::size_t n_samples, std::size_t sps, double rolloff,
                  std::uint64_t seed);

/// Random draws behind one apply_impairments call.
struct ImpairmentDraw {
    double timing_offset_samples = 0.0;
    double cfo = 0.0;  ///< cycles/sample
    Complex fading_tap{1.0, 0.0};
    std::uint64_t jitter_seed = 0;
};

ImpairmentDraw draw_impairments(const ImpairmentConfig& cfg, std::size_t sps, std::uint64_t seed);

/// Timing offset (linear fractional delay), CFO rotation e^{j2πfk}, Gaussian
/// random-walk phase jitter and an optional fading tap, in that order.
/// The all-zero config returns the input unchanged.
Waveform apply_impairments(std::span<const Complex> wave, const ImpairmentConfig& cfg,
                           std::uint64_t seed, std::size_t sps = 8);

inline constexpr double kNoiseless = std::numeric_limits<double>::infinity();

double mean_power(std::span<const Complex> wave);

/// Adds circular complex Gaussian noise of variance P*10^(-snr/10), where P
/// is the measured power of `wave`. snr_db = +inf returns the input.
Waveform apply_awgn(std::span<const Complex> wave, double snr_db, std::uint64_t seed);

/// The impaired, pre-noise samples of one lattice frame.
Waveform frame_signal(const DatasetSpec& spec, std::size_t class_index, std::size_t snr_index,
                      std::size_t index_in_cell);

/// One frame of the lattice, generated from its own derived seed.
Frame generate_frame(const DatasetSpec& spec, std::size_t class_index, std::size_t snr_index,
                     std::size_t index_in_cell);

Dataset build_dataset(const DatasetSpec& spec);

}  // namespace snrsel

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace snrsel {

/// Derives an independent 64-bit seed from a parent seed, a purpose tag and
/// a list of indices. Every random stream in the library is keyed this way,
/// so results do not depend on the order in which work is scheduled.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag,
                          std::initializer_list<std::int64_t> indices = {});

/// mt19937_64 with distributions defined on raw engine bits, so generated
/// data is identical across standard-library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer on [0, n). Rejection sampling, no modulo bias.
    std::uint64_t below(std::uint64_t n);

    /// Standard normal via Box-Muller; the second variate is cached.
    double normal();

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

/// Fisher-Yates shuffle driven by Rng::below.
template <typename It>
void shuffle(It first, It last, Rng& rng) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
        const auto j = rng.below(i);
        std::swap(first[i - 1], first[j]);
    }
}

}  // namespace snrsel

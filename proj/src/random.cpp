#include "snrsel/random.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "snrsel/error.hpp"

namespace snrsel {

namespace {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

const char* to_string(DataErrorCode code) noexcept {
    switch (code) {
        case DataErrorCode::kNonFinite: return "non-finite data";
        case DataErrorCode::kChecksum: return "checksum mismatch";
        case DataErrorCode::kTruncated: return "truncated container";
        case DataErrorCode::kConsistency: return "inconsistent metadata";
        case DataErrorCode::kFormat: return "malformed metadata";
    }
    return "data error";
}

std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag,
                          std::initializer_list<std::int64_t> indices) {
    std::uint64_t h = splitmix64(parent ^ splitmix64(fnv1a(tag)));
    for (std::int64_t i : indices) {
        h = splitmix64(h ^ splitmix64(static_cast<std::uint64_t>(i) + 0x632be59bd9b4e019ULL));
    }
    return h;
}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) throw InputError("Rng::below: empty range");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % n;
}

double Rng::normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    double u1;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
}

}  // namespace snrsel

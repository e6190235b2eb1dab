#include <doctest.h>

#include <cmath>
#include <limits>

#include "snrsel/error.hpp"
#include "snrsel/features.hpp"
#include "snrsel/random.hpp"

using namespace snrsel;

namespace {

Frame random_frame(std::uint64_t seed, std::size_t n = 128) {
    Rng rng(seed);
    Frame f;
    f.iq.resize(n);
    for (auto& s : f.iq) s = Sample(float(rng.normal()), float(rng.normal()));
    return f;
}

// Textbook O(N^2) unitary DFT with the same centring.
std::vector<std::complex<double>> naive_dft(const std::vector<std::complex<double>>& x) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> acc{};
        for (std::size_t t = 0; t < n; ++t)
            acc += x[t] * std::polar(1.0, -2.0 * M_PI * double(k * t) / double(n));
        out[(k + n / 2) % n] = acc / std::sqrt(double(n));
    }
    return out;
}

}  // namespace

TEST_CASE("DFT of a constant frame puts all energy at DC") {
    Frame f;
    f.iq.assign(128, Sample(0.7f, 0.0f));
    PipelineConfig cfg{true, Normalization::kNone};
    const auto m = to_feature(f, cfg);
    CHECK(m.domain == Domain::kFrequency);
    const std::size_t dc = 64;
    const double dc_mag = std::hypot(m.re(dc), m.im(dc));
    CHECK(dc_mag == doctest::Approx(0.7 * std::sqrt(128.0)).epsilon(1e-6));
    for (std::size_t k = 0; k < 128; ++k)
        if (k != dc) CHECK(std::hypot(m.re(k), m.im(k)) < 1e-9 * dc_mag);
}

TEST_CASE("centered DFT matches a direct O(N^2) evaluation") {
    const Frame f = random_frame(4, 64);
    std::vector<std::complex<double>> x;
    for (auto s : f.iq) x.emplace_back(s);
    const auto fast = centered_dft(x);
    const auto slow = naive_dft(x);
    for (std::size_t k = 0; k < x.size(); ++k) CHECK(std::abs(fast[k] - slow[k]) < 1e-9);
}

TEST_CASE("Parseval holds for the unitary DFT") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Frame f = random_frame(seed);
        const auto t = to_feature(f, {false, Normalization::kNone});
        const auto w = to_feature(f, {true, Normalization::kNone});
        double et = 0, ef = 0;
        for (double v : t.values) et += v * v;
        for (double v : w.values) ef += v * v;
        CHECK(std::abs(et - ef) <= 1e-6 * et);
    }
}

TEST_CASE("inverse DFT reproduces the input") {
    const Frame f = random_frame(9);
    std::vector<std::complex<double>> x;
    for (auto s : f.iq) x.emplace_back(s);
    const auto back = inverse_centered_dft(centered_dft(x));
    double err = 0, norm = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        err += std::norm(back[i] - x[i]);
        norm += std::norm(x[i]);
    }
    CHECK(std::sqrt(err / norm) < 1e-6);
}

TEST_CASE("per-frame normalization gives unit mean power") {
    for (bool fft : {false, true}) {
        Frame f = random_frame(21);
        for (auto& s : f.iq) s *= 3.5f;
        const auto m = to_feature(f, {fft, Normalization::kPerFrame});
        double p = 0;
        for (double v : m.values) p += v * v;
        CHECK(std::abs(p / double(m.length) - 1.0) < 1e-6);
    }
}

TEST_CASE("raw time features are the I and Q rows") {
    const Frame f = random_frame(2, 16);
    const auto m = to_feature(f, {false, Normalization::kNone});
    REQUIRE(m.dim() == 32);
    for (std::size_t k = 0; k < 16; ++k) {
        CHECK(m.re(k) == double(f.iq[k].real()));
        CHECK(m.im(k) == double(f.iq[k].imag()));
    }
}

TEST_CASE("non-finite samples raise a data error") {
    Frame f = random_frame(1);
    f.iq[5] = Sample(std::numeric_limits<float>::quiet_NaN(), 0.0f);
    CHECK_THROWS_AS(to_feature(f, {}), DataError);
    f.iq[5] = Sample(std::numeric_limits<float>::infinity(), 0.0f);
    CHECK_THROWS_AS(to_feature(f, {}), DataError);
}

TEST_CASE("global normalization requires statistics") {
    CHECK_THROWS_AS(to_feature(random_frame(1), {false, Normalization::kGlobal}), InputError);
}

TEST_CASE("fit_stats of one frame") {
    const Frame f = random_frame(6, 8);
    const PipelineConfig cfg{false, Normalization::kGlobal};
    const auto s = fit_stats(std::vector<Frame>{f}, cfg);
    for (std::size_t k = 0; k < 8; ++k) {
        CHECK(s.mean[k] == double(f.iq[k].real()));
        CHECK(s.mean[8 + k] == double(f.iq[k].imag()));
    }
    for (double sd : s.stddev) CHECK(sd == kStdFloor);
}

TEST_CASE("fit_stats of x and -x has zero mean") {
    Frame a = random_frame(3, 16), b = a;
    for (auto& v : b.iq) v = -v;
    const auto s = fit_stats(std::vector<Frame>{a, b}, {false, Normalization::kGlobal});
    for (double m : s.mean) CHECK(m == 0.0);
}

TEST_CASE("fit_stats on Gaussian frames") {
    std::vector<Frame> frames;
    for (std::uint64_t i = 0; i < 10000; ++i) {
        Frame f = random_frame(1000 + i, 16);
        for (auto& s : f.iq) s /= std::sqrt(1.0f);
        frames.push_back(std::move(f));
    }
    const auto s = fit_stats(frames, {false, Normalization::kGlobal});
    for (std::size_t d = 0; d < s.mean.size(); ++d) {
        CHECK(std::abs(s.mean[d]) < 0.05);
        CHECK(std::abs(s.stddev[d] - 1.0) < 0.05);
    }
    // Features computed with these stats are near-standard.
    const auto m = to_feature(frames[0], {false, Normalization::kGlobal}, &s);
    CHECK(m.dim() == 32);
}

TEST_CASE("fit_stats rejects empty input and frames outside the training split") {
    CHECK_THROWS_AS(fit_stats(std::vector<Frame>{}, {}), InputError);
    Dataset ds;
    ds.class_names = {"A"};
    ds.grid = SnrGrid(0, 2, 1);
    ds.frame_len = 16;
    for (std::uint64_t i = 0; i < 4; ++i) ds.frames.push_back(random_frame(i, 16));
    Split split;
    split.train = {0, 1};
    split.validation = {2};
    split.test = {3};
    const PipelineConfig cfg{false, Normalization::kGlobal};
    CHECK_NOTHROW(fit_stats(ds, {0, 1}, split, cfg));
    CHECK_THROWS_AS(fit_stats(ds, {0, 2}, split, cfg), InputError);
    CHECK_THROWS_AS(fit_stats(ds, {3}, split, cfg), InputError);
}

TEST_CASE("feature extraction is stateless") {
    const Frame f = random_frame(8);
    for (bool fft : {false, true}) {
        const PipelineConfig cfg{fft, Normalization::kPerFrame};
        CHECK(to_feature(f, cfg).values == to_feature(f, cfg).values);
    }
}

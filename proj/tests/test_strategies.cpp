#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "fixtures.hpp"
#include "snrsel/error.hpp"
#include "snrsel/random.hpp"

using namespace snrsel;
using namespace fixtures;

namespace {

// Independent plurality tally: rank classes by (votes desc, summed probability desc, index asc).
int brute_force_vote(const std::vector<Matrix>& probs, Eigen::Index row) {
    const Eigen::Index n = probs[0].cols();
    std::map<int, int> votes;
    for (const auto& p : probs) {
        int best = 0;
        for (Eigen::Index c = 1; c < n; ++c)
            if (p(row, c) > p(row, best)) best = int(c);
        ++votes[best];
    }
    std::vector<std::tuple<int, double, int>> ranked;
    for (Eigen::Index c = 0; c < n; ++c) {
        double mass = 0;
        for (const auto& p : probs) mass += p(row, c);
        ranked.emplace_back(-votes[int(c)], -mass, int(c));
    }
    std::sort(ranked.begin(), ranked.end());
    return std::get<2>(ranked.front());
}

Matrix one_row(std::initializer_list<double> v) {
    Matrix m(1, Eigen::Index(v.size()));
    Eigen::Index i = 0;
    for (double x : v) m(0, i++) = x;
    return m;
}

TrainingSession tiny_session(std::uint64_t seed = 1) {
    const Dataset& ds = tiny_dataset();
    return TrainingSession(ds, make_split(ds, {}, seed), PipelineConfig{}, tiny_arch(tiny_spec()), tiny_train(), seed);
}

}  // namespace

TEST_CASE("make_split is disjoint, stratified and uses the default fractions") {
    const Dataset ds = label_lattice(3, SnrGrid(0, 2, 4), 100);
    const Split s = make_split(ds, {}, 9);
    CHECK(audit_split(s).clean());
    CHECK(s.train.size() + s.validation.size() + s.test.size() == ds.size());
    for (const auto& cell : ds.cells(s.test)) CHECK(cell.size() == 50);
    for (const auto& cell : ds.cells(s.validation)) CHECK(cell.size() == 10);
    for (const auto& cell : ds.cells(s.train)) CHECK(cell.size() == 40);
    CHECK(double(s.validation.size()) / double(s.available().size()) == doctest::Approx(0.2));
    CHECK(make_split(ds, {}, 9).test == s.test);
    CHECK(make_split(ds, {}, 10).test != s.test);
}

TEST_CASE("single SNR selection on the large lattice") {
    SnrGrid grid;
    const Dataset ds = label_lattice(10, grid, 800);
    REQUIRE(ds.size() == 160000);
    const IndexSet sel = select_single_snr(ds, 0.0);
    CHECK(sel.size() == 8000);
    for (auto i : sel) CHECK(ds.frames[i].snr_db == 0.0);
    CHECK_THROWS_AS(select_single_snr(ds, 1.0), InputError);
}

TEST_CASE("single SNR selection on a one-SNR dataset is the whole set") {
    const Dataset ds = label_lattice(3, SnrGrid(4, 2, 1), 7);
    CHECK(select_single_snr(ds, 4.0) == ds.all_indices());
}

TEST_CASE("uniform fraction selection") {
    const Dataset ds = label_lattice(10, SnrGrid(), 800);
    const IndexSet u = select_uniform_fraction(ds, 0.125, 1);
    CHECK(u.size() == 20000);
    for (const auto& cell : ds.cells(u)) CHECK(cell.size() == 100);
    CHECK(select_uniform_fraction(ds, 1.0, 1) == ds.all_indices());
    const IndexSet v = select_uniform_fraction(ds, 0.125, 2);
    CHECK(v != u);
    for (const auto& cell : ds.cells(v)) CHECK(cell.size() == 100);
    CHECK_THROWS_AS(select_uniform_fraction(ds, 1e-6, 1), InputError);
    CHECK_THROWS_AS(select_uniform_fraction(ds, 0.0, 1), InputError);
    CHECK_THROWS_AS(select_uniform_fraction(ds, 1.5, 1), InputError);
}

TEST_CASE("vote examples") {
    // (A, A, B) -> A
    CHECK(plurality_vote({one_row({0.9, 0.1, 0}), one_row({0.8, 0.2, 0}), one_row({0.1, 0.9, 0})}) ==
          std::vector<int>{0});
    // (A, B, C) with mean-probability argmax B -> B
    CHECK(plurality_vote({one_row({0.4, 0.35, 0.25}), one_row({0.1, 0.8, 0.1}), one_row({0.3, 0.3, 0.4})}) ==
          std::vector<int>{1});
    // Fully symmetric tie -> lowest index.
    CHECK(plurality_vote({one_row({0.6, 0.4}), one_row({0.4, 0.6})}) == std::vector<int>{0});
    CHECK_THROWS_AS(plurality_vote({}), InputError);
}

TEST_CASE("vote agrees with a brute-force tally on 1000 random tuples") {
    Rng rng(31);
    for (int t = 0; t < 1000; ++t) {
        const std::size_t members = 1 + rng.below(5), classes = 2 + rng.below(4);
        const bool quantized = t % 3 == 0;  // coarse values produce exact ties
        std::vector<Matrix> probs;
        for (std::size_t m = 0; m < members; ++m) {
            Matrix p(1, Eigen::Index(classes));
            for (std::size_t c = 0; c < classes; ++c)
                p(0, Eigen::Index(c)) = quantized ? double(rng.below(3)) : rng.uniform();
            if (p.sum() == 0) p(0, 0) = 1;
            p /= p.sum();
            probs.push_back(p);
        }
        CHECK(plurality_vote(probs)[0] == brute_force_vote(probs, 0));
    }
}

TEST_CASE("boosting on a one-SNR grid selects only the target") {
    DatasetSpec s = tiny_spec(40, 1);
    const Dataset ds = build_dataset(s);
    TrainingSession session(ds, make_split(ds, {}, 1), PipelineConfig{}, tiny_arch(s), tiny_train(), 1);
    const BoostResult b = snr_boost(session, s.grid[0]);
    CHECK(b.selected == std::vector<double>{s.grid[0]});
    CHECK(b.sweeps.empty());
    CHECK(b.val_trace.size() == 1);
}

TEST_CASE("infinite threshold degenerates to single-SNR training") {
    auto session = tiny_session(3);
    for (double t : tiny_spec().grid.values()) {
        const BoostResult b = snr_boost(session, t, std::numeric_limits<double>::infinity());
        const Fitted single = train_single_snr(session, t);
        CHECK(b.selected == std::vector<double>{t});
        CHECK(b.final_model.params == single.model.params);
    }
}

TEST_CASE("boosting contract on every target") {
    for (std::uint64_t seed : {1u, 2u}) {
        auto session = tiny_session(seed);
        const SnrGrid grid = tiny_spec().grid;
        for (double t : grid.values()) {
            for (double thr : {0.0, 1.0}) {
                const BoostResult b = snr_boost(session, t, thr);
                CHECK(b.selected.front() == t);
                CHECK(b.val_trace.size() == b.selected.size());
                std::set<double> uniq(b.selected.begin(), b.selected.end());
                CHECK(uniq.size() == b.selected.size());
                for (double s : b.selected) CHECK(grid.contains(s));
                for (std::size_t i = 1; i < b.val_trace.size(); ++i)
                    CHECK((b.val_trace[i] - b.val_trace[i - 1]) * 100.0 > thr);
                // Dominance over the single-SNR base case on validation.
                CHECK(b.val_trace.back() >= train_single_snr(session, t).val_accuracy);
                CHECK(b.candidate_seconds >= 0.0);
            }
        }
        CHECK(session.test_overlap() == 0);
    }
    auto session = tiny_session(1);
    CHECK_THROWS_AS(snr_boost(session, 1.0), InputError);
}

TEST_CASE("boost tie-break prefers the nearest SNR, then the lower one") {
    // Replays the sweep choice rule on synthetic candidate lists.
    auto choose = [](double target, double current, const std::vector<std::pair<double, double>>& cands) {
        std::optional<double> chosen;
        double best = current;
        for (auto [c, acc] : cands) {
            if (acc <= current) continue;
            const bool better = !chosen || acc > best ||
                                (acc == best && (std::abs(c - target) < std::abs(*chosen - target) ||
                                                 (std::abs(c - target) == std::abs(*chosen - target) && c < *chosen)));
            if (better) {
                chosen = c;
                best = acc;
            }
        }
        return chosen;
    };
    CHECK(choose(0, 0.5, {{-4, 0.6}, {2, 0.6}, {-2, 0.6}}) == -2.0);
    CHECK(choose(0, 0.5, {{4, 0.6}, {-6, 0.7}}) == -6.0);
    CHECK_FALSE(choose(0, 0.5, {{4, 0.5}}).has_value());
}

TEST_CASE("sensitivity table shape and the zero-offset column") {
    auto session = tiny_session(2);
    const SnrGrid grid = tiny_spec().grid;
    const auto table = offset_sensitivity(session, grid.values(), {-4, 0, 4});
    REQUIRE(table.accuracy.size() == grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double t = grid[i];
        const Fitted single = train_single_snr(session, t);
        CHECK(table.accuracy[i][1] == evaluate(single.model, session.test_data(t)).accuracy);
        CHECK(table.accuracy[i][0].has_value() == grid.contains(t - 4));
        CHECK(table.accuracy[i][2].has_value() == grid.contains(t + 4));
    }
    CHECK_FALSE(table.accuracy.back()[2].has_value());
}

TEST_CASE("bagging pools, sample sizes and k = 1") {
    auto session = tiny_session(4);
    const SnrGrid grid = tiny_spec().grid;
    const Ensemble edge = bagging_train(session, grid[0], 3, 0.5, 7);
    REQUIRE(edge.members.size() == 3);
    CHECK(edge.info[0].pool_snrs == std::vector<double>{grid[0], grid[1]});
    const std::size_t single = select_single_snr(session.dataset(), session.split().train, grid[0]).size();
    for (const auto& m : edge.info) CHECK(m.sample_size == std::size_t(std::floor(0.5 * double(single) + 0.5)));
    std::set<std::uint64_t> seeds;
    for (const auto& m : edge.info) seeds.insert(m.seed);
    CHECK(seeds.size() == 3);
    const Ensemble mid = bagging_train(session, grid[1], 3, 0.5, 7);
    CHECK(mid.info[0].pool_snrs.size() == 3);

    const Ensemble solo = bagging_train(session, grid[1], 1, 0.5, 7);
    const LabeledData test = session.test_data(grid[1]);
    CHECK(ensemble_predict(solo, test.x) == predict(solo.members[0], test.x));

    // Same-size single-SNR baseline draws exactly that many frames.
    const Candidate base = sized_single_snr(session, grid[1], mid.info[0].sample_size, 7);
    CHECK(base.record.train_examples == mid.info[0].sample_size);
    CHECK(session.test_overlap() == 0);
    CHECK_THROWS_AS(bagging_train(session, grid[1], 3, 0.0, 1), InputError);
    CHECK_THROWS_AS(bagging_train(session, grid[1], 0, 0.5, 1), InputError);
}

TEST_CASE("bagging of the 5% fraction on a one-SNR set size") {
    // 800 training frames per SNR, 5% -> 40 per member.
    const Dataset ds = label_lattice(5, SnrGrid(), 400);
    const Split split = make_split(ds, {}, 1);
    CHECK(select_single_snr(ds, split.train, 0.0).size() == 800);
    CHECK(std::size_t(std::floor(0.05 * 800 + 0.5)) == 40);
}

TEST_CASE("ensemble prediction on frames equals prediction on features") {
    auto session = tiny_session(5);
    const double t = tiny_spec().grid[2];
    const Ensemble e = bagging_train(session, t, 3, 0.5, 1);
    const IndexSet idx = select_single_snr(session.dataset(), session.split().test, t);
    std::vector<Frame> frames;
    for (auto i : idx) frames.push_back(session.dataset().frames[i]);
    CHECK(ensemble_predict(e, frames, PipelineConfig{}) == ensemble_predict(e, session.test_data(t).x));
    CHECK_THROWS_AS(ensemble_predict(Ensemble{}, session.test_data(t).x), InputError);
}

TEST_CASE("strategy subsets stay inside the training pool") {
    auto session = tiny_session(6);
    const Dataset& ds = session.dataset();
    const Split& s = session.split();
    const IndexSet avail = s.available();
    for (double t : ds.grid.values()) {
        const IndexSet single = select_single_snr(ds, s.train, t);
        CHECK(intersection_size(single, s.test) == 0);
        CHECK(intersection_size(single, avail) == single.size());
    }
    const Fitted u = train_uniform_fraction(session, 0.25);
    CHECK(u.train_examples > 0);
    const Fitted all = train_all_snr(session);
    CHECK(all.train_examples == avail.size());
    CHECK(session.test_overlap() == 0);
}

TEST_CASE("strategies are deterministic across sessions") {
    auto a = tiny_session(8), b = tiny_session(8);
    const double t = tiny_spec().grid[1];
    CHECK(snr_boost(a, t).final_model.params == snr_boost(b, t).final_model.params);
    CHECK(train_uniform_fraction(a, 0.25).model.params == train_uniform_fraction(b, 0.25).model.params);
    const Ensemble ea = bagging_train(a, t, 3, 0.5, 2), eb = bagging_train(b, t, 3, 0.5, 2);
    for (std::size_t m = 0; m < 3; ++m) CHECK(ea.members[m].params == eb.members[m].params);
}

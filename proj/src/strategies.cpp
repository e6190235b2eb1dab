#include "snrsel/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "snrsel/error.hpp"
#include "snrsel/random.hpp"

namespace snrsel {

namespace {

std::size_t grid_index(const Dataset& dataset, double snr_db, const char* what) {
    const auto idx = dataset.grid.index_of(snr_db);
    if (!idx) throw InputError(std::string(what) + ": " + std::to_string(snr_db) + " dB is not on the SNR grid");
    return *idx;
}

std::size_t round_half_up(double x) { return static_cast<std::size_t>(std::floor(x + 0.5)); }

}  // namespace

void SplitConfig::validate() const {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw ValidationError("split: test_fraction must lie in (0, 1)");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
        throw ValidationError("split: validation_fraction must lie in [0, 1)");
}

Split make_split(const Dataset& dataset, const SplitConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Split out;
    const auto cells = dataset.cells();
    for (std::size_t c = 0; c < cells.size(); ++c) {
        IndexSet cell = cells[c];
        if (cell.empty()) continue;
        Rng rng(derive_seed(seed, "split", {std::int64_t(c)}));
        shuffle(cell.begin(), cell.end(), rng);
        const std::size_t n_test = round_half_up(cfg.test_fraction * double(cell.size()));
        const std::size_t n_val = round_half_up(cfg.validation_fraction * double(cell.size() - n_test));
        for (std::size_t i = 0; i < cell.size(); ++i) {
            if (i < n_test)
                out.test.push_back(cell[i]);
            else if (i < n_test + n_val)
                out.validation.push_back(cell[i]);
            else
                out.train.push_back(cell[i]);
        }
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.validation.begin(), out.validation.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

FeatureBank::FeatureBank(const Dataset& dataset, const PipelineConfig& pipeline, const Split& split)
    : pipeline_(pipeline) {
    if (dataset.size() == 0) throw InputError("features: empty dataset");
    if (pipeline.normalization == Normalization::kGlobal)
        stats_ = fit_stats(dataset, split.train, split, pipeline);
    const FeatureStats* stats = stats_ ? &*stats_ : nullptr;
    const std::size_t dim = 2 * dataset.frame_len;
    x_.resize(Eigen::Index(dataset.size()), Eigen::Index(dim));
    y_.resize(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const FeatureMatrix f = to_feature(dataset.frames[i], pipeline, stats);
        for (std::size_t d = 0; d < dim; ++d) x_(Eigen::Index(i), Eigen::Index(d)) = f.values[d];
        y_[i] = dataset.frames[i].label;
    }
}

LabeledData FeatureBank::gather(const IndexSet& indices) const {
    LabeledData out;
    out.x.resize(Eigen::Index(indices.size()), x_.cols());
    out.y.resize(indices.size());
    for (std::size_t r = 0; r < indices.size(); ++r) {
        out.x.row(Eigen::Index(r)) = x_.row(Eigen::Index(indices[r]));
        out.y[r] = y_[indices[r]];
    }
    return out;
}

IndexSet select_single_snr(const Dataset& dataset, const IndexSet& pool, double snr_db) {
    const std::size_t idx = grid_index(dataset, snr_db, "select_single_snr");
    IndexSet out;
    for (std::size_t i : pool)
        if (dataset.snr_index(i) == idx) out.push_back(i);
    return out;
}

IndexSet select_single_snr(const Dataset& dataset, double snr_db) {
    return select_single_snr(dataset, dataset.all_indices(), snr_db);
}

IndexSet select_snrs(const Dataset& dataset, const IndexSet& pool, const std::vector<double>& snrs) {
    std::vector<bool> want(dataset.grid.size(), false);
    for (double s : snrs) want[grid_index(dataset, s, "select_snrs")] = true;
    IndexSet out;
    for (std::size_t i : pool)
        if (want[dataset.snr_index(i)]) out.push_back(i);
    return out;
}

IndexSet select_uniform_fraction(const Dataset& dataset, const IndexSet& pool, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw InputError("select_uniform_fraction: fraction must lie in (0, 1]");
    const auto cells = dataset.cells(pool);
    std::size_t occupied = 0;
    for (const auto& c : cells) occupied += !c.empty();
    if (occupied == 0) throw InputError("select_uniform_fraction: empty pool");
    const auto total = static_cast<std::size_t>(std::floor(fraction * double(pool.size())));
    const std::size_t per_cell = total / occupied;
    if (per_cell == 0) throw InputError("select_uniform_fraction: fraction leaves no frames per cell");
    IndexSet out;
    out.reserve(per_cell * occupied);
    for (std::size_t c = 0; c < cells.size(); ++c) {
        if (cells[c].empty()) continue;
        if (cells[c].size() < per_cell) throw InputError("select_uniform_fraction: cell too small for an equal draw");
        IndexSet cell = cells[c];
        Rng rng(derive_seed(seed, "uniform", {std::int64_t(c)}));
        shuffle(cell.begin(), cell.end(), rng);
        out.insert(out.end(), cell.begin(), cell.begin() + std::ptrdiff_t(per_cell));
    }
    std::sort(out.begin(), out.end());
    return out;
}

IndexSet select_uniform_fraction(const Dataset& dataset, double fraction, std::uint64_t seed) {
    return select_uniform_fraction(dataset, dataset.all_indices(), fraction, seed);
}

TrainingSession::TrainingSession(const Dataset& dataset, Split split, const PipelineConfig& pipeline,
                                 const ArchConfig& arch, const TrainConfig& train, std::uint64_t run_seed)
    : dataset_(&dataset),
      split_(std::move(split)),
      bank_(dataset, pipeline, split_),
      arch_(arch),
      train_(train),
      run_seed_(run_seed) {
    arch_.validate();
    train_.validate();
    if (arch_.input_len != dataset.frame_len)
        throw ValidationError("arch: input_len does not match the dataset frame length");
    if (arch_.n_classes != dataset.n_classes())
        throw ValidationError("arch: n_classes does not match the dataset class count");
}

std::uint64_t TrainingSession::target_seed(double target_snr) const {
    const std::size_t idx = grid_index(*dataset_, target_snr, "target");
    return tagged_seed("target", std::int64_t(idx));
}

std::uint64_t TrainingSession::tagged_seed(const std::string& tag, std::int64_t index) const {
    return derive_seed(run_seed_, tag, {index, std::int64_t(train_.seed)});
}

const Candidate& TrainingSession::candidate(const IndexSet& train, const IndexSet& validation,
                                            std::uint64_t init_seed) {
    auto key = std::make_tuple(train, validation, init_seed);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    if (train.empty()) throw InputError("training set is empty");
    if (validation.empty()) throw InputError("validation set is empty");
    TrainConfig cfg = train_;
    cfg.seed = init_seed;
    const LabeledData val = bank_.gather(validation);
    test_overlap_ += intersection_size(train, split_.test) + intersection_size(validation, split_.test);
    TrainResult r = snrsel::train(init_model(arch_, init_seed), bank_.gather(train), val, cfg);
    ++trainings_run_;
    seconds_trained_ += r.record.total_seconds;
    Candidate c{std::move(r.model), std::move(r.record), 0.0};
    if (c.record.best_epoch > 0)
        c.val_accuracy = c.record.epochs[c.record.best_epoch - 1].val_accuracy;
    else
        c.val_accuracy = evaluate(c.model, val).accuracy;
    return cache_.emplace(std::move(key), std::move(c)).first->second;
}

Fitted TrainingSession::fit(const IndexSet& train, const IndexSet& validation, const IndexSet& pool,
                            std::uint64_t init_seed) {
    auto key = std::make_tuple(train, validation, pool, init_seed);
    if (auto it = fits_.find(key); it != fits_.end()) return it->second;
    const Candidate& c = candidate(train, validation, init_seed);
    TrainConfig cfg = train_;
    cfg.seed = init_seed;
    test_overlap_ += intersection_size(pool, split_.test);
    TrainResult refit = train_epochs(init_model(arch_, init_seed), bank_.gather(pool), c.record.best_epoch, cfg);
    ++trainings_run_;
    seconds_trained_ += refit.record.total_seconds;
    Fitted f{std::move(refit.model), c.record, std::move(refit.record), c.val_accuracy, pool.size()};
    return fits_.emplace(std::move(key), std::move(f)).first->second;
}

Fitted TrainingSession::fit_snrs(const std::vector<double>& snrs, double val_snr) {
    const IndexSet train = select_snrs(*dataset_, split_.train, snrs);
    const IndexSet val = select_single_snr(*dataset_, split_.validation, val_snr);
    const IndexSet pool = select_snrs(*dataset_, split_.available(), snrs);
    return fit(train, val, pool, target_seed(val_snr));
}

LabeledData TrainingSession::test_data(std::optional<double> snr_db) const {
    if (!snr_db) return bank_.gather(split_.test);
    return bank_.gather(select_single_snr(*dataset_, split_.test, *snr_db));
}

Fitted train_single_snr(TrainingSession& session, double snr_db) { return session.fit_snrs({snr_db}, snr_db); }

Fitted train_all_snr(TrainingSession& session) {
    const Split& s = session.split();
    return session.fit(s.train, s.validation, s.available(), session.tagged_seed("all"));
}

Fitted train_uniform_fraction(TrainingSession& session, double fraction) {
    const Dataset& ds = session.dataset();
    const Split& s = session.split();
    const IndexSet train = select_uniform_fraction(ds, s.train, fraction, session.tagged_seed("uniform_train"));
    const IndexSet val = select_uniform_fraction(ds, s.validation, fraction, session.tagged_seed("uniform_val"));
    IndexSet pool;
    std::merge(train.begin(), train.end(), val.begin(), val.end(), std::back_inserter(pool));
    return session.fit(train, val, pool, session.tagged_seed("uniform_init"));
}

BoostResult snr_boost(TrainingSession& session, double target_snr, double threshold_pp) {
    const Dataset& ds = session.dataset();
    const Split& split = session.split();
    const std::size_t target_idx = grid_index(ds, target_snr, "snr_boost");
    if (std::isnan(threshold_pp) || threshold_pp < 0.0) throw InputError("snr_boost: threshold must be >= 0");
    const double target = ds.grid[target_idx];
    const std::uint64_t seed = session.target_seed(target);
    const IndexSet val = select_single_snr(ds, split.validation, target);

    BoostResult out;
    out.target_snr = target;
    out.improvement_threshold = threshold_pp;
    out.resolutions = {
        "selected list starts as {target}",
        "each candidate is a fresh model from the target's init seed",
        "candidates scored on validation frames at the target SNR",
        "best candidate of a sweep is considered; ties -> nearest the target, then lower SNR",
        "accepted only if gain > threshold percentage points",
        "final model refit on the available pool at the selected SNRs",
    };
    out.selected = {target};
    std::vector<double> remaining;
    for (std::size_t i = 0; i < ds.grid.size(); ++i)
        if (i != target_idx) remaining.push_back(ds.grid[i]);

    const Candidate& base = session.candidate(select_snrs(ds, split.train, out.selected), val, seed);
    double current = base.val_accuracy;
    out.val_trace = {current};
    out.candidate_seconds += base.record.total_seconds;
    out.costs.push_back(TrainingCost::of(base.record));

    while (!remaining.empty()) {
        // No gain above the threshold is possible; the sweep could not accept.
        if ((1.0 - current) * 100.0 <= threshold_pp) break;
        BoostSweep sweep;
        double best_acc = current;
        for (double c : remaining) {
            std::vector<double> snrs = out.selected;
            snrs.push_back(c);
            const Candidate& cand = session.candidate(select_snrs(ds, split.train, snrs), val, seed);
            out.candidate_seconds += cand.record.total_seconds;
            out.costs.push_back(TrainingCost::of(cand.record));
            sweep.candidates.emplace_back(c, cand.val_accuracy);
            if (cand.val_accuracy <= current) continue;
            bool take = !sweep.chosen || cand.val_accuracy > best_acc;
            if (sweep.chosen && cand.val_accuracy == best_acc) {
                const double dn = std::abs(c - target), db = std::abs(*sweep.chosen - target);
                take = dn < db || (dn == db && c < *sweep.chosen);
            }
            if (take) {
                sweep.chosen = c;
                best_acc = cand.val_accuracy;
            }
        }
        const bool qualifies = sweep.chosen && (best_acc - current) * 100.0 > threshold_pp;
        sweep.accepted = qualifies;
        out.sweeps.push_back(sweep);
        if (!qualifies) break;
        out.selected.push_back(*sweep.chosen);
        remaining.erase(std::find(remaining.begin(), remaining.end(), *sweep.chosen));
        current = best_acc;
        out.val_trace.push_back(current);
    }

    Fitted final = session.fit_snrs(out.selected, target);
    out.final_model = std::move(final.model);
    out.final_selection = std::move(final.selection);
    out.final_refit = std::move(final.refit);
    return out;
}

SensitivityTable offset_sensitivity(TrainingSession& session, const std::vector<double>& test_snrs,
                                    const std::vector<double>& offsets) {
    const Dataset& ds = session.dataset();
    SensitivityTable out{test_snrs, offsets, {}};
    for (double t : test_snrs) {
        grid_index(ds, t, "offset_sensitivity");
        const LabeledData test = session.test_data(t);
        std::vector<std::optional<double>> row;
        for (double o : offsets) {
            const auto idx = ds.grid.index_of(t + o);
            if (!idx) {
                row.push_back(std::nullopt);
                continue;
            }
            const Fitted f = train_single_snr(session, ds.grid[*idx]);
            row.push_back(evaluate(f.model, test).accuracy);
        }
        out.accuracy.push_back(std::move(row));
    }
    return out;
}

Ensemble bagging_train(TrainingSession& session, double target_snr, std::size_t k, double member_fraction,
                       std::uint64_t seed) {
    const Dataset& ds = session.dataset();
    const Split& split = session.split();
    const std::size_t idx = grid_index(ds, target_snr, "bagging_train");
    if (k == 0) throw InputError("bagging_train: k must be >= 1");
    if (!(member_fraction > 0.0)) throw InputError("bagging_train: member_fraction must be > 0");
    if (ds.grid.size() < 2) throw InputError("bagging_train: target has no adjacent grid value");
    std::vector<double> snrs;
    if (idx > 0) snrs.push_back(ds.grid[idx - 1]);
    snrs.push_back(ds.grid[idx]);
    if (idx + 1 < ds.grid.size()) snrs.push_back(ds.grid[idx + 1]);

    const IndexSet pool = select_snrs(ds, split.train, snrs);
    if (pool.empty()) throw InputError("bagging_train: empty pool");
    const std::size_t single_size = select_single_snr(ds, split.train, ds.grid[idx]).size();
    const std::size_t n = round_half_up(member_fraction * double(single_size));
    if (n == 0) throw InputError("bagging_train: member sample size rounds to zero");
    const IndexSet val = select_single_snr(ds, split.validation, ds.grid[idx]);
    const std::uint64_t base = derive_seed(session.tagged_seed("bagging", std::int64_t(idx)), "bag",
                                           {std::int64_t(seed)});

    Ensemble out;
    for (std::size_t m = 0; m < k; ++m) {
        const std::uint64_t member_seed = derive_seed(base, "member", {std::int64_t(m)});
        Rng rng(derive_seed(member_seed, "sample"));
        IndexSet sample(n);
        for (auto& s : sample) s = pool[rng.below(pool.size())];
        const Candidate& c = session.candidate(sample, val, member_seed);
        out.members.push_back(c.model);
        out.info.push_back({snrs, n, member_seed, c.record});
    }
    return out;
}

Candidate sized_single_snr(TrainingSession& session, double target_snr, std::size_t sample_size,
                           std::uint64_t seed) {
    const Dataset& ds = session.dataset();
    const Split& split = session.split();
    const std::size_t idx = grid_index(ds, target_snr, "sized_single_snr");
    IndexSet pool = select_single_snr(ds, split.train, ds.grid[idx]);
    if (sample_size == 0 || sample_size > pool.size())
        throw InputError("sized_single_snr: sample size must lie in [1, single-SNR set size]");
    const std::uint64_t s = derive_seed(session.tagged_seed("sized", std::int64_t(idx)), "sized",
                                        {std::int64_t(seed)});
    Rng rng(derive_seed(s, "sample"));
    shuffle(pool.begin(), pool.end(), rng);
    pool.resize(sample_size);
    std::sort(pool.begin(), pool.end());
    return session.candidate(pool, select_single_snr(ds, split.validation, ds.grid[idx]), s);
}

std::vector<int> plurality_vote(const std::vector<Matrix>& member_probs) {
    if (member_probs.empty()) throw InputError("vote: no members");
    const Eigen::Index rows = member_probs[0].rows(), cols = member_probs[0].cols();
    for (const auto& p : member_probs)
        if (p.rows() != rows || p.cols() != cols) throw InputError("vote: member outputs differ in shape");
    std::vector<std::vector<int>> labels;
    for (const auto& p : member_probs) labels.push_back(argmax_rows(p));

    std::vector<int> out(std::size_t(rows), 0);
    std::vector<int> votes(static_cast<std::size_t>(cols));
    for (Eigen::Index r = 0; r < rows; ++r) {
        std::fill(votes.begin(), votes.end(), 0);
        for (const auto& l : labels) ++votes[std::size_t(l[std::size_t(r)])];
        const int top = *std::max_element(votes.begin(), votes.end());
        int best = -1;
        double best_mass = -1.0;
        for (Eigen::Index c = 0; c < cols; ++c) {
            if (votes[std::size_t(c)] != top) continue;
            double mass = 0.0;
            for (const auto& p : member_probs) mass += p(r, c);
            if (mass > best_mass) {
                best_mass = mass;
                best = int(c);
            }
        }
        out[std::size_t(r)] = best;
    }
    return out;
}

std::vector<int> ensemble_predict(const Ensemble& ensemble, const Matrix& x) {
    if (ensemble.members.empty()) throw InputError("ensemble_predict: empty ensemble");
    std::vector<Matrix> probs;
    for (const auto& m : ensemble.members) probs.push_back(forward(m, x));
    return plurality_vote(probs);
}

std::vector<int> ensemble_predict(const Ensemble& ensemble, std::span<const Frame> frames,
                                  const PipelineConfig& pipeline, const FeatureStats* stats) {
    std::vector<FeatureMatrix> feats;
    feats.reserve(frames.size());
    for (const auto& f : frames) feats.push_back(to_feature(f, pipeline, stats));
    std::vector<int> dummy(frames.size(), 0);
    return ensemble_predict(ensemble, make_labeled(feats, dummy).x);
}

}  // namespace snrsel

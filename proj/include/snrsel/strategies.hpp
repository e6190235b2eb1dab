#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "snrsel/dataset.hpp"
#include "snrsel/features.hpp"
#include "snrsel/learner.hpp"

namespace snrsel {

struct SplitConfig {
    double test_fraction = 0.5;        ///< of each (class, SNR) cell
    double validation_fraction = 0.2;  ///< of what remains for training
    void validate() const;
    bool operator==(const SplitConfig&) const = default;
};

/// Stratified split: every (class, SNR) cell is shuffled with its own
/// derived seed and cut into test, validation and train parts.
Split make_split(const Dataset& dataset, const SplitConfig& cfg, std::uint64_t seed);

/// Model inputs for every frame of a dataset, computed once.
class FeatureBank {
public:
    /// With global normalization the statistics are fit on split.train only.
    FeatureBank(const Dataset& dataset, const PipelineConfig& pipeline, const Split& split);

    LabeledData gather(const IndexSet& indices) const;
    const PipelineConfig& pipeline() const noexcept { return pipeline_; }
    const std::optional<FeatureStats>& stats() const noexcept { return stats_; }

private:
    PipelineConfig pipeline_;
    std::optional<FeatureStats> stats_;
    Matrix x_;
    std::vector<int> y_;
};

/// Frames of `pool` whose SNR equals snr_db. Off-grid requests throw InputError.
IndexSet select_single_snr(const Dataset& dataset, const IndexSet& pool, double snr_db);
IndexSet select_single_snr(const Dataset& dataset, double snr_db);
/// Frames of `pool` at any of the listed SNRs.
IndexSet select_snrs(const Dataset& dataset, const IndexSet& pool, const std::vector<double>& snrs);

/// Same number of frames from every (class, SNR) cell of `pool`:
/// floor(fraction * |pool|) spread evenly over the cells (rounded down per
/// cell). InputError when that rounds to zero or a cell is too small.
IndexSet select_uniform_fraction(const Dataset& dataset, const IndexSet& pool, double fraction, std::uint64_t seed);
IndexSet select_uniform_fraction(const Dataset& dataset, double fraction, std::uint64_t seed);

/// Size and cost of one training run, for time accounting.
struct TrainingCost {
    std::size_t train_examples = 0;
    std::size_t epochs = 0;
    double seconds = 0.0;
    static TrainingCost of(const TrainRecord& r) { return {r.train_examples, r.epochs_run, r.total_seconds}; }
};

/// Early-stopped training outcome on one (train, validation) pair.
struct Candidate {
    Model model;
    TrainRecord record;
    double val_accuracy = 0.0;
};

/// A candidate refit on train + validation for the candidate's best epoch count.
struct Fitted {
    Model model;
    TrainRecord selection;
    TrainRecord refit;
    double val_accuracy = 0.0;
    std::size_t train_examples = 0;
};

/// Everything one (seed, split) needs to train models: features, architecture,
/// training settings and a cache of completed trainings. Identical requests
/// (same indices and init seed) train once, so strategies that share a base
/// case (single SNR, sensitivity, boosting) reuse it.
class TrainingSession {
public:
    TrainingSession(const Dataset& dataset, Split split, const PipelineConfig& pipeline, const ArchConfig& arch,
                    const TrainConfig& train, std::uint64_t run_seed);

    const Dataset& dataset() const noexcept { return *dataset_; }
    const Split& split() const noexcept { return split_; }
    const FeatureBank& bank() const noexcept { return bank_; }
    const ArchConfig& arch() const noexcept { return arch_; }
    const TrainConfig& train_config() const noexcept { return train_; }
    std::uint64_t run_seed() const noexcept { return run_seed_; }

    /// Init (and shuffle) seed shared by every model aimed at one target SNR.
    std::uint64_t target_seed(double target_snr) const;
    std::uint64_t tagged_seed(const std::string& tag, std::int64_t index = 0) const;

    /// Early-stopped training; repeated requests hit the cache.
    const Candidate& candidate(const IndexSet& train, const IndexSet& validation, std::uint64_t init_seed);

    /// candidate() followed by a refit on `pool` for the best epoch count.
    Fitted fit(const IndexSet& train, const IndexSet& validation, const IndexSet& pool, std::uint64_t init_seed);

    /// Train frames at `snrs`, validated on validation frames at val_snr,
    /// refit on the available pool at `snrs`. Init seed from target_seed(val_snr).
    Fitted fit_snrs(const std::vector<double>& snrs, double val_snr);

    /// Held-out test frames, optionally restricted to one SNR.
    LabeledData test_data(std::optional<double> snr_db = std::nullopt) const;

    /// Trainings actually executed (cache misses), including refits.
    std::size_t trainings_run() const noexcept { return trainings_run_; }
    double seconds_trained() const noexcept { return seconds_trained_; }
    /// Total count of test indices seen in any training or validation request. Zero for a clean run.
    std::size_t test_overlap() const noexcept { return test_overlap_; }

private:
    const Dataset* dataset_;
    Split split_;
    FeatureBank bank_;
    ArchConfig arch_;
    TrainConfig train_;
    std::uint64_t run_seed_;
    std::map<std::tuple<IndexSet, IndexSet, std::uint64_t>, Candidate> cache_;
    std::map<std::tuple<IndexSet, IndexSet, IndexSet, std::uint64_t>, Fitted> fits_;
    std::size_t trainings_run_ = 0;
    double seconds_trained_ = 0.0;
    std::size_t test_overlap_ = 0;
};

/// Training on a single SNR slice.
Fitted train_single_snr(TrainingSession& session, double snr_db);

/// Training on every SNR.
Fitted train_all_snr(TrainingSession& session);

/// Uniform stratified subsets of the train and validation parts with the
/// same fraction, refit on their union.
Fitted train_uniform_fraction(TrainingSession& session, double fraction);

struct BoostSweep {
    std::vector<std::pair<double, double>> candidates;  ///< (SNR, validation accuracy)
    std::optional<double> chosen;                       ///< best improving SNR, if any
    bool accepted = false;
};

struct BoostResult {
    double target_snr = 0.0;
    std::vector<double> selected;   ///< target first, then in order of acceptance
    std::vector<double> val_trace;  ///< validation accuracy of {target}, then after each acceptance
    double improvement_threshold = 1.0;  ///< percentage points
    std::vector<BoostSweep> sweeps;
    Model final_model;
    TrainRecord final_selection;
    TrainRecord final_refit;
    double candidate_seconds = 0.0;  ///< sum of every candidate training, cached or not
    std::vector<TrainingCost> costs;  ///< base case, then every candidate in sweep order
    std::vector<std::string> resolutions;
};

/// Greedy SNR boosting. Starts from {target}; each sweep trains a fresh model
/// (same init seed) on selected ∪ {c} for every remaining c and scores it on
/// the validation frames at the target. The best candidate that beats the
/// current accuracy is accepted when its gain exceeds `threshold_pp`
/// percentage points. Ties go to the SNR nearest the target, then the lower.
/// The final model is refit on the available pool at the selected SNRs.
BoostResult snr_boost(TrainingSession& session, double target_snr, double threshold_pp = 1.0);

/// accuracy[test][offset]; nullopt where test + offset is off the grid.
struct SensitivityTable {
    std::vector<double> test_snrs;
    std::vector<double> offsets;
    std::vector<std::vector<std::optional<double>>> accuracy;
};

/// Trains on the single SNR test + offset and evaluates at test.
SensitivityTable offset_sensitivity(TrainingSession& session, const std::vector<double>& test_snrs,
                                    const std::vector<double>& offsets = {-4, -2, 0, 2, 4});

struct MemberInfo {
    std::vector<double> pool_snrs;
    std::size_t sample_size = 0;
    std::uint64_t seed = 0;
    TrainRecord record;
};

struct Ensemble {
    std::vector<Model> members;
    std::vector<MemberInfo> info;
};

/// k members, each trained on a bootstrap sample (with replacement) of
/// member_fraction x |single-SNR train set| frames drawn from the train frames
/// at the target and its grid neighbours, validated at the target.
Ensemble bagging_train(TrainingSession& session, double target_snr, std::size_t k = 3,
                       double member_fraction = 0.05, std::uint64_t seed = 0);

/// Single-SNR baseline trained on `sample_size` frames drawn without
/// replacement from the train frames at the target.
Candidate sized_single_snr(TrainingSession& session, double target_snr, std::size_t sample_size,
                           std::uint64_t seed = 0);

/// Plurality vote over member argmax labels. Ties go to the tied class with
/// the highest mean member probability, then to the lowest class index.
std::vector<int> plurality_vote(const std::vector<Matrix>& member_probs);

std::vector<int> ensemble_predict(const Ensemble& ensemble, const Matrix& x);
std::vector<int> ensemble_predict(const Ensemble& ensemble, std::span<const Frame> frames,
                                  const PipelineConfig& pipeline, const FeatureStats* stats = nullptr);

}  // namespace snrsel

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "snrsel/config.hpp"
#include "snrsel/dataset.hpp"
#include "snrsel/features.hpp"
#include "snrsel/learner.hpp"
#include "snrsel/strategies.hpp"

namespace snrsel {

enum class Strategy { kAllSnr, kSingleSnr, kUniformFraction, kBoost, kBagging, kSensitivity };

std::string to_string(Strategy s);
/// "all_snr", "single_snr", "uniform_fraction", "boost", "bagging", "sensitivity".
Strategy parse_strategy(const std::string& name);

struct StrategyParams {
    double threshold_pp = 1.0;
    /// Unset: 1 / |grid|, the size of one single-SNR slice.
    std::optional<double> uniform_fraction;
    std::size_t k = 3;
    double member_fraction = 0.05;
    std::uint64_t bagging_seed = 0;
    bool bagging_baseline = true;
    std::vector<double> offsets = {-4, -2, 0, 2, 4};
};

struct ExperimentConfig {
    std::optional<DatasetSpec> dataset;
    std::optional<std::filesystem::path> import_path;
    PipelineConfig pipeline;
    ArchConfig arch;
    TrainConfig train;
    SplitConfig split;
    std::vector<Strategy> strategies = {Strategy::kSingleSnr};
    StrategyParams params;
    std::vector<double> test_snrs;  ///< empty: the whole grid
    std::size_t n_seeds = 1;
    std::uint64_t seed = 0;
    std::filesystem::path output_dir;  ///< empty: nothing persisted
    bool save_models = false;

    /// Fills grid-dependent defaults (test SNRs, arch shape when omitted) and
    /// checks every referenced SNR against the dataset. Throws ValidationError.
    void resolve(const Dataset& dataset);

    bool infer_input_len = true;
    bool infer_n_classes = true;
};

/// Relative import paths resolve against base_dir.
ExperimentConfig parse_experiment(const Json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment(const std::filesystem::path& path);
Json to_json(const ExperimentConfig& cfg);

/// Generates or imports the configured dataset.
Dataset load_dataset(const ExperimentConfig& cfg);

struct MemberDescriptor {
    std::vector<double> pool_snrs;
    std::size_t sample_size = 0;
    std::uint64_t seed = 0;
    std::size_t epochs = 0;
};

/// One (seed, test SNR) evaluation.
struct RunRecord {
    std::size_t seed_index = 0;
    std::uint64_t run_seed = 0;
    double test_snr = 0.0;
    double accuracy = 0.0;
    ConfusionMatrix confusion;
    std::size_t train_examples = 0;  ///< frames the final model was fit on
    std::size_t epochs = 0;          ///< epochs of the final model's early-stopped training
    double seconds_per_epoch = 0.0;  ///< of that training
    double train_seconds = 0.0;      ///< sum over `trainings`
    std::vector<TrainingCost> trainings;
    std::vector<double> selected;
    std::vector<double> val_trace;
    std::vector<MemberDescriptor> members;
    std::optional<double> baseline_accuracy;
    std::vector<std::optional<double>> sensitivity;  ///< one per offset
};

struct CurvePoint {
    double snr_db = 0.0;
    double mean = 0.0;
    double stddev = 0.0;  ///< sample std across seeds, 0 for one seed
    std::size_t n = 0;
    std::optional<double> baseline_mean;
    std::optional<double> baseline_stddev;
};

struct SensitivityCell {
    double test_snr = 0.0;
    double offset = 0.0;
    std::optional<double> mean;  ///< nullopt: test + offset off the grid
    double stddev = 0.0;
    std::size_t n = 0;
};

struct SeedAudit {
    std::size_t seed_index = 0;
    SplitAudit split;
    std::size_t subset_test_overlap = 0;
    bool clean() const noexcept { return split.clean() && subset_test_overlap == 0; }
};

struct Timing {
    double total_train_seconds = 0.0;  ///< sum of run train_seconds
    double wall_seconds = 0.0;
    double mean_seconds_per_epoch = 0.0;
};

struct EvalReport {
    std::string strategy;
    std::vector<std::string> class_names;
    std::vector<double> test_snrs;
    std::vector<double> offsets;
    std::size_t n_seeds = 0;
    Json config = Json::object();
    std::vector<RunRecord> runs;
    std::vector<CurvePoint> curve;
    std::vector<ConfusionMatrix> confusion;  ///< per test SNR, summed over seeds
    std::vector<SensitivityCell> sensitivity;
    std::vector<SeedAudit> audits;
    Timing timing;

    bool audits_clean() const;
    /// Recomputes curve, confusion and sensitivity from runs.
    void aggregate();
};

Json to_json(const EvalReport& r);
EvalReport report_from_json(const Json& j);
/// Copy with every key containing "seconds" (and the timing block) removed.
Json strip_timing(const Json& j);

/// Executes every configured strategy over n_seeds. One training session per
/// seed is shared by all strategies. Persists results when output_dir is set.
std::vector<EvalReport> run_experiment(const ExperimentConfig& cfg, const Dataset& dataset);
std::vector<EvalReport> run_experiment(ExperimentConfig cfg);
/// Single-strategy convenience wrapper.
EvalReport run(const ExperimentConfig& cfg);

/// curve.csv, timing.csv, sensitivity.csv, selected.csv, confusion.csv and
/// summary.json in `dir`. Throws IoError when the directory is unwritable.
void report_export(const EvalReport& report, const std::filesystem::path& dir);

struct OverlayCell {
    std::size_t truth = 0;
    std::size_t predicted = 0;
    double whole = 0.0;
    double single = 0.0;
    double boost = 0.0;
};

/// Row-normalized confusion triples (whole dataset, single SNR, boosting) at one test SNR.
std::vector<OverlayCell> confusion_overlay(const EvalReport& whole, const EvalReport& single,
                                           const EvalReport& boost, double test_snr);
void export_overlay(const std::vector<OverlayCell>& cells, const std::vector<std::string>& class_names,
                    const std::filesystem::path& path);

}  // namespace snrsel

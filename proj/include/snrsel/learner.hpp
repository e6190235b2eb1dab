#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "snrsel/dataset.hpp"
#include "snrsel/features.hpp"

namespace snrsel {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// 1-D convolution over the two I/Q rows, ReLU, then non-overlapping
/// average pooling of width `pool` along time (0 pools over all positions).
struct ConvFront {
    std::size_t n_kernels = 16;
    std::size_t kernel_len = 3;
    std::size_t pool = 1;
    bool operator==(const ConvFront&) const = default;
};

struct ArchConfig {
    std::size_t input_len = 128;  ///< samples per frame; the input is 2 x input_len
    std::vector<std::size_t> hidden{64, 32};
    std::optional<ConvFront> conv_front;
    std::size_t n_classes = 2;

    std::size_t input_dim() const noexcept { return 2 * input_len; }
    /// Width of the conv stage output, or input_dim() without one.
    std::size_t front_dim() const;
    void validate() const;
    bool operator==(const ArchConfig&) const = default;
};

/// One named parameter tensor inside the flat parameter vector.
struct ParamBlock {
    std::string name;
    std::size_t offset = 0;
    std::size_t rows = 0;
    std::size_t cols = 1;
    bool is_bias = false;
    std::size_t fan_in = 0;
    std::size_t size() const noexcept { return rows * cols; }
};

std::vector<ParamBlock> param_layout(const ArchConfig& arch);

struct Model {
    ArchConfig arch;
    Vector params;
    std::vector<ParamBlock> layout;
    std::uint64_t init_seed = 0;

    std::size_t n_params() const noexcept { return std::size_t(params.size()); }
    const ParamBlock& block(const std::string& name) const;
};

enum class Optimizer { kAdam, kSgdMomentum };

std::string to_string(Optimizer o);
Optimizer parse_optimizer(const std::string& name);

struct TrainConfig {
    Optimizer optimizer = Optimizer::kAdam;
    double learning_rate = 1e-3;
    double momentum = 0.9;  ///< SGD only
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t batch_size = 128;
    std::size_t max_epochs = 100;
    std::size_t early_stop_patience = 5;
    std::uint64_t seed = 0;

    void validate() const;
    bool operator==(const TrainConfig&) const = default;
};

struct EpochStats {
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
    double seconds = 0.0;
};

struct TrainRecord {
    std::size_t epochs_run = 0;
    /// 1-based epoch whose parameters were returned; 0 means the initial model.
    std::size_t best_epoch = 0;
    double best_val_loss = 0.0;
    double seconds_per_epoch = 0.0;
    double total_seconds = 0.0;
    std::size_t train_examples = 0;
    std::size_t val_examples = 0;
    std::vector<EpochStats> epochs;

    double summed_epoch_seconds() const;
};

/// Feature rows (one flattened 2 x N matrix per row) and labels.
struct LabeledData {
    Matrix x;
    std::vector<int> y;
    std::size_t size() const noexcept { return y.size(); }
};

LabeledData make_labeled(std::span<const FeatureMatrix> features, std::span<const int> labels);

/// He-uniform weights (limit sqrt(6 / fan_in)), zero biases.
Model init_model(const ArchConfig& arch, std::uint64_t seed);

/// Class probabilities, one row per input row.
Matrix forward(const Model& model, const Matrix& batch);
Matrix forward(const Model& model, std::span<const FeatureMatrix> batch);

struct LossGrad {
    double loss = 0.0;
    Vector grad;
};

/// Mean cross-entropy over the batch and its gradient in parameter layout.
LossGrad loss_and_grad(const Model& model, const Matrix& batch, std::span<const int> labels);

struct TrainResult {
    Model model;
    TrainRecord record;
};

/// Shuffled mini-batch training with early stopping on validation loss.
/// Returns the parameters of the best validation epoch.
TrainResult train(const Model& init, const LabeledData& train_set, const LabeledData& val_set,
                  const TrainConfig& cfg);

/// Exactly `epochs` epochs over train_set with no validation; the final
/// parameters are returned. Used to refit on a pool after the epoch count
/// was chosen by train().
TrainResult train_epochs(const Model& init, const LabeledData& train_set, std::size_t epochs,
                         const TrainConfig& cfg);

/// Row-wise argmax, ties to the lowest class index.
std::vector<int> argmax_rows(const Matrix& probs);

std::vector<int> predict(const Model& model, const Matrix& x);
std::vector<int> predict(const Model& model, std::span<const Frame> frames, const PipelineConfig& pipeline,
                         const FeatureStats* stats = nullptr);

/// Counts indexed [true][predicted].
class ConfusionMatrix {
public:
    ConfusionMatrix() = default;
    explicit ConfusionMatrix(std::size_t n_classes) : n_(n_classes), counts_(n_classes * n_classes, 0) {}
    /// From row-major counts; throws InputError unless counts.size() == n*n.
    ConfusionMatrix(std::size_t n_classes, std::vector<std::uint64_t> counts);

    void add(int truth, int predicted);
    void merge(const ConfusionMatrix& other);

    std::size_t n_classes() const noexcept { return n_; }
    std::uint64_t at(std::size_t truth, std::size_t predicted) const { return counts_.at(truth * n_ + predicted); }
    std::uint64_t total() const noexcept;
    std::uint64_t row_sum(std::size_t truth) const;
    double accuracy() const;
    /// Rows scaled to sum to 1; empty rows stay zero.
    std::vector<std::vector<double>> row_normalized() const;
    const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }

    bool operator==(const ConfusionMatrix&) const = default;

private:
    std::size_t n_ = 0;
    std::vector<std::uint64_t> counts_;
};

struct Evaluation {
    double accuracy = 0.0;
    ConfusionMatrix confusion;
};

Evaluation evaluate(const Model& model, const LabeledData& test);
Evaluation evaluate(const Model& model, std::span<const Frame> frames, const PipelineConfig& pipeline,
                    const FeatureStats* stats = nullptr);
Evaluation evaluate_predictions(std::span<const int> truth, std::span<const int> predicted, std::size_t n_classes);

/// Writes `<base>.bin` (little-endian float64 parameters) and
/// `<base>.meta.json`. `extra_meta` is merged into the sidecar.
void save_model(const Model& model, const std::filesystem::path& base, const std::string& extra_meta_json = "{}");
Model load_model(const std::filesystem::path& base);

}  // namespace snrsel

#include "snrsel/learner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

#include "snrsel/config.hpp"
#include "snrsel/error.hpp"
#include "snrsel/random.hpp"

namespace snrsel {

namespace {

using Clock = std::chrono::steady_clock;
using ConstMap = Eigen::Map<const Matrix>;
using MutMap = Eigen::Map<Matrix>;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::size_t conv_positions(const ArchConfig& a) { return a.input_len - a.conv_front->kernel_len + 1; }

std::size_t pool_width(const ArchConfig& a) {
    return a.conv_front->pool == 0 ? conv_positions(a) : a.conv_front->pool;
}

struct Cache {
    Matrix cols;      // (B*T) x (2L) sliding windows
    Matrix conv_pre;  // (B*T) x K
    std::vector<Matrix> act;  // act[i] is the input of dense layer i
    std::vector<Matrix> pre;  // pre-activation of dense layer i
    Matrix probs;
};

ConstMap weights(const Model& m, const ParamBlock& b) {
    return ConstMap(m.params.data() + b.offset, Eigen::Index(b.rows), Eigen::Index(b.cols));
}

Eigen::Map<const Eigen::RowVectorXd> bias(const Model& m, const ParamBlock& b) {
    return Eigen::Map<const Eigen::RowVectorXd>(m.params.data() + b.offset, Eigen::Index(b.size()));
}

void softmax_rows(Matrix& z) {
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
        auto row = z.row(r);
        const double mx = row.maxCoeff();
        row = (row.array() - mx).exp();
        row /= row.sum();
    }
}

void run_forward(const Model& m, const Matrix& x, Cache& c) {
    const auto& a = m.arch;
    if (std::size_t(x.cols()) != a.input_dim())
        throw InputError("forward: feature dimension " + std::to_string(x.cols()) + " does not match architecture " +
                         std::to_string(a.input_dim()));
    const Eigen::Index batch = x.rows();
    std::size_t block = 0;
    const std::size_t n_dense = a.hidden.size() + 1;
    c.act.resize(n_dense);
    c.pre.resize(n_dense);

    if (a.conv_front) {
        const auto& cf = *a.conv_front;
        const std::size_t n = a.input_len, len = cf.kernel_len, t_out = conv_positions(a);
        const std::size_t pool = pool_width(a), pooled = t_out / pool, k = cf.n_kernels;
        c.cols.resize(batch * Eigen::Index(t_out), Eigen::Index(2 * len));
        for (Eigen::Index b = 0; b < batch; ++b) {
            const double* re = x.data() + b * x.cols();
            const double* im = re + n;
            for (std::size_t t = 0; t < t_out; ++t) {
                double* dst = c.cols.data() + (b * Eigen::Index(t_out) + Eigen::Index(t)) * Eigen::Index(2 * len);
                std::copy_n(re + t, len, dst);
                std::copy_n(im + t, len, dst + len);
            }
        }
        const auto& wb = m.layout[block++];
        const auto& bb = m.layout[block++];
        c.conv_pre.noalias() = c.cols * weights(m, wb).transpose();
        c.conv_pre.rowwise() += bias(m, bb);
        Matrix& front = c.act[0];
        front.setZero(batch, Eigen::Index(pooled * k));
        const double inv = 1.0 / double(pool);
        for (Eigen::Index b = 0; b < batch; ++b)
            for (std::size_t tp = 0; tp < pooled; ++tp)
                for (std::size_t p = 0; p < pool; ++p) {
                    const auto src = c.conv_pre.row(b * Eigen::Index(t_out) + Eigen::Index(tp * pool + p));
                    auto dst = front.row(b).segment(Eigen::Index(tp * k), Eigen::Index(k));
                    dst += inv * src.cwiseMax(0.0);
                }
    } else {
        c.act[0] = x;
    }

    for (std::size_t i = 0; i < n_dense; ++i) {
        const auto& wb = m.layout[block++];
        const auto& bb = m.layout[block++];
        c.pre[i].noalias() = c.act[i] * weights(m, wb);
        c.pre[i].rowwise() += bias(m, bb);
        if (i + 1 < n_dense) c.act[i + 1] = c.pre[i].cwiseMax(0.0);
    }
    c.probs = c.pre.back();
    softmax_rows(c.probs);
}

double mean_cross_entropy(const Matrix& logits, std::span<const int> labels) {
    double loss = 0.0;
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const auto row = logits.row(r);
        const double mx = row.maxCoeff();
        const double lse = mx + std::log((row.array() - mx).exp().sum());
        loss += lse - row(labels[std::size_t(r)]);
    }
    return loss / double(logits.rows());
}

void check_labels(std::span<const int> labels, std::size_t n_classes, Eigen::Index rows) {
    if (labels.size() != std::size_t(rows)) throw InputError("label count does not match batch size");
    for (int y : labels)
        if (y < 0 || std::size_t(y) >= n_classes) throw InputError("label out of range");
}

/// Backward pass into `grad` (already sized to the parameter vector).
void run_backward(const Model& m, const Cache& c, std::span<const int> labels, Vector& grad) {
    const auto& a = m.arch;
    const Eigen::Index batch = c.probs.rows();
    Matrix delta = c.probs;
    for (Eigen::Index r = 0; r < batch; ++r) delta(r, labels[std::size_t(r)]) -= 1.0;
    delta /= double(batch);

    const std::size_t n_dense = a.hidden.size() + 1;
    const std::size_t first_dense = a.conv_front ? 2 : 0;
    for (std::size_t i = n_dense; i-- > 0;) {
        const auto& wb = m.layout[first_dense + 2 * i];
        const auto& bb = m.layout[first_dense + 2 * i + 1];
        MutMap(grad.data() + wb.offset, Eigen::Index(wb.rows), Eigen::Index(wb.cols)).noalias() =
            c.act[i].transpose() * delta;
        Eigen::Map<Eigen::RowVectorXd>(grad.data() + bb.offset, Eigen::Index(bb.size())) = delta.colwise().sum();
        if (i == 0 && !a.conv_front) break;
        Matrix upstream = delta * weights(m, wb).transpose();
        if (i > 0) {
            delta = upstream.cwiseProduct((c.pre[i - 1].array() > 0.0).cast<double>().matrix());
            continue;
        }
        // Through average pooling and the conv ReLU.
        const std::size_t t_out = conv_positions(a), pool = pool_width(a), pooled = t_out / pool;
        const std::size_t k = a.conv_front->n_kernels;
        Matrix dz = Matrix::Zero(c.conv_pre.rows(), c.conv_pre.cols());
        const double inv = 1.0 / double(pool);
        for (Eigen::Index b = 0; b < batch; ++b)
            for (std::size_t tp = 0; tp < pooled; ++tp)
                for (std::size_t p = 0; p < pool; ++p) {
                    const Eigen::Index row = b * Eigen::Index(t_out) + Eigen::Index(tp * pool + p);
                    const auto up = upstream.row(b).segment(Eigen::Index(tp * k), Eigen::Index(k));
                    dz.row(row) = inv * up.cwiseProduct((c.conv_pre.row(row).array() > 0.0).cast<double>().matrix());
                }
        const auto& cwb = m.layout[0];
        const auto& cbb = m.layout[1];
        MutMap(grad.data() + cwb.offset, Eigen::Index(cwb.rows), Eigen::Index(cwb.cols)).noalias() =
            dz.transpose() * c.cols;
        Eigen::Map<Eigen::RowVectorXd>(grad.data() + cbb.offset, Eigen::Index(cbb.size())) = dz.colwise().sum();
    }
}

class OptimizerState {
public:
    OptimizerState(const TrainConfig& cfg, std::size_t n)
        : cfg_(cfg), m1_(Vector::Zero(Eigen::Index(n))), m2_(Vector::Zero(Eigen::Index(n))) {}

    void step(Vector& params, const Vector& grad) {
        ++t_;
        if (cfg_.optimizer == Optimizer::kSgdMomentum) {
            m1_ = cfg_.momentum * m1_ + grad;
            params -= cfg_.learning_rate * m1_;
            return;
        }
        m1_ = cfg_.beta1 * m1_ + (1.0 - cfg_.beta1) * grad;
        m2_ = cfg_.beta2 * m2_ + (1.0 - cfg_.beta2) * grad.cwiseProduct(grad);
        const double c1 = 1.0 - std::pow(cfg_.beta1, double(t_));
        const double c2 = 1.0 - std::pow(cfg_.beta2, double(t_));
        const double lr = cfg_.learning_rate * std::sqrt(c2) / c1;
        params.array() -= lr * m1_.array() / (m2_.array().sqrt() + cfg_.epsilon * std::sqrt(c2));
    }

private:
    TrainConfig cfg_;
    Vector m1_, m2_;
    std::size_t t_ = 0;
};

/// One shuffled pass. Returns (mean train loss, train accuracy) over the pass.
std::pair<double, double> run_epoch(Model& m, const LabeledData& data, const TrainConfig& cfg, std::size_t epoch,
                                    OptimizerState& opt, Cache& cache, Vector& grad) {
    const std::size_t n = data.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(derive_seed(cfg.seed, "shuffle", {std::int64_t(epoch)}));
    shuffle(order.begin(), order.end(), rng);

    Matrix xb;
    std::vector<int> yb;
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
        const std::size_t count = std::min(cfg.batch_size, n - start);
        xb.resize(Eigen::Index(count), data.x.cols());
        yb.resize(count);
        for (std::size_t i = 0; i < count; ++i) {
            xb.row(Eigen::Index(i)) = data.x.row(Eigen::Index(order[start + i]));
            yb[i] = data.y[order[start + i]];
        }
        run_forward(m, xb, cache);
        loss_sum += mean_cross_entropy(cache.pre.back(), yb) * double(count);
        const auto pred = argmax_rows(cache.probs);
        for (std::size_t i = 0; i < count; ++i) correct += pred[i] == yb[i];
        run_backward(m, cache, yb, grad);
        opt.step(m.params, grad);
    }
    return {loss_sum / double(n), double(correct) / double(n)};
}

void validate_set(const LabeledData& d, const Model& m, const char* what) {
    if (d.size() == 0) throw InputError(std::string("train: empty ") + what + " split");
    if (std::size_t(d.x.cols()) != m.arch.input_dim()) throw InputError(std::string("train: ") + what + " feature dimension mismatch");
    check_labels(d.y, m.arch.n_classes, d.x.rows());
}

}  // namespace

std::size_t ArchConfig::front_dim() const {
    if (!conv_front) return input_dim();
    if (conv_front->pool == 0) return conv_front->n_kernels;
    return (input_len - conv_front->kernel_len + 1) / conv_front->pool * conv_front->n_kernels;
}

void ArchConfig::validate() const {
    if (input_len == 0) throw ValidationError("arch: input_len must be > 0");
    if (hidden.empty()) throw ValidationError("arch: at least one hidden layer is required");
    for (auto h : hidden)
        if (h == 0) throw ValidationError("arch: hidden widths must be > 0");
    if (n_classes < 2) throw ValidationError("arch: n_classes must be >= 2");
    if (conv_front) {
        const auto& c = *conv_front;
        if (c.n_kernels == 0 || c.kernel_len == 0) throw ValidationError("arch: conv_front sizes must be > 0");
        if (c.kernel_len > input_len) throw ValidationError("arch: kernel longer than input");
        if (c.pool != 0 && (input_len - c.kernel_len + 1) / c.pool == 0) throw ValidationError("arch: pooling removes every position");
    }
}

std::vector<ParamBlock> param_layout(const ArchConfig& arch) {
    arch.validate();
    std::vector<ParamBlock> out;
    std::size_t offset = 0;
    auto add = [&](std::string name, std::size_t rows, std::size_t cols, bool is_bias, std::size_t fan_in) {
        out.push_back({std::move(name), offset, rows, cols, is_bias, fan_in});
        offset += rows * cols;
    };
    if (arch.conv_front) {
        const auto& c = *arch.conv_front;
        add("conv.w", c.n_kernels, 2 * c.kernel_len, false, 2 * c.kernel_len);
        add("conv.b", 1, c.n_kernels, true, 2 * c.kernel_len);
    }
    std::size_t in = arch.front_dim();
    for (std::size_t i = 0; i < arch.hidden.size(); ++i) {
        add("dense" + std::to_string(i) + ".w", in, arch.hidden[i], false, in);
        add("dense" + std::to_string(i) + ".b", 1, arch.hidden[i], true, in);
        in = arch.hidden[i];
    }
    add("out.w", in, arch.n_classes, false, in);
    add("out.b", 1, arch.n_classes, true, in);
    return out;
}

const ParamBlock& Model::block(const std::string& name) const {
    for (const auto& b : layout)
        if (b.name == name) return b;
    throw InputError("no parameter block '" + name + "'");
}

std::string to_string(Optimizer o) { return o == Optimizer::kAdam ? "adam" : "sgd_momentum"; }

Optimizer parse_optimizer(const std::string& name) {
    if (name == "adam") return Optimizer::kAdam;
    if (name == "sgd_momentum" || name == "sgd") return Optimizer::kSgdMomentum;
    throw ValidationError("unknown optimizer '" + name + "'");
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ValidationError("train: learning_rate must be > 0");
    if (early_stop_patience < 1) throw ValidationError("train: early_stop_patience must be >= 1");
    if (batch_size == 0) throw ValidationError("train: batch_size must be > 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ValidationError("train: momentum must be in [0, 1)");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
        throw ValidationError("train: Adam betas must be in [0, 1)");
}

double TrainRecord::summed_epoch_seconds() const {
    double s = 0.0;
    for (const auto& e : epochs) s += e.seconds;
    return s;
}

LabeledData make_labeled(std::span<const FeatureMatrix> features, std::span<const int> labels) {
    if (features.size() != labels.size()) throw InputError("make_labeled: size mismatch");
    LabeledData d;
    const std::size_t dim = features.empty() ? 0 : features.front().dim();
    d.x.resize(Eigen::Index(features.size()), Eigen::Index(dim));
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (features[i].dim() != dim) throw InputError("make_labeled: ragged features");
        d.x.row(Eigen::Index(i)) = Eigen::Map<const Eigen::RowVectorXd>(features[i].values.data(), Eigen::Index(dim));
    }
    d.y.assign(labels.begin(), labels.end());
    return d;
}

Model init_model(const ArchConfig& arch, std::uint64_t seed) {
    Model m;
    m.arch = arch;
    m.layout = param_layout(arch);
    m.init_seed = seed;
    const auto& last = m.layout.back();
    m.params = Vector::Zero(Eigen::Index(last.offset + last.size()));
    for (std::size_t i = 0; i < m.layout.size(); ++i) {
        const auto& b = m.layout[i];
        if (b.is_bias) continue;
        Rng rng(derive_seed(seed, "init", {std::int64_t(i)}));
        const double limit = std::sqrt(6.0 / double(b.fan_in));
        for (std::size_t j = 0; j < b.size(); ++j) m.params[Eigen::Index(b.offset + j)] = rng.uniform(-limit, limit);
    }
    return m;
}

Matrix forward(const Model& model, const Matrix& batch) {
    Cache c;
    run_forward(model, batch, c);
    return c.probs;
}

Matrix forward(const Model& model, std::span<const FeatureMatrix> batch) {
    std::vector<int> dummy(batch.size(), 0);
    return forward(model, make_labeled(batch, dummy).x);
}

LossGrad loss_and_grad(const Model& model, const Matrix& batch, std::span<const int> labels) {
    check_labels(labels, model.arch.n_classes, batch.rows());
    if (batch.rows() == 0) throw InputError("loss_and_grad: empty batch");
    Cache c;
    run_forward(model, batch, c);
    LossGrad out;
    out.loss = mean_cross_entropy(c.pre.back(), labels);
    out.grad = Vector::Zero(model.params.size());
    run_backward(model, c, labels, out.grad);
    return out;
}

TrainResult train(const Model& init, const LabeledData& train_set, const LabeledData& val_set,
                  const TrainConfig& cfg) {
    cfg.validate();
    validate_set(train_set, init, "training");
    validate_set(val_set, init, "validation");
    TrainResult out{init, {}};
    TrainRecord& rec = out.record;
    rec.train_examples = train_set.size();
    rec.val_examples = val_set.size();
    if (cfg.max_epochs == 0) return out;

    Model m = init;
    OptimizerState opt(cfg, m.n_params());
    Cache cache;
    Vector grad = Vector::Zero(m.params.size());
    Vector best = m.params;
    double best_loss = std::numeric_limits<double>::infinity();
    std::size_t stale = 0;

    const auto t0 = Clock::now();
    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const auto te = Clock::now();
        EpochStats es;
        std::tie(es.train_loss, es.train_accuracy) = run_epoch(m, train_set, cfg, epoch, opt, cache, grad);
        run_forward(m, val_set.x, cache);
        es.val_loss = mean_cross_entropy(cache.pre.back(), val_set.y);
        const auto pred = argmax_rows(cache.probs);
        std::size_t correct = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == val_set.y[i];
        es.val_accuracy = double(correct) / double(pred.size());
        es.seconds = seconds_since(te);
        rec.epochs.push_back(es);
        rec.epochs_run = epoch;
        if (es.val_loss < best_loss) {
            best_loss = es.val_loss;
            best = m.params;
            rec.best_epoch = epoch;
            stale = 0;
        } else if (++stale >= cfg.early_stop_patience) {
            break;
        }
    }
    rec.total_seconds = seconds_since(t0);
    rec.seconds_per_epoch = rec.total_seconds / double(rec.epochs_run);
    rec.best_val_loss = best_loss;
    m.params = std::move(best);
    out.model = std::move(m);
    return out;
}

TrainResult train_epochs(const Model& init, const LabeledData& train_set, std::size_t epochs,
                         const TrainConfig& cfg) {
    cfg.validate();
    validate_set(train_set, init, "training");
    TrainResult out{init, {}};
    TrainRecord& rec = out.record;
    rec.train_examples = train_set.size();
    if (epochs == 0) return out;
    OptimizerState opt(cfg, init.n_params());
    Cache cache;
    Vector grad = Vector::Zero(init.params.size());
    const auto t0 = Clock::now();
    for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
        const auto te = Clock::now();
        EpochStats es;
        std::tie(es.train_loss, es.train_accuracy) = run_epoch(out.model, train_set, cfg, epoch, opt, cache, grad);
        es.seconds = seconds_since(te);
        rec.epochs.push_back(es);
    }
    rec.epochs_run = epochs;
    rec.best_epoch = epochs;
    rec.total_seconds = seconds_since(t0);
    rec.seconds_per_epoch = rec.total_seconds / double(epochs);
    return out;
}

std::vector<int> argmax_rows(const Matrix& probs) {
    std::vector<int> out(std::size_t(probs.rows()));
    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < probs.cols(); ++c)
            if (probs(r, c) > probs(r, best)) best = c;
        out[std::size_t(r)] = int(best);
    }
    return out;
}

std::vector<int> predict(const Model& model, const Matrix& x) { return argmax_rows(forward(model, x)); }

std::vector<int> predict(const Model& model, std::span<const Frame> frames, const PipelineConfig& pipeline,
                         const FeatureStats* stats) {
    std::vector<FeatureMatrix> feats;
    feats.reserve(frames.size());
    for (const auto& f : frames) feats.push_back(to_feature(f, pipeline, stats));
    return argmax_rows(forward(model, feats));
}

ConfusionMatrix::ConfusionMatrix(std::size_t n_classes, std::vector<std::uint64_t> counts)
    : n_(n_classes), counts_(std::move(counts)) {
    if (counts_.size() != n_ * n_) throw InputError("confusion matrix: counts are not n x n");
}

void ConfusionMatrix::add(int truth, int predicted) {
    if (truth < 0 || predicted < 0 || std::size_t(truth) >= n_ || std::size_t(predicted) >= n_)
        throw InputError("confusion matrix: class index out of range");
    ++counts_[std::size_t(truth) * n_ + std::size_t(predicted)];
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
    if (n_ == 0) {
        *this = other;
        return;
    }
    if (other.n_ != n_) throw InputError("confusion matrix: class count mismatch");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

std::uint64_t ConfusionMatrix::total() const noexcept {
    std::uint64_t t = 0;
    for (auto c : counts_) t += c;
    return t;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t truth) const {
    std::uint64_t t = 0;
    for (std::size_t p = 0; p < n_; ++p) t += at(truth, p);
    return t;
}

double ConfusionMatrix::accuracy() const {
    const auto t = total();
    if (t == 0) return 0.0;
    std::uint64_t diag = 0;
    for (std::size_t i = 0; i < n_; ++i) diag += at(i, i);
    return double(diag) / double(t);
}

std::vector<std::vector<double>> ConfusionMatrix::row_normalized() const {
    std::vector<std::vector<double>> out(n_, std::vector<double>(n_, 0.0));
    for (std::size_t t = 0; t < n_; ++t) {
        const auto s = row_sum(t);
        if (s == 0) continue;
        for (std::size_t p = 0; p < n_; ++p) out[t][p] = double(at(t, p)) / double(s);
    }
    return out;
}

Evaluation evaluate_predictions(std::span<const int> truth, std::span<const int> predicted, std::size_t n_classes) {
    if (truth.empty()) throw InputError("evaluate: empty test split");
    if (truth.size() != predicted.size()) throw InputError("evaluate: size mismatch");
    Evaluation e{0.0, ConfusionMatrix(n_classes)};
    for (std::size_t i = 0; i < truth.size(); ++i) e.confusion.add(truth[i], predicted[i]);
    e.accuracy = e.confusion.accuracy();
    return e;
}

Evaluation evaluate(const Model& model, const LabeledData& test) {
    if (test.size() == 0) throw InputError("evaluate: empty test split");
    return evaluate_predictions(test.y, predict(model, test.x), model.arch.n_classes);
}

Evaluation evaluate(const Model& model, std::span<const Frame> frames, const PipelineConfig& pipeline,
                    const FeatureStats* stats) {
    if (frames.empty()) throw InputError("evaluate: empty test split");
    std::vector<int> truth;
    for (const auto& f : frames) truth.push_back(f.label);
    return evaluate_predictions(truth, predict(model, frames, pipeline, stats), model.arch.n_classes);
}

void save_model(const Model& model, const std::filesystem::path& base, const std::string& extra_meta_json) {
    auto bin = base;
    bin += ".bin";
    auto meta_path = base;
    meta_path += ".meta.json";
    std::ofstream out(bin, std::ios::binary);
    if (!out) throw IoError("cannot write " + bin.string());
    for (Eigen::Index i = 0; i < model.params.size(); ++i) write_le(out, model.params[i]);
    if (!out) throw IoError("write failed: " + bin.string());

    nlohmann::ordered_json meta;
    try {
        meta = nlohmann::ordered_json::parse(extra_meta_json);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("save_model: extra metadata is not JSON: ") + e.what());
    }
    meta["format"] = "snrsel-model";
    meta["version"] = 1;
    meta["arch"] = model.arch;
    meta["init_seed"] = model.init_seed;
    meta["n_params"] = model.n_params();
    nlohmann::ordered_json layout = nlohmann::ordered_json::array();
    for (const auto& b : model.layout)
        layout.push_back({{"name", b.name}, {"offset", b.offset}, {"rows", b.rows}, {"cols", b.cols}});
    meta["layout"] = layout;
    write_text_file(meta_path, meta.dump(2) + "\n");
}

Model load_model(const std::filesystem::path& base) {
    auto bin = base;
    bin += ".bin";
    auto meta_path = base;
    meta_path += ".meta.json";
    const auto meta = read_json_file(meta_path);
    Model m;
    try {
        m.arch = meta.at("arch").get<ArchConfig>();
        m.init_seed = meta.at("init_seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(DataErrorCode::kFormat, std::string("model sidecar: ") + e.what());
    }
    m.layout = param_layout(m.arch);
    const std::size_t n = m.layout.back().offset + m.layout.back().size();
    if (meta.value("n_params", std::size_t(0)) != n)
        throw DataError(DataErrorCode::kConsistency, "model sidecar parameter count does not match architecture");
    std::ifstream in(bin, std::ios::binary);
    if (!in) throw IoError("cannot read " + bin.string());
    m.params.resize(Eigen::Index(n));
    for (std::size_t i = 0; i < n; ++i) {
        if (!read_le(in, m.params[Eigen::Index(i)]))
            throw DataError(DataErrorCode::kTruncated, "model parameters: " + bin.string());
        if (!std::isfinite(m.params[Eigen::Index(i)]))
            throw DataError(DataErrorCode::kNonFinite, "model parameters: " + bin.string());
    }
    return m;
}

}  // namespace snrsel

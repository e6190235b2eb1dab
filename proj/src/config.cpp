#include "snrsel/config.hpp"

#include <fstream>
#include <sstream>

#include "snrsel/error.hpp"

namespace snrsel {

namespace {

void require_object(const Json& j, const std::string& context) {
    if (!j.is_object()) throw ValidationError(context + ": expected an object");
}

}  // namespace

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Json read_json_file(const std::filesystem::path& path) {
    const auto text = read_text_file(path);
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(DataErrorCode::kFormat, path.string() + ": " + e.what());
    }
}

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& context) {
    require_object(j, context);
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ValidationError(context + ": unknown key '" + key + "'");
    }
}

void to_json(Json& j, ModType m) { j = to_string(m); }
void from_json(const Json& j, ModType& m) {
    if (!j.is_string()) throw ValidationError("modulation type must be a string");
    m = parse_mod_type(j.get<std::string>());
}

void to_json(Json& j, const SnrGrid& g) {
    j = Json{{"start", g.start()}, {"step", g.step()}, {"count", g.size()}};
}
void from_json(const Json& j, SnrGrid& g) {
    if (j.is_array()) {
        g = SnrGrid::from_values(j.get<std::vector<double>>());
        return;
    }
    check_keys(j, {"start", "step", "count"}, "grid");
    double start = -20.0, step = 2.0;
    std::size_t count = 20;
    optional_field(j, "start", start, "grid");
    optional_field(j, "step", step, "grid");
    optional_field(j, "count", count, "grid");
    g = SnrGrid(start, step, count);
}

void to_json(Json& j, const ImpairmentConfig& c) {
    j = Json{{"cfo_max", c.cfo_max},
             {"phase_jitter_std", c.phase_jitter_std},
             {"timing_offset_max", c.timing_offset_max},
             {"fading", c.fading}};
}
void from_json(const Json& j, ImpairmentConfig& c) {
    const std::string ctx = "impairments";
    check_keys(j, {"cfo_max", "phase_jitter_std", "timing_offset_max", "fading"}, ctx);
    optional_field(j, "cfo_max", c.cfo_max, ctx);
    optional_field(j, "phase_jitter_std", c.phase_jitter_std, ctx);
    optional_field(j, "timing_offset_max", c.timing_offset_max, ctx);
    optional_field(j, "fading", c.fading, ctx);
    c.validate();
}

void to_json(Json& j, const DatasetSpec& s) {
    j = Json{{"classes", s.classes},   {"grid", s.grid},         {"frames_per_cell", s.frames_per_cell},
             {"sps", s.sps},           {"frame_len", s.frame_len}, {"rolloff", s.rolloff},
             {"impairments", s.impairments}, {"master_seed", s.master_seed}};
}
void from_json(const Json& j, DatasetSpec& s) {
    const std::string ctx = "dataset";
    check_keys(j, {"classes", "grid", "frames_per_cell", "sps", "frame_len", "rolloff", "impairments", "master_seed"},
               ctx);
    if (j.contains("classes")) {
        if (!j["classes"].is_array()) throw ValidationError("dataset.classes must be an array");
        s.classes.clear();
        for (const auto& c : j["classes"]) s.classes.push_back(c.get<ModType>());
    }
    if (j.contains("grid")) s.grid = j["grid"].get<SnrGrid>();
    optional_field(j, "frames_per_cell", s.frames_per_cell, ctx);
    optional_field(j, "sps", s.sps, ctx);
    optional_field(j, "frame_len", s.frame_len, ctx);
    optional_field(j, "rolloff", s.rolloff, ctx);
    if (j.contains("impairments")) s.impairments = j["impairments"].get<ImpairmentConfig>();
    optional_field(j, "master_seed", s.master_seed, ctx);
    s.validate();
}

void to_json(Json& j, const PipelineConfig& c) {
    j = Json{{"use_fft", c.use_fft}, {"normalization", to_string(c.normalization)}};
}
void from_json(const Json& j, PipelineConfig& c) {
    check_keys(j, {"use_fft", "normalization"}, "pipeline");
    optional_field(j, "use_fft", c.use_fft, "pipeline");
    if (j.contains("normalization")) c.normalization = parse_normalization(j["normalization"].get<std::string>());
}

void to_json(Json& j, const FeatureStats& s) { j = Json{{"mean", s.mean}, {"stddev", s.stddev}}; }
void from_json(const Json& j, FeatureStats& s) {
    check_keys(j, {"mean", "stddev"}, "stats");
    optional_field(j, "mean", s.mean, "stats");
    optional_field(j, "stddev", s.stddev, "stats");
}

void to_json(Json& j, const ConvFront& c) {
    j = Json{{"n_kernels", c.n_kernels}, {"kernel_len", c.kernel_len}, {"pool", c.pool}};
}
void from_json(const Json& j, ConvFront& c) {
    check_keys(j, {"n_kernels", "kernel_len", "pool"}, "arch.conv_front");
    optional_field(j, "n_kernels", c.n_kernels, "arch.conv_front");
    optional_field(j, "kernel_len", c.kernel_len, "arch.conv_front");
    optional_field(j, "pool", c.pool, "arch.conv_front");
}

void to_json(Json& j, const ArchConfig& a) {
    j = Json{{"input_len", a.input_len}, {"hidden", a.hidden}};
    j["conv_front"] = a.conv_front ? Json(*a.conv_front) : Json(nullptr);
    j["n_classes"] = a.n_classes;
}
void from_json(const Json& j, ArchConfig& a) {
    check_keys(j, {"input_len", "hidden", "conv_front", "n_classes"}, "arch");
    optional_field(j, "input_len", a.input_len, "arch");
    optional_field(j, "hidden", a.hidden, "arch");
    optional_field(j, "n_classes", a.n_classes, "arch");
    if (j.contains("conv_front")) {
        if (j["conv_front"].is_null()) a.conv_front.reset();
        else a.conv_front = j["conv_front"].get<ConvFront>();
    }
}

void to_json(Json& j, const TrainConfig& c) {
    j = Json{{"optimizer", to_string(c.optimizer)},
             {"learning_rate", c.learning_rate},
             {"momentum", c.momentum},
             {"beta1", c.beta1},
             {"beta2", c.beta2},
             {"epsilon", c.epsilon},
             {"batch_size", c.batch_size},
             {"max_epochs", c.max_epochs},
             {"early_stop_patience", c.early_stop_patience},
             {"seed", c.seed}};
}
void from_json(const Json& j, TrainConfig& c) {
    const std::string ctx = "train";
    check_keys(j, {"optimizer", "learning_rate", "momentum", "beta1", "beta2", "epsilon", "batch_size", "max_epochs",
                   "early_stop_patience", "seed"},
               ctx);
    if (j.contains("optimizer")) c.optimizer = parse_optimizer(j["optimizer"].get<std::string>());
    optional_field(j, "learning_rate", c.learning_rate, ctx);
    optional_field(j, "momentum", c.momentum, ctx);
    optional_field(j, "beta1", c.beta1, ctx);
    optional_field(j, "beta2", c.beta2, ctx);
    optional_field(j, "epsilon", c.epsilon, ctx);
    optional_field(j, "batch_size", c.batch_size, ctx);
    optional_field(j, "max_epochs", c.max_epochs, ctx);
    optional_field(j, "early_stop_patience", c.early_stop_patience, ctx);
    optional_field(j, "seed", c.seed, ctx);
    c.validate();
}

void to_json(Json& j, const TrainRecord& r) {
    Json epochs = Json::array();
    for (const auto& e : r.epochs)
        epochs.push_back({{"train_loss", e.train_loss},
                          {"train_accuracy", e.train_accuracy},
                          {"val_loss", e.val_loss},
                          {"val_accuracy", e.val_accuracy},
                          {"seconds", e.seconds}});
    j = Json{{"epochs_run", r.epochs_run},
             {"best_epoch", r.best_epoch},
             {"best_val_loss", r.best_val_loss},
             {"seconds_per_epoch", r.seconds_per_epoch},
             {"total_seconds", r.total_seconds},
             {"train_examples", r.train_examples},
             {"val_examples", r.val_examples},
             {"epochs", epochs}};
}
void from_json(const Json& j, TrainRecord& r) {
    r.epochs_run = j.at("epochs_run").get<std::size_t>();
    r.best_epoch = j.at("best_epoch").get<std::size_t>();
    r.best_val_loss = j.at("best_val_loss").get<double>();
    r.seconds_per_epoch = j.at("seconds_per_epoch").get<double>();
    r.total_seconds = j.at("total_seconds").get<double>();
    r.train_examples = j.value("train_examples", std::size_t(0));
    r.val_examples = j.value("val_examples", std::size_t(0));
    r.epochs.clear();
    for (const auto& e : j.value("epochs", Json::array()))
        r.epochs.push_back({e.at("train_loss").get<double>(), e.at("train_accuracy").get<double>(),
                            e.at("val_loss").get<double>(), e.at("val_accuracy").get<double>(),
                            e.at("seconds").get<double>()});
}

void to_json(Json& j, const ConfusionMatrix& m) {
    Json rows = Json::array();
    for (std::size_t t = 0; t < m.n_classes(); ++t) {
        Json row = Json::array();
        for (std::size_t p = 0; p < m.n_classes(); ++p) row.push_back(m.at(t, p));
        rows.push_back(row);
    }
    j = rows;
}
void from_json(const Json& j, ConfusionMatrix& m) {
    if (!j.is_array()) throw DataError(DataErrorCode::kFormat, "confusion matrix must be an array of rows");
    const std::size_t n = j.size();
    std::vector<std::uint64_t> counts;
    for (const auto& row : j) {
        if (!row.is_array() || row.size() != n) throw DataError(DataErrorCode::kFormat, "confusion matrix is not square");
        for (const auto& v : row) counts.push_back(v.get<std::uint64_t>());
    }
    m = ConfusionMatrix(n, std::move(counts));
}

}  // namespace snrsel

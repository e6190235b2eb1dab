#include "snrsel/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

#include "snrsel/dataset_io.hpp"
#include "snrsel/error.hpp"
#include "snrsel/random.hpp"
#include "snrsel/sigsynth.hpp"

namespace snrsel {

namespace fs = std::filesystem;

namespace {

constexpr const char* kStrategyNames[] = {"all_snr", "single_snr", "uniform_fraction", "boost", "bagging",
                                          "sensitivity"};

std::string num(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

Json opt_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<double> opt_from(const Json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

// JSON has no infinity; thresholds accept the string "inf".
Json threshold_json(double t) { return std::isinf(t) ? Json("inf") : Json(t); }

double threshold_from(const Json& j) {
    if (j.is_string()) {
        if (j.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
        throw ValidationError("strategy_params.threshold_pp: expected a number or \"inf\"");
    }
    if (!j.is_number()) throw ValidationError("strategy_params.threshold_pp: expected a number or \"inf\"");
    return j.get<double>();
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / double(v.size());
}

double sample_std(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / double(v.size() - 1));
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::string snr_tag(double snr) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", snr);
    return buf;
}

void add_fitted(RunRecord& rec, const Fitted& f) {
    rec.trainings.push_back(TrainingCost::of(f.selection));
    rec.trainings.push_back(TrainingCost::of(f.refit));
    rec.train_examples = f.train_examples;
    rec.epochs = f.selection.epochs_run;
    rec.seconds_per_epoch = f.selection.seconds_per_epoch;
}

struct RunContext {
    const ExperimentConfig& cfg;
    TrainingSession& session;
    std::size_t seed_index;
    fs::path model_dir;  // empty: models not saved
};

void maybe_save(const RunContext& ctx, const Model& model, Strategy s, double snr, const std::string& suffix = "") {
    if (ctx.model_dir.empty()) return;
    ensure_dir(ctx.model_dir);
    const Json meta = {{"strategy", to_string(s)},
                       {"seed_index", ctx.seed_index},
                       {"run_seed", ctx.session.run_seed()},
                       {"test_snr", snr},
                       {"pipeline", ctx.cfg.pipeline},
                       {"train", ctx.cfg.train}};
    const fs::path base = ctx.model_dir / ("seed" + std::to_string(ctx.seed_index) + "_snr" + snr_tag(snr) + suffix);
    save_model(model, base, meta.dump());
}

RunRecord run_one(const RunContext& ctx, Strategy strategy, double t) {
    TrainingSession& session = ctx.session;
    const StrategyParams& p = ctx.cfg.params;
    RunRecord rec;
    rec.seed_index = ctx.seed_index;
    rec.run_seed = session.run_seed();
    rec.test_snr = t;
    const LabeledData test = session.test_data(t);
    const std::size_t n_classes = session.dataset().n_classes();

    auto score = [&](const Model& m) {
        Evaluation e = evaluate(m, test);
        rec.accuracy = e.accuracy;
        rec.confusion = std::move(e.confusion);
    };

    switch (strategy) {
        case Strategy::kAllSnr: {
            const Fitted f = train_all_snr(session);
            add_fitted(rec, f);
            score(f.model);
            maybe_save(ctx, f.model, strategy, t);
            break;
        }
        case Strategy::kSingleSnr: {
            const Fitted f = train_single_snr(session, t);
            add_fitted(rec, f);
            score(f.model);
            maybe_save(ctx, f.model, strategy, t);
            break;
        }
        case Strategy::kUniformFraction: {
            const double frac = p.uniform_fraction.value_or(1.0 / double(session.dataset().grid.size()));
            const Fitted f = train_uniform_fraction(session, frac);
            add_fitted(rec, f);
            score(f.model);
            maybe_save(ctx, f.model, strategy, t);
            break;
        }
        case Strategy::kBoost: {
            BoostResult b = snr_boost(session, t, p.threshold_pp);
            rec.trainings = b.costs;
            rec.trainings.push_back(TrainingCost::of(b.final_refit));
            rec.train_examples = b.final_refit.train_examples;
            rec.epochs = b.final_selection.epochs_run;
            rec.seconds_per_epoch = b.final_selection.seconds_per_epoch;
            rec.selected = b.selected;
            rec.val_trace = b.val_trace;
            score(b.final_model);
            maybe_save(ctx, b.final_model, strategy, t);
            break;
        }
        case Strategy::kBagging: {
            const Ensemble e = bagging_train(session, t, p.k, p.member_fraction, p.bagging_seed);
            const auto pred = ensemble_predict(e, test.x);
            Evaluation ev = evaluate_predictions(test.y, pred, n_classes);
            rec.accuracy = ev.accuracy;
            rec.confusion = std::move(ev.confusion);
            std::vector<double> spe;
            for (std::size_t m = 0; m < e.members.size(); ++m) {
                const MemberInfo& info = e.info[m];
                rec.members.push_back({info.pool_snrs, info.sample_size, info.seed, info.record.epochs_run});
                rec.trainings.push_back(TrainingCost::of(info.record));
                rec.epochs += info.record.epochs_run;
                spe.push_back(info.record.seconds_per_epoch);
                maybe_save(ctx, e.members[m], strategy, t, "_m" + std::to_string(m));
            }
            rec.train_examples = e.info.front().sample_size;
            rec.seconds_per_epoch = mean_of(spe);
            if (p.bagging_baseline) {
                const Candidate c = sized_single_snr(session, t, e.info.front().sample_size, p.bagging_seed);
                rec.trainings.push_back(TrainingCost::of(c.record));
                rec.baseline_accuracy = evaluate(c.model, test).accuracy;
            }
            break;
        }
        case Strategy::kSensitivity: {
            const SensitivityTable table = offset_sensitivity(session, {t}, p.offsets);
            rec.sensitivity = table.accuracy.front();
            const Dataset& ds = session.dataset();
            for (double o : p.offsets) {
                const auto idx = ds.grid.index_of(t + o);
                if (!idx || ds.grid[*idx] == t) continue;
                const Fitted f = train_single_snr(session, ds.grid[*idx]);
                rec.trainings.push_back(TrainingCost::of(f.selection));
                rec.trainings.push_back(TrainingCost::of(f.refit));
            }
            const Fitted f = train_single_snr(session, t);
            add_fitted(rec, f);
            score(f.model);
            break;
        }
    }
    for (const auto& c : rec.trainings) rec.train_seconds += c.seconds;
    return rec;
}

Json cost_json(const TrainingCost& c) {
    return {{"train_examples", c.train_examples}, {"epochs", c.epochs}, {"seconds", c.seconds}};
}

Json run_json(const RunRecord& r) {
    Json trainings = Json::array();
    for (const auto& c : r.trainings) trainings.push_back(cost_json(c));
    Json members = Json::array();
    for (const auto& m : r.members)
        members.push_back({{"pool_snrs", m.pool_snrs}, {"sample_size", m.sample_size}, {"seed", m.seed},
                           {"epochs", m.epochs}});
    Json sens = Json::array();
    for (const auto& v : r.sensitivity) sens.push_back(opt_json(v));
    return {{"seed_index", r.seed_index},
            {"run_seed", r.run_seed},
            {"test_snr", r.test_snr},
            {"accuracy", r.accuracy},
            {"confusion", r.confusion},
            {"train_examples", r.train_examples},
            {"epochs", r.epochs},
            {"seconds_per_epoch", r.seconds_per_epoch},
            {"train_seconds", r.train_seconds},
            {"trainings", trainings},
            {"selected", r.selected},
            {"val_trace", r.val_trace},
            {"members", members},
            {"baseline_accuracy", opt_json(r.baseline_accuracy)},
            {"sensitivity", sens}};
}

RunRecord run_from_json(const Json& j) {
    RunRecord r;
    r.seed_index = j.at("seed_index").get<std::size_t>();
    r.run_seed = j.at("run_seed").get<std::uint64_t>();
    r.test_snr = j.at("test_snr").get<double>();
    r.accuracy = j.at("accuracy").get<double>();
    r.confusion = j.at("confusion").get<ConfusionMatrix>();
    r.train_examples = j.at("train_examples").get<std::size_t>();
    r.epochs = j.at("epochs").get<std::size_t>();
    r.seconds_per_epoch = j.value("seconds_per_epoch", 0.0);
    r.train_seconds = j.value("train_seconds", 0.0);
    for (const auto& c : j.at("trainings"))
        r.trainings.push_back({c.at("train_examples").get<std::size_t>(), c.at("epochs").get<std::size_t>(),
                               c.value("seconds", 0.0)});
    r.selected = j.at("selected").get<std::vector<double>>();
    r.val_trace = j.at("val_trace").get<std::vector<double>>();
    for (const auto& m : j.at("members"))
        r.members.push_back({m.at("pool_snrs").get<std::vector<double>>(), m.at("sample_size").get<std::size_t>(),
                             m.at("seed").get<std::uint64_t>(), m.at("epochs").get<std::size_t>()});
    r.baseline_accuracy = opt_from(j.at("baseline_accuracy"));
    for (const auto& v : j.at("sensitivity")) r.sensitivity.push_back(opt_from(v));
    return r;
}

void write_csv(const fs::path& path, const std::string& header, const std::vector<std::string>& rows) {
    std::string text = header + "\n";
    for (const auto& r : rows) text += r + "\n";
    write_text_file(path, text);
}

std::string join(std::initializer_list<std::string> fields) {
    std::string out;
    bool first = true;
    for (const auto& f : fields) {
        if (!first) out += ',';
        out += f;
        first = false;
    }
    return out;
}

std::size_t snr_slot(const EvalReport& r, double snr) {
    for (std::size_t i = 0; i < r.test_snrs.size(); ++i)
        if (std::abs(r.test_snrs[i] - snr) < 1e-9) return i;
    throw InputError("report '" + r.strategy + "' has no results at " + num(snr) + " dB");
}

}  // namespace

std::string to_string(Strategy s) { return kStrategyNames[static_cast<int>(s)]; }

Strategy parse_strategy(const std::string& name) {
    for (int i = 0; i < 6; ++i)
        if (name == kStrategyNames[i]) return static_cast<Strategy>(i);
    throw ValidationError("unknown strategy '" + name + "'");
}

void ExperimentConfig::resolve(const Dataset& ds) {
    if (n_seeds == 0) throw ValidationError("n_seeds must be >= 1");
    if (strategies.empty()) throw ValidationError("no strategy given");
    if (infer_input_len) arch.input_len = ds.frame_len;
    if (infer_n_classes) arch.n_classes = ds.n_classes();
    arch.validate();
    if (arch.input_len != ds.frame_len) throw ValidationError("arch.input_len does not match the dataset frame length");
    if (arch.n_classes != ds.n_classes()) throw ValidationError("arch.n_classes does not match the dataset classes");
    train.validate();
    split.validate();
    if (test_snrs.empty()) test_snrs = ds.grid.values();
    for (double& t : test_snrs) {
        const auto idx = ds.grid.index_of(t);
        if (!idx) throw ValidationError("test SNR " + num(t) + " dB is not on the dataset grid");
        t = ds.grid[*idx];
    }
    for (std::size_t i = 0; i < test_snrs.size(); ++i)
        for (std::size_t k = 0; k < i; ++k)
            if (test_snrs[i] == test_snrs[k]) throw ValidationError("duplicate test SNR " + num(test_snrs[i]));
    for (Strategy s : strategies) {
        if (s == Strategy::kBagging) {
            if (ds.grid.size() < 2) throw ValidationError("bagging needs a grid with at least two SNRs");
            if (params.k == 0) throw ValidationError("strategy_params.k must be >= 1");
            if (!(params.member_fraction > 0.0)) throw ValidationError("strategy_params.member_fraction must be > 0");
        }
        if (s == Strategy::kBoost && (std::isnan(params.threshold_pp) || params.threshold_pp < 0.0))
            throw ValidationError("strategy_params.threshold_pp must be >= 0");
        if (s == Strategy::kUniformFraction && params.uniform_fraction &&
            !(*params.uniform_fraction > 0.0 && *params.uniform_fraction <= 1.0))
            throw ValidationError("strategy_params.uniform_fraction must lie in (0, 1]");
        if (s == Strategy::kSensitivity && params.offsets.empty())
            throw ValidationError("strategy_params.offsets must not be empty");
    }
}

ExperimentConfig parse_experiment(const Json& j, const fs::path& base_dir) {
    check_keys(j, {"dataset", "pipeline", "arch", "train", "split", "strategy", "strategy_params", "test_snrs",
                   "n_seeds", "seed", "output_dir", "save_models"},
               "experiment");
    ExperimentConfig c;
    if (!j.contains("dataset")) throw ValidationError("experiment: 'dataset' is required");
    const Json& d = j["dataset"];
    if (d.is_object() && d.contains("import")) {
        check_keys(d, {"import"}, "dataset");
        fs::path p = d["import"].get<std::string>();
        c.import_path = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
    } else {
        c.dataset = d.get<DatasetSpec>();
    }
    if (j.contains("pipeline")) c.pipeline = j["pipeline"].get<PipelineConfig>();
    if (j.contains("arch")) {
        const Json& a = j["arch"];
        c.arch = a.get<ArchConfig>();
        c.infer_input_len = !a.contains("input_len");
        c.infer_n_classes = !a.contains("n_classes");
    }
    if (j.contains("train")) c.train = j["train"].get<TrainConfig>();
    if (j.contains("split")) {
        const Json& s = j["split"];
        check_keys(s, {"test_fraction", "validation_fraction"}, "split");
        optional_field(s, "test_fraction", c.split.test_fraction, "split");
        optional_field(s, "validation_fraction", c.split.validation_fraction, "split");
        c.split.validate();
    }
    if (j.contains("strategy")) {
        const Json& s = j["strategy"];
        c.strategies.clear();
        if (s.is_string()) {
            c.strategies.push_back(parse_strategy(s.get<std::string>()));
        } else if (s.is_array()) {
            for (const auto& e : s) c.strategies.push_back(parse_strategy(e.get<std::string>()));
        } else {
            throw ValidationError("strategy must be a name or a list of names");
        }
    }
    if (j.contains("strategy_params")) {
        const Json& s = j["strategy_params"];
        const std::string ctx = "strategy_params";
        check_keys(s, {"threshold_pp", "uniform_fraction", "k", "member_fraction", "bagging_seed", "bagging_baseline",
                       "offsets"},
                   ctx);
        if (s.contains("threshold_pp")) c.params.threshold_pp = threshold_from(s["threshold_pp"]);
        if (s.contains("uniform_fraction") && !s["uniform_fraction"].is_null()) {
            double f = 0.0;
            optional_field(s, "uniform_fraction", f, ctx);
            c.params.uniform_fraction = f;
        }
        optional_field(s, "k", c.params.k, ctx);
        optional_field(s, "member_fraction", c.params.member_fraction, ctx);
        optional_field(s, "bagging_seed", c.params.bagging_seed, ctx);
        optional_field(s, "bagging_baseline", c.params.bagging_baseline, ctx);
        optional_field(s, "offsets", c.params.offsets, ctx);
    }
    optional_field(j, "test_snrs", c.test_snrs, "experiment");
    optional_field(j, "n_seeds", c.n_seeds, "experiment");
    optional_field(j, "seed", c.seed, "experiment");
    if (j.contains("output_dir")) {
        fs::path p = j["output_dir"].get<std::string>();
        c.output_dir = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
    }
    optional_field(j, "save_models", c.save_models, "experiment");
    if (c.n_seeds == 0) throw ValidationError("n_seeds must be >= 1");
    if (c.dataset) {
        Dataset shape;
        shape.grid = c.dataset->grid;
        shape.frame_len = c.dataset->frame_len;
        for (auto m : c.dataset->classes) shape.class_names.push_back(to_string(m));
        ExperimentConfig probe = c;
        probe.resolve(shape);
        c.arch = probe.arch;
        c.infer_input_len = c.infer_n_classes = false;
    }
    return c;
}

ExperimentConfig load_experiment(const fs::path& path) {
    return parse_experiment(read_json_file(path), path.parent_path());
}

Json to_json(const ExperimentConfig& c) {
    Json j;
    if (c.dataset)
        j["dataset"] = *c.dataset;
    else
        j["dataset"] = {{"import", c.import_path ? c.import_path->string() : std::string()}};
    j["pipeline"] = c.pipeline;
    j["arch"] = c.arch;
    j["train"] = c.train;
    j["split"] = {{"test_fraction", c.split.test_fraction}, {"validation_fraction", c.split.validation_fraction}};
    Json names = Json::array();
    for (Strategy s : c.strategies) names.push_back(to_string(s));
    j["strategy"] = names;
    j["strategy_params"] = {{"threshold_pp", threshold_json(c.params.threshold_pp)},
                            {"uniform_fraction", opt_json(c.params.uniform_fraction)},
                            {"k", c.params.k},
                            {"member_fraction", c.params.member_fraction},
                            {"bagging_seed", c.params.bagging_seed},
                            {"bagging_baseline", c.params.bagging_baseline},
                            {"offsets", c.params.offsets}};
    j["test_snrs"] = c.test_snrs;
    j["n_seeds"] = c.n_seeds;
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir.string();
    j["save_models"] = c.save_models;
    return j;
}

Dataset load_dataset(const ExperimentConfig& cfg) {
    if (cfg.dataset) return build_dataset(*cfg.dataset);
    if (cfg.import_path) return import_dataset(*cfg.import_path);
    throw ValidationError("experiment: no dataset given");
}

bool EvalReport::audits_clean() const {
    for (const auto& a : audits)
        if (!a.clean()) return false;
    return true;
}

void EvalReport::aggregate() {
    curve.clear();
    confusion.clear();
    sensitivity.clear();
    const std::size_t n_classes = class_names.size();
    for (double t : test_snrs) {
        std::vector<double> acc, base;
        ConfusionMatrix cm(n_classes);
        std::vector<std::vector<double>> sens(offsets.size());
        for (const auto& r : runs) {
            if (r.test_snr != t) continue;
            acc.push_back(r.accuracy);
            if (r.baseline_accuracy) base.push_back(*r.baseline_accuracy);
            if (r.confusion.n_classes() == n_classes) cm.merge(r.confusion);
            for (std::size_t o = 0; o < offsets.size() && o < r.sensitivity.size(); ++o)
                if (r.sensitivity[o]) sens[o].push_back(*r.sensitivity[o]);
        }
        CurvePoint p{t, mean_of(acc), sample_std(acc), acc.size(), std::nullopt, std::nullopt};
        if (!base.empty() && base.size() == acc.size()) {
            p.baseline_mean = mean_of(base);
            p.baseline_stddev = sample_std(base);
        }
        curve.push_back(p);
        confusion.push_back(std::move(cm));
        if (strategy == to_string(Strategy::kSensitivity)) {
            for (std::size_t o = 0; o < offsets.size(); ++o) {
                SensitivityCell cell{t, offsets[o], std::nullopt, 0.0, sens[o].size()};
                if (!sens[o].empty()) {
                    cell.mean = mean_of(sens[o]);
                    cell.stddev = sample_std(sens[o]);
                }
                sensitivity.push_back(cell);
            }
        }
    }
    timing.total_train_seconds = 0.0;
    std::vector<double> spe;
    for (const auto& r : runs) {
        timing.total_train_seconds += r.train_seconds;
        spe.push_back(r.seconds_per_epoch);
    }
    timing.mean_seconds_per_epoch = mean_of(spe);
}

Json to_json(const EvalReport& r) {
    Json runs = Json::array();
    for (const auto& x : r.runs) runs.push_back(run_json(x));
    Json curve = Json::array();
    for (const auto& p : r.curve)
        curve.push_back({{"snr_db", p.snr_db},
                         {"mean", p.mean},
                         {"stddev", p.stddev},
                         {"n", p.n},
                         {"baseline_mean", opt_json(p.baseline_mean)},
                         {"baseline_stddev", opt_json(p.baseline_stddev)}});
    Json confusion = Json::array();
    for (std::size_t i = 0; i < r.confusion.size(); ++i)
        confusion.push_back({{"snr_db", r.test_snrs[i]}, {"counts", r.confusion[i]}});
    Json sens = Json::array();
    for (const auto& c : r.sensitivity)
        sens.push_back({{"test_snr", c.test_snr},
                        {"offset", c.offset},
                        {"mean", opt_json(c.mean)},
                        {"stddev", c.stddev},
                        {"n", c.n}});
    Json audits = Json::array();
    for (const auto& a : r.audits)
        audits.push_back({{"seed_index", a.seed_index},
                          {"train_validation", a.split.train_validation},
                          {"train_test", a.split.train_test},
                          {"validation_test", a.split.validation_test},
                          {"subset_test_overlap", a.subset_test_overlap}});
    return {{"format", "snrsel-report"},
            {"version", 1},
            {"strategy", r.strategy},
            {"class_names", r.class_names},
            {"test_snrs", r.test_snrs},
            {"offsets", r.offsets},
            {"n_seeds", r.n_seeds},
            {"config", r.config},
            {"curve", curve},
            {"confusion", confusion},
            {"sensitivity", sens},
            {"audits", audits},
            {"timing",
             {{"total_train_seconds", r.timing.total_train_seconds},
              {"wall_seconds", r.timing.wall_seconds},
              {"mean_seconds_per_epoch", r.timing.mean_seconds_per_epoch}}},
            {"runs", runs}};
}

EvalReport report_from_json(const Json& j) {
    try {
        if (j.value("format", std::string()) != "snrsel-report") throw DataError(DataErrorCode::kFormat, "not a report");
        EvalReport r;
        r.strategy = j.at("strategy").get<std::string>();
        r.class_names = j.at("class_names").get<std::vector<std::string>>();
        r.test_snrs = j.at("test_snrs").get<std::vector<double>>();
        r.offsets = j.at("offsets").get<std::vector<double>>();
        r.n_seeds = j.at("n_seeds").get<std::size_t>();
        r.config = j.at("config");
        for (const auto& p : j.at("curve"))
            r.curve.push_back({p.at("snr_db").get<double>(), p.at("mean").get<double>(), p.at("stddev").get<double>(),
                               p.at("n").get<std::size_t>(), opt_from(p.at("baseline_mean")),
                               opt_from(p.at("baseline_stddev"))});
        for (const auto& c : j.at("confusion")) r.confusion.push_back(c.at("counts").get<ConfusionMatrix>());
        for (const auto& c : j.at("sensitivity"))
            r.sensitivity.push_back({c.at("test_snr").get<double>(), c.at("offset").get<double>(),
                                     opt_from(c.at("mean")), c.at("stddev").get<double>(),
                                     c.at("n").get<std::size_t>()});
        for (const auto& a : j.at("audits"))
            r.audits.push_back({a.at("seed_index").get<std::size_t>(),
                                {a.at("train_validation").get<std::size_t>(), a.at("train_test").get<std::size_t>(),
                                 a.at("validation_test").get<std::size_t>()},
                                a.at("subset_test_overlap").get<std::size_t>()});
        if (j.contains("timing")) {
            const Json& t = j["timing"];
            r.timing = {t.value("total_train_seconds", 0.0), t.value("wall_seconds", 0.0),
                        t.value("mean_seconds_per_epoch", 0.0)};
        }
        for (const auto& x : j.at("runs")) r.runs.push_back(run_from_json(x));
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(DataErrorCode::kFormat, std::string("report: ") + e.what());
    }
}

Json strip_timing(const Json& j) {
    if (j.is_object()) {
        Json out = Json::object();
        for (const auto& [k, v] : j.items()) {
            if (k == "timing" || k.find("seconds") != std::string::npos) continue;
            out[k] = strip_timing(v);
        }
        return out;
    }
    if (j.is_array()) {
        Json out = Json::array();
        for (const auto& v : j) out.push_back(strip_timing(v));
        return out;
    }
    return j;
}

std::vector<EvalReport> run_experiment(const ExperimentConfig& config, const Dataset& dataset) {
    ExperimentConfig cfg = config;
    cfg.resolve(dataset);

    std::vector<EvalReport> reports(cfg.strategies.size());
    for (std::size_t s = 0; s < cfg.strategies.size(); ++s) {
        EvalReport& r = reports[s];
        r.strategy = to_string(cfg.strategies[s]);
        r.class_names = dataset.class_names;
        r.test_snrs = cfg.test_snrs;
        if (cfg.strategies[s] == Strategy::kSensitivity) r.offsets = cfg.params.offsets;
        r.n_seeds = cfg.n_seeds;
        r.config = to_json(cfg);
    }

    for (std::size_t seed_index = 0; seed_index < cfg.n_seeds; ++seed_index) {
        const std::uint64_t run_seed = derive_seed(cfg.seed, "run", {std::int64_t(seed_index)});
        Split split = make_split(dataset, cfg.split, derive_seed(run_seed, "split"));
        const SplitAudit audit = audit_split(split);
        TrainingSession session(dataset, std::move(split), cfg.pipeline, cfg.arch, cfg.train, run_seed);
        for (std::size_t s = 0; s < cfg.strategies.size(); ++s) {
            const auto t0 = std::chrono::steady_clock::now();
            fs::path model_dir;
            if (cfg.save_models && !cfg.output_dir.empty())
                model_dir = cfg.output_dir / to_string(cfg.strategies[s]) / "models";
            const RunContext ctx{cfg, session, seed_index, model_dir};
            for (double t : cfg.test_snrs) reports[s].runs.push_back(run_one(ctx, cfg.strategies[s], t));
            reports[s].timing.wall_seconds += seconds_since(t0);
        }
        for (auto& r : reports) r.audits.push_back({seed_index, audit, session.test_overlap()});
    }

    for (auto& r : reports) {
        const double wall = r.timing.wall_seconds;
        r.aggregate();
        r.timing.wall_seconds = wall;
    }
    if (!cfg.output_dir.empty()) {
        ensure_dir(cfg.output_dir);
        write_text_file(cfg.output_dir / "config.json", to_json(cfg).dump(2) + "\n");
        for (const auto& r : reports) report_export(r, cfg.output_dir / r.strategy);
    }
    return reports;
}

std::vector<EvalReport> run_experiment(ExperimentConfig cfg) {
    const Dataset ds = load_dataset(cfg);
    return run_experiment(cfg, ds);
}

EvalReport run(const ExperimentConfig& cfg) {
    if (cfg.strategies.size() != 1) throw ValidationError("run: expected exactly one strategy");
    return run_experiment(cfg).front();
}

void report_export(const EvalReport& r, const fs::path& dir) {
    ensure_dir(dir);
    std::vector<std::string> rows;
    for (const auto& p : r.curve)
        rows.push_back(join({num(p.snr_db), num(p.mean), num(p.stddev), std::to_string(p.n), opt_num(p.baseline_mean),
                             opt_num(p.baseline_stddev)}));
    write_csv(dir / "curve.csv", "snr_db,mean_accuracy,std_accuracy,n_seeds,baseline_mean,baseline_std", rows);

    rows.clear();
    for (const auto& x : r.runs)
        rows.push_back(join({std::to_string(x.seed_index), num(x.test_snr), num(x.accuracy),
                             std::to_string(x.train_examples), std::to_string(x.epochs), num(x.seconds_per_epoch),
                             num(x.train_seconds), std::to_string(x.trainings.size())}));
    write_csv(dir / "timing.csv",
              "seed_index,test_snr_db,accuracy,train_examples,epochs,seconds_per_epoch,train_seconds,trainings", rows);

    rows.clear();
    for (const auto& c : r.sensitivity)
        rows.push_back(join({num(c.test_snr), num(c.offset), opt_num(c.mean), c.mean ? num(c.stddev) : std::string(),
                             std::to_string(c.n)}));
    write_csv(dir / "sensitivity.csv", "test_snr_db,offset_db,mean_accuracy,std_accuracy,n_seeds", rows);

    rows.clear();
    for (const auto& x : r.runs)
        for (std::size_t i = 0; i < x.selected.size(); ++i)
            rows.push_back(join({std::to_string(x.seed_index), num(x.test_snr), std::to_string(i), num(x.selected[i]),
                                 i < x.val_trace.size() ? num(x.val_trace[i]) : std::string()}));
    write_csv(dir / "selected.csv", "seed_index,test_snr_db,step,snr_db,val_accuracy", rows);

    rows.clear();
    for (std::size_t i = 0; i < r.confusion.size(); ++i) {
        const auto& cm = r.confusion[i];
        for (std::size_t a = 0; a < cm.n_classes(); ++a)
            for (std::size_t b = 0; b < cm.n_classes(); ++b)
                rows.push_back(join({num(r.test_snrs[i]), r.class_names[a], r.class_names[b],
                                     std::to_string(cm.at(a, b))}));
    }
    write_csv(dir / "confusion.csv", "test_snr_db,true_class,predicted_class,count", rows);

    write_text_file(dir / "summary.json", to_json(r).dump(2) + "\n");
}

std::vector<OverlayCell> confusion_overlay(const EvalReport& whole, const EvalReport& single,
                                           const EvalReport& boost, double test_snr) {
    if (whole.class_names != single.class_names || whole.class_names != boost.class_names)
        throw InputError("confusion_overlay: reports have different class sets");
    const auto& w = whole.confusion.at(snr_slot(whole, test_snr));
    const auto& s = single.confusion.at(snr_slot(single, test_snr));
    const auto& b = boost.confusion.at(snr_slot(boost, test_snr));
    const auto nw = w.row_normalized(), ns = s.row_normalized(), nb = b.row_normalized();
    const std::size_t n = whole.class_names.size();
    if (nw.size() != n || ns.size() != n || nb.size() != n)
        throw InputError("confusion_overlay: confusion size does not match the class set");
    std::vector<OverlayCell> out;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k) out.push_back({i, k, nw[i][k], ns[i][k], nb[i][k]});
    return out;
}

void export_overlay(const std::vector<OverlayCell>& cells, const std::vector<std::string>& class_names,
                    const fs::path& path) {
    std::vector<std::string> rows;
    for (const auto& c : cells)
        rows.push_back(join({class_names.at(c.truth), class_names.at(c.predicted), num(c.whole), num(c.single),
                             num(c.boost)}));
    if (path.has_parent_path()) ensure_dir(path.parent_path());
    write_csv(path, "true_class,predicted_class,all_snr,single_snr,boost", rows);
}

}  // namespace snrsel

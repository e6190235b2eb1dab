#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "snrsel/config.hpp"
#include "snrsel/dataset_io.hpp"
#include "snrsel/error.hpp"
#include "snrsel/harness.hpp"
#include "snrsel/sigsynth.hpp"

namespace fs = std::filesystem;
using namespace snrsel;

namespace {

struct RunOptions {
    std::string config;
    std::string output;
    std::optional<std::size_t> seeds;
    std::optional<std::uint64_t> seed;
    std::vector<double> test_snrs;
};

void add_run_options(CLI::App* cmd, RunOptions& o) {
    cmd->add_option("config", o.config, "Experiment config (JSON)")->required();
    cmd->add_option("-o,--output", o.output, "Output directory (overrides output_dir)");
    cmd->add_option("--seeds", o.seeds, "Number of seeds (overrides n_seeds)");
    cmd->add_option("--seed", o.seed, "Master seed (overrides seed)");
    cmd->add_option("--snr", o.test_snrs, "Test SNRs in dB (overrides test_snrs)");
}

ExperimentConfig load_with_overrides(const RunOptions& o) {
    ExperimentConfig cfg = load_experiment(o.config);
    if (!o.output.empty()) cfg.output_dir = o.output;
    if (o.seeds) cfg.n_seeds = *o.seeds;
    if (o.seed) cfg.seed = *o.seed;
    if (!o.test_snrs.empty()) cfg.test_snrs = o.test_snrs;
    return cfg;
}

void print_report(const EvalReport& r) {
    std::printf("strategy %s, %zu seed(s)\n", r.strategy.c_str(), r.n_seeds);
    std::printf("%8s  %8s  %8s%s\n", "snr_db", "mean", "std", r.curve.empty() || !r.curve[0].baseline_mean ? "" : "  baseline");
    for (const auto& p : r.curve) {
        std::printf("%8g  %8.4f  %8.4f", p.snr_db, p.mean, p.stddev);
        if (p.baseline_mean) std::printf("  %8.4f", *p.baseline_mean);
        std::printf("\n");
    }
    for (const auto& c : r.sensitivity) {
        if (c.mean)
            std::printf("sensitivity test %g offset %+g: %.4f\n", c.test_snr, c.offset, *c.mean);
        else
            std::printf("sensitivity test %g offset %+g: absent\n", c.test_snr, c.offset);
    }
    std::printf("train seconds %.2f, wall seconds %.2f, audits %s\n", r.timing.total_train_seconds,
                r.timing.wall_seconds, r.audits_clean() ? "clean" : "DIRTY");
}

int run_and_print(ExperimentConfig cfg) {
    for (const auto& r : run_experiment(std::move(cfg))) print_report(r);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SNR-aware training-set selection for modulation classification"};
    app.require_subcommand(1);

    std::string gen_config, gen_out, gen_classes;
    std::optional<std::size_t> gen_fpc;
    std::optional<std::uint64_t> gen_seed;
    auto* gen = app.add_subcommand("gen", "Build a synthetic dataset and write the container");
    gen->add_option("-c,--config", gen_config, "Dataset spec JSON, or an experiment config with a dataset block");
    gen->add_option("-o,--out", gen_out, "Container path (.bin)")->required();
    gen->add_option("--frames-per-cell", gen_fpc, "Frames per (class, SNR) cell");
    gen->add_option("--seed", gen_seed, "Master seed");
    gen->add_option("--classes", gen_classes, "Comma-separated class names");

    RunOptions run_opts;
    auto* run_cmd = app.add_subcommand("run", "Execute an experiment config");
    add_run_options(run_cmd, run_opts);

    RunOptions boost_opts;
    std::optional<double> threshold;
    auto* boost = app.add_subcommand("boost", "SNR boosting for the configured test SNRs");
    add_run_options(boost, boost_opts);
    boost->add_option("--threshold", threshold, "Improvement threshold in percentage points");

    RunOptions bag_opts;
    std::optional<std::size_t> bag_k;
    std::optional<double> bag_fraction;
    auto* bag = app.add_subcommand("bag", "SNR bagging for the configured test SNRs");
    add_run_options(bag, bag_opts);
    bag->add_option("-k,--members", bag_k, "Ensemble size");
    bag->add_option("--member-fraction", bag_fraction, "Member sample size as a fraction of one SNR slice");

    RunOptions sens_opts;
    std::vector<double> offsets;
    auto* sens = app.add_subcommand("sensitivity", "Train at test SNR + offset, evaluate at the test SNR");
    add_run_options(sens, sens_opts);
    sens->add_option("--offsets", offsets, "Offsets in dB");

    std::string rep_input, rep_out;
    std::vector<std::string> overlay;
    std::optional<double> overlay_snr;
    auto* rep = app.add_subcommand("report", "Re-export a report or build a confusion overlay");
    rep->add_option("-i,--input", rep_input, "summary.json to re-export");
    rep->add_option("--overlay", overlay, "Three summary.json files: whole dataset, single SNR, boosting")
        ->expected(3);
    rep->add_option("--snr", overlay_snr, "Test SNR for the overlay");
    rep->add_option("-o,--out", rep_out, "Output directory (re-export) or CSV path (overlay)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(ExitCode::kValidation);
    }

    try {
        if (*gen) {
            DatasetSpec spec;
            if (!gen_config.empty()) {
                const Json j = read_json_file(gen_config);
                spec = j.contains("dataset") ? j["dataset"].get<DatasetSpec>() : j.get<DatasetSpec>();
            }
            if (gen_fpc) spec.frames_per_cell = *gen_fpc;
            if (gen_seed) spec.master_seed = *gen_seed;
            if (!gen_classes.empty()) {
                spec.classes.clear();
                std::size_t p = 0;
                while (p <= gen_classes.size()) {
                    std::size_t q = gen_classes.find(',', p);
                    if (q == std::string::npos) q = gen_classes.size();
                    spec.classes.push_back(parse_mod_type(gen_classes.substr(p, q - p)));
                    p = q + 1;
                }
            }
            if (spec.classes.empty())
                spec.classes = {ModType::kBpsk, ModType::kQpsk, ModType::kQam16, ModType::kQam64, ModType::kGfsk};
            spec.validate();
            const Dataset ds = build_dataset(spec);
            export_dataset(ds, gen_out);
            std::printf("wrote %zu frames to %s (checksum 0x%08x)\n", ds.size(), gen_out.c_str(),
                        payload_checksum(ds));
            return 0;
        }
        if (*run_cmd) return run_and_print(load_with_overrides(run_opts));
        if (*boost) {
            ExperimentConfig cfg = load_with_overrides(boost_opts);
            cfg.strategies = {Strategy::kBoost};
            if (threshold) cfg.params.threshold_pp = *threshold;
            return run_and_print(cfg);
        }
        if (*bag) {
            ExperimentConfig cfg = load_with_overrides(bag_opts);
            cfg.strategies = {Strategy::kBagging};
            if (bag_k) cfg.params.k = *bag_k;
            if (bag_fraction) cfg.params.member_fraction = *bag_fraction;
            return run_and_print(cfg);
        }
        if (*sens) {
            ExperimentConfig cfg = load_with_overrides(sens_opts);
            cfg.strategies = {Strategy::kSensitivity};
            if (!offsets.empty()) cfg.params.offsets = offsets;
            return run_and_print(cfg);
        }
        if (*rep) {
            if (!overlay.empty()) {
                if (!overlay_snr) throw ValidationError("report --overlay needs --snr");
                const EvalReport w = report_from_json(read_json_file(overlay[0]));
                const EvalReport s = report_from_json(read_json_file(overlay[1]));
                const EvalReport b = report_from_json(read_json_file(overlay[2]));
                export_overlay(confusion_overlay(w, s, b, *overlay_snr), w.class_names, rep_out);
                std::printf("wrote overlay to %s\n", rep_out.c_str());
                return 0;
            }
            if (rep_input.empty()) throw ValidationError("report needs --input or --overlay");
            const EvalReport r = report_from_json(read_json_file(rep_input));
            report_export(r, rep_out);
            print_report(r);
            return 0;
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return static_cast<int>(e.exit_code());
    } catch (const fs::filesystem_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return static_cast<int>(ExitCode::kIo);
    } catch (const nlohmann::json::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return static_cast<int>(ExitCode::kValidation);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return static_cast<int>(ExitCode::kData);
    }
    return 0;
}

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>

#include "fixtures.hpp"
#include "snrsel/config.hpp"
#include "snrsel/dataset_io.hpp"
#include "snrsel/error.hpp"

using namespace snrsel;
using namespace fixtures;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("snrsel_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) { return read_text_file(p); }

std::size_t line_count(const fs::path& p) {
    std::ifstream in(p);
    std::size_t n = 0;
    std::string line;
    while (std::getline(in, line)) ++n;
    return n;
}

void flip_byte(const fs::path& p, std::size_t offset) {
    std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
    f.seekg(std::streamoff(offset));
    char c;
    f.read(&c, 1);
    c = char(c ^ 0x40);
    f.seekp(std::streamoff(offset));
    f.write(&c, 1);
}

EvalReport fake_report(const std::string& strategy, const std::vector<std::vector<std::uint64_t>>& rows) {
    EvalReport r;
    r.strategy = strategy;
    r.class_names = {"A", "B"};
    r.test_snrs = {8.0};
    r.n_seeds = 1;
    RunRecord run;
    run.test_snr = 8.0;
    std::vector<std::uint64_t> counts;
    for (const auto& row : rows) counts.insert(counts.end(), row.begin(), row.end());
    run.confusion = ConfusionMatrix(2, counts);
    run.accuracy = run.confusion.accuracy();
    r.runs.push_back(run);
    r.aggregate();
    return r;
}

}  // namespace

TEST_CASE("dataset container round trip") {
    const fs::path dir = scratch("io");
    const Dataset& ds = tiny_dataset();
    export_dataset(ds, dir / "d.bin");
    CHECK(fs::exists(dir / "d.meta.json"));
    const Dataset back = import_dataset(dir / "d.bin");
    REQUIRE(back.size() == ds.size());
    CHECK(back.class_names == ds.class_names);
    CHECK(back.grid == ds.grid);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(back.frames[i].iq == ds.frames[i].iq);
        CHECK(back.frames[i].label == ds.frames[i].label);
        CHECK(back.frames[i].snr_db == ds.frames[i].snr_db);
    }
    CHECK(payload_checksum(back) == payload_checksum(ds));
    const Json meta = read_json_file(dir / "d.meta.json");
    CHECK(meta["frame_count"] == ds.size());
    CHECK(meta["checksum"]["algorithm"] == "crc32");
}

TEST_CASE("payload is little-endian float32 I/Q, frame-major") {
    const fs::path dir = scratch("layout");
    const Dataset& ds = tiny_dataset();
    export_dataset(ds, dir / "d.bin");
    CHECK(fs::file_size(dir / "d.bin") == ds.size() * ds.frame_len * 8);
    std::ifstream in(dir / "d.bin", std::ios::binary);
    unsigned char b[8];
    in.seekg(std::streamoff((1 * ds.frame_len + 2) * 8));
    in.read(reinterpret_cast<char*>(b), 8);
    auto f32 = [](const unsigned char* p) {
        std::uint32_t u = std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
                          std::uint32_t(p[3]) << 24;
        float f;
        std::memcpy(&f, &u, 4);
        return f;
    };
    CHECK(f32(b) == ds.frames[1].iq[2].real());
    CHECK(f32(b + 4) == ds.frames[1].iq[2].imag());
}

TEST_CASE("import detects corruption, truncation and inconsistency") {
    const fs::path dir = scratch("corrupt");
    const Dataset& ds = tiny_dataset();
    auto fresh = [&](const std::string& name) {
        export_dataset(ds, dir / (name + ".bin"));
        return dir / (name + ".bin");
    };
    auto code_of = [](const fs::path& p) {
        try {
            import_dataset(p);
        } catch (const DataError& e) {
            return e.code();
        }
        FAIL("import succeeded");
        return DataErrorCode::kFormat;
    };

    const fs::path c = fresh("checksum");
    flip_byte(c, 1234);
    CHECK(code_of(c) == DataErrorCode::kChecksum);

    const fs::path t = fresh("trunc");
    fs::resize_file(t, fs::file_size(t) - 3);
    CHECK(code_of(t) == DataErrorCode::kTruncated);

    // Sidecar claims one more SNR than the payload holds.
    const fs::path g = fresh("grid");
    Json meta = read_json_file(sidecar_path(g));
    meta["grid"]["count"] = meta["grid"]["count"].get<int>() + 1;
    meta["spec"] = nullptr;
    write_text_file(sidecar_path(g), meta.dump(2));
    CHECK(code_of(g) == DataErrorCode::kConsistency);

    const fs::path m = fresh("missing");
    fs::remove(sidecar_path(m));
    CHECK_THROWS_AS(import_dataset(m), IoError);
    CHECK_THROWS_AS(import_dataset(dir / "nope.bin"), IoError);
}

TEST_CASE("experiment config parsing is strict") {
    const Json good = Json::parse(R"({
        "dataset": {"classes": ["BPSK", "GFSK"], "grid": {"start": -4, "step": 4, "count": 4},
                    "frames_per_cell": 20, "frame_len": 32, "master_seed": 3},
        "arch": {"hidden": [8]},
        "train": {"max_epochs": 3, "batch_size": 16},
        "strategy": ["single_snr", "boost"],
        "strategy_params": {"threshold_pp": "inf"},
        "test_snrs": [0, 4],
        "n_seeds": 2, "seed": 9
    })");
    const ExperimentConfig c = parse_experiment(good);
    CHECK(c.strategies.size() == 2);
    CHECK(std::isinf(c.params.threshold_pp));
    CHECK(c.n_seeds == 2);
    CHECK(c.arch.n_classes == 2);
    CHECK(c.arch.input_len == 32);

    Json bad = good;
    bad["bogus"] = 1;
    CHECK_THROWS_AS(parse_experiment(bad), ValidationError);
    bad = good;
    bad["test_snrs"] = Json::array({1});
    CHECK_THROWS_AS(parse_experiment(bad), ValidationError);
    bad = good;
    bad["n_seeds"] = 0;
    CHECK_THROWS_AS(parse_experiment(bad), ValidationError);
    bad = good;
    bad["strategy"] = "nonsense";
    CHECK_THROWS_AS(parse_experiment(bad), ValidationError);
    bad = good;
    bad["train"]["learning_rate"] = "fast";
    CHECK_THROWS_AS(parse_experiment(bad), ValidationError);

    const Json echoed = to_json(c);
    const ExperimentConfig again = parse_experiment(echoed);
    CHECK(again.strategies == c.strategies);
    CHECK(again.test_snrs == c.test_snrs);
    CHECK(again.dataset == c.dataset);
}

TEST_CASE("off-grid test SNR fails before any computation") {
    ExperimentConfig c = tiny_experiment({Strategy::kSingleSnr});
    c.test_snrs = {1.0};
    CHECK_THROWS_AS(run_experiment(c, tiny_dataset()), ValidationError);
}

TEST_CASE("single_snr report covers the grid") {
    const auto reports = run_experiment(tiny_experiment({Strategy::kSingleSnr}), tiny_dataset());
    REQUIRE(reports.size() == 1);
    const EvalReport& r = reports[0];
    CHECK(r.curve.size() == tiny_spec().grid.size());
    CHECK(r.runs.size() == 2 * tiny_spec().grid.size());
    for (const auto& p : r.curve) {
        CHECK(p.mean >= 0.0);
        CHECK(p.mean <= 1.0);
        CHECK(p.n == 2);
    }
    // Confusion rows add up to the per-class test counts over both seeds.
    const Dataset& ds = tiny_dataset();
    for (std::size_t i = 0; i < r.confusion.size(); ++i)
        for (std::size_t c = 0; c < ds.n_classes(); ++c) CHECK(r.confusion[i].row_sum(c) == 2 * 20);
    CHECK(r.audits_clean());
}

TEST_CASE("all_snr runs reproduce exactly modulo timing") {
    ExperimentConfig c = tiny_experiment({Strategy::kAllSnr});
    c.n_seeds = 1;
    const auto a = run_experiment(c, tiny_dataset()), b = run_experiment(c, tiny_dataset());
    CHECK(strip_timing(to_json(a[0])) == strip_timing(to_json(b[0])));
    CHECK(strip_timing(to_json(a[0])).dump().find("seconds") == std::string::npos);
}

TEST_CASE("every strategy runs and accounts its training time") {
    ExperimentConfig c = tiny_experiment({Strategy::kAllSnr, Strategy::kSingleSnr, Strategy::kUniformFraction,
                                          Strategy::kBoost, Strategy::kBagging, Strategy::kSensitivity});
    c.params.member_fraction = 0.5;
    c.params.offsets = {-4, 0, 4};
    const auto reports = run_experiment(c, tiny_dataset());
    REQUIRE(reports.size() == 6);
    for (const auto& r : reports) {
        double sum = 0;
        for (const auto& run : r.runs) {
            double s = 0;
            for (const auto& t : run.trainings) s += t.seconds;
            CHECK(run.train_seconds == doctest::Approx(s));
            sum += s;
        }
        CHECK(std::abs(r.timing.total_train_seconds - sum) <= 0.05 * sum + 1e-12);
        CHECK(r.audits_clean());
    }
    const EvalReport& bag = reports[4];
    for (const auto& run : bag.runs) {
        CHECK(run.members.size() == 3);
        CHECK(run.baseline_accuracy.has_value());
    }
    const EvalReport& sens = reports[5];
    CHECK(sens.sensitivity.size() == tiny_spec().grid.size() * 3);
    // Offset-0 column equals the single-SNR curve.
    for (std::size_t i = 0; i < sens.curve.size(); ++i)
        CHECK(sens.sensitivity[i * 3 + 1].mean.value() == doctest::Approx(reports[1].curve[i].mean));
}

TEST_CASE("report export is stable and round-trips through summary.json") {
    ExperimentConfig c = tiny_experiment({Strategy::kBoost});
    const fs::path dir = scratch("export");
    c.output_dir = dir / "out";
    const auto reports = run_experiment(c, tiny_dataset());
    const fs::path first = dir / "out" / "boost";
    for (const char* f : {"curve.csv", "timing.csv", "sensitivity.csv", "selected.csv", "confusion.csv", "summary.json"})
        CHECK(fs::exists(first / f));
    CHECK(line_count(first / "curve.csv") == 1 + tiny_spec().grid.size());

    report_export(reports[0], dir / "again");
    const EvalReport loaded = report_from_json(read_json_file(first / "summary.json"));
    report_export(loaded, dir / "reloaded");
    for (const char* f : {"curve.csv", "timing.csv", "sensitivity.csv", "selected.csv", "confusion.csv", "summary.json"}) {
        CHECK(slurp(first / f) == slurp(dir / "again" / f));
        CHECK(slurp(first / f) == slurp(dir / "reloaded" / f));
    }
}

TEST_CASE("empty report exports header-only tables") {
    const fs::path dir = scratch("empty");
    report_export(EvalReport{}, dir);
    for (const char* f : {"curve.csv", "timing.csv", "sensitivity.csv", "selected.csv", "confusion.csv"})
        CHECK(line_count(dir / f) == 1);
}

TEST_CASE("unwritable output path is an I/O error") {
    const fs::path dir = scratch("blocked");
    write_text_file(dir / "file", "x");
    CHECK_THROWS_AS(report_export(EvalReport{}, dir / "file" / "sub"), IoError);
}

TEST_CASE("confusion overlay") {
    const EvalReport a = fake_report("all_snr", {{7, 3}, {2, 8}});
    const auto same = confusion_overlay(a, a, a, 8.0);
    REQUIRE(same.size() == 4);
    for (const auto& c : same) {
        CHECK(c.whole == c.single);
        CHECK(c.single == c.boost);
    }
    const EvalReport perfect = fake_report("all_snr", {{10, 0}, {0, 10}});
    for (const auto& c : confusion_overlay(perfect, a, a, 8.0))
        if (c.truth != c.predicted) CHECK(c.whole == 0.0);
    const auto cells = confusion_overlay(a, perfect, a, 8.0);
    for (std::size_t row = 0; row < 2; ++row) {
        double w = 0, s = 0, b = 0;
        for (const auto& c : cells)
            if (c.truth == row) {
                w += c.whole;
                s += c.single;
                b += c.boost;
            }
        CHECK(std::abs(w - 1) < 1e-6);
        CHECK(std::abs(s - 1) < 1e-6);
        CHECK(std::abs(b - 1) < 1e-6);
    }
    EvalReport other = a;
    other.class_names = {"A", "C"};
    CHECK_THROWS_AS(confusion_overlay(a, other, a, 8.0), InputError);
    CHECK_THROWS_AS(confusion_overlay(a, a, a, 2.0), InputError);

    const fs::path dir = scratch("overlay");
    export_overlay(cells, a.class_names, dir / "o.csv");
    CHECK(line_count(dir / "o.csv") == 5);
}

#ifdef SNRSEL_CLI_PATH
TEST_CASE("CLI exit codes") {
    const fs::path dir = scratch("cli");
    const std::string cli = SNRSEL_CLI_PATH;
    auto run = [&](const std::string& args) {
        const int status = std::system((cli + " " + args + " > /dev/null 2>&1").c_str());
        return WEXITSTATUS(status);
    };
    Json cfg = to_json(tiny_experiment({Strategy::kSingleSnr}));
    cfg["n_seeds"] = 1;
    cfg["test_snrs"] = Json::array({0});
    cfg["output_dir"] = (dir / "out").string();
    write_text_file(dir / "exp.json", cfg.dump());
    CHECK(run("run " + (dir / "exp.json").string()) == 0);
    CHECK(fs::exists(dir / "out" / "single_snr" / "summary.json"));
    CHECK(run("report -i " + (dir / "out" / "single_snr" / "summary.json").string() + " -o " +
              (dir / "re").string()) == 0);

    cfg["test_snrs"] = Json::array({1});
    write_text_file(dir / "bad.json", cfg.dump());
    CHECK(run("run " + (dir / "bad.json").string()) == 1);
    CHECK(run("run") == 1);

    write_text_file(dir / "garbled.json", "{ not json");
    CHECK(run("run " + (dir / "garbled.json").string()) == 2);

    CHECK(run("gen -o " + (dir / "d.bin").string() + " --frames-per-cell 2") == 0);
    flip_byte(dir / "d.bin", 100);
    Json imp = cfg;
    imp["dataset"] = {{"import", (dir / "d.bin").string()}};
    imp["test_snrs"] = Json::array({0});
    imp.erase("arch");
    write_text_file(dir / "imp.json", imp.dump());
    CHECK(run("run " + (dir / "imp.json").string()) == 2);

    CHECK(run("run " + (dir / "absent.json").string()) == 3);
    write_text_file(dir / "blocker", "x");
    cfg["test_snrs"] = Json::array({0});
    cfg["output_dir"] = (dir / "blocker" / "sub").string();
    write_text_file(dir / "blocked.json", cfg.dump());
    CHECK(run("run " + (dir / "blocked.json").string()) == 3);
}
#endif

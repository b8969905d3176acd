#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sigwi/harness.hpp"

using namespace sigwi;
namespace fs = std::filesystem;

namespace {

void write_file(const std::string& path, const std::string& content) {
    fs::create_directories(fs::path(path).parent_path());
    std::ofstream f(path);
    f << content;
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// Small enough to optimize in seconds, rich enough to exercise every stage.
const char* kMicroSpec =
    "n_writers = 8\n"
    "genuine_per_writer = 6\n"
    "skilled_per_writer = 4\n"
    "dim = 8\n"
    "d_informative = 4\n"
    "writer_spread = 1.0\n"
    "forgery_offset = 6.0\n"
    "redundant_kind = pure_noise\n"
    "seed = 5\n";

ExperimentConfig micro_config(const std::string& root) {
    ExperimentConfig cfg;
    cfg.dataset = root + "/data/dataset.csv";
    cfg.manifest = root + "/data/manifest.json";
    cfg.out_dir = root + "/out";
    cfg.seed = 9;
    cfg.replications = 1;
    cfg.references = 3;
    cfg.genuine_queries = 2;
    cfg.skilled_queries = 2;
    cfg.train_genuine_queries = 2;
    cfg.train_random_forgeries = 2;
    cfg.split = SplitCounts{2, 0, 2, 2, 2};
    cfg.idpso.population = 4;
    cfg.idpso.max_iterations = 3;
    return cfg;
}

struct TempDir {
    std::string path;
    explicit TempDir(std::string p) : path(std::move(p)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("experiment config file parses every key") {
    TempDir tmp("harness_tmp_cfg");
    std::string path = tmp.path + "/run.cfg";
    write_file(path,
               "# experiment description\n"
               "dataset = data/a.csv\n"
               "manifest = data/a.json\n"
               "out_dir = results\n"
               "\n"
               "seed = 42\n"
               "replications = 3\n"
               "strategies = gv, nv\n"
               "references = 7\n"
               "genuine_queries = 4\n"
               "skilled_queries = 5\n"
               "train_genuine_queries = 6\n"
               "train_random_forgeries = 8\n"
               "split.train = 30\n"
               "split.validation = 2\n"
               "split.optimization = 11\n"
               "split.selection = 12\n"
               "split.exploitation = 15\n"
               "idpso.population = 24\n"
               "idpso.max_iterations = 50\n"
               "idpso.c1 = 1.5\n"
               "idpso.c2 = 2.5\n"
               "idpso.w_initial = 0.8\n"
               "idpso.w_final = 0.3\n"
               "idpso.mu = 90\n"
               "idpso.v_clamp = 5\n"
               "kernel.gamma = 0.25\n"
               "kernel.c = 2\n");
    ExperimentConfig cfg = load_experiment_config(path);
    CHECK(cfg.dataset == "data/a.csv");
    CHECK(cfg.manifest == "data/a.json");
    CHECK(cfg.out_dir == "results");
    CHECK(cfg.seed == 42);
    CHECK(cfg.replications == 3);
    REQUIRE(cfg.strategies.size() == 2);
    CHECK(cfg.strategies[0] == StrategyKind::gv);
    CHECK(cfg.strategies[1] == StrategyKind::nv);
    CHECK(cfg.references == 7);
    CHECK(cfg.genuine_queries == 4);
    CHECK(cfg.skilled_queries == 5);
    CHECK(cfg.train_genuine_queries == 6);
    CHECK(cfg.train_random_forgeries == 8);
    CHECK(cfg.split.train == 30);
    CHECK(cfg.split.validation == 2);
    CHECK(cfg.split.optimization == 11);
    CHECK(cfg.split.selection == 12);
    CHECK(cfg.split.exploitation == 15);
    CHECK(cfg.idpso.population == 24);
    CHECK(cfg.idpso.max_iterations == 50);
    CHECK(cfg.idpso.c1 == 1.5);
    CHECK(cfg.idpso.c2 == 2.5);
    CHECK(cfg.idpso.w_initial == 0.8);
    CHECK(cfg.idpso.w_final == 0.3);
    CHECK(cfg.idpso.mu == 90.0);
    CHECK(cfg.idpso.v_clamp == 5.0);
    CHECK(cfg.kernel.gamma == 0.25);
    CHECK(cfg.kernel.c == 2.0);

    // untouched keys keep their defaults
    write_file(path, "dataset = d.csv\n");
    ExperimentConfig defaults = load_experiment_config(path);
    CHECK(defaults.seed == 1);
    CHECK(defaults.replications == 5);
    CHECK(defaults.strategies.size() == 3);
    CHECK(defaults.references == 10);
    CHECK(defaults.idpso.population == 20);
    CHECK(defaults.kernel.gamma == 0.00048828125);
}

TEST_CASE("experiment config rejects malformed input") {
    TempDir tmp("harness_tmp_badcfg");
    std::string path = tmp.path + "/bad.cfg";

    write_file(path, "dataset = d.csv\nnot_a_key = 1\n");
    CHECK_THROWS_AS(load_experiment_config(path), ConfigError);

    write_file(path, "dataset = d.csv\nreplications = soon\n");
    CHECK_THROWS_AS(load_experiment_config(path), ConfigError);

    write_file(path, "dataset = d.csv\nkernel.gamma = tiny\n");
    CHECK_THROWS_AS(load_experiment_config(path), ConfigError);

    write_file(path, "dataset d.csv\n");
    CHECK_THROWS_AS(load_experiment_config(path), ConfigError);

    CHECK_THROWS_AS(load_experiment_config(tmp.path + "/absent.cfg"), IoError);
}

TEST_CASE("generator spec file parses and rejects unknown keys") {
    TempDir tmp("harness_tmp_spec");
    std::string path = tmp.path + "/gen.cfg";
    write_file(path, kMicroSpec);
    GeneratorSpec spec = load_generator_spec(path);
    CHECK(spec.n_writers == 8);
    CHECK(spec.genuine_per_writer == 6);
    CHECK(spec.skilled_per_writer == 4);
    CHECK(spec.dim == 8);
    CHECK(spec.d_informative == 4);
    CHECK(spec.writer_spread == 1.0);
    CHECK(spec.forgery_offset == 6.0);
    CHECK(spec.redundant_kind == RedundantKind::pure_noise);
    CHECK(spec.seed == 5);

    write_file(path, "writers = 8\n");
    CHECK_THROWS_AS(load_generator_spec(path), ConfigError);
}

TEST_CASE("cmd_gen writes a loadable dataset deterministically") {
    TempDir tmp("harness_tmp_gen");
    std::string spec_path = tmp.path + "/gen.cfg";
    write_file(spec_path, kMicroSpec);

    cmd_gen(spec_path, tmp.path + "/a");
    cmd_gen(spec_path, tmp.path + "/b");
    CHECK(read_file(tmp.path + "/a/dataset.csv") == read_file(tmp.path + "/b/dataset.csv"));
    CHECK(read_file(tmp.path + "/a/manifest.json") == read_file(tmp.path + "/b/manifest.json"));

    WriterSet ws = load_dataset_csv(tmp.path + "/a/dataset.csv");
    CHECK(ws.writer_ids().size() == 8);
    CHECK(ws.dim() == 8);
    GeneratorSpec spec = read_manifest_spec(tmp.path + "/a/manifest.json");
    CHECK(spec.n_writers == 8);
    CHECK(spec.seed == 5);
}

TEST_CASE("baseline, optimize, eval and report cooperate end to end") {
    TempDir tmp("harness_tmp_e2e");
    write_file(tmp.path + "/gen.cfg", kMicroSpec);
    cmd_gen(tmp.path + "/gen.cfg", tmp.path + "/data");
    ExperimentConfig cfg = micro_config(tmp.path);

    EerReport base = cmd_baseline(cfg);
    CHECK(base.per_writer_eer.size() == 2); // exploitation writers
    REQUIRE(fs::exists(cfg.out_dir + "/baseline/rep0/eer_report.csv"));
    REQUIRE(fs::exists(cfg.out_dir + "/baseline/rep0/best_mask.json"));

    // in-domain eval of the all-ones mask reproduces the baseline exactly
    EerReport evald = cmd_eval(cfg, cfg.out_dir + "/baseline/rep0/best_mask.json", "",
                               cfg.out_dir + "/evalcheck", cfg.seed);
    CHECK(evald.mean_eer == base.mean_eer);
    REQUIRE(fs::exists(cfg.out_dir + "/evalcheck/eer_report.csv"));

    cmd_optimize(cfg, StrategyKind::nv);
    std::string rep0 = cfg.out_dir + "/nv/rep0";
    REQUIRE(fs::exists(rep0 + "/trace.csv"));
    REQUIRE(fs::exists(rep0 + "/best_mask.json"));
    REQUIRE(fs::exists(rep0 + "/eer_report.csv"));
    std::string trace = read_file(rep0 + "/trace.csv");
    CHECK(trace.rfind("iteration,best_opt_eer,best_sel_eer,archive_best_eer,mean_popcount", 0) ==
          0);
    int lines = 0;
    for (char ch : trace)
        if (ch == '\n') ++lines;
    CHECK(lines == 1 + cfg.idpso.max_iterations);

    FeatureMask best = load_mask_json(rep0 + "/best_mask.json");
    CHECK(best.size() == 8);
    CHECK(best.count() >= 1);

    // a transfer-style eval directory becomes a report column
    cmd_eval(cfg, rep0 + "/best_mask.json", "", rep0 + "/eval_self", cfg.seed);
    fs::create_directories(cfg.out_dir + "/pv/rep0"); // present but empty

    ReportSummary summary = cmd_report(cfg.out_dir);
    REQUIRE(summary.rows.size() == 2);
    CHECK(summary.rows[0].name == "baseline");
    CHECK(summary.rows[1].name == "nv");
    CHECK(summary.rows[0].replications == 1);
    CHECK(summary.rows[0].features_mean == 8.0);
    CHECK(std::isnan(summary.rows[0].gap_mean));
    CHECK_FALSE(std::isnan(summary.rows[1].gap_mean));
    CHECK(summary.rows[1].gap_mean >= 0.0);
    REQUIRE(summary.rows[1].transfer.count("self") == 1);
    CHECK(summary.rows[1].transfer.at("self").first >= 0.0);
    REQUIRE(summary.incomplete.size() == 1);
    CHECK(summary.incomplete[0].rfind("pv/rep0", 0) == 0);
    CHECK(fs::exists(cfg.out_dir + "/summary.csv"));
    CHECK(fs::exists(cfg.out_dir + "/summary.md"));
    std::string md = read_file(cfg.out_dir + "/summary.md");
    CHECK(md.find("no-FS") != std::string::npos);

    // mismatched mask dimension is refused
    TempDir other("harness_tmp_dimcheck");
    write_file(other.path + "/gen.cfg",
               "n_writers = 8\ngenuine_per_writer = 6\nskilled_per_writer = 4\n"
               "dim = 9\nd_informative = 4\nseed = 5\n");
    cmd_gen(other.path + "/gen.cfg", other.path + "/data");
    CHECK_THROWS_AS(cmd_eval(cfg, rep0 + "/best_mask.json", other.path + "/data/dataset.csv",
                             cfg.out_dir + "/evalbad", cfg.seed),
                    DimensionError);
}

TEST_CASE("cmd_report needs at least one completed run") {
    TempDir tmp("harness_tmp_report");
    CHECK_THROWS_AS(cmd_report(tmp.path + "/nowhere"), IoError);
    fs::create_directories(tmp.path + "/empty");
    CHECK_THROWS_AS(cmd_report(tmp.path + "/empty"), IoError);
}

TEST_CASE("optimize runs are byte-deterministic") {
    TempDir tmp("harness_tmp_det");
    write_file(tmp.path + "/gen.cfg", kMicroSpec);
    cmd_gen(tmp.path + "/gen.cfg", tmp.path + "/data");

    ExperimentConfig cfg = micro_config(tmp.path);
    cfg.out_dir = tmp.path + "/run1";
    cmd_optimize(cfg, StrategyKind::gv);
    cfg.out_dir = tmp.path + "/run2";
    cmd_optimize(cfg, StrategyKind::gv);

    CHECK(read_file(tmp.path + "/run1/gv/rep0/trace.csv") ==
          read_file(tmp.path + "/run2/gv/rep0/trace.csv"));
    CHECK(read_file(tmp.path + "/run1/gv/rep0/best_mask.json") ==
          read_file(tmp.path + "/run2/gv/rep0/best_mask.json"));
}

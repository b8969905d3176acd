#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "sigwi/harness.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Writer-independent signature verification in dissimilarity space with "
                 "swarm-based wrapper feature selection"};
    app.require_subcommand(1);

    std::string config_path, out_dir, strategy = "gv", mask_file, dataset;
    std::uint64_t seed = 0;

    auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset from a generator spec");
    gen->add_option("--config", config_path, "generator spec file (key = value)")->required();
    gen->add_option("--out", out_dir, "output directory")->required();

    auto* baseline =
        app.add_subcommand("baseline", "Evaluate the all-ones mask on the exploitation writers");
    baseline->add_option("--config", config_path, "experiment config file")->required();
    auto* bl_seed = baseline->add_option("--seed", seed, "override the master seed");
    auto* bl_out = baseline->add_option("--out", out_dir, "override the output directory");

    auto* optimize = app.add_subcommand("optimize", "Run wrapper feature selection");
    optimize->add_option("--config", config_path, "experiment config file")->required();
    optimize->add_option("--strategy", strategy, "nv, pv or gv")->required();
    auto* op_seed = optimize->add_option("--seed", seed, "override the master seed");
    auto* op_out = optimize->add_option("--out", out_dir, "override the output directory");

    auto* eval = app.add_subcommand("eval", "Evaluate a stored mask on a dataset");
    eval->add_option("--config", config_path, "experiment config file")->required();
    eval->add_option("--mask", mask_file, "best_mask.json produced by optimize")->required();
    eval->add_option("--dataset", dataset, "target dataset CSV (default: the config's dataset)");
    auto* ev_seed =
        eval->add_option("--seed", seed, "split/protocol seed (use master + k for replication k)");
    eval->add_option("--out", out_dir, "directory for eer_report.csv")->required();

    auto* report = app.add_subcommand("report", "Collate a run directory into summary tables");
    report->add_option("--out", out_dir, "run directory to collate")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            sigwi::cmd_gen(config_path, out_dir);
            std::cout << "wrote " << out_dir << "/dataset.csv and manifest.json\n";
        } else if (*baseline) {
            sigwi::ExperimentConfig cfg = sigwi::load_experiment_config(config_path);
            if (bl_seed->count()) cfg.seed = seed;
            if (bl_out->count()) cfg.out_dir = out_dir;
            sigwi::EerReport rep = sigwi::cmd_baseline(cfg);
            std::cout << "baseline EER (replication 0): mean "
                      << sigwi::detail::format_fixed(rep.mean_eer, 4) << ", std "
                      << sigwi::detail::format_fixed(rep.std_eer, 4) << '\n'
                      << "reports under " << cfg.out_dir << "/baseline\n";
        } else if (*optimize) {
            sigwi::ExperimentConfig cfg = sigwi::load_experiment_config(config_path);
            if (op_seed->count()) cfg.seed = seed;
            if (op_out->count()) cfg.out_dir = out_dir;
            sigwi::StrategyKind s = sigwi::strategy_from_string(strategy);
            sigwi::cmd_optimize(cfg, s);
            std::cout << cfg.replications << " replication(s) of " << strategy << " written to "
                      << cfg.out_dir << '/' << strategy << '\n';
        } else if (*eval) {
            sigwi::ExperimentConfig cfg = sigwi::load_experiment_config(config_path);
            std::uint64_t s = ev_seed->count() ? seed : cfg.seed;
            sigwi::EerReport rep = sigwi::cmd_eval(cfg, mask_file, dataset, out_dir, s);
            std::cout << "EER: mean " << sigwi::detail::format_fixed(rep.mean_eer, 4) << ", std "
                      << sigwi::detail::format_fixed(rep.std_eer, 4) << " -> " << out_dir
                      << "/eer_report.csv\n";
        } else if (*report) {
            sigwi::ReportSummary summary = sigwi::cmd_report(out_dir);
            std::cout << "summary over " << summary.rows.size() << " strategies -> " << out_dir
                      << "/summary.{csv,md}\n";
            for (const auto& line : summary.incomplete)
                std::cerr << "incomplete: " << line << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

#ifndef SIGWI_HARNESS_HPP
#define SIGWI_HARNESS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sigwi/bpso.hpp"
#include "sigwi/dataset_io.hpp"
#include "sigwi/dichotomy.hpp"
#include "sigwi/errors.hpp"
#include "sigwi/metrics.hpp"
#include "sigwi/prototype_selection.hpp"
#include "sigwi/svm.hpp"
#include "sigwi/synthetic.hpp"
#include "sigwi/types.hpp"

#include "json.hpp"

namespace sigwi {

struct ExperimentConfig {
    std::string dataset;
    std::string manifest;
    std::string out_dir = "out";
    std::uint64_t seed = 1; // replication k runs with seed + k
    int replications = 5;
    std::vector<StrategyKind> strategies = {StrategyKind::nv, StrategyKind::pv, StrategyKind::gv};
    int references = 10;
    int genuine_queries = 10;
    int skilled_queries = 10;
    int train_genuine_queries = 10;
    int train_random_forgeries = 10;
    SplitCounts split;
    IdpsoConfig idpso;
    KernelParams kernel;

    void validate() const {
        if (dataset.empty()) throw ConfigError("config: dataset path is required");
        if (replications < 1) throw ConfigError("config: replications must be >= 1");
        if (strategies.empty()) throw ConfigError("config: at least one strategy");
        if (references < 1) throw ConfigError("config: references must be >= 1");
        if (genuine_queries < 1 || skilled_queries < 1)
            throw ConfigError("config: genuine_queries and skilled_queries must be >= 1");
        if (train_genuine_queries < 1 || train_random_forgeries < 1)
            throw ConfigError("config: training query counts must be >= 1");
        idpso.validate();
        if (kernel.gamma <= 0.0 || kernel.c <= 0.0)
            throw ConfigError("config: kernel.gamma and kernel.c must be positive");
    }
};

namespace detail {

inline std::vector<std::pair<std::string, std::string>> read_kv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path);
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
        out.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return out;
}

inline int parse_int(const std::string& key, const std::string& v) {
    try {
        return std::stoi(v);
    } catch (const std::exception&) {
        throw ConfigError("config: bad integer for " + key + ": '" + v + "'");
    }
}

inline double parse_double(const std::string& key, const std::string& v) {
    try {
        return std::stod(v);
    } catch (const std::exception&) {
        throw ConfigError("config: bad number for " + key + ": '" + v + "'");
    }
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        return std::stoull(v);
    } catch (const std::exception&) {
        throw ConfigError("config: bad seed for " + key + ": '" + v + "'");
    }
}

inline std::string format_fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

} // namespace detail

inline ExperimentConfig load_experiment_config(const std::string& path) {
    ExperimentConfig cfg;
    for (const auto& [key, value] : detail::read_kv(path)) {
        if (key == "dataset") cfg.dataset = value;
        else if (key == "manifest") cfg.manifest = value;
        else if (key == "out_dir") cfg.out_dir = value;
        else if (key == "seed") cfg.seed = detail::parse_u64(key, value);
        else if (key == "replications") cfg.replications = detail::parse_int(key, value);
        else if (key == "strategies") {
            cfg.strategies.clear();
            std::string item;
            std::stringstream ss(value);
            while (std::getline(ss, item, ','))
                cfg.strategies.push_back(strategy_from_string(detail::trim(item)));
        } else if (key == "references") cfg.references = detail::parse_int(key, value);
        else if (key == "genuine_queries") cfg.genuine_queries = detail::parse_int(key, value);
        else if (key == "skilled_queries") cfg.skilled_queries = detail::parse_int(key, value);
        else if (key == "train_genuine_queries")
            cfg.train_genuine_queries = detail::parse_int(key, value);
        else if (key == "train_random_forgeries")
            cfg.train_random_forgeries = detail::parse_int(key, value);
        else if (key == "split.train") cfg.split.train = detail::parse_int(key, value);
        else if (key == "split.validation") cfg.split.validation = detail::parse_int(key, value);
        else if (key == "split.optimization")
            cfg.split.optimization = detail::parse_int(key, value);
        else if (key == "split.selection") cfg.split.selection = detail::parse_int(key, value);
        else if (key == "split.exploitation")
            cfg.split.exploitation = detail::parse_int(key, value);
        else if (key == "idpso.population") cfg.idpso.population = detail::parse_int(key, value);
        else if (key == "idpso.max_iterations")
            cfg.idpso.max_iterations = detail::parse_int(key, value);
        else if (key == "idpso.c1") cfg.idpso.c1 = detail::parse_double(key, value);
        else if (key == "idpso.c2") cfg.idpso.c2 = detail::parse_double(key, value);
        else if (key == "idpso.w_initial") cfg.idpso.w_initial = detail::parse_double(key, value);
        else if (key == "idpso.w_final") cfg.idpso.w_final = detail::parse_double(key, value);
        else if (key == "idpso.mu") cfg.idpso.mu = detail::parse_double(key, value);
        else if (key == "idpso.v_clamp") cfg.idpso.v_clamp = detail::parse_double(key, value);
        else if (key == "kernel.gamma") cfg.kernel.gamma = detail::parse_double(key, value);
        else if (key == "kernel.c") cfg.kernel.c = detail::parse_double(key, value);
        else throw ConfigError("config: unknown key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

inline GeneratorSpec load_generator_spec(const std::string& path) {
    GeneratorSpec spec;
    for (const auto& [key, value] : detail::read_kv(path)) {
        if (key == "n_writers") spec.n_writers = detail::parse_int(key, value);
        else if (key == "genuine_per_writer")
            spec.genuine_per_writer = detail::parse_int(key, value);
        else if (key == "skilled_per_writer")
            spec.skilled_per_writer = detail::parse_int(key, value);
        else if (key == "dim") spec.dim = static_cast<std::size_t>(detail::parse_int(key, value));
        else if (key == "d_informative")
            spec.d_informative = static_cast<std::size_t>(detail::parse_int(key, value));
        else if (key == "writer_spread") spec.writer_spread = detail::parse_double(key, value);
        else if (key == "forgery_offset") spec.forgery_offset = detail::parse_double(key, value);
        else if (key == "redundant_kind") spec.redundant_kind = redundant_kind_from_string(value);
        else if (key == "seed") spec.seed = detail::parse_u64(key, value);
        else throw ConfigError("generator spec: unknown key '" + key + "'");
    }
    spec.validate();
    return spec;
}

inline std::vector<ScoredQuery> score_bundles(const TrainedModel& model,
                                              const std::vector<QueryBundle>& bundles) {
    std::vector<ScoredQuery> out;
    out.reserve(bundles.size());
    for (const auto& b : bundles) {
        std::vector<double> ref_scores;
        ref_scores.reserve(b.references.size());
        for (const auto& ref : b.references)
            ref_scores.push_back(
                signed_distance(model, dichotomy_transform(b.questioned.features, ref.features)));
        out.push_back({b.claimed_writer, b.truth, fuse_max(ref_scores)});
    }
    return out;
}

/// Training pairs from the train writers, condensed once per replication on
/// the full feature space.
inline PrototypeSet build_prototypes(const WriterSet& train_part, const ExperimentConfig& cfg,
                                     std::uint64_t seed) {
    auto samples =
        build_training_set(train_part, cfg.train_genuine_queries, cfg.train_random_forgeries, seed);
    return condense(samples, seed);
}

inline std::vector<QueryBundle> build_queries(const WriterSet& part, const ExperimentConfig& cfg,
                                              std::uint64_t seed) {
    return build_optimization_queries(part, cfg.genuine_queries, cfg.skilled_queries,
                                      cfg.references, seed);
}

inline EerReport evaluate_mask_on(const PrototypeSet& prototypes, const FeatureMask& mask,
                                  const std::vector<QueryBundle>& bundles,
                                  const KernelParams& params, std::uint64_t seed,
                                  ModelCache* cache = nullptr) {
    if (cache) {
        const std::string key = mask.to_hex();
        auto it = cache->models.find(key);
        if (it == cache->models.end())
            it = cache->models.emplace(key, train(prototypes, params, mask, seed)).first;
        return compute_eer_report(score_bundles(it->second, bundles));
    }
    TrainedModel model = train(prototypes, params, mask, seed);
    return compute_eer_report(score_bundles(model, bundles));
}

namespace detail {

inline void write_plain_mask_json(const FeatureMask& mask, const std::string& strategy,
                                  const std::string& path) {
    nlohmann::json j;
    j["mask_hex"] = mask.to_hex();
    j["dim"] = mask.size();
    j["selected"] = mask.count();
    j["strategy"] = strategy;
    std::ofstream f(path);
    if (!f) throw IoError("cannot open " + path + " for writing");
    f << j.dump(2) << '\n';
}

inline void require_file(const std::string& path, const char* what) {
    if (!std::filesystem::exists(path))
        throw ConfigError(std::string(what) + " not found: " + path);
}

} // namespace detail

/// Generates a dataset from a generator-spec file: writes dataset.csv and
/// manifest.json into out_dir.
inline void cmd_gen(const std::string& spec_path, const std::string& out_dir) {
    GeneratorSpec spec = load_generator_spec(spec_path);
    GeneratedDataset ds = generate(spec);
    std::filesystem::create_directories(out_dir);
    save_dataset_csv(ds.writers, out_dir + "/dataset.csv");
    write_manifest(ds, out_dir + "/manifest.json");
}

/// All-ones-mask pipeline per replication: split, build training pairs,
/// condense, train, score the exploitation writers. Writes
/// <out>/baseline/rep<k>/{eer_report.csv, best_mask.json}; returns the
/// replication-0 report.
inline EerReport cmd_baseline(const ExperimentConfig& cfg) {
    cfg.validate();
    detail::require_file(cfg.dataset, "dataset");
    WriterSet ws = load_dataset_csv(cfg.dataset);
    EerReport first;
    for (int k = 0; k < cfg.replications; ++k) {
        const std::uint64_t seed_k = cfg.seed + static_cast<std::uint64_t>(k);
        EvalSplit es = split(ws, cfg.split, seed_k);
        PrototypeSet prototypes = build_prototypes(es.train, cfg, seed_k);
        std::vector<QueryBundle> bundles = build_queries(es.exploitation, cfg, seed_k);
        FeatureMask mask = FeatureMask::all_ones(ws.dim());
        EerReport report = evaluate_mask_on(prototypes, mask, bundles, cfg.kernel, seed_k);
        std::string dir = cfg.out_dir + "/baseline/rep" + std::to_string(k);
        std::filesystem::create_directories(dir);
        write_eer_report_csv(report, dir + "/eer_report.csv");
        detail::write_plain_mask_json(mask, "baseline", dir + "/best_mask.json");
        if (k == 0) first = report;
    }
    return first;
}

/// One wrapper-selection experiment per replication. Writes
/// <out>/<strategy>/rep<k>/{trace.csv, best_mask.json, eer_report.csv};
/// the report scores the returned mask on the exploitation writers.
inline void cmd_optimize(const ExperimentConfig& cfg, StrategyKind strategy) {
    cfg.validate();
    detail::require_file(cfg.dataset, "dataset");
    WriterSet ws = load_dataset_csv(cfg.dataset);
    for (int k = 0; k < cfg.replications; ++k) {
        const std::uint64_t seed_k = cfg.seed + static_cast<std::uint64_t>(k);
        EvalSplit es = split(ws, cfg.split, seed_k);
        PrototypeSet prototypes = build_prototypes(es.train, cfg, seed_k);
        auto cache = std::make_shared<ModelCache>();
        WrapperContext opt_ctx(prototypes, build_queries(es.optimization, cfg, seed_k), cfg.kernel,
                               seed_k, cache);
        WrapperContext sel_ctx(prototypes, build_queries(es.selection, cfg, seed_k), cfg.kernel,
                               seed_k, cache);
        IdpsoConfig idpso = cfg.idpso;
        idpso.seed = seed_k;
        RunResult result = run(idpso, strategy, opt_ctx, sel_ctx);

        std::string dir = cfg.out_dir + "/" + to_string(strategy) + "/rep" + std::to_string(k);
        std::filesystem::create_directories(dir);
        write_trace_csv(result.trace, dir + "/trace.csv");
        write_best_mask_json(result, strategy, dir + "/best_mask.json");
        EerReport report = evaluate_mask_on(prototypes, result.best_mask,
                                            build_queries(es.exploitation, cfg, seed_k),
                                            cfg.kernel, seed_k, cache.get());
        write_eer_report_csv(report, dir + "/eer_report.csv");
    }
}

/// Scores a stored mask: trains on the *source* training split (cfg.dataset)
/// and evaluates the exploitation writers of `target_dataset` (which may be
/// the source itself). `seed` picks the split/protocol draw; pass the
/// replication seed (master + k) to reproduce a replication's view.
inline EerReport cmd_eval(const ExperimentConfig& cfg, const std::string& mask_file,
                          const std::string& target_dataset, const std::string& out_dir,
                          std::uint64_t seed) {
    cfg.validate();
    detail::require_file(cfg.dataset, "dataset");
    detail::require_file(mask_file, "mask file");
    FeatureMask mask = load_mask_json(mask_file);

    WriterSet source = load_dataset_csv(cfg.dataset);
    if (mask.size() != source.dim())
        throw DimensionError("cmd_eval: mask dimension " + std::to_string(mask.size()) +
                             " != source dimension " + std::to_string(source.dim()));
    const bool in_domain = target_dataset.empty() || target_dataset == cfg.dataset;
    WriterSet target;
    if (!in_domain) {
        detail::require_file(target_dataset, "target dataset");
        target = load_dataset_csv(target_dataset);
        if (target.dim() != source.dim())
            throw DimensionError("cmd_eval: target dimension " + std::to_string(target.dim()) +
                                 " != source dimension " + std::to_string(source.dim()));
    }

    EvalSplit src_split = split(source, cfg.split, seed);
    PrototypeSet prototypes = build_prototypes(src_split.train, cfg, seed);
    EvalSplit tgt_split = in_domain ? std::move(src_split) : split(target, cfg.split, seed);
    std::vector<QueryBundle> bundles = build_queries(tgt_split.exploitation, cfg, seed);
    EerReport report = evaluate_mask_on(prototypes, mask, bundles, cfg.kernel, seed);
    std::filesystem::create_directories(out_dir);
    write_eer_report_csv(report, out_dir + "/eer_report.csv");
    return report;
}

struct StrategyRow {
    std::string name;
    int replications = 0;
    double features_mean = 0.0;
    double eer_mean = 0.0;
    double eer_std = 0.0;
    double gap_mean = std::numeric_limits<double>::quiet_NaN();
    // transfer tag -> (mean, std) of per-replication mean EERs
    std::map<std::string, std::pair<double, double>> transfer;
};

struct ReportSummary {
    std::vector<StrategyRow> rows;
    std::vector<std::string> incomplete;
};

namespace detail {

inline std::pair<double, double> mean_std(const std::vector<double>& xs) {
    double m = 0.0;
    for (double x : xs) m += x;
    m /= xs.size();
    double sq = 0.0;
    for (double x : xs) sq += (x - m) * (x - m);
    return {m, std::sqrt(sq / xs.size())};
}

inline std::vector<std::string> sorted_subdirs(const std::string& dir) {
    std::vector<std::string> names;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_directory()) names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    return names;
}

} // namespace detail

/// Collates a run directory into summary.csv and summary.md. Rows cover
/// baseline (no feature selection) and each strategy found; columns are mean
/// selected-feature count, exploitation EER mean (std over replications),
/// mean overfitting gap, and one EER column group per transfer-eval tag.
/// Replications missing files are listed as incomplete and skipped.
inline ReportSummary cmd_report(const std::string& run_dir) {
    if (!std::filesystem::is_directory(run_dir))
        throw IoError("cmd_report: not a directory: " + run_dir);

    ReportSummary summary;
    const std::vector<std::string> order = {"baseline", "nv", "pv", "gv"};
    for (const std::string& name : order) {
        std::string sdir = run_dir + "/" + name;
        if (!std::filesystem::is_directory(sdir)) continue;

        std::vector<double> features, eers, gaps;
        std::map<std::string, std::vector<double>> transfer;
        for (const std::string& rep : detail::sorted_subdirs(sdir)) {
            if (rep.rfind("rep", 0) != 0) continue;
            std::string rdir = sdir + "/" + rep;
            std::string mask_path = rdir + "/best_mask.json";
            std::string report_path = rdir + "/eer_report.csv";
            if (!std::filesystem::exists(mask_path)) {
                summary.incomplete.push_back(name + "/" + rep + ": missing best_mask.json");
                continue;
            }
            if (!std::filesystem::exists(report_path)) {
                summary.incomplete.push_back(name + "/" + rep + ": missing eer_report.csv");
                continue;
            }
            std::ifstream mf(mask_path);
            nlohmann::json j = nlohmann::json::parse(mf);
            features.push_back(j.at("selected").get<double>());
            if (j.contains("overfitting_gap")) gaps.push_back(j.at("overfitting_gap").get<double>());
            eers.push_back(read_eer_report_csv(report_path).mean_eer);
            for (const std::string& sub : detail::sorted_subdirs(rdir)) {
                if (sub.rfind("eval_", 0) != 0) continue;
                std::string tpath = rdir + "/" + sub + "/eer_report.csv";
                if (!std::filesystem::exists(tpath)) {
                    summary.incomplete.push_back(name + "/" + rep + "/" + sub +
                                                 ": missing eer_report.csv");
                    continue;
                }
                transfer[sub.substr(5)].push_back(read_eer_report_csv(tpath).mean_eer);
            }
        }
        if (eers.empty()) continue;

        StrategyRow row;
        row.name = name;
        row.replications = static_cast<int>(eers.size());
        row.features_mean = detail::mean_std(features).first;
        auto [em, es] = detail::mean_std(eers);
        row.eer_mean = em;
        row.eer_std = es;
        if (!gaps.empty()) row.gap_mean = detail::mean_std(gaps).first;
        for (const auto& [tag, xs] : transfer) row.transfer[tag] = detail::mean_std(xs);
        summary.rows.push_back(std::move(row));
    }
    if (summary.rows.empty())
        throw IoError("cmd_report: no completed runs under " + run_dir);

    std::vector<std::string> tags;
    for (const auto& row : summary.rows)
        for (const auto& [tag, _] : row.transfer)
            if (std::find(tags.begin(), tags.end(), tag) == tags.end()) tags.push_back(tag);
    std::sort(tags.begin(), tags.end());

    std::ofstream csv(run_dir + "/summary.csv");
    if (!csv) throw IoError("cannot open " + run_dir + "/summary.csv for writing");
    csv << "strategy,replications,features_mean,eer_mean,eer_std,gap_mean";
    for (const auto& tag : tags) csv << ',' << tag << "_eer_mean," << tag << "_eer_std";
    csv << '\n';
    for (const auto& row : summary.rows) {
        csv << row.name << ',' << row.replications << ','
            << detail::format_double(row.features_mean) << ','
            << detail::format_double(row.eer_mean) << ',' << detail::format_double(row.eer_std)
            << ',' << (std::isnan(row.gap_mean) ? "" : detail::format_double(row.gap_mean));
        for (const auto& tag : tags) {
            auto it = row.transfer.find(tag);
            if (it == row.transfer.end()) csv << ",,";
            else
                csv << ',' << detail::format_double(it->second.first) << ','
                    << detail::format_double(it->second.second);
        }
        csv << '\n';
    }
    csv.close();

    std::ofstream md(run_dir + "/summary.md");
    if (!md) throw IoError("cannot open " + run_dir + "/summary.md for writing");
    md << "# Experiment summary\n\n";
    md << "| Strategy | Reps | Features (mean) | EER mean (std) | Gap (mean) |";
    for (const auto& tag : tags) md << ' ' << tag << " EER mean (std) |";
    md << "\n|---|---|---|---|---|";
    for (std::size_t i = 0; i < tags.size(); ++i) md << "---|";
    md << '\n';
    for (const auto& row : summary.rows) {
        md << "| " << (row.name == "baseline" ? "no-FS" : row.name) << " | " << row.replications
           << " | " << detail::format_fixed(row.features_mean, 1) << " | "
           << detail::format_fixed(row.eer_mean, 4) << " (" << detail::format_fixed(row.eer_std, 4)
           << ") | " << (std::isnan(row.gap_mean) ? "-" : detail::format_fixed(row.gap_mean, 4))
           << " |";
        for (const auto& tag : tags) {
            auto it = row.transfer.find(tag);
            if (it == row.transfer.end()) md << " - |";
            else
                md << ' ' << detail::format_fixed(it->second.first, 4) << " ("
                   << detail::format_fixed(it->second.second, 4) << ") |";
        }
        md << '\n';
    }
    if (!summary.incomplete.empty()) {
        md << "\n## Incomplete runs\n\n";
        for (const auto& s : summary.incomplete) md << "- " << s << '\n';
    }
    return summary;
}

} // namespace sigwi

#endif

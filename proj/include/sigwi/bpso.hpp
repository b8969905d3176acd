#ifndef SIGWI_BPSO_HPP
#define SIGWI_BPSO_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "sigwi/detail.hpp"
#include "sigwi/dichotomy.hpp"
#include "sigwi/errors.hpp"
#include "sigwi/metrics.hpp"
#include "sigwi/prototype_selection.hpp"
#include "sigwi/svm.hpp"
#include "sigwi/types.hpp"

#include "json.hpp"

namespace sigwi {

struct IdpsoConfig {
    int population = 20;
    int max_iterations = 40;
    double c1 = 2.0;
    double c2 = 2.0;
    double w_initial = 0.9;
    double w_final = 0.4;
    double mu = 100.0;
    double v_clamp = 6.0;
    std::uint64_t seed = 1;

    void validate() const {
        if (population < 2) throw ConfigError("population must be >= 2");
        if (max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
        if (c1 < 0.0 || c2 < 0.0) throw ConfigError("c1 and c2 must be >= 0");
        if (w_final < 0.0 || w_initial < w_final)
            throw ConfigError("need 0 <= w_final <= w_initial");
        if (v_clamp <= 0.0) throw ConfigError("v_clamp must be positive");
    }
};

/// V-shaped transfer: |(2/pi) * atan((pi/2) v)|, even, in [0, 1).
inline double transfer_vshape(double v) {
    constexpr double half_pi = 1.5707963267948966;
    return std::abs(std::atan(half_pi * v) / half_pi);
}

/// Initialization popcount bands, scaled from the canonical 2048-dim bands
/// [500, 1000] and [1500, 2048]. Both bounds round conservatively inward.
struct InitBands {
    std::size_t low_min = 0, low_max = 0;
    std::size_t high_min = 0, high_max = 0;
};

inline InitBands init_bands(std::size_t dim) {
    if (dim == 0) throw ConfigError("init_bands: dim must be >= 1");
    InitBands b;
    b.low_min = (500 * dim + 2047) / 2048;
    b.low_max = (1000 * dim) / 2048;
    b.high_min = (1500 * dim + 2047) / 2048;
    b.high_max = dim;
    if (b.low_min > b.low_max || b.low_min < 1)
        throw ConfigError("init_bands: low band empty at dim " + std::to_string(dim));
    if (b.high_min > b.high_max)
        throw ConfigError("init_bands: high band empty at dim " + std::to_string(dim));
    return b;
}

struct Particle {
    std::vector<std::uint8_t> bits;
    std::vector<double> velocity;
    std::vector<std::uint8_t> pbest_bits;
    double pbest_opt = std::numeric_limits<double>::infinity();
    double opt_fitness = std::numeric_limits<double>::infinity();
    double sel_fitness = std::numeric_limits<double>::infinity();
};

/// Half the swarm starts in the low band, the rest in the high band; each
/// particle draws its popcount and bit positions from its own init stream.
inline std::vector<Particle> init_swarm(const IdpsoConfig& config, std::size_t dim) {
    config.validate();
    InitBands bands = init_bands(dim);
    std::vector<Particle> swarm(config.population);
    for (int i = 0; i < config.population; ++i) {
        auto rng = detail::make_rng(config.seed, detail::kStreamInit, static_cast<std::uint64_t>(i));
        bool low = i < config.population / 2;
        std::uniform_int_distribution<std::size_t> pick(low ? bands.low_min : bands.high_min,
                                                        low ? bands.low_max : bands.high_max);
        std::size_t k = pick(rng);
        Particle& p = swarm[i];
        p.bits.assign(dim, 0);
        for (std::size_t d : detail::sample_without_replacement(dim, k, rng)) p.bits[d] = 1;
        p.velocity.assign(dim, 0.0);
        p.pbest_bits = p.bits;
    }
    return swarm;
}

/// One velocity coordinate: w v + c1 r1 (pbest - x) + c2 r2 (gbest - x),
/// clamped to [-v_clamp, v_clamp]. Bit differences live in {-1, 0, 1}.
inline double velocity_step(double v, int x, int pbest, int gbest, double w, double c1, double c2,
                            double r1, double r2, double v_clamp) {
    double nv = w * v + c1 * r1 * (pbest - x) + c2 * r2 * (gbest - x);
    return std::clamp(nv, -v_clamp, v_clamp);
}

/// One position coordinate: flip iff rand_p < T(v).
inline std::uint8_t position_step(std::uint8_t x, double v, double rand_p) {
    return rand_p < transfer_vshape(v) ? static_cast<std::uint8_t>(1 - x) : x;
}

struct AdaptedParams {
    double w = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
};

inline double hamming_fraction(const std::vector<std::uint8_t>& a,
                               const std::vector<std::uint8_t>& b) {
    if (a.size() != b.size()) throw DimensionError("hamming_fraction: size mismatch");
    std::size_t diff = 0;
    for (std::size_t i = 0; i < a.size(); ++i) diff += a[i] != b[i];
    return static_cast<double>(diff) / a.size();
}

/// Inertia decays from w_initial to w_final over max_iterations, with an
/// exponent steered by the particle's normalized Hamming distance to gbest:
/// far particles (d near 1) decay fast, converged ones keep exploring.
inline AdaptedParams adapt_params(const IdpsoConfig& config, int t,
                                  const std::vector<std::uint8_t>& position,
                                  const std::vector<std::uint8_t>& gbest) {
    double d = hamming_fraction(position, gbest);
    double e = 0.5 + 1.0 / (1.0 + std::exp(-config.mu * (d - 0.5)));
    double frac = 1.0 - static_cast<double>(t) / config.max_iterations;
    frac = std::clamp(frac, 0.0, 1.0);
    AdaptedParams ap;
    ap.w = config.w_final + (config.w_initial - config.w_final) * std::pow(frac, e);
    ap.c1 = config.c1;
    ap.c2 = config.c2;
    return ap;
}

/// r1, r2 are drawn once per particle per update (scalar, not per-dimension).
inline void update_velocity(Particle& p, const std::vector<std::uint8_t>& gbest,
                            const AdaptedParams& ap, double v_clamp, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double r1 = u(rng), r2 = u(rng);
    for (std::size_t d = 0; d < p.bits.size(); ++d)
        p.velocity[d] = velocity_step(p.velocity[d], p.bits[d], p.pbest_bits[d], gbest[d], ap.w,
                                      ap.c1, ap.c2, r1, r2, v_clamp);
}

/// Applies position_step per dimension. An all-zero outcome is redrawn up to
/// 10 times, then one random bit is forced so every mask stays evaluable.
inline void update_position(Particle& p, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::uint8_t> next(p.bits.size());
    for (int attempt = 0; attempt < 10; ++attempt) {
        bool any = false;
        for (std::size_t d = 0; d < next.size(); ++d) {
            next[d] = position_step(p.bits[d], p.velocity[d], u(rng));
            any = any || next[d];
        }
        if (any) {
            p.bits = next;
            return;
        }
    }
    std::fill(next.begin(), next.end(), 0);
    std::uniform_int_distribution<std::size_t> pick(0, next.size() - 1);
    next[pick(rng)] = 1;
    p.bits = next;
}

enum class StrategyKind { nv, pv, gv };

inline const char* to_string(StrategyKind s) {
    switch (s) {
        case StrategyKind::nv: return "nv";
        case StrategyKind::pv: return "pv";
        default: return "gv";
    }
}

inline StrategyKind strategy_from_string(const std::string& s) {
    if (s == "nv") return StrategyKind::nv;
    if (s == "pv") return StrategyKind::pv;
    if (s == "gv") return StrategyKind::gv;
    throw ConfigError("unknown strategy '" + s + "' (expected nv, pv or gv)");
}

struct ArchiveEntry {
    FeatureMask mask;
    double opt_fitness = std::numeric_limits<double>::infinity();
    double sel_fitness = std::numeric_limits<double>::infinity();
};

inline bool archive_less(const ArchiveEntry& a, const ArchiveEntry& b) {
    if (a.sel_fitness != b.sel_fitness) return a.sel_fitness < b.sel_fitness;
    if (a.mask.count() != b.mask.count()) return a.mask.count() < b.mask.count();
    return a.mask < b.mask;
}

/// Merge, drop duplicate masks, sort ascending by selection fitness (ties:
/// fewer features, then lexicographic mask), keep the best `capacity`.
inline std::vector<ArchiveEntry> archive_update(std::vector<ArchiveEntry> current,
                                                const std::vector<ArchiveEntry>& incoming,
                                                std::size_t capacity) {
    if (capacity < 1) throw ConfigError("archive_update: capacity must be >= 1");
    current.insert(current.end(), incoming.begin(), incoming.end());
    std::sort(current.begin(), current.end(), archive_less);
    current.erase(std::unique(current.begin(), current.end(),
                              [](const ArchiveEntry& a, const ArchiveEntry& b) {
                                  return a.mask == b.mask;
                              }),
                  current.end());
    if (current.size() > capacity) current.resize(capacity);
    return current;
}

struct ExternalArchive {
    std::size_t capacity = 1;
    std::vector<ArchiveEntry> entries;

    explicit ExternalArchive(std::size_t cap = 1) : capacity(cap) {
        if (capacity < 1) throw ConfigError("archive capacity must be >= 1");
    }
    void update(const std::vector<ArchiveEntry>& incoming) {
        entries = archive_update(std::move(entries), incoming, capacity);
    }
    const ArchiveEntry& head() const {
        if (entries.empty()) throw Error("archive is empty");
        return entries.front();
    }
};

/// Trained models keyed by mask hex; shareable between wrapper contexts that
/// train on the same prototypes (optimization and selection evaluation do).
struct ModelCache {
    std::unordered_map<std::string, TrainedModel> models;
};

/// Everything one fitness evaluation needs: prototypes to train on, query
/// bundles to score, and caches. Fitness is the mean user EER (genuine vs
/// skilled) over the context's writers; training or metric failures map to
/// +infinity so the swarm simply routes around bad masks.
class WrapperContext {
public:
    WrapperContext(PrototypeSet prototypes, std::vector<QueryBundle> queries, KernelParams params,
                   std::uint64_t seed, std::shared_ptr<ModelCache> cache = nullptr)
        : prototypes_(std::move(prototypes)), params_(params), seed_(seed),
          cache_(cache ? std::move(cache) : std::make_shared<ModelCache>()) {
        if (prototypes_.samples.empty())
            throw ProtocolError("wrapper context: empty prototype set");
        if (queries.empty()) throw ProtocolError("wrapper context: no queries");
        dim_ = prototypes_.samples.front().u.size();
        for (const auto& s : prototypes_.samples)
            if (s.u.size() != dim_)
                throw DimensionError("wrapper context: inconsistent prototype dimensions");
        queries_.reserve(queries.size());
        for (const auto& q : queries) {
            if (q.references.empty())
                throw ProtocolError("wrapper context: query bundle without references");
            PreparedQuery pq;
            pq.writer_id = q.claimed_writer;
            pq.truth = q.truth;
            pq.dts.reserve(q.references.size());
            for (const auto& ref : q.references) {
                FeatureVector u = dichotomy_transform(q.questioned.features, ref.features);
                if (u.size() != dim_)
                    throw DimensionError("wrapper context: query dimension != prototype dimension");
                pq.dts.push_back(std::move(u));
            }
            writers_.insert(pq.writer_id);
            queries_.push_back(std::move(pq));
        }
    }

    double fitness(const FeatureMask& mask) {
        if (mask.size() != dim_)
            throw DimensionError("fitness: mask dimension " + std::to_string(mask.size()) +
                                 " != context dimension " + std::to_string(dim_));
        const std::string key = mask.to_hex();
        if (auto it = memo_.find(key); it != memo_.end()) return it->second;

        double value;
        try {
            const TrainedModel& model = model_for(key, mask);
            std::vector<ScoredQuery> scored;
            scored.reserve(queries_.size());
            for (const auto& q : queries_) {
                std::vector<double> ref_scores;
                ref_scores.reserve(q.dts.size());
                for (const auto& u : q.dts) ref_scores.push_back(signed_distance(model, u));
                scored.push_back({q.writer_id, q.truth, fuse_max(ref_scores)});
            }
            value = compute_eer_report(scored).mean_eer;
        } catch (const TrainingError&) {
            value = std::numeric_limits<double>::infinity();
        } catch (const MetricError&) {
            value = std::numeric_limits<double>::infinity();
        }
        memo_.emplace(key, value);
        return value;
    }

    double fitness(const std::vector<std::uint8_t>& bits) { return fitness(FeatureMask(bits)); }

    std::size_t dim() const { return dim_; }
    const std::set<int>& writers() const { return writers_; }
    std::size_t unique_evaluations() const { return memo_.size(); }

private:
    struct PreparedQuery {
        int writer_id = 0;
        QueryTruth truth = QueryTruth::genuine;
        std::vector<FeatureVector> dts;
    };

    const TrainedModel& model_for(const std::string& key, const FeatureMask& mask) {
        auto it = cache_->models.find(key);
        if (it == cache_->models.end())
            it = cache_->models.emplace(key, train(prototypes_, params_, mask, seed_)).first;
        return it->second;
    }

    PrototypeSet prototypes_;
    KernelParams params_;
    std::uint64_t seed_;
    std::shared_ptr<ModelCache> cache_;
    std::size_t dim_ = 0;
    std::vector<PreparedQuery> queries_;
    std::set<int> writers_;
    std::unordered_map<std::string, double> memo_;
};

struct TraceRow {
    int iteration = 0;
    double best_opt_eer = 0.0;
    double best_sel_eer = 0.0;
    double archive_best_eer = 0.0;
    double mean_popcount = 0.0;
};

struct RunResult {
    FeatureMask best_mask;
    std::vector<TraceRow> trace;
    double returned_opt_fitness = 0.0;
    double returned_sel_fitness = 0.0;
    double best_logged_sel_fitness = 0.0;
    double overfitting_gap = 0.0;
    std::vector<ArchiveEntry> archive;
};

/// One wrapper-selection run. The swarm evolves on optimization fitness only;
/// selection fitness is logged for every visited position but never fed back,
/// so for a fixed seed all three strategies share identical trajectories and
/// differ only in which visited mask they return: gbest (nv), the final
/// population's best-by-selection (pv), or the external archive head (gv).
inline RunResult run(const IdpsoConfig& config, StrategyKind strategy, WrapperContext& opt_ctx,
                     WrapperContext& sel_ctx) {
    config.validate();
    if (opt_ctx.dim() != sel_ctx.dim())
        throw DimensionError("run: optimization and selection contexts disagree on dimension");
    for (int w : opt_ctx.writers())
        if (sel_ctx.writers().count(w))
            throw ProtocolError("run: writer " + std::to_string(w) +
                                " appears in both optimization and selection contexts");

    const std::size_t dim = opt_ctx.dim();
    std::vector<Particle> swarm = init_swarm(config, dim);
    ExternalArchive archive(static_cast<std::size_t>(config.population));

    auto evaluate_and_log = [&](double& best_logged_sel) {
        std::vector<ArchiveEntry> batch;
        batch.reserve(swarm.size());
        for (Particle& p : swarm) {
            p.sel_fitness = sel_ctx.fitness(p.bits);
            best_logged_sel = std::min(best_logged_sel, p.sel_fitness);
            batch.push_back({FeatureMask(p.bits), p.opt_fitness, p.sel_fitness});
        }
        archive.update(batch);
    };

    auto mean_popcount = [&]() {
        double sum = 0.0;
        for (const Particle& p : swarm)
            sum += static_cast<double>(std::count(p.bits.begin(), p.bits.end(), 1));
        return sum / swarm.size();
    };

    std::vector<std::uint8_t> gbest_bits;
    double gbest_opt = std::numeric_limits<double>::infinity();
    double best_logged_sel = std::numeric_limits<double>::infinity();
    std::vector<TraceRow> trace;

    for (Particle& p : swarm) {
        p.opt_fitness = opt_ctx.fitness(p.bits);
        p.pbest_bits = p.bits;
        p.pbest_opt = p.opt_fitness;
        if (p.pbest_opt < gbest_opt) {
            gbest_opt = p.pbest_opt;
            gbest_bits = p.bits;
        }
    }
    if (gbest_bits.empty())
        throw TrainingError("run: every initial mask failed evaluation");
    evaluate_and_log(best_logged_sel);
    trace.push_back({0, gbest_opt, sel_ctx.fitness(gbest_bits), archive.head().sel_fitness,
                     mean_popcount()});

    for (int t = 1; t < config.max_iterations; ++t) {
        for (int i = 0; i < config.population; ++i) {
            Particle& p = swarm[i];
            auto rng = detail::make_rng(config.seed, detail::kStreamStep,
                                        static_cast<std::uint64_t>(t),
                                        static_cast<std::uint64_t>(i));
            AdaptedParams ap = adapt_params(config, t, p.bits, gbest_bits);
            update_velocity(p, gbest_bits, ap, config.v_clamp, rng);
            update_position(p, rng);
        }
        for (Particle& p : swarm) {
            p.opt_fitness = opt_ctx.fitness(p.bits);
            if (p.opt_fitness < p.pbest_opt) {
                p.pbest_opt = p.opt_fitness;
                p.pbest_bits = p.bits;
            }
        }
        for (const Particle& p : swarm) {
            if (p.pbest_opt < gbest_opt) {
                gbest_opt = p.pbest_opt;
                gbest_bits = p.pbest_bits;
            }
        }
        evaluate_and_log(best_logged_sel);
        trace.push_back({t, gbest_opt, sel_ctx.fitness(gbest_bits), archive.head().sel_fitness,
                         mean_popcount()});
    }

    RunResult result;
    result.trace = std::move(trace);
    result.archive = archive.entries;
    result.best_logged_sel_fitness = best_logged_sel;

    switch (strategy) {
        case StrategyKind::nv:
            result.best_mask = FeatureMask(gbest_bits);
            break;
        case StrategyKind::pv: {
            const Particle* best = nullptr;
            for (const Particle& p : swarm) {
                if (!best) {
                    best = &p;
                    continue;
                }
                ArchiveEntry a{FeatureMask(p.bits), p.opt_fitness, p.sel_fitness};
                ArchiveEntry b{FeatureMask(best->bits), best->opt_fitness, best->sel_fitness};
                if (archive_less(a, b)) best = &p;
            }
            result.best_mask = FeatureMask(best->bits);
            break;
        }
        case StrategyKind::gv:
            result.best_mask = archive.head().mask;
            break;
    }
    result.returned_opt_fitness = opt_ctx.fitness(result.best_mask);
    result.returned_sel_fitness = sel_ctx.fitness(result.best_mask);
    result.overfitting_gap = result.returned_sel_fitness - result.best_logged_sel_fitness;
    return result;
}

inline void write_trace_csv(const std::vector<TraceRow>& trace, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open " + path + " for writing");
    f << "iteration,best_opt_eer,best_sel_eer,archive_best_eer,mean_popcount\n";
    for (const auto& row : trace)
        f << row.iteration << ',' << detail::format_double(row.best_opt_eer) << ','
          << detail::format_double(row.best_sel_eer) << ','
          << detail::format_double(row.archive_best_eer) << ','
          << detail::format_double(row.mean_popcount) << '\n';
    if (!f) throw IoError("write failed for " + path);
}

inline void write_best_mask_json(const RunResult& result, StrategyKind strategy,
                                 const std::string& path) {
    nlohmann::json j;
    j["mask_hex"] = result.best_mask.to_hex();
    j["dim"] = result.best_mask.size();
    j["selected"] = result.best_mask.count();
    j["strategy"] = to_string(strategy);
    j["opt_eer"] = result.returned_opt_fitness;
    j["sel_eer"] = result.returned_sel_fitness;
    j["best_logged_sel_eer"] = result.best_logged_sel_fitness;
    j["overfitting_gap"] = result.overfitting_gap;
    std::ofstream f(path);
    if (!f) throw IoError("cannot open " + path + " for writing");
    f << j.dump(2) << '\n';
}

inline FeatureMask load_mask_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path);
    nlohmann::json j = nlohmann::json::parse(f);
    return FeatureMask::from_hex(j.at("mask_hex").get<std::string>(),
                                 j.at("dim").get<std::size_t>());
}

} // namespace sigwi

#endif

#ifndef SIGWI_SVM_HPP
#define SIGWI_SVM_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "sigwi/detail.hpp"
#include "sigwi/errors.hpp"
#include "sigwi/prototype_selection.hpp"
#include "sigwi/types.hpp"

#include "json.hpp"

namespace sigwi {

struct KernelParams {
    double gamma = 0.00048828125; // 2^-11
    double c = 1.0;
};

/// exp(-gamma * ||a-b||^2); 1 iff a == b.
inline double rbf_kernel(const std::vector<double>& a, const std::vector<double>& b,
                         double gamma) {
    if (a.size() != b.size())
        throw DimensionError("rbf_kernel: lengths " + std::to_string(a.size()) + " and " +
                             std::to_string(b.size()) + " differ");
    return std::exp(-gamma * detail::squared_distance(a, b));
}

/// Soft-margin RBF dichotomizer in dual form. support_vectors live in the
/// masked feature space; dual_coefficients are alpha_i * y_i. weight_norm is
/// the kernel-space ||w|| used to geometrically normalize signed distances.
struct TrainedModel {
    std::vector<std::vector<double>> support_vectors;
    std::vector<double> dual_coefficients;
    double bias = 0.0;
    double weight_norm = 1.0;
    KernelParams params;
    FeatureMask mask;
    double worst_kkt_violation = 0.0;
    int passes = 0;
};

struct TrainOptions {
    double kkt_tolerance = 1e-3; // contract bound; the solver aims far below it
    int max_pass_factor = 10;    // pass budget = max_pass_factor * n
};

namespace detail {

// Pairwise dual coordinate optimizer (SMO). Works on a precomputed kernel
// matrix for n <= kKernelMatrixCap, otherwise on lazily computed rows.
class SmoSolver {
public:
    static constexpr std::size_t kKernelMatrixCap = 4096;

    SmoSolver(const std::vector<std::vector<double>>& x, const std::vector<double>& y, double c,
              double gamma, std::uint64_t seed)
        : x_(x), y_(y), c_(c), gamma_(gamma), n_(x.size()),
          rng_(make_rng(seed, kStreamSmo)) {
        alpha_.assign(n_, 0.0);
        error_.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) error_[i] = -y_[i]; // f == 0 initially
        if (n_ <= kKernelMatrixCap) {
            matrix_.resize(n_ * n_);
            for (std::size_t i = 0; i < n_; ++i) {
                matrix_[i * n_ + i] = 1.0;
                for (std::size_t j = i + 1; j < n_; ++j) {
                    double k = std::exp(-gamma_ * squared_distance(x_[i], x_[j]));
                    matrix_[i * n_ + j] = k;
                    matrix_[j * n_ + i] = k;
                }
            }
        }
    }

    // Runs sweeps until an examine-all pass changes nothing or the pass
    // budget runs out. `eps_examine` is the KKT threshold that makes an
    // example worth optimizing.
    int solve(double eps_examine, int max_passes) {
        eps_ = eps_examine;
        int passes = 0;
        bool examine_all = true;
        while (passes < max_passes) {
            ++passes;
            std::size_t changed = 0;
            for (std::size_t i = 0; i < n_; ++i) {
                if (!examine_all && (alpha_[i] <= 0.0 || alpha_[i] >= c_)) continue;
                changed += examine(i);
            }
            if (examine_all) {
                if (changed == 0) break;
                examine_all = false;
            } else if (changed == 0) {
                examine_all = true;
            }
        }
        return passes;
    }

    const std::vector<double>& alpha() const { return alpha_; }
    double b() const { return b_; }

    double kernel(std::size_t i, std::size_t j) const {
        if (!matrix_.empty()) return matrix_[i * n_ + j];
        return std::exp(-gamma_ * squared_distance(x_[i], x_[j]));
    }

    double decision(std::size_t i) const {
        double f = b_;
        for (std::size_t j = 0; j < n_; ++j)
            if (alpha_[j] > 0.0) f += alpha_[j] * y_[j] * kernel(j, i);
        return f;
    }

    /// Recomputes the threshold from margin support vectors (average), or the
    /// midpoint of the feasible interval when every alpha sits at a bound.
    double final_bias() const {
        double sum = 0.0;
        std::size_t margin = 0;
        for (std::size_t i = 0; i < n_; ++i) {
            if (alpha_[i] > kBoundEps && alpha_[i] < c_ - kBoundEps) {
                sum += y_[i] - (decision(i) - b_);
                ++margin;
            }
        }
        if (margin > 0) return sum / margin;
        // b must satisfy y_i (g_i + b) >= 1 for alpha=0 and <= 1 for alpha=C,
        // with g_i the biasless decision value.
        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n_; ++i) {
            double g = decision(i) - b_;
            bool at_zero = alpha_[i] <= kBoundEps;
            if ((at_zero && y_[i] > 0) || (!at_zero && y_[i] < 0))
                lo = std::max(lo, y_[i] - g);
            else
                hi = std::min(hi, y_[i] - g);
        }
        if (!std::isfinite(lo)) return hi;
        if (!std::isfinite(hi)) return lo;
        return 0.5 * (lo + hi);
    }

    static constexpr double kBoundEps = 1e-12;

private:
    bool examine(std::size_t i2) {
        double y2 = y_[i2], alph2 = alpha_[i2], e2 = error_[i2];
        double r2 = e2 * y2;
        if (!((r2 < -eps_ && alph2 < c_) || (r2 > eps_ && alph2 > 0.0))) return false;

        // Heuristic 1: largest |E1 - E2| among non-bound examples.
        std::ptrdiff_t best = -1;
        double best_gap = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            if (alpha_[i] <= 0.0 || alpha_[i] >= c_) continue;
            double gap = std::abs(error_[i] - e2);
            if (gap > best_gap) {
                best_gap = gap;
                best = static_cast<std::ptrdiff_t>(i);
            }
        }
        if (best >= 0 && step(static_cast<std::size_t>(best), i2)) return true;

        // Heuristic 2: all non-bound, seeded random start.
        std::uniform_int_distribution<std::size_t> pick(0, n_ - 1);
        std::size_t start = pick(rng_);
        for (std::size_t k = 0; k < n_; ++k) {
            std::size_t i = (start + k) % n_;
            if (alpha_[i] <= 0.0 || alpha_[i] >= c_) continue;
            if (step(i, i2)) return true;
        }
        // Heuristic 3: everything.
        start = pick(rng_);
        for (std::size_t k = 0; k < n_; ++k) {
            std::size_t i = (start + k) % n_;
            if (step(i, i2)) return true;
        }
        return false;
    }

    bool step(std::size_t i1, std::size_t i2) {
        if (i1 == i2) return false;
        double alph1 = alpha_[i1], alph2 = alpha_[i2];
        double y1 = y_[i1], y2 = y_[i2];
        double e1 = error_[i1], e2 = error_[i2];
        double s = y1 * y2;

        double lo, hi;
        if (y1 != y2) {
            lo = std::max(0.0, alph2 - alph1);
            hi = std::min(c_, c_ + alph2 - alph1);
        } else {
            lo = std::max(0.0, alph1 + alph2 - c_);
            hi = std::min(c_, alph1 + alph2);
        }
        if (lo >= hi) return false;

        double k11 = kernel(i1, i1), k12 = kernel(i1, i2), k22 = kernel(i2, i2);
        double eta = k11 + k22 - 2.0 * k12;
        double a2;
        if (eta > 0.0) {
            a2 = std::clamp(alph2 + y2 * (e1 - e2) / eta, lo, hi);
        } else {
            // Flat direction: evaluate the objective at both clip ends.
            double f1 = y1 * (e1 + b_) - alph1 * k11 - s * alph2 * k12;
            double f2 = y2 * (e2 + b_) - s * alph1 * k12 - alph2 * k22;
            double l1 = alph1 + s * (alph2 - lo);
            double h1 = alph1 + s * (alph2 - hi);
            double obj_lo = l1 * f1 + lo * f2 + 0.5 * l1 * l1 * k11 + 0.5 * lo * lo * k22 +
                            s * lo * l1 * k12;
            double obj_hi = h1 * f1 + hi * f2 + 0.5 * h1 * h1 * k11 + 0.5 * hi * hi * k22 +
                            s * hi * h1 * k12;
            if (obj_lo < obj_hi - 1e-12) a2 = lo;
            else if (obj_hi < obj_lo - 1e-12) a2 = hi;
            else return false;
        }
        if (std::abs(a2 - alph2) < 1e-12 * (a2 + alph2 + 1e-12)) return false;

        double a1 = alph1 + s * (alph2 - a2);
        if (a1 < 0.0) a1 = 0.0;
        else if (a1 > c_) a1 = c_;

        double d1 = y1 * (a1 - alph1), d2 = y2 * (a2 - alph2);
        double b1 = b_ - e1 - d1 * k11 - d2 * k12;
        double b2 = b_ - e2 - d1 * k12 - d2 * k22;
        double b_new;
        if (a1 > kBoundEps && a1 < c_ - kBoundEps) b_new = b1;
        else if (a2 > kBoundEps && a2 < c_ - kBoundEps) b_new = b2;
        else b_new = 0.5 * (b1 + b2);

        if (!matrix_.empty()) {
            const double* row1 = &matrix_[i1 * n_];
            const double* row2 = &matrix_[i2 * n_];
            double db = b_new - b_;
            for (std::size_t i = 0; i < n_; ++i)
                error_[i] += d1 * row1[i] + d2 * row2[i] + db;
        } else {
            double db = b_new - b_;
            for (std::size_t i = 0; i < n_; ++i)
                error_[i] += d1 * kernel(i1, i) + d2 * kernel(i2, i) + db;
        }
        alpha_[i1] = a1;
        alpha_[i2] = a2;
        b_ = b_new;
        return true;
    }

    const std::vector<std::vector<double>>& x_;
    const std::vector<double>& y_;
    double c_;
    double gamma_;
    std::size_t n_;
    std::mt19937_64 rng_;
    double b_ = 0.0;
    double eps_ = 1e-3;
    std::vector<double> alpha_;
    std::vector<double> error_; // f(x_i) - y_i under the running bias
    std::vector<double> matrix_;
};

} // namespace detail

/// Trains the writer-independent dichotomizer on the masked prototype set.
/// within_positive maps to +1, between_negative to -1. Throws TrainingError
/// when only one class is present and ConvergenceError when the solver
/// cannot push KKT violations below options.kkt_tolerance (or the kernel
/// geometry degenerates, e.g. gamma -> 0).
inline TrainedModel train(const PrototypeSet& samples, const KernelParams& params,
                          const FeatureMask& mask, std::uint64_t seed,
                          const TrainOptions& options = {}) {
    if (samples.samples.empty()) throw TrainingError("train: empty prototype set");
    if (mask.count() == 0) throw InvalidMaskError("train: all-zero mask");
    if (params.gamma <= 0.0 || params.c <= 0.0)
        throw ConfigError("train: gamma and c must be positive");

    const std::size_t n = samples.samples.size();
    std::vector<std::vector<double>> x;
    x.reserve(n);
    std::vector<double> y;
    y.reserve(n);
    bool has_pos = false, has_neg = false;
    for (const auto& s : samples.samples) {
        x.push_back(apply_mask(s.u, mask));
        bool pos = s.label == SampleLabel::within_positive;
        y.push_back(pos ? 1.0 : -1.0);
        (pos ? has_pos : has_neg) = true;
    }
    if (!has_pos || !has_neg) throw TrainingError("train: single-class prototype set");

    detail::SmoSolver solver(x, y, params.c, params.gamma, seed);
    const double eps_target = std::min(options.kkt_tolerance, 1e-7);
    const int max_passes = std::max(1, options.max_pass_factor * static_cast<int>(n));
    int passes = solver.solve(eps_target, max_passes);

    TrainedModel model;
    model.params = params;
    model.mask = mask;
    model.passes = passes;
    model.bias = solver.final_bias();

    const auto& alpha = solver.alpha();
    std::vector<std::size_t> sv;
    for (std::size_t i = 0; i < n; ++i)
        if (alpha[i] > detail::SmoSolver::kBoundEps) sv.push_back(i);

    // Worst KKT violation under the final bias.
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double g = model.bias;
        for (std::size_t j : sv) g += alpha[j] * y[j] * solver.kernel(j, i);
        double m = y[i] * g;
        double v;
        if (alpha[i] <= detail::SmoSolver::kBoundEps) v = std::max(0.0, 1.0 - m);
        else if (alpha[i] >= params.c - detail::SmoSolver::kBoundEps) v = std::max(0.0, m - 1.0);
        else v = std::abs(m - 1.0);
        worst = std::max(worst, v);
    }
    model.worst_kkt_violation = worst;
    if (worst > options.kkt_tolerance)
        throw ConvergenceError("train: no convergence after " + std::to_string(passes) +
                               " passes, worst KKT violation " + detail::format_double(worst));

    double norm_sq = 0.0;
    for (std::size_t a = 0; a < sv.size(); ++a)
        for (std::size_t b = 0; b < sv.size(); ++b)
            norm_sq += alpha[sv[a]] * y[sv[a]] * alpha[sv[b]] * y[sv[b]] *
                       solver.kernel(sv[a], sv[b]);
    if (norm_sq <= 1e-12)
        throw ConvergenceError("train: degenerate kernel-space weight norm " +
                               detail::format_double(norm_sq));
    model.weight_norm = std::sqrt(norm_sq);

    model.support_vectors.reserve(sv.size());
    model.dual_coefficients.reserve(sv.size());
    for (std::size_t i : sv) {
        model.support_vectors.push_back(x[i]);
        model.dual_coefficients.push_back(alpha[i] * y[i]);
    }
    return model;
}

/// Geometrically normalized signed distance to the hyperplane. `u` is a
/// full-length dissimilarity vector; the model's mask is applied internally.
/// Positive means the within-class side.
inline double signed_distance(const TrainedModel& model, const FeatureVector& u) {
    if (u.size() != model.mask.size())
        throw DimensionError("signed_distance: input length " + std::to_string(u.size()) +
                             " != model dimension " + std::to_string(model.mask.size()));
    FeatureVector mu = apply_mask(u, model.mask);
    double f = model.bias;
    for (std::size_t i = 0; i < model.support_vectors.size(); ++i)
        f += model.dual_coefficients[i] *
             std::exp(-model.params.gamma * detail::squared_distance(model.support_vectors[i], mu));
    return f / model.weight_norm;
}

inline void save_model_json(const TrainedModel& model, const std::string& path) {
    nlohmann::json j;
    j["support_vectors"] = model.support_vectors;
    j["dual_coefficients"] = model.dual_coefficients;
    j["bias"] = model.bias;
    j["weight_norm"] = model.weight_norm;
    j["gamma"] = model.params.gamma;
    j["c"] = model.params.c;
    j["mask_hex"] = model.mask.to_hex();
    j["mask_dim"] = model.mask.size();
    std::ofstream f(path);
    if (!f) throw IoError("cannot open " + path);
    f << j.dump(2) << '\n';
}

inline TrainedModel load_model_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path);
    nlohmann::json j = nlohmann::json::parse(f);
    TrainedModel model;
    model.support_vectors = j.at("support_vectors").get<std::vector<std::vector<double>>>();
    model.dual_coefficients = j.at("dual_coefficients").get<std::vector<double>>();
    model.bias = j.at("bias").get<double>();
    model.weight_norm = j.at("weight_norm").get<double>();
    model.params.gamma = j.at("gamma").get<double>();
    model.params.c = j.at("c").get<double>();
    model.mask = FeatureMask::from_hex(j.at("mask_hex").get<std::string>(),
                                       j.at("mask_dim").get<std::size_t>());
    return model;
}

} // namespace sigwi

#endif

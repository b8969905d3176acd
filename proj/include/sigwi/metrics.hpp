#ifndef SIGWI_METRICS_HPP
#define SIGWI_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sigwi/detail.hpp"
#include "sigwi/dichotomy.hpp"
#include "sigwi/errors.hpp"

namespace sigwi {

/// A fused signed distance for one questioned signature.
struct ScoredQuery {
    int writer_id = 0;
    QueryTruth truth = QueryTruth::genuine;
    double score = 0.0;
};

enum class NegativeClass { skilled_only, random_only };

struct FarFrr {
    double far = 0.0;
    double frr = 0.0;
};

/// Decision rule: accept iff score >= threshold. FRR over genuine queries,
/// FAR over the chosen negative class.
inline FarFrr far_frr(const std::vector<ScoredQuery>& scores, double threshold,
                      NegativeClass negatives) {
    const QueryTruth neg =
        negatives == NegativeClass::skilled_only ? QueryTruth::skilled : QueryTruth::random;
    std::size_t n_gen = 0, rejected = 0, n_neg = 0, accepted = 0;
    for (const auto& q : scores) {
        if (q.truth == QueryTruth::genuine) {
            ++n_gen;
            if (q.score < threshold) ++rejected;
        } else if (q.truth == neg) {
            ++n_neg;
            if (q.score >= threshold) ++accepted;
        }
    }
    if (n_gen == 0) throw MetricError("far_frr: no genuine queries");
    if (n_neg == 0) throw MetricError("far_frr: no negative-class queries");
    return {static_cast<double>(accepted) / n_neg, static_cast<double>(rejected) / n_gen};
}

struct UserEer {
    double eer = 0.0;
    double threshold = 0.0;
};

/// User-threshold EER for one writer, genuine vs. skilled only (random-truth
/// entries are ignored). Candidate thresholds are all distinct scores plus
/// midpoints of consecutive distinct scores; the winner minimizes |FAR-FRR|,
/// ties broken by smaller (FAR+FRR)/2, then smaller threshold. EER is
/// (FAR+FRR)/2 at the winner.
inline UserEer user_eer(const std::vector<ScoredQuery>& writer_scores) {
    std::vector<double> genuine, skilled;
    for (const auto& q : writer_scores) {
        if (q.truth == QueryTruth::genuine) genuine.push_back(q.score);
        else if (q.truth == QueryTruth::skilled) skilled.push_back(q.score);
    }
    if (genuine.empty()) throw MetricError("user_eer: no genuine queries for writer");
    if (skilled.empty()) throw MetricError("user_eer: no skilled queries for writer");

    std::vector<double> all = genuine;
    all.insert(all.end(), skilled.begin(), skilled.end());
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());

    std::vector<double> candidates;
    candidates.reserve(2 * all.size());
    for (std::size_t i = 0; i < all.size(); ++i) {
        candidates.push_back(all[i]);
        if (i + 1 < all.size()) candidates.push_back(0.5 * (all[i] + all[i + 1]));
    }

    std::sort(genuine.begin(), genuine.end());
    std::sort(skilled.begin(), skilled.end());

    UserEer best;
    double best_gap = 2.0, best_avg = 2.0;
    bool first = true;
    for (double t : candidates) {
        // genuine < t are rejected; skilled >= t are accepted
        auto g_rej = std::lower_bound(genuine.begin(), genuine.end(), t) - genuine.begin();
        auto s_acc = skilled.end() - std::lower_bound(skilled.begin(), skilled.end(), t);
        double frr = static_cast<double>(g_rej) / genuine.size();
        double far = static_cast<double>(s_acc) / skilled.size();
        double gap = std::abs(far - frr);
        double avg = 0.5 * (far + frr);
        if (first || gap < best_gap || (gap == best_gap && avg < best_avg) ||
            (gap == best_gap && avg == best_avg && t < best.threshold)) {
            best = {avg, t};
            best_gap = gap;
            best_avg = avg;
            first = false;
        }
    }
    return best;
}

struct EerReport {
    std::map<int, double> per_writer_eer;
    double mean_eer = 0.0;
    double std_eer = 0.0; // population standard deviation
    std::map<int, double> thresholds;
};

inline EerReport aggregate_eer(const std::vector<std::pair<int, double>>& per_writer) {
    if (per_writer.empty()) throw MetricError("aggregate_eer: no writers");
    EerReport rep;
    double sum = 0.0;
    for (const auto& [w, e] : per_writer) {
        rep.per_writer_eer[w] = e;
        sum += e;
    }
    rep.mean_eer = sum / per_writer.size();
    double sq = 0.0;
    for (const auto& [w, e] : per_writer) sq += (e - rep.mean_eer) * (e - rep.mean_eer);
    rep.std_eer = std::sqrt(sq / per_writer.size());
    return rep;
}

/// Groups scored queries by writer, computes each user EER, aggregates.
inline EerReport compute_eer_report(const std::vector<ScoredQuery>& scores) {
    std::map<int, std::vector<ScoredQuery>> by_writer;
    for (const auto& q : scores) by_writer[q.writer_id].push_back(q);
    std::vector<std::pair<int, double>> per_writer;
    std::map<int, double> thresholds;
    for (const auto& [w, qs] : by_writer) {
        UserEer u = user_eer(qs);
        per_writer.emplace_back(w, u.eer);
        thresholds[w] = u.threshold;
    }
    EerReport rep = aggregate_eer(per_writer);
    rep.thresholds = std::move(thresholds);
    return rep;
}

inline void write_eer_report_csv(const EerReport& rep, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open " + path);
    f << "writer_id,eer,threshold\n";
    for (const auto& [w, e] : rep.per_writer_eer) {
        auto it = rep.thresholds.find(w);
        f << w << ',' << detail::format_double(e) << ','
          << (it == rep.thresholds.end() ? "" : detail::format_double(it->second)) << '\n';
    }
    f << "mean," << detail::format_double(rep.mean_eer) << ",\n";
    f << "std," << detail::format_double(rep.std_eer) << ",\n";
}

inline EerReport read_eer_report_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(f, line) || detail::trim(line) != "writer_id,eer,threshold")
        throw IoError(path + ": not an eer report");
    EerReport rep;
    std::vector<std::pair<int, double>> per_writer;
    bool have_mean = false;
    while (std::getline(f, line)) {
        auto fields = detail::split_csv_line(line);
        if (fields.size() < 2 || detail::trim(fields[0]).empty()) continue;
        if (fields[0] == "mean") {
            rep.mean_eer = std::stod(fields[1]);
            have_mean = true;
        } else if (fields[0] == "std") {
            rep.std_eer = std::stod(fields[1]);
        } else {
            int w = std::stoi(fields[0]);
            per_writer.emplace_back(w, std::stod(fields[1]));
            if (fields.size() > 2 && !detail::trim(fields[2]).empty())
                rep.thresholds[w] = std::stod(fields[2]);
        }
    }
    if (per_writer.empty()) throw IoError(path + ": empty eer report");
    for (const auto& [w, e] : per_writer) rep.per_writer_eer[w] = e;
    if (!have_mean) {
        EerReport agg = aggregate_eer(per_writer);
        rep.mean_eer = agg.mean_eer;
        rep.std_eer = agg.std_eer;
    }
    return rep;
}

} // namespace sigwi

#endif

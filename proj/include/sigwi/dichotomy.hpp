#ifndef SIGWI_DICHOTOMY_HPP
#define SIGWI_DICHOTOMY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "sigwi/detail.hpp"
#include "sigwi/errors.hpp"
#include "sigwi/types.hpp"

namespace sigwi {

enum class SampleLabel { within_positive, between_negative };

/// A dissimilarity-space point: elementwise |difference| of a questioned and
/// a reference feature vector, labeled within (same writer, both genuine) or
/// between (anything else).
struct DissimilaritySample {
    std::vector<double> u;
    SampleLabel label = SampleLabel::between_negative;
    int questioned_writer = 0;
    int reference_writer = 0;
};

enum class QueryTruth { genuine, skilled, random };

inline std::string to_string(QueryTruth t) {
    switch (t) {
        case QueryTruth::genuine: return "genuine";
        case QueryTruth::skilled: return "skilled";
        case QueryTruth::random: return "random";
    }
    return "?";
}

/// One questioned signature plus the claimed writer's reference signatures.
/// Scoring compares the questioned vector against every reference and fuses.
struct QueryBundle {
    SignatureRecord questioned;
    std::vector<SignatureRecord> references;
    int claimed_writer = 0;
    QueryTruth truth = QueryTruth::genuine;
};

/// Elementwise absolute difference of two equal-length feature vectors.
inline std::vector<double> dichotomy_transform(const FeatureVector& xq, const FeatureVector& xr) {
    if (xq.size() != xr.size())
        throw DimensionError("dichotomy_transform: lengths " + std::to_string(xq.size()) +
                             " and " + std::to_string(xr.size()) + " differ");
    std::vector<double> u(xq.size());
    for (std::size_t i = 0; i < xq.size(); ++i) u[i] = std::abs(xq[i] - xr[i]);
    return u;
}

/// Builds the dissimilarity-space training set for one split part.
///
/// Per writer: `genuine_per_writer` seeded questioned genuines paired against
/// the writer's remaining genuine records (the references) give the positive
/// samples; `random_forgeries_per_writer` genuine signatures of other writers
/// (one questioned signature per distinct donor, donors repeating only when
/// the part is too small) paired against the same references give the
/// negatives. Skilled forgeries are never used here.
inline std::vector<DissimilaritySample> build_training_set(const WriterSet& part,
                                                           int genuine_per_writer,
                                                           int random_forgeries_per_writer,
                                                           std::uint64_t seed) {
    if (genuine_per_writer < 1) throw ConfigError("build_training_set: genuine_per_writer < 1");
    if (random_forgeries_per_writer < 0)
        throw ConfigError("build_training_set: negative random_forgeries_per_writer");

    const std::vector<int> ids = part.writer_ids();
    std::vector<DissimilaritySample> out;

    for (int w : ids) {
        auto genuines = part.genuines_of(w);
        if (genuines.size() < static_cast<std::size_t>(genuine_per_writer) + 1)
            throw ConfigError("build_training_set: writer " + std::to_string(w) + " has " +
                              std::to_string(genuines.size()) + " genuine signatures, needs >= " +
                              std::to_string(genuine_per_writer + 1));

        auto rng = detail::make_rng(seed, detail::kStreamTrainingSet, static_cast<std::uint64_t>(w));
        auto questioned_idx = detail::sample_without_replacement(
            genuines.size(), static_cast<std::size_t>(genuine_per_writer), rng);
        std::vector<bool> is_questioned(genuines.size(), false);
        for (auto i : questioned_idx) is_questioned[i] = true;

        std::vector<const SignatureRecord*> references;
        for (std::size_t i = 0; i < genuines.size(); ++i)
            if (!is_questioned[i]) references.push_back(genuines[i]);

        for (auto qi : questioned_idx)
            for (const auto* ref : references)
                out.push_back({dichotomy_transform(genuines[qi]->features, ref->features),
                               SampleLabel::within_positive, w, w});

        if (random_forgeries_per_writer == 0) continue;

        std::vector<int> donors;
        for (int d : ids)
            if (d != w) donors.push_back(d);
        if (donors.empty())
            throw ConfigError("build_training_set: no donor writers for random forgeries");

        auto donor_order = detail::sample_without_replacement(
            donors.size(), std::min<std::size_t>(donors.size(), random_forgeries_per_writer), rng);
        for (int k = 0; k < random_forgeries_per_writer; ++k) {
            int donor = donors[donor_order[k % donor_order.size()]];
            auto donor_genuines = part.genuines_of(donor);
            std::uniform_int_distribution<std::size_t> pick(0, donor_genuines.size() - 1);
            const SignatureRecord* forgery = donor_genuines[pick(rng)];
            for (const auto* ref : references)
                out.push_back({dichotomy_transform(forgery->features, ref->features),
                               SampleLabel::between_negative, donor, w});
        }
    }
    return out;
}

/// Builds the questioned-signature bundles used by the wrapper fitness and
/// by exploitation evaluation: per writer, `refs` references fixed once, then
/// `genuine_q` genuine and `skilled_q` skilled questioned signatures, each
/// bundled with those references. References never overlap the questioned
/// genuines.
inline std::vector<QueryBundle> build_optimization_queries(const WriterSet& part, int genuine_q,
                                                           int skilled_q, int refs,
                                                           std::uint64_t seed) {
    if (refs < 1) throw ConfigError("build_optimization_queries: refs < 1");
    if (genuine_q < 0 || skilled_q < 0)
        throw ConfigError("build_optimization_queries: negative questioned count");

    std::vector<QueryBundle> out;
    for (int w : part.writer_ids()) {
        auto genuines = part.genuines_of(w);
        auto skilled = part.skilled_of(w);
        if (genuines.size() < static_cast<std::size_t>(refs + genuine_q))
            throw ProtocolError("build_optimization_queries: writer " + std::to_string(w) +
                                " has " + std::to_string(genuines.size()) +
                                " genuine signatures; " + std::to_string(refs) + " references + " +
                                std::to_string(genuine_q) +
                                " questioned genuines would have to overlap");
        if (skilled.size() < static_cast<std::size_t>(skilled_q))
            throw ConfigError("build_optimization_queries: writer " + std::to_string(w) +
                              " has " + std::to_string(skilled.size()) +
                              " skilled forgeries, needs >= " + std::to_string(skilled_q));

        auto rng = detail::make_rng(seed, detail::kStreamQueries, static_cast<std::uint64_t>(w));
        auto ref_idx = detail::sample_without_replacement(genuines.size(),
                                                          static_cast<std::size_t>(refs), rng);
        std::vector<bool> used(genuines.size(), false);
        std::vector<SignatureRecord> references;
        for (auto i : ref_idx) {
            used[i] = true;
            references.push_back(*genuines[i]);
        }

        std::vector<std::size_t> remaining;
        for (std::size_t i = 0; i < genuines.size(); ++i)
            if (!used[i]) remaining.push_back(i);
        auto q_pick = detail::sample_without_replacement(
            remaining.size(), static_cast<std::size_t>(genuine_q), rng);
        for (auto pi : q_pick)
            out.push_back({*genuines[remaining[pi]], references, w, QueryTruth::genuine});

        auto s_pick = detail::sample_without_replacement(skilled.size(),
                                                         static_cast<std::size_t>(skilled_q), rng);
        for (auto si : s_pick)
            out.push_back({*skilled[si], references, w, QueryTruth::skilled});
    }
    return out;
}

/// MAX partial-decision fusion over per-reference signed distances.
inline double fuse_max(const std::vector<double>& scores) {
    if (scores.empty()) throw Error("fuse_max: empty score list");
    return *std::max_element(scores.begin(), scores.end());
}

/// Audit dump. Samples get their label column, bundles one row per reference
/// with the truth column; unused columns stay empty.
inline void write_pairs_csv(const std::vector<DissimilaritySample>& samples,
                            const std::vector<QueryBundle>& bundles, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open " + path);
    f << "questioned_writer,reference_writer,truth,label\n";
    for (const auto& s : samples)
        f << s.questioned_writer << ',' << s.reference_writer << ",,"
          << (s.label == SampleLabel::within_positive ? "within_positive" : "between_negative")
          << '\n';
    for (const auto& b : bundles)
        for (const auto& r : b.references)
            f << b.questioned.writer_id << ',' << r.writer_id << ',' << to_string(b.truth)
              << ",\n";
}

} // namespace sigwi

#endif

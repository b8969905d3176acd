#ifndef SIGWI_PROTOTYPE_SELECTION_HPP
#define SIGWI_PROTOTYPE_SELECTION_HPP

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "sigwi/detail.hpp"
#include "sigwi/dichotomy.hpp"
#include "sigwi/errors.hpp"

#include "json.hpp"

namespace sigwi {

/// Condensed subset of a dissimilarity-space training set. origin_indices
/// point back into the input list, ascending.
struct PrototypeSet {
    std::vector<DissimilaritySample> samples;
    std::vector<std::size_t> origin_indices;
};

namespace detail {

/// 1-NN by squared Euclidean distance over the kept indices; distance ties
/// go to the lower origin index.
inline std::size_t nearest_kept(const std::vector<DissimilaritySample>& train,
                                const std::vector<std::size_t>& kept,
                                const std::vector<double>& u) {
    std::size_t best = kept.front();
    double best_d = squared_distance(train[best].u, u);
    for (std::size_t k = 1; k < kept.size(); ++k) {
        double d = squared_distance(train[kept[k]].u, u);
        if (d < best_d || (d == best_d && kept[k] < best)) {
            best = kept[k];
            best_d = d;
        }
    }
    return best;
}

} // namespace detail

/// Condensed Nearest Neighbors: seed with one sample per class, sweep the
/// training set in a seeded order, add every 1-NN-misclassified sample, and
/// stop when a full pass adds nothing. The result classifies the entire
/// input correctly under 1-NN.
inline PrototypeSet condense(const std::vector<DissimilaritySample>& train, std::uint64_t seed) {
    if (train.empty()) throw ConfigError("condense: empty training set");
    const std::size_t n = train.size();

    auto rng = detail::make_rng(seed, detail::kStreamCondense);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<bool> in_set(n, false);
    std::vector<std::size_t> kept;
    bool have_pos = false, have_neg = false;
    for (std::size_t i : order) {
        bool pos = train[i].label == SampleLabel::within_positive;
        if ((pos && !have_pos) || (!pos && !have_neg)) {
            in_set[i] = true;
            kept.push_back(i);
            (pos ? have_pos : have_neg) = true;
        }
        if (have_pos && have_neg) break;
    }

    bool added = true;
    while (added) {
        added = false;
        for (std::size_t i : order) {
            if (in_set[i]) continue;
            std::size_t nn = detail::nearest_kept(train, kept, train[i].u);
            if (train[nn].label != train[i].label) {
                in_set[i] = true;
                kept.push_back(i);
                added = true;
            }
        }
    }

    std::sort(kept.begin(), kept.end());
    PrototypeSet out;
    out.origin_indices = kept;
    out.samples.reserve(kept.size());
    for (std::size_t i : kept) out.samples.push_back(train[i]);
    return out;
}

/// Reproducibility audit: the kept indices and resulting class balance.
inline void write_prototypes_json(const PrototypeSet& set, const std::string& path) {
    nlohmann::json j;
    j["kept_indices"] = set.origin_indices;
    std::size_t positives = 0;
    for (const auto& s : set.samples)
        if (s.label == SampleLabel::within_positive) ++positives;
    j["size"] = set.samples.size();
    j["positives"] = positives;
    j["negatives"] = set.samples.size() - positives;
    std::ofstream f(path);
    if (!f) throw IoError("cannot open " + path);
    f << j.dump(2) << '\n';
}

} // namespace sigwi

#endif

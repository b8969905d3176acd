#ifndef SIGWI_SYNTHETIC_HPP
#define SIGWI_SYNTHETIC_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "sigwi/detail.hpp"
#include "sigwi/errors.hpp"
#include "sigwi/types.hpp"

#include "json.hpp"

namespace sigwi {

/// What the non-informative dimensions carry: writer-independent noise, or
/// exact copies of informative dimensions (useful for redundancy studies).
enum class RedundantKind { pure_noise, duplicate_of_informative };

inline const char* to_string(RedundantKind k) {
    return k == RedundantKind::pure_noise ? "pure_noise" : "duplicate_of_informative";
}

inline RedundantKind redundant_kind_from_string(const std::string& s) {
    if (s == "pure_noise") return RedundantKind::pure_noise;
    if (s == "duplicate_of_informative") return RedundantKind::duplicate_of_informative;
    throw ConfigError("unknown redundant_kind '" + s + "'");
}

struct GeneratorSpec {
    int n_writers = 70;
    int genuine_per_writer = 20;
    int skilled_per_writer = 10;
    std::size_t dim = 64;
    std::size_t d_informative = 16;
    double writer_spread = 1.0;   // within-writer noise std on informative dims
    double forgery_offset = 6.0;  // skilled-forgery displacement, in spreads
    RedundantKind redundant_kind = RedundantKind::pure_noise;
    std::uint64_t seed = 1;

    void validate() const {
        if (n_writers < 1) throw ConfigError("n_writers must be >= 1");
        if (genuine_per_writer < 1) throw ConfigError("genuine_per_writer must be >= 1");
        if (skilled_per_writer < 0) throw ConfigError("skilled_per_writer must be >= 0");
        if (dim < 1) throw ConfigError("dim must be >= 1");
        if (d_informative < 1 || d_informative > dim)
            throw ConfigError("d_informative must be in [1, dim]");
        if (writer_spread <= 0.0) throw ConfigError("writer_spread must be positive");
        if (forgery_offset < 0.0) throw ConfigError("forgery_offset must be >= 0");
    }
};

struct GeneratedDataset {
    WriterSet writers;
    std::vector<std::size_t> informative_dims;           // ascending
    std::map<std::size_t, std::size_t> duplicate_source; // redundant dim -> informative dim
    GeneratorSpec spec;
};

namespace detail {

struct DimLayout {
    std::vector<std::size_t> informative;
    std::map<std::size_t, std::size_t> duplicate_source;
};

inline DimLayout make_layout(const GeneratorSpec& spec, std::mt19937_64& rng) {
    DimLayout layout;
    layout.informative = sample_without_replacement(spec.dim, spec.d_informative, rng);
    std::sort(layout.informative.begin(), layout.informative.end());
    if (spec.redundant_kind == RedundantKind::duplicate_of_informative) {
        std::uniform_int_distribution<std::size_t> pick(0, spec.d_informative - 1);
        for (std::size_t d = 0; d < spec.dim; ++d) {
            if (std::binary_search(layout.informative.begin(), layout.informative.end(), d))
                continue;
            layout.duplicate_source[d] = layout.informative[pick(rng)];
        }
    }
    return layout;
}

// Writer centers sit far apart (8 spreads per dim) so that at the default
// kernel scale the between-writer dissimilarities land in a useful range;
// redundant noise dims use 2 spreads so they dilute rather than dominate.
inline WriterSet synthesize(const GeneratorSpec& spec, const DimLayout& layout, int id_offset,
                            std::uint64_t stream_b) {
    std::mt19937_64 rng = make_rng(spec.seed, kStreamGenerator, 0, stream_b);
    std::normal_distribution<double> unit(0.0, 1.0);
    const double center_std = 8.0 * spec.writer_spread;
    const double noise_std = 2.0 * spec.writer_spread;
    const std::size_t d_inf = layout.informative.size();

    std::vector<char> is_informative(spec.dim, 0);
    for (std::size_t d : layout.informative) is_informative[d] = 1;

    WriterSet ws;
    for (int w = 1; w <= spec.n_writers; ++w) {
        std::vector<double> center(d_inf);
        for (double& c : center) c = center_std * unit(rng);

        auto make_record = [&](SignatureKind kind, const std::vector<double>& shift) {
            SignatureRecord rec;
            rec.writer_id = w + id_offset;
            rec.kind = kind;
            rec.features.assign(spec.dim, 0.0);
            std::size_t k = 0;
            for (std::size_t d : layout.informative) {
                rec.features[d] = center[k] + shift[k] + spec.writer_spread * unit(rng);
                ++k;
            }
            for (std::size_t d = 0; d < spec.dim; ++d) {
                if (is_informative[d]) continue;
                auto it = layout.duplicate_source.find(d);
                if (it != layout.duplicate_source.end())
                    rec.features[d] = rec.features[it->second];
                else
                    rec.features[d] = noise_std * unit(rng);
            }
            return rec;
        };

        const std::vector<double> no_shift(d_inf, 0.0);
        for (int i = 0; i < spec.genuine_per_writer; ++i)
            ws.add(make_record(SignatureKind::genuine, no_shift));
        for (int i = 0; i < spec.skilled_per_writer; ++i) {
            // Each forgery misses the writer's style in its own direction.
            std::vector<double> dir(d_inf);
            double norm = 0.0;
            do {
                norm = 0.0;
                for (double& v : dir) {
                    v = unit(rng);
                    norm += v * v;
                }
                norm = std::sqrt(norm);
            } while (norm < 1e-12);
            const double scale = spec.forgery_offset * spec.writer_spread / norm;
            std::vector<double> shift(d_inf);
            for (std::size_t k = 0; k < d_inf; ++k) shift[k] = dir[k] * scale;
            ws.add(make_record(SignatureKind::skilled_forgery, shift));
        }
    }
    return ws;
}

} // namespace detail

inline GeneratedDataset generate(const GeneratorSpec& spec) {
    spec.validate();
    std::mt19937_64 layout_rng = detail::make_rng(spec.seed, detail::kStreamGenerator, 1, 0);
    detail::DimLayout layout = detail::make_layout(spec, layout_rng);
    GeneratedDataset ds;
    ds.writers = detail::synthesize(spec, layout, 0, 0);
    ds.informative_dims = layout.informative;
    ds.duplicate_source = layout.duplicate_source;
    ds.spec = spec;
    return ds;
}

/// Two populations with the same informative-dimension layout but independent
/// writers; B's ids continue after A's so the pair can never collide.
inline std::pair<GeneratedDataset, GeneratedDataset> generate_transfer_pair(
    const GeneratorSpec& a, const GeneratorSpec& b) {
    a.validate();
    b.validate();
    if (a.dim != b.dim || a.d_informative != b.d_informative ||
        a.redundant_kind != b.redundant_kind)
        throw ConfigError("transfer pair requires matching dim, d_informative and redundant_kind");
    std::mt19937_64 layout_rng = detail::make_rng(a.seed, detail::kStreamGenerator, 1, 0);
    detail::DimLayout layout = detail::make_layout(a, layout_rng);

    GeneratedDataset da;
    da.writers = detail::synthesize(a, layout, 0, 0);
    da.informative_dims = layout.informative;
    da.duplicate_source = layout.duplicate_source;
    da.spec = a;

    GeneratedDataset db;
    db.writers = detail::synthesize(b, layout, a.n_writers, 1);
    db.informative_dims = layout.informative;
    db.duplicate_source = layout.duplicate_source;
    db.spec = b;
    return {std::move(da), std::move(db)};
}

struct SplitCounts {
    int train = 20;
    int validation = 10;
    int optimization = 10;
    int selection = 10;
    int exploitation = 20;

    int total() const { return train + validation + optimization + selection + exploitation; }
};

/// Partitions writers into the five disjoint roles by a seeded shuffle.
/// Counts must use every writer exactly once.
inline EvalSplit split(const WriterSet& ws, const SplitCounts& counts, std::uint64_t seed) {
    if (counts.train < 1 || counts.validation < 0 || counts.optimization < 1 ||
        counts.selection < 1 || counts.exploitation < 1)
        throw ConfigError("split: train/optimization/selection/exploitation need >= 1 writer");
    std::vector<int> ids = ws.writer_ids();
    if (counts.total() != static_cast<int>(ids.size()))
        throw ConfigError("split: counts sum to " + std::to_string(counts.total()) + " but " +
                          std::to_string(ids.size()) + " writers are present");
    std::mt19937_64 rng = detail::make_rng(seed, detail::kStreamSplit);
    std::shuffle(ids.begin(), ids.end(), rng);

    EvalSplit out;
    std::size_t pos = 0;
    auto take = [&](int count, WriterSet& target) {
        for (int i = 0; i < count; ++i, ++pos) {
            for (const auto& rec : ws.records_of(ids[pos])) target.add(rec);
        }
    };
    take(counts.train, out.train);
    take(counts.validation, out.validation);
    take(counts.optimization, out.optimization);
    take(counts.selection, out.selection);
    take(counts.exploitation, out.exploitation);
    return out;
}

inline void write_manifest(const GeneratedDataset& ds, const std::string& path) {
    nlohmann::json j;
    j["n_writers"] = ds.spec.n_writers;
    j["genuine_per_writer"] = ds.spec.genuine_per_writer;
    j["skilled_per_writer"] = ds.spec.skilled_per_writer;
    j["dim"] = ds.spec.dim;
    j["d_informative"] = ds.spec.d_informative;
    j["writer_spread"] = ds.spec.writer_spread;
    j["forgery_offset"] = ds.spec.forgery_offset;
    j["redundant_kind"] = to_string(ds.spec.redundant_kind);
    j["seed"] = ds.spec.seed;
    j["informative_dims"] = ds.informative_dims;
    nlohmann::json dup = nlohmann::json::object();
    for (const auto& [d, src] : ds.duplicate_source) dup[std::to_string(d)] = src;
    j["duplicate_source"] = dup;
    std::ofstream f(path);
    if (!f) throw IoError("cannot open " + path + " for writing");
    f << j.dump(2) << '\n';
}

inline GeneratorSpec read_manifest_spec(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path);
    nlohmann::json j = nlohmann::json::parse(f);
    GeneratorSpec spec;
    spec.n_writers = j.at("n_writers").get<int>();
    spec.genuine_per_writer = j.at("genuine_per_writer").get<int>();
    spec.skilled_per_writer = j.at("skilled_per_writer").get<int>();
    spec.dim = j.at("dim").get<std::size_t>();
    spec.d_informative = j.at("d_informative").get<std::size_t>();
    spec.writer_spread = j.at("writer_spread").get<double>();
    spec.forgery_offset = j.at("forgery_offset").get<double>();
    spec.redundant_kind = redundant_kind_from_string(j.at("redundant_kind").get<std::string>());
    spec.seed = j.at("seed").get<std::uint64_t>();
    return spec;
}

} // namespace sigwi

#endif

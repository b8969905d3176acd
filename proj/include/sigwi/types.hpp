#ifndef SIGWI_TYPES_HPP
#define SIGWI_TYPES_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sigwi/errors.hpp"

namespace sigwi {

/// One signature in representation space. Length D is fixed per experiment.
using FeatureVector = std::vector<double>;

/// Binary selector over feature dimensions; bit 1 keeps the dimension.
/// Immutable after construction, popcount is cached.
class FeatureMask {
public:
    FeatureMask() = default;

    explicit FeatureMask(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
        for (auto& b : bits_) {
            if (b > 1) throw InvalidMaskError("mask bits must be 0 or 1");
            count_ += b;
        }
    }

    static FeatureMask all_ones(std::size_t dim) {
        return FeatureMask(std::vector<std::uint8_t>(dim, 1));
    }

    /// Parses the hex form produced by to_hex(). `dim` disambiguates the
    /// padding bits in the final nibble.
    static FeatureMask from_hex(const std::string& hex, std::size_t dim) {
        if (hex.size() != (dim + 3) / 4)
            throw DimensionError("hex mask length does not match dimension " + std::to_string(dim));
        std::vector<std::uint8_t> bits(dim, 0);
        for (std::size_t i = 0; i < dim; ++i) {
            char c = hex[i / 4];
            int nibble;
            if (c >= '0' && c <= '9') nibble = c - '0';
            else if (c >= 'a' && c <= 'f') nibble = c - 'a' + 10;
            else if (c >= 'A' && c <= 'F') nibble = c - 'A' + 10;
            else throw IoError(std::string("invalid hex digit '") + c + "' in mask");
            bits[i] = static_cast<std::uint8_t>((nibble >> (3 - (i % 4))) & 1);
        }
        return FeatureMask(std::move(bits));
    }

    std::size_t size() const { return bits_.size(); }
    std::size_t count() const { return count_; }
    bool test(std::size_t i) const { return bits_[i] != 0; }
    const std::vector<std::uint8_t>& bits() const { return bits_; }

    /// Big-endian nibble packing: bit i lands in hex digit i/4.
    std::string to_hex() const {
        static const char* digits = "0123456789abcdef";
        std::string out((bits_.size() + 3) / 4, '0');
        for (std::size_t d = 0; d < out.size(); ++d) {
            int nibble = 0;
            for (int k = 0; k < 4; ++k) {
                std::size_t i = d * 4 + k;
                if (i < bits_.size() && bits_[i]) nibble |= 1 << (3 - k);
            }
            out[d] = digits[nibble];
        }
        return out;
    }

    bool operator==(const FeatureMask& o) const { return bits_ == o.bits_; }
    bool operator!=(const FeatureMask& o) const { return bits_ != o.bits_; }
    /// Lexicographic on the bit string; used for deterministic tie-breaking.
    bool operator<(const FeatureMask& o) const { return bits_ < o.bits_; }

private:
    std::vector<std::uint8_t> bits_;
    std::size_t count_ = 0;
};

enum class SignatureKind { genuine, skilled_forgery };

/// One stored signature. Skilled forgeries carry the id of the targeted
/// writer; random forgeries are not a stored kind (they are genuine records
/// of other writers, designated at pairing time).
struct SignatureRecord {
    int writer_id = 0;
    SignatureKind kind = SignatureKind::genuine;
    FeatureVector features;
};

class WriterSet {
public:
    void add(SignatureRecord rec) {
        if (dim_ == 0) {
            dim_ = rec.features.size();
        } else if (rec.features.size() != dim_) {
            throw DimensionError("record dimension " + std::to_string(rec.features.size()) +
                                 " != dataset dimension " + std::to_string(dim_));
        }
        for (double v : rec.features)
            if (!std::isfinite(v)) throw ConfigError("non-finite feature value");
        writers_[rec.writer_id].push_back(std::move(rec));
    }

    bool contains(int writer) const { return writers_.count(writer) != 0; }
    std::size_t writer_count() const { return writers_.size(); }
    std::size_t dim() const { return dim_; }

    std::vector<int> writer_ids() const {
        std::vector<int> ids;
        ids.reserve(writers_.size());
        for (const auto& [id, _] : writers_) ids.push_back(id);
        return ids; // std::map keeps them sorted
    }

    const std::vector<SignatureRecord>& records_of(int writer) const {
        auto it = writers_.find(writer);
        if (it == writers_.end())
            throw ConfigError("unknown writer id " + std::to_string(writer));
        return it->second;
    }

    std::vector<const SignatureRecord*> genuines_of(int writer) const {
        return filter(writer, SignatureKind::genuine);
    }

    std::vector<const SignatureRecord*> skilled_of(int writer) const {
        return filter(writer, SignatureKind::skilled_forgery);
    }

    /// Every writer must hold at least one genuine record.
    void validate() const {
        for (const auto& [id, recs] : writers_) {
            bool any_genuine = false;
            for (const auto& r : recs) any_genuine |= (r.kind == SignatureKind::genuine);
            if (!any_genuine)
                throw ConfigError("writer " + std::to_string(id) + " has no genuine record");
        }
    }

private:
    std::vector<const SignatureRecord*> filter(int writer, SignatureKind kind) const {
        std::vector<const SignatureRecord*> out;
        for (const auto& r : records_of(writer))
            if (r.kind == kind) out.push_back(&r);
        return out;
    }

    std::map<int, std::vector<SignatureRecord>> writers_;
    std::size_t dim_ = 0;
};

/// Named writer collections; the writer-id sets must be pairwise disjoint.
struct EvalSplit {
    WriterSet train;
    WriterSet validation;
    WriterSet optimization;
    WriterSet selection;
    WriterSet exploitation;
};

inline void require_disjoint_writers(const WriterSet& a, const WriterSet& b,
                                     const std::string& what) {
    for (int id : a.writer_ids())
        if (b.contains(id))
            throw ProtocolError(what + ": writer " + std::to_string(id) +
                                " appears in both sets");
}

/// Keeps the entries of v at positions where m is 1, in ascending index order.
inline FeatureVector apply_mask(const FeatureVector& v, const FeatureMask& m) {
    if (v.size() != m.size())
        throw DimensionError("apply_mask: vector length " + std::to_string(v.size()) +
                             " != mask length " + std::to_string(m.size()));
    if (m.count() == 0) throw InvalidMaskError("apply_mask: all-zero mask");
    FeatureVector out;
    out.reserve(m.count());
    for (std::size_t i = 0; i < v.size(); ++i)
        if (m.test(i)) out.push_back(v[i]);
    return out;
}

} // namespace sigwi

#endif

#include <catch2/catch_amalgamated.hpp>

#include <limits>
#include <random>

#include "sigwi/types.hpp"

using namespace sigwi;

TEST_CASE("FeatureMask construction and counting") {
    FeatureMask m(std::vector<std::uint8_t>{1, 0, 1, 1});
    CHECK(m.size() == 4);
    CHECK(m.count() == 3);
    CHECK(m.test(0));
    CHECK_FALSE(m.test(1));

    CHECK(FeatureMask::all_ones(5).count() == 5);
    CHECK_THROWS_AS(FeatureMask(std::vector<std::uint8_t>{0, 2}), InvalidMaskError);
}

TEST_CASE("FeatureMask hex round-trip") {
    FeatureMask m(std::vector<std::uint8_t>{1, 0, 1, 1, 0, 0, 0, 1, 1});
    FeatureMask back = FeatureMask::from_hex(m.to_hex(), m.size());
    CHECK(back == m);

    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t dim = 1 + rng() % 130;
        std::vector<std::uint8_t> bits(dim);
        for (auto& b : bits) b = rng() & 1;
        FeatureMask mask(bits);
        FeatureMask rt = FeatureMask::from_hex(mask.to_hex(), dim);
        REQUIRE(rt == mask);
        REQUIRE(rt.count() == mask.count());
    }
}

TEST_CASE("FeatureMask from_hex rejects malformed input") {
    CHECK_THROWS_AS(FeatureMask::from_hex("zz", 8), IoError);
    // digit count must cover the dimension exactly
    CHECK_THROWS_AS(FeatureMask::from_hex("f", 8), DimensionError);
}

TEST_CASE("FeatureMask ordering is lexicographic") {
    FeatureMask a(std::vector<std::uint8_t>{0, 1, 1});
    FeatureMask b(std::vector<std::uint8_t>{1, 0, 0});
    CHECK(a < b);
    CHECK_FALSE(b < a);
    CHECK_FALSE(a < a);
}

TEST_CASE("apply_mask keeps the selected coordinates in order") {
    FeatureVector v{5.0, 6.0, 7.0, 8.0};
    FeatureMask m(std::vector<std::uint8_t>{1, 0, 1, 0});
    CHECK(apply_mask(v, m) == FeatureVector{5.0, 7.0});
    CHECK(apply_mask(v, FeatureMask::all_ones(4)) == v);

    CHECK_THROWS_AS(apply_mask(v, FeatureMask(std::vector<std::uint8_t>{0, 0, 0, 0})),
                    InvalidMaskError);
    CHECK_THROWS_AS(apply_mask(v, FeatureMask(std::vector<std::uint8_t>{1, 1})), DimensionError);
}

TEST_CASE("WriterSet enforces dimensional and value discipline") {
    WriterSet ws;
    ws.add({1, SignatureKind::genuine, {1.0, 2.0}});
    ws.add({1, SignatureKind::skilled_forgery, {0.5, 0.5}});
    ws.add({2, SignatureKind::genuine, {3.0, 4.0}});
    CHECK(ws.dim() == 2);
    CHECK(ws.writer_ids() == std::vector<int>{1, 2});
    CHECK(ws.genuines_of(1).size() == 1);
    CHECK(ws.skilled_of(1).size() == 1);
    CHECK_NOTHROW(ws.validate());

    CHECK_THROWS_AS(ws.add({3, SignatureKind::genuine, {1.0}}), DimensionError);
    CHECK_THROWS_AS(
        ws.add({3, SignatureKind::genuine, {1.0, std::numeric_limits<double>::infinity()}}),
        ConfigError);

    WriterSet forgeries_only;
    forgeries_only.add({9, SignatureKind::skilled_forgery, {1.0, 2.0}});
    CHECK_THROWS_AS(forgeries_only.validate(), ConfigError);
}

TEST_CASE("require_disjoint_writers flags overlap") {
    WriterSet a, b;
    a.add({1, SignatureKind::genuine, {1.0}});
    b.add({2, SignatureKind::genuine, {1.0}});
    CHECK_NOTHROW(require_disjoint_writers(a, b, "parts"));
    b.add({1, SignatureKind::genuine, {2.0}});
    CHECK_THROWS_AS(require_disjoint_writers(a, b, "parts"), ProtocolError);
}

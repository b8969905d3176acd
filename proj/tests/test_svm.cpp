#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "sigwi/svm.hpp"

using namespace sigwi;

namespace {

PrototypeSet make_protos(const std::vector<std::pair<FeatureVector, int>>& points) {
    PrototypeSet set;
    for (std::size_t i = 0; i < points.size(); ++i) {
        set.samples.push_back({points[i].first,
                               points[i].second > 0 ? SampleLabel::within_positive
                                                    : SampleLabel::between_negative,
                               1, 2});
        set.origin_indices.push_back(i);
    }
    return set;
}

std::vector<FeatureVector> probe_grid(std::size_t dim, std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::vector<FeatureVector> out(count, FeatureVector(dim));
    for (auto& v : out)
        for (auto& x : v) x = u(rng);
    return out;
}

} // namespace

TEST_CASE("rbf_kernel basics") {
    FeatureVector a{1.0, 2.0}, b{3.0, 4.0};
    CHECK(rbf_kernel(a, a, 0.5) == 1.0);
    CHECK(rbf_kernel(a, b, 0.5) == Catch::Approx(std::exp(-0.5 * 8.0)));
    CHECK(rbf_kernel(a, b, 0.5) == rbf_kernel(b, a, 0.5));
    CHECK_THROWS_AS(rbf_kernel(a, {1.0}, 0.5), DimensionError);
}

TEST_CASE("train separates XOR with an RBF kernel") {
    auto protos = make_protos({{{0.0, 0.0}, +1},
                               {{1.0, 1.0}, +1},
                               {{0.0, 1.0}, -1},
                               {{1.0, 0.0}, -1}});
    KernelParams params{1.0, 10.0};
    TrainedModel model = train(protos, params, FeatureMask::all_ones(2), 1);
    CHECK(signed_distance(model, {0.0, 0.0}) > 0.0);
    CHECK(signed_distance(model, {1.0, 1.0}) > 0.0);
    CHECK(signed_distance(model, {0.0, 1.0}) < 0.0);
    CHECK(signed_distance(model, {1.0, 0.0}) < 0.0);
    CHECK(model.worst_kkt_violation <= 1e-3);
}

TEST_CASE("two symmetric points give the analytic solution") {
    auto protos = make_protos({{{0.0, 0.0}, +1}, {{2.0, 0.0}, -1}});
    KernelParams params{0.5, 10.0};
    TrainedModel model = train(protos, params, FeatureMask::all_ones(2), 3);

    REQUIRE(model.support_vectors.size() == 2);
    double alpha_expected = 1.0 / (1.0 - std::exp(-2.0));
    double coef_sum = 0.0;
    for (double c : model.dual_coefficients) {
        CHECK(std::abs(c) == Catch::Approx(alpha_expected).margin(1e-5));
        coef_sum += c;
    }
    CHECK(std::abs(coef_sum) < 1e-8); // sum alpha_i y_i == 0
    CHECK(std::abs(model.bias) < 1e-6);

    CHECK(signed_distance(model, {0.0, 0.0}) > 0.0);
    CHECK(signed_distance(model, {2.0, 0.0}) < 0.0);
    CHECK(std::abs(signed_distance(model, {1.0, 0.0})) < 1e-6); // midpoint on the plane

    // geometric normalization: margin SVs sit at distance 1/||w||
    double d1 = signed_distance(model, {0.0, 0.0});
    CHECK(d1 == Catch::Approx(1.0 / model.weight_norm).margin(1e-5));
}

TEST_CASE("train satisfies the dual contract on random sets") {
    std::mt19937_64 rng(207);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        std::size_t count = 6 + rng() % 25;
        std::vector<std::pair<FeatureVector, int>> points;
        for (std::size_t i = 0; i < count; ++i) {
            FeatureVector v{n(rng), n(rng), n(rng)};
            int label = i % 2 == 0 ? +1 : -1; // guarantees both classes
            v[0] += label * 0.5;              // partial, noisy separation
            points.emplace_back(v, label);
        }
        KernelParams params{0.5, 1.0};
        TrainedModel model = train(make_protos(points), params, FeatureMask::all_ones(3), trial);

        double sum = 0.0;
        for (double c : model.dual_coefficients) {
            REQUIRE(std::abs(c) <= params.c + 1e-12);
            sum += c;
        }
        REQUIRE(std::abs(sum) <= 1e-8);
        REQUIRE(model.worst_kkt_violation <= 1e-3);
        REQUIRE(model.weight_norm > 0.0);
    }
}

TEST_CASE("duplicating every training point at half the budget is equivalent") {
    // Splitting each point's dual weight across two copies is a bijection
    // between the feasible sets of (points, C) and (doubled, C/2), so the
    // optima coincide.
    std::mt19937_64 rng(33);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<std::pair<FeatureVector, int>> points;
    for (int i = 0; i < 14; ++i)
        points.emplace_back(FeatureVector{n(rng) + (i % 2 ? 1.0 : -1.0), n(rng)},
                            i % 2 ? +1 : -1);
    auto doubled = points;
    doubled.insert(doubled.end(), points.begin(), points.end());

    KernelParams params{0.7, 2.0};
    KernelParams half{0.7, 1.0};
    TrainedModel a = train(make_protos(points), params, FeatureMask::all_ones(2), 5);
    TrainedModel b = train(make_protos(doubled), half, FeatureMask::all_ones(2), 5);
    for (const auto& p : probe_grid(2, 40, 9))
        REQUIRE(signed_distance(a, p) == Catch::Approx(signed_distance(b, p)).margin(1e-6));
}

TEST_CASE("prototype order does not change predictions") {
    std::mt19937_64 rng(71);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<std::pair<FeatureVector, int>> points;
    for (int i = 0; i < 20; ++i)
        points.emplace_back(FeatureVector{n(rng) + (i % 2 ? 0.8 : -0.8), n(rng), n(rng)},
                            i % 2 ? +1 : -1);
    KernelParams params{0.4, 1.5};
    TrainedModel base = train(make_protos(points), params, FeatureMask::all_ones(3), 11);
    auto probes = probe_grid(3, 40, 13);
    for (int shuffle = 0; shuffle < 3; ++shuffle) {
        std::shuffle(points.begin(), points.end(), rng);
        TrainedModel perm = train(make_protos(points), params, FeatureMask::all_ones(3), 11);
        for (const auto& p : probes)
            REQUIRE(signed_distance(base, p) ==
                    Catch::Approx(signed_distance(perm, p)).margin(1e-6));
    }
}

TEST_CASE("masked training equals training on pre-masked data") {
    std::mt19937_64 rng(19);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<std::pair<FeatureVector, int>> full, reduced;
    FeatureMask mask(std::vector<std::uint8_t>{1, 0, 1, 0, 1});
    for (int i = 0; i < 16; ++i) {
        FeatureVector v{n(rng) + (i % 2 ? 1.0 : -1.0), n(rng), n(rng), n(rng), n(rng)};
        full.emplace_back(v, i % 2 ? +1 : -1);
        reduced.emplace_back(apply_mask(v, mask), i % 2 ? +1 : -1);
    }
    KernelParams params{0.6, 1.0};
    TrainedModel a = train(make_protos(full), params, mask, 21);
    TrainedModel b = train(make_protos(reduced), params, FeatureMask::all_ones(3), 21);
    for (const auto& p : probe_grid(5, 30, 23))
        REQUIRE(signed_distance(a, p) ==
                Catch::Approx(signed_distance(b, apply_mask(p, mask))).margin(1e-12));
}

TEST_CASE("train rejects degenerate inputs") {
    auto one_class = make_protos({{{0.0, 0.0}, +1}, {{1.0, 0.0}, +1}});
    CHECK_THROWS_AS(train(one_class, KernelParams{1.0, 1.0}, FeatureMask::all_ones(2), 1),
                    TrainingError);
    CHECK_THROWS_AS(train(PrototypeSet{}, KernelParams{1.0, 1.0}, FeatureMask::all_ones(2), 1),
                    TrainingError);

    auto two = make_protos({{{0.0, 0.0}, +1}, {{1.0, 0.0}, -1}});
    CHECK_THROWS_AS(train(two, KernelParams{1.0, 1.0},
                          FeatureMask(std::vector<std::uint8_t>{0, 0}), 1),
                    InvalidMaskError);
    // a vanishing gamma flattens the kernel into an unusable geometry
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<std::pair<FeatureVector, int>> points;
    for (int i = 0; i < 10; ++i)
        points.emplace_back(FeatureVector{n(rng), n(rng)}, i % 2 ? +1 : -1);
    CHECK_THROWS_AS(train(make_protos(points), KernelParams{1e-30, 1.0},
                          FeatureMask::all_ones(2), 1),
                    ConvergenceError);
}

TEST_CASE("model json round-trips") {
    auto protos = make_protos({{{0.0, 0.0}, +1},
                               {{1.0, 1.0}, +1},
                               {{0.0, 1.0}, -1},
                               {{1.0, 0.0}, -1}});
    TrainedModel model = train(protos, KernelParams{1.0, 10.0}, FeatureMask::all_ones(2), 1);
    std::string path = "test_model.json";
    save_model_json(model, path);
    TrainedModel back = load_model_json(path);
    CHECK(back.mask == model.mask);
    CHECK(back.bias == model.bias);
    CHECK(back.weight_norm == model.weight_norm);
    CHECK(back.dual_coefficients == model.dual_coefficients);
    for (const auto& p : probe_grid(2, 20, 5))
        CHECK(signed_distance(back, p) == signed_distance(model, p));
    std::remove(path.c_str());
}

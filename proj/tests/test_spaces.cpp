#include <doctest.h>

#include <cmath>

#include "cascade/spaces.hpp"

using namespace cascade;

TEST_CASE("weighted norms: V0 closed forms") {
    auto v0 = weighted_space_v0(2.0, 1.0, 1.0);  // a - b = 1, s = 1
    CHECK(weighted_norm({}, {1.0}, v0) == doctest::Approx(1.0));
    // B1 weight at n = 2: 1 + 16 = 17
    CHECK(weighted_norm({0.0, 0.0, 1.0}, {}, v0) == doctest::Approx(17.0));

    auto collapsed = weighted_space_v0(3.0, 3.0, 1.0);
    CHECK_THROWS_AS(weighted_norm({1.0}, {}, collapsed), SpaceCollapse);
    auto uncoupled = weighted_space_v0(2.0, 1.0, 0.0);
    CHECK_THROWS_AS(weighted_norm({1.0}, {}, uncoupled), SpaceCollapse);
}

TEST_CASE("weight positivity, growth, and V0 <= V(T)") {
    auto v0 = weighted_space_v0(5.0, 1.0, 0.7);
    auto vT = weighted_space_v(5.0, 1.0, 0.7, 0.25);
    double prev = 0.0;
    for (int n = 0; n < 12; ++n) {
        const double w = v0.weight({Branch::B1, n});
        CHECK(w > 0.0);
        CHECK(w >= prev);
        prev = w;
        CHECK(vT.weight({Branch::B1, n}) >= w);
        CHECK(vT.weight({Branch::B2, n}) >= v0.weight({Branch::B2, n}));
    }
}

TEST_CASE("W weights are squared output coefficients") {
    CascadeConfig cfg{12.0, 3.0, 1.0, Variant::S1};
    SpectralBasis basis(cfg);
    auto meas = MeasurementSpec::dirichlet(0.0);
    auto w = weighted_space_w(meas, basis, 4, 4);
    for (int n = 0; n <= 4; ++n)
        CHECK(w.weight({Branch::B1, n}) == doctest::Approx(2.0));  // (sqrt2)^2
}

TEST_CASE("observability probe: single-mode closed form") {
    CascadeConfig cfg{12.0, 3.0, 1.0, Variant::S1};  // Theta empty
    SpectralBasis basis(cfg);
    const double T = 0.5;
    const double got = observability_ratio_probe(basis, T, {{Branch::B2, 0}}, 50, 7);
    // X^2(t,0) = c e^{bt} mu_0; ratio = int_0^T e^{2bt} dt / e^{2bT}
    const double b = cfg.b;
    const double expect = (std::exp(2.0 * b * T) - 1.0) / (2.0 * b) / std::exp(2.0 * b * T);
    CHECK(got == doctest::Approx(expect).epsilon(0.01));
}

TEST_CASE("observability probe: Theta nonempty rejected") {
    SpectralBasis collapsed({4.0, 4.0, 1.0, Variant::S1});
    CHECK_THROWS_AS(observability_ratio_probe(collapsed, 1.0, {{Branch::B2, 0}}),
                    ThetaNonEmpty);
    SpectralBasis theta0({kPiSq, 3.0 * kPiSq, 1.0, Variant::S1});
    CHECK_THROWS_AS(observability_ratio_probe(theta0, 1.0, {{Branch::B2, 0}}),
                    ThetaNonEmpty);
}

TEST_CASE("observability probe: positive and monotone under subset growth") {
    CascadeConfig cfg{12.0, 3.0, 1.0, Variant::S1};
    SpectralBasis basis(cfg);
    std::vector<ModeIndex> small{{Branch::B1, 0}, {Branch::B2, 0}};
    std::vector<ModeIndex> large{{Branch::B1, 0}, {Branch::B2, 0}, {Branch::B1, 1},
                                 {Branch::B2, 1}, {Branch::B1, 2}};
    const double r_small = observability_ratio_probe(basis, 0.5, small, 40, 11);
    const double r_large = observability_ratio_probe(basis, 0.5, large, 40, 11);
    CHECK(r_small > 0.0);
    CHECK(r_large > 0.0);
    CHECK(r_large <= r_small + 1e-15);
}

TEST_CASE("observability probe handles Jordan pairs") {
    // b - a = 35 pi^2/4 has Delta = {(0,3),(8,9)} and Theta empty
    CascadeConfig cfg{0.0, 35.0 * kPiSq / 4.0, 1.0, Variant::S1};
    SpectralBasis basis(cfg);
    std::vector<ModeIndex> subset{{Branch::B1, 0}, {Branch::B2, 3}, {Branch::B2, 0}};
    const double r = observability_ratio_probe(basis, 0.4, subset, 40, 3);
    CHECK(r > 0.0);
    CHECK(std::isfinite(r));
}

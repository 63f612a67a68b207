#include <doctest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "cascade/reduction.hpp"

using namespace cascade;

namespace {
CascadeConfig generic_cfg(Variant v = Variant::S1) { return {12.0, 3.0, 1.0, v}; }
CascadeConfig resonant_cfg(Variant v = Variant::S1) {
    return {0.0, 35.0 * kPiSq / 4.0, 1.0, v};
}
}  // namespace

TEST_CASE("lifting profiles carry the variant boundary traits") {
    auto cfg = generic_cfg();
    auto p1 = lifting_profile(Variant::S1, cfg);
    CHECK(p1.phi(0.0) == 0.0);
    CHECK(p1.dphi(0.0) == doctest::Approx(1.0));
    CHECK(p1.dphi(1.0) == doctest::Approx(0.0));
    CHECK(p1.c_reac == cfg.b);

    auto p2 = lifting_profile(Variant::S2, cfg);
    CHECK(p2.phi(0.5) == doctest::Approx(0.125));  // x^2/2

    auto p3 = lifting_profile(Variant::S3, cfg);
    CHECK(p3.phi(0.0) == 0.0);
    CHECK(p3.phi(1.0) == doctest::Approx(0.0));
    CHECK(p3.dphi(0.0) == doctest::Approx(1.0));
    CHECK(p3.c_reac == cfg.a);

    auto p4 = lifting_profile(Variant::S4, cfg);
    CHECK(p4.phi(1.0) == doctest::Approx(1.0));
    CHECK(p4.dphi(0.0) == doctest::Approx(0.0));
}

TEST_CASE("nu closed forms: collocated traces") {
    SpectralBasis b1(generic_cfg(Variant::S1));
    auto lift1 = lifting_profile(Variant::S1, b1.config());
    CHECK(input_coefficients({Branch::B2, 0}, b1, lift1).nu_closed == doctest::Approx(-1.0));
    for (int m = 1; m <= 6; ++m)
        CHECK(input_coefficients({Branch::B2, m}, b1, lift1).nu_closed ==
              doctest::Approx(-std::sqrt(2.0)));

    SpectralBasis b3(generic_cfg(Variant::S3));
    auto lift3 = lifting_profile(Variant::S3, b3.config());
    for (int n = 0; n <= 6; ++n)
        CHECK(input_coefficients({Branch::B1, n}, b3, lift3).nu_closed ==
              doctest::Approx(-std::sqrt(2.0)));
}

TEST_CASE("nu dual path: closed form equals alpha + lambda beta (+ Jordan term)") {
    for (Variant v : {Variant::S1, Variant::S2, Variant::S3, Variant::S4}) {
        for (auto cfg : {generic_cfg(v), resonant_cfg(v)}) {
            SpectralBasis basis(cfg);
            auto lift = lifting_profile(v, cfg);
            for (int k = 0; k <= 15; ++k) {
                for (auto br : {Branch::B1, Branch::B2}) {
                    auto c = input_coefficients({br, k}, basis, lift);
                    CHECK(std::abs(c.nu_closed - c.nu_quad) < 1e-9);
                }
            }
        }
    }
}

TEST_CASE("truncation orders") {
    SpectralBasis flat({0.0, 0.0, 1.0, Variant::S1});
    CHECK(truncation_orders(flat, 1.0) == std::pair<int, int>{0, 0});

    SpectralBasis res(resonant_cfg());
    auto [n0, m0] = truncation_orders(res, 1.0);
    CHECK(n0 == 8);
    CHECK(m0 == 9);

    SpectralBasis gen(generic_cfg());
    auto lo = truncation_orders(gen, 1.0);
    auto hi = truncation_orders(gen, 50.0);
    CHECK(hi.first >= lo.first);
    CHECK(hi.second >= lo.second);
    CHECK_THROWS_AS(truncation_orders(gen, 0.0), std::invalid_argument);
}

TEST_CASE("mode orderings") {
    SpectralBasis gen(generic_cfg());
    auto plain = mode_orderings(gen.resonance(), 3, 2);
    CHECK(plain.perm1 == std::vector<int>{0, 1, 2, 3});
    CHECK(plain.perm2 == std::vector<int>{0, 1, 2});

    SpectralBasis res(resonant_cfg());
    auto p = mode_orderings(res.resonance(), 8, 9);
    CHECK(p.perm1 == std::vector<int>{0, 8, 1, 2, 3, 4, 5, 6, 7});
    CHECK(p.perm2 == std::vector<int>{3, 9, 0, 1, 2, 4, 5, 6, 7, 8});

    CHECK_THROWS_AS(mode_orderings(res.resonance(), 7, 9), OrderingInfeasible);

    // permutation correctness: strictly increasing outside the Delta prefix
    const int nd = static_cast<int>(res.resonance().delta.size());
    for (std::size_t i = nd + 1; i < p.perm1.size(); ++i) CHECK(p.perm1[i] > p.perm1[i - 1]);
    for (std::size_t i = nd + 1; i < p.perm2.size(); ++i) CHECK(p.perm2[i] > p.perm2[i - 1]);
    for (int i = 0; i < nd; ++i)
        CHECK(std::pair<int, int>{p.perm1[i], p.perm2[i]} == res.resonance().delta[i]);
}

TEST_CASE("assemble_reduced: flat config gives 3x3 augmented model") {
    SpectralBasis flat({0.0, 0.0, 1.0, Variant::S1});
    auto lift = lifting_profile(Variant::S1, flat.config());
    auto model = assemble_reduced(flat, lift, 1.0);
    CHECK(model.A1a.rows() == 3);
    CHECK(model.A1(0, 0) == doctest::Approx(-kPiSq / 4.0));
    CHECK(model.A1(1, 1) == doctest::Approx(0.0));
    CHECK(model.A1(0, 1) == 0.0);
    CHECK(model.A1a.row(2).norm() == 0.0);
    CHECK(model.B1a(2) == 1.0);
}

TEST_CASE("assemble_reduced: Jordan blocks lead and carry the coupling") {
    SpectralBasis res(resonant_cfg());
    auto lift = lifting_profile(Variant::S1, res.config());
    auto model = assemble_reduced(res, lift, 1.0);
    REQUIRE(model.jordan_blocks.size() == 2);
    // pairs (0,3) and (8,9): upper-triangular coupling -sqrt2 s mu_m
    CHECK(model.A1(0, 1) == doctest::Approx(-std::sqrt(2.0) * std::sqrt(2.0)));
    CHECK(model.A1(1, 0) == 0.0);
    CHECK(model.A1(2, 3) == doctest::Approx(-2.0));
    CHECK(model.A1(0, 0) == doctest::Approx(eigenvalue({Branch::B1, 0}, res.config())));
    CHECK(model.A1(1, 1) == doctest::Approx(eigenvalue({Branch::B2, 3}, res.config())));

    // adjoint variants carry the transposed block orientation
    SpectralBasis res3(resonant_cfg(Variant::S3));
    auto model3 = assemble_reduced(res3, lifting_profile(Variant::S3, res3.config()), 1.0);
    CHECK(model3.A1(1, 0) == doctest::Approx(-2.0));
    CHECK(model3.A1(0, 1) == 0.0);
}

TEST_CASE("assemble_reduced: spectrum of A1a is the eigenvalue multiset plus 0") {
    for (auto cfg : {generic_cfg(), resonant_cfg()}) {
        SpectralBasis basis(cfg);
        auto lift = lifting_profile(cfg.variant, cfg);
        auto model = assemble_reduced(basis, lift, 1.0);
        Eigen::EigenSolver<Eigen::MatrixXd> es(model.A1a);
        std::vector<double> got;
        for (int i = 0; i < es.eigenvalues().size(); ++i) {
            CHECK(std::abs(es.eigenvalues()[i].imag()) < 1e-6);
            got.push_back(es.eigenvalues()[i].real());
        }
        std::vector<double> expect{0.0};
        for (int n = 0; n <= model.N0; ++n) expect.push_back(eigenvalue({Branch::B1, n}, cfg));
        for (int m = 0; m <= model.M0; ++m) expect.push_back(eigenvalue({Branch::B2, m}, cfg));
        std::sort(got.begin(), got.end());
        std::sort(expect.begin(), expect.end());
        REQUIRE(got.size() == expect.size());
        for (std::size_t i = 0; i < got.size(); ++i)
            CHECK(got[i] == doctest::Approx(expect[i]).epsilon(1e-8).scale(1.0));
    }
}

TEST_CASE("S1 vs S2 and S3 vs S4 share A1; only the input vectors differ") {
    for (auto base : {std::pair{Variant::S1, Variant::S2}, std::pair{Variant::S3, Variant::S4}}) {
        CascadeConfig ca{5.0, 2.0, 1.3, base.first};
        CascadeConfig cb{5.0, 2.0, 1.3, base.second};
        SpectralBasis ba(ca), bb(cb);
        auto ma = assemble_reduced(ba, lifting_profile(base.first, ca), 1.0);
        auto mb = assemble_reduced(bb, lifting_profile(base.second, cb), 1.0);
        CHECK((ma.A1 - mb.A1).cwiseAbs().maxCoeff() == 0.0);
        CHECK((ma.B1v - mb.B1v).cwiseAbs().maxCoeff() > 1e-3);
    }
}

TEST_CASE("output coefficients for the S1 measurement kinds") {
    SpectralBasis basis(generic_cfg());
    auto dir0 = MeasurementSpec::dirichlet(0.0);
    auto neu0 = MeasurementSpec::neumann(0.0);
    auto dist = MeasurementSpec::distributed();
    for (int n = 0; n <= 8; ++n) {
        CHECK(output_coefficient(dir0, {Branch::B1, n}, basis) ==
              doctest::Approx(std::sqrt(2.0)));
        CHECK(output_coefficient(neu0, {Branch::B1, n}, basis) == doctest::Approx(0.0));
        const double expect = std::sqrt(2.0) * (n % 2 == 0 ? 1.0 : -1.0) / ((n + 0.5) * kPi);
        CHECK(output_coefficient(dist, {Branch::B1, n}, basis) ==
              doctest::Approx(expect).epsilon(1e-10));
    }
}

TEST_CASE("observer matrices: kappa scalings and tail structure") {
    SpectralBasis basis(generic_cfg());
    auto lift = lifting_profile(Variant::S1, basis.config());
    auto model = assemble_reduced(basis, lift, 1.0);

    auto dist = MeasurementSpec::distributed();
    auto empty = assemble_observer_matrices(model, dist, basis, model.N0, model.M0);
    CHECK(empty.A2.rows() == 0);
    CHECK(empty.C2.size() == 0);
    CHECK(empty.C1.size() == model.dim());
    CHECK(empty.kappa1 == 0.0);
    CHECK(empty.kappa2 == 0.0);

    auto dir = MeasurementSpec::dirichlet(0.0);
    auto od40 = assemble_observer_matrices(model, dir, basis, 40, 40);
    auto od120 = assemble_observer_matrices(model, dir, basis, 120, 120);
    CHECK(od40.kappa1 == 1.0);
    CHECK(od40.kappa2 == 0.0);
    // ||C2|| stays bounded as the truncation grows
    CHECK(od120.C2.cwiseAbs().maxCoeff() <= od40.C2.cwiseAbs().maxCoeff() + 1e-9);

    auto neu = MeasurementSpec::neumann(0.37);
    auto on = assemble_observer_matrices(model, neu, basis, 80, 80);
    CHECK(on.kappa1 == doctest::Approx(1.75));
    CHECK(on.kappa2 == 1.0);
    for (std::size_t i = 0; i < on.tail_modes.size(); ++i) {
        if (on.tail_modes[i].branch == Branch::B1) {
            const double n = on.tail_modes[i].k;
            CHECK(std::abs(on.C2(static_cast<Eigen::Index>(i))) <=
                  10.0 * std::pow(n, -0.75));
        }
    }

    CHECK_THROWS_AS(assemble_observer_matrices(model, dist, basis, model.N0 - 1, model.M0),
                    DimensionError);
}

TEST_CASE("A2 carries the tail eigenvalues in order") {
    SpectralBasis basis(generic_cfg());
    auto lift = lifting_profile(Variant::S1, basis.config());
    auto model = assemble_reduced(basis, lift, 1.0);
    auto obs = assemble_observer_matrices(model, MeasurementSpec::distributed(), basis, 5, 4);
    REQUIRE(obs.A2.rows() == (5 - model.N0) + (4 - model.M0));
    int i = 0;
    for (int n = model.N0 + 1; n <= 5; ++n, ++i)
        CHECK(obs.A2(i, i) == doctest::Approx(eigenvalue({Branch::B1, n}, basis.config())));
    for (int m = model.M0 + 1; m <= 4; ++m, ++i)
        CHECK(obs.A2(i, i) == doctest::Approx(eigenvalue({Branch::B2, m}, basis.config())));
}

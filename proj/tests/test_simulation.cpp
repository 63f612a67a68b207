#include <doctest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "cascade/simulation.hpp"

using namespace cascade;

namespace {

struct Setup {
    SpectralBasis basis;
    LiftingProfile lift;
    ReducedModel model;

    explicit Setup(CascadeConfig cfg, double delta = 1.0)
        : basis(cfg),
          lift(lifting_profile(cfg.variant, cfg)),
          model(assemble_reduced(basis, lift, delta)) {}
};

CascadeConfig generic_cfg(Variant v = Variant::S1) { return {12.0, 3.0, 1.0, v}; }
CascadeConfig resonant_cfg(Variant v = Variant::S1) {
    return {0.0, 35.0 * kPiSq / 4.0, 1.0, v};
}

}  // namespace

TEST_CASE("smooth compatible presets satisfy the variant boundary conditions") {
    for (Variant v : {Variant::S1, Variant::S2, Variant::S3, Variant::S4}) {
        Setup s(generic_cfg(v));
        auto data = smooth_compat_data(s.basis, s.lift, 0.3);
        CHECK(data.compat_h1);
        CHECK(compatibility_residual(data, s.basis.config()) < 1e-8);
    }
}

TEST_CASE("project_initial: biorthogonality and the lifting shift") {
    Setup s(generic_cfg());
    auto single = modal_initial_data(s.basis, s.lift, {1.0}, {}, 0.0);
    auto coeffs = project_initial(single, s.basis, s.lift, 12, 12);
    CHECK(coeffs(0) == doctest::Approx(1.0).epsilon(1e-8));
    for (int i = 1; i < coeffs.size(); ++i) CHECK(std::abs(coeffs(i)) < 1e-8);

    auto zero = zero_initial_data();
    CHECK(project_initial(zero, s.basis, s.lift, 8, 8).cwiseAbs().maxCoeff() < 1e-12);

    // pure input offset: coefficients equal beta_{i,k} u0
    InitialData offset = zero_initial_data();
    offset.u0 = 0.7;
    auto c = project_initial(offset, s.basis, s.lift, 6, 6);
    int row = 0;
    for (int n = 0; n <= 6; ++n, ++row) {
        const double beta = input_coefficients({Branch::B1, n}, s.basis, s.lift).beta;
        CHECK(c(row) == doctest::Approx(beta * 0.7).epsilon(1e-8).scale(1.0));
    }
    for (int m = 0; m <= 6; ++m, ++row) {
        const double beta = input_coefficients({Branch::B2, m}, s.basis, s.lift).beta;
        CHECK(c(row) == doctest::Approx(beta * 0.7).epsilon(1e-8).scale(1.0));
    }
}

TEST_CASE("assemble_closed_loop: state feedback at the reduced order equals A1a - B1a K") {
    Setup s(generic_cfg());
    auto ctrl = synthesize_state_feedback(s.model, s.basis, 1.0, false);
    auto sim = assemble_closed_loop(s.model, &ctrl, nullptr, s.basis, s.lift, s.model.N0,
                                    s.model.M0);
    const Eigen::MatrixXd Acl = s.model.A1a - s.model.B1a * ctrl.K;
    // map model ordering -> simulator ordering
    auto plant_index = [&](ModeIndex mode) {
        return mode.branch == Branch::B1 ? mode.k : s.model.N0 + 1 + mode.k;
    };
    std::vector<int> perm(s.model.dim_aug());
    for (int i = 0; i < s.model.dim(); ++i) perm[i] = plant_index(s.model.state_modes[i]);
    perm[s.model.dim()] = sim.u_index();
    for (int i = 0; i < s.model.dim_aug(); ++i)
        for (int j = 0; j < s.model.dim_aug(); ++j)
            CHECK(Acl(i, j) == doctest::Approx(sim.M(perm[i], perm[j])).epsilon(1e-12));
}

TEST_CASE("assemble_closed_loop: open-loop spectrum is the eigenvalue set plus 0") {
    Setup s(generic_cfg());
    auto sim = assemble_closed_loop(s.model, nullptr, nullptr, s.basis, s.lift, 6, 6);
    Eigen::EigenSolver<Eigen::MatrixXd> es(sim.M, false);
    std::vector<double> got;
    for (int i = 0; i < es.eigenvalues().size(); ++i) got.push_back(es.eigenvalues()(i).real());
    std::sort(got.begin(), got.end());
    std::vector<double> expect{0.0};
    for (int n = 0; n <= 6; ++n) expect.push_back(s.basis.eigenvalue({Branch::B1, n}));
    for (int m = 0; m <= 6; ++m) expect.push_back(s.basis.eigenvalue({Branch::B2, m}));
    std::sort(expect.begin(), expect.end());
    for (std::size_t i = 0; i < got.size(); ++i)
        CHECK(got[i] == doctest::Approx(expect[i]).epsilon(1e-9).scale(1.0));
}

TEST_CASE("assemble_closed_loop: output feedback at (N, M) matches the coupled form") {
    Setup s(generic_cfg());
    auto meas = MeasurementSpec::distributed();
    auto ctrl = synthesize_output_feedback(s.model, meas, s.basis, 1.0, 0.05, false);
    REQUIRE(ctrl.N <= 4);  // small enough to simulate at exactly (N, M)
    auto sim =
        assemble_closed_loop(s.model, &ctrl, &meas, s.basis, s.lift, ctrl.N, ctrl.M);
    const Eigen::MatrixXd F = output_feedback_matrix(s.model, *ctrl.observer, ctrl.K, ctrl.L);
    REQUIRE(F.rows() == sim.M.rows());
    Eigen::EigenSolver<Eigen::MatrixXd> e1(sim.M, false), e2(F, false);
    std::vector<double> s1, s2;
    for (int i = 0; i < F.rows(); ++i) {
        s1.push_back(e1.eigenvalues()(i).real());
        s2.push_back(e2.eigenvalues()(i).real());
    }
    std::sort(s1.begin(), s1.end());
    std::sort(s2.begin(), s2.end());
    // eigenvalues of similar but differently conditioned non-normal matrices
    for (std::size_t i = 0; i < s1.size(); ++i)
        CHECK(s1[i] == doctest::Approx(s2[i]).epsilon(1e-5).scale(1.0));
}

TEST_CASE("propagate: diagonal flow, semigroup property, Jordan secular term") {
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(2, 2);
    D(0, 0) = -1.0;
    D(1, 1) = -2.5;
    Eigen::VectorXd x0(2);
    x0 << 1.0, 2.0;
    auto rec = propagate(D, x0, {0.5, 1.0});
    CHECK(rec.states(0, 0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
    CHECK(rec.states(1, 1) == doctest::Approx(2.0 * std::exp(-2.5)).epsilon(1e-12));

    // one step to T vs two half steps
    auto one = propagate(D, x0, {1.0});
    auto two = propagate(D, x0, {0.5, 1.0});
    CHECK(std::abs(one.states(0, 0) - two.states(1, 0)) < 1e-10);

    // secular growth on a Delta pair in open loop
    Setup rs(resonant_cfg());
    auto sim = assemble_closed_loop(rs.model, nullptr, nullptr, rs.basis, rs.lift, 10, 10);
    Eigen::VectorXd state0 = sim.initial_state(
        project_initial(modal_initial_data(rs.basis, rs.lift, {}, {0, 0, 0, 1.0}, 0.0),
                        rs.basis, rs.lift, 10, 10),
        0.0);
    auto jrec = propagate(sim.M, state0, {0.5, 1.0});
    const double lam = rs.basis.eigenvalue({Branch::B1, 0});
    const double smu = std::sqrt(2.0) * rs.basis.config().s * mu(3);
    for (int i = 0; i < 2; ++i) {
        const double t = jrec.times[i];
        // x~_{1,0}(t) = -sqrt2 s mu_3 t e^{lambda t} x~_{2,3}(0)
        CHECK(jrec.states(i, 0) == doctest::Approx(-smu * t * std::exp(lam * t)).epsilon(1e-9));
        CHECK(jrec.states(i, 11 + 3) ==
              doctest::Approx(std::exp(lam * t)).epsilon(1e-9));
    }

    CHECK_THROWS_AS(propagate(D, x0, {0.5, 0.5}), std::invalid_argument);
}

TEST_CASE("propagate satisfies the modal ODEs (finite-difference exactness)") {
    Setup s(generic_cfg());
    auto ctrl = synthesize_state_feedback(s.model, s.basis, 1.0, false);
    auto sim = assemble_closed_loop(s.model, &ctrl, nullptr, s.basis, s.lift, 16, 16);
    auto data = smooth_compat_data(s.basis, s.lift, 0.2);
    Eigen::VectorXd x0 =
        sim.initial_state(project_initial(data, s.basis, s.lift, 16, 16), data.u0);
    const double dt = 1e-3;
    for (double t : {0.5, 0.75, 1.0}) {
        auto rec = propagate(sim.M, x0, {t - 2 * dt, t - dt, t, t + dt, t + 2 * dt});
        const Eigen::VectorXd mid = rec.states.row(2).transpose();
        // fourth-order central difference at step dt
        const Eigen::VectorXd fd = (rec.states.row(0) - 8.0 * rec.states.row(1) +
                                    8.0 * rec.states.row(3) - rec.states.row(4))
                                       .transpose() /
                                   (12.0 * dt);
        const Eigen::VectorXd rhs = sim.M * mid;
        CHECK((fd - rhs).norm() <= 1e-6 * rhs.norm());
    }
}

TEST_CASE("reconstruct_fields: round trip and boundary slope") {
    Setup s(generic_cfg());
    auto data = smooth_compat_data(s.basis, s.lift, 0.4);
    auto coeffs = project_initial(data, s.basis, s.lift, 64, 64);
    FieldEvaluator fields(s.basis, s.lift, 64, 64);

    std::vector<double> xs;
    for (int i = 0; i <= 200; ++i) xs.push_back(i / 200.0);
    Eigen::VectorXd y, z;
    fields.reconstruct(coeffs, data.u0, xs, y, z);
    double err = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        err += std::pow(y(i) - data.y0(xs[i]), 2) + std::pow(z(i) - data.z0(xs[i]), 2);
        ref += std::pow(data.y0(xs[i]), 2) + std::pow(data.z0(xs[i]), 2);
    }
    CHECK(std::sqrt(err / ref) < 1e-4);

    // zero coefficients give zero fields
    fields.reconstruct(Eigen::VectorXd::Zero(130), 0.0, xs, y, z);
    CHECK(y.cwiseAbs().maxCoeff() == 0.0);
    CHECK(z.cwiseAbs().maxCoeff() == 0.0);

    // S1 boundary slope of z at x = 0 equals u
    Eigen::VectorXd dy, dz;
    fields.reconstruct(coeffs, data.u0, {0.0}, y, z, &dy, &dz);
    CHECK(dz(0) == doctest::Approx(data.u0).epsilon(1e-6));
}

TEST_CASE("norms: single mode, zero state, route bracket") {
    Setup s(generic_cfg());
    FieldEvaluator fields(s.basis, s.lift, 10, 10);
    Eigen::VectorXd e0 = Eigen::VectorXd::Zero(22);
    e0(0) = 1.0;
    CHECK(fields.field_norm(e0, 0.0, NormKind::H0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(fields.field_norm(Eigen::VectorXd::Zero(22), 0.0, NormKind::H0) == 0.0);

    // empirical Riesz frame bounds from the family Gram matrices
    const Eigen::MatrixXd G0 = family_gram(s.basis, Family::Phi, 10, 10, false);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eg(G0);
    const double c1 = eg.eigenvalues().minCoeff();
    const double c2 = eg.eigenvalues().maxCoeff();
    CHECK(c1 > 0.0);

    auto ctrl = synthesize_state_feedback(s.model, s.basis, 1.0, false);
    auto sim = assemble_closed_loop(s.model, &ctrl, nullptr, s.basis, s.lift, 10, 10);
    auto data = smooth_compat_data(s.basis, s.lift, 0.3);
    Eigen::VectorXd x0 =
        sim.initial_state(project_initial(data, s.basis, s.lift, 10, 10), data.u0);
    auto rec = propagate(sim.M, x0, uniform_times(1.0, 11));
    for (Eigen::Index i = 0; i < rec.states.rows(); ++i) {
        const Eigen::VectorXd c = sim.plant_coeffs(rec.states.row(i).transpose());
        if (c.norm() < 1e-12) continue;
        const double ratio = std::pow(fields.state_field_norm(c, NormKind::H0), 2) /
                             std::pow(fields.coeff_norm(c, NormKind::H0), 2);
        CHECK(ratio >= c1 - 1e-8);
        CHECK(ratio <= c2 + 1e-8);
    }
}

TEST_CASE("closed-loop decay at the certified rate, H0 and H1") {
    Setup s(generic_cfg());
    auto ctrl = synthesize_state_feedback(s.model, s.basis, 1.0, false);
    auto sim = assemble_closed_loop(s.model, &ctrl, nullptr, s.basis, s.lift, 24, 24);
    auto data = smooth_compat_data(s.basis, s.lift, 0.3);
    Eigen::VectorXd x0 =
        sim.initial_state(project_initial(data, s.basis, s.lift, 24, 24), data.u0);
    auto rec = propagate(sim.M, x0, uniform_times(2.0, 101));
    FieldEvaluator fields(s.basis, s.lift, 24, 24);
    annotate_norms(rec, sim, fields);

    std::vector<double> q0(rec.times.size()), q1(rec.times.size());
    for (std::size_t i = 0; i < rec.times.size(); ++i) {
        q0[i] = rec.h0_norm[i] * rec.h0_norm[i] + rec.u_series[i] * rec.u_series[i];
        q1[i] = rec.h1_norm[i] * rec.h1_norm[i] + rec.u_series[i] * rec.u_series[i];
    }
    CHECK(fit_decay_rate(rec.times, q0, 0.4) <= -2.0 + 0.1);
    CHECK(fit_decay_rate(rec.times, q1, 0.4) <= -2.0 + 0.1);
    // H1 series stays finite from compatible data
    for (double v : rec.h1_norm) CHECK(std::isfinite(v));
}

TEST_CASE("fd_oracle: decoupled decay of the y component") {
    CascadeConfig cfg{1.0, 0.5, 1.0, Variant::S1};
    Setup s(cfg);
    auto data = modal_initial_data(s.basis, s.lift, {1.0}, {}, 0.0);
    FdOptions opt;
    opt.nx = 128;
    opt.dt = 5e-4;
    opt.T = 1.0;
    auto rec = fd_oracle(s.model, nullptr, nullptr, s.basis, data, opt);
    // z was zero and remains zero
    for (Eigen::Index i = 0; i < rec.states.rows(); ++i)
        CHECK(rec.states.row(i).segment(129, 129).cwiseAbs().maxCoeff() < 1e-8);
    const double rate = fit_decay_rate(rec.times, rec.h0_norm, 0.2);
    const double lam = s.basis.eigenvalue({Branch::B1, 0});
    CHECK(rate == doctest::Approx(lam).epsilon(0.02));
}

TEST_CASE("fd_oracle: second-order convergence to the modal solution") {
    Setup s(generic_cfg());
    auto data = smooth_compat_data(s.basis, s.lift, 0.0, 3);
    const double T = 0.25;

    auto sim = assemble_closed_loop(s.model, nullptr, nullptr, s.basis, s.lift, 32, 32);
    Eigen::VectorXd x0 =
        sim.initial_state(project_initial(data, s.basis, s.lift, 32, 32), 0.0);
    auto modal = propagate(sim.M, x0, {T});
    FieldEvaluator fields(s.basis, s.lift, 32, 32);

    auto field_error = [&](int nx) {
        FdOptions opt;
        opt.nx = nx;
        opt.dt = 1e-4;
        opt.T = T;
        opt.store_every = 1 << 20;  // keep first and last only
        auto rec = fd_oracle(s.model, nullptr, nullptr, s.basis, data, opt);
        Eigen::VectorXd y, z;
        fields.reconstruct(sim.plant_coeffs(modal.states.row(0).transpose()),
                           0.0, rec.x_grid, y, z);
        const auto last = rec.states.row(rec.states.rows() - 1);
        double err = 0.0, ref = 0.0;
        for (int g = 0; g <= nx; ++g) {
            err += std::pow(last(g) - y(g), 2) + std::pow(last(nx + 1 + g) - z(g), 2);
            ref += y(g) * y(g) + z(g) * z(g);
        }
        return std::sqrt(err / ref);
    };
    const double e64 = field_error(64);
    const double e128 = field_error(128);
    CHECK(e64 / e128 > 2.5);  // ~4x for a second-order scheme
    CHECK(e128 < 2e-3);
}

TEST_CASE("fd_oracle: closed-loop run tracks the modal solution") {
    Setup s(generic_cfg());
    auto ctrl = synthesize_state_feedback(s.model, s.basis, 1.0, false);
    auto data = smooth_compat_data(s.basis, s.lift, 0.3);
    FdOptions opt;
    opt.nx = 128;
    opt.dt = 5e-4;
    opt.T = 1.0;
    auto fd = fd_oracle(s.model, &ctrl, nullptr, s.basis, data, opt);

    auto sim = assemble_closed_loop(s.model, &ctrl, nullptr, s.basis, s.lift, 32, 32);
    Eigen::VectorXd x0 =
        sim.initial_state(project_initial(data, s.basis, s.lift, 32, 32), data.u0);
    auto modal = propagate(sim.M, x0, {opt.T});
    FieldEvaluator fields(s.basis, s.lift, 32, 32);
    Eigen::VectorXd y, z;
    fields.reconstruct(sim.plant_coeffs(modal.states.row(0).transpose()),
                       sim.input(modal.states.row(0).transpose()), fd.x_grid, y, z);
    const auto last = fd.states.row(fd.states.rows() - 1);
    double err = 0.0, ref = 0.0;
    for (int g = 0; g < static_cast<int>(fd.x_grid.size()); ++g) {
        err += std::pow(last(g) - y(g), 2) +
               std::pow(last(fd.x_grid.size() + g) - z(g), 2);
        ref += y(g) * y(g) + z(g) * z(g);
    }
    CHECK(std::sqrt(err / ref) < 2e-3);
}

TEST_CASE("resonant plant: full synthesis and decay through the Jordan pairs") {
    // Delta = {(0,3),(8,9)} forces N0 = 8, M0 = 9: a 20-state augmented model
    // with two Jordan blocks leading
    CascadeConfig cfg{-60.0, -60.0 + 35.0 * kPiSq / 4.0, 1.0, Variant::S1};
    Setup s(cfg, 0.5);
    REQUIRE(s.model.N0 == 8);
    REQUIRE(s.model.M0 == 9);
    REQUIRE(s.model.jordan_blocks.size() == 2);
    CHECK(controllability_verdict(s.model, s.basis).controllable);

    auto ctrl = synthesize_state_feedback(s.model, s.basis, 0.5);
    CHECK(ctrl.closed_loop_abscissa < -0.5);
    auto sim = assemble_closed_loop(s.model, &ctrl, nullptr, s.basis, s.lift, 24, 24);
    CHECK(spectral_abscissa(sim.M) < -0.5);

    auto data = smooth_compat_data(s.basis, s.lift, 0.2, 4);
    Eigen::VectorXd x0 =
        sim.initial_state(project_initial(data, s.basis, s.lift, 24, 24), data.u0);
    auto rec = propagate(sim.M, x0, uniform_times(4.0, 101));
    FieldEvaluator fields(s.basis, s.lift, 24, 24);
    annotate_norms(rec, sim, fields);
    std::vector<double> q(rec.times.size());
    for (std::size_t i = 0; i < q.size(); ++i)
        q[i] = rec.h0_norm[i] * rec.h0_norm[i] + rec.u_series[i] * rec.u_series[i];
    CHECK(fit_decay_rate(rec.times, q, 0.8) <= -1.0 + 0.1);
}

TEST_CASE("fd_oracle agrees with the modal flow on every variant") {
    for (Variant v : {Variant::S1, Variant::S2, Variant::S3, Variant::S4}) {
        CAPTURE(variant_name(v));
        Setup s(generic_cfg(v));
        auto data = smooth_compat_data(s.basis, s.lift, 0.3, 3);
        FdOptions opt;
        opt.nx = 96;
        opt.dt = 2e-4;
        opt.T = 0.25;
        opt.store_every = 1 << 20;
        auto fd = fd_oracle(s.model, nullptr, nullptr, s.basis, data, opt);

        auto sim = assemble_closed_loop(s.model, nullptr, nullptr, s.basis, s.lift, 32, 32);
        Eigen::VectorXd x0 = sim.initial_state(
            project_initial(data, s.basis, s.lift, 32, 32), data.u0);
        auto modal = propagate(sim.M, x0, {opt.T});
        FieldEvaluator fields(s.basis, s.lift, 32, 32);
        Eigen::VectorXd y, z;
        fields.reconstruct(sim.plant_coeffs(modal.states.row(0).transpose()),
                           sim.input(modal.states.row(0).transpose()), fd.x_grid, y, z);
        const auto last = fd.states.row(fd.states.rows() - 1);
        double err = 0.0, ref = 0.0;
        const int pts = static_cast<int>(fd.x_grid.size());
        for (int g = 0; g < pts; ++g) {
            err += std::pow(last(g) - y(g), 2) + std::pow(last(pts + g) - z(g), 2);
            ref += y(g) * y(g) + z(g) * z(g);
        }
        CHECK(std::sqrt(err / ref) < 5e-3);
    }

    // state-feedback closed loop on an adjoint variant exercises the grid
    // projections of the feedback path
    Setup s3(generic_cfg(Variant::S3));
    auto ctrl = synthesize_state_feedback(s3.model, s3.basis, 1.0, false);
    auto data = smooth_compat_data(s3.basis, s3.lift, 0.3, 3);
    FdOptions opt;
    opt.nx = 128;
    opt.dt = 5e-4;
    opt.T = 0.5;
    opt.store_every = 1 << 20;
    auto fd = fd_oracle(s3.model, &ctrl, nullptr, s3.basis, data, opt);
    auto sim = assemble_closed_loop(s3.model, &ctrl, nullptr, s3.basis, s3.lift, 32, 32);
    Eigen::VectorXd x0 =
        sim.initial_state(project_initial(data, s3.basis, s3.lift, 32, 32), data.u0);
    auto modal = propagate(sim.M, x0, {opt.T});
    FieldEvaluator fields(s3.basis, s3.lift, 32, 32);
    Eigen::VectorXd y, z;
    fields.reconstruct(sim.plant_coeffs(modal.states.row(0).transpose()),
                       sim.input(modal.states.row(0).transpose()), fd.x_grid, y, z);
    const auto last = fd.states.row(fd.states.rows() - 1);
    double err = 0.0, ref = 0.0;
    const int pts = static_cast<int>(fd.x_grid.size());
    for (int g = 0; g < pts; ++g) {
        err += std::pow(last(g) - y(g), 2) + std::pow(last(pts + g) - z(g), 2);
        ref += y(g) * y(g) + z(g) * z(g);
    }
    CHECK(std::sqrt(err / ref) < 5e-3);
}

TEST_CASE("fd_oracle rejects bad grids and reports divergence") {
    Setup s(generic_cfg());
    auto data = zero_initial_data();
    FdOptions opt;
    opt.nx = 16;
    CHECK_THROWS_AS(fd_oracle(s.model, nullptr, nullptr, s.basis, data, opt),
                    std::invalid_argument);
}

TEST_CASE("fit_decay_rate") {
    auto times = uniform_times(2.0, 41);
    std::vector<double> series(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) series[i] = std::exp(-3.0 * times[i]);
    CHECK(fit_decay_rate(times, series, 0.4) == doctest::Approx(-3.0).epsilon(1e-9));

    // open-loop single mode propagated exactly recovers its eigenvalue
    Setup s({1.0, 0.5, 1.0, Variant::S1});
    auto sim = assemble_closed_loop(s.model, nullptr, nullptr, s.basis, s.lift, 4, 4);
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(sim.dim());
    x0(0) = 1.0;
    auto rec = propagate(sim.M, x0, uniform_times(2.0, 41));
    std::vector<double> amp(rec.times.size());
    for (std::size_t i = 0; i < amp.size(); ++i) amp[i] = std::abs(rec.states(i, 0));
    const double lam = s.basis.eigenvalue({Branch::B1, 0});
    CHECK(fit_decay_rate(rec.times, amp, 0.4) == doctest::Approx(lam).epsilon(0.01));

    series[30] = -1.0;
    CHECK_THROWS_AS(fit_decay_rate(times, series, 0.4), NonPositiveSeries);
}

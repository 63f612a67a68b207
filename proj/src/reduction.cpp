#include "cascade/reduction.hpp"

#include <algorithm>
#include <cmath>

namespace cascade {

LiftingProfile lifting_profile(Variant v, const CascadeConfig& cfg) {
    LiftingProfile p;
    p.variant = v;
    p.c_reac = uses_adjoint(v) ? cfg.a : cfg.b;
    switch (v) {
        case Variant::S1: p.poly = {0.0, 1.0, -0.5}; break;  // x - x^2/2
        case Variant::S2: p.poly = {0.0, 0.0, 0.5}; break;   // x^2/2
        case Variant::S3: p.poly = {0.0, 1.0, -1.0}; break;  // x - x^2
        case Variant::S4: p.poly = {0.0, 0.0, 1.0}; break;   // x^2
    }
    // boundary traits, checked at construction
    const double tol = 1e-12;
    bool ok = std::abs(p.phi(0.0)) < tol;
    switch (v) {
        case Variant::S1: ok = ok && std::abs(p.dphi(0.0) - 1.0) < tol && std::abs(p.dphi(1.0)) < tol; break;
        case Variant::S2: ok = ok && std::abs(p.dphi(0.0)) < tol && std::abs(p.dphi(1.0) - 1.0) < tol; break;
        case Variant::S3: ok = ok && std::abs(p.phi(1.0)) < tol && std::abs(p.dphi(0.0) - 1.0) < tol; break;
        case Variant::S4: ok = ok && std::abs(p.dphi(0.0)) < tol && std::abs(p.phi(1.0) - 1.0) < tol; break;
    }
    if (!ok) throw std::logic_error("lifting_profile: boundary trait check failed");
    return p;
}

namespace {

// integral of f against the relevant component of a dual-basis vector
double project_on_dual(const std::function<double(double)>& f, const BasisVector& dual,
                       bool first_component, int f_osc) {
    QuadratureGrid q(panels_for_osc(std::max(f_osc, dual.osc())));
    double acc = 0.0;
    for (std::size_t i = 0; i < q.x.size(); ++i) {
        const BasisEval e = dual.eval(q.x[i]);
        acc += q.w[i] * f(q.x[i]) * (first_component ? e.v1 : e.v2);
    }
    return acc;
}

}  // namespace

InputCoefficients input_coefficients(ModeIndex mode, const SpectralBasis& basis,
                                     const LiftingProfile& lift) {
    const CascadeConfig& cfg = basis.config();
    const bool adjoint = uses_adjoint(cfg.variant);
    const BasisVector dual = basis.dual(mode);
    // The lifted source is (0,alpha)/(0,beta) for S1/S2 and (alpha,0)/(beta,0)
    // for S3/S4, so projections pair with the matching dual component.
    const bool first = lift.lifts_first_component();

    InputCoefficients out{};
    out.alpha = project_on_dual([&](double x) { return lift.alpha(x); }, dual, first, 2);
    out.beta = project_on_dual([&](double x) { return lift.beta(x); }, dual, first, 2);
    out.nu_quad = out.alpha + basis.eigenvalue(mode) * out.beta;

    const auto& res = basis.resonance();
    if (!adjoint) {
        // Jordan correction acts on the B1 row for S1/S2
        if (mode.branch == Branch::B1) {
            if (auto m = res.partner_of_b1(mode.k)) {
                const double beta2 = project_on_dual(
                    [&](double x) { return lift.beta(x); }, basis.dual({Branch::B2, *m}), first, 2);
                out.nu_quad -= std::sqrt(2.0) * cfg.s * mu(*m) * beta2;
            }
        }
    } else {
        // and on the B2 row for S3/S4
        if (mode.branch == Branch::B2) {
            if (auto n = res.partner_of_b2(mode.k)) {
                const double beta1 = project_on_dual(
                    [&](double x) { return lift.beta(x); }, basis.dual({Branch::B1, *n}), first, 2);
                out.nu_quad -= std::sqrt(2.0) * cfg.s * mu(mode.k) * beta1;
            }
        }
    }

    // closed-form boundary traces
    switch (cfg.variant) {
        case Variant::S1: out.nu_closed = -basis.psi(mode).eval(0.0).v2; break;
        case Variant::S2: out.nu_closed = basis.psi(mode).eval(1.0).v2; break;
        case Variant::S3: out.nu_closed = -basis.phi(mode).eval(0.0).v1; break;
        case Variant::S4: out.nu_closed = -basis.phi(mode).eval(1.0).d1; break;
    }
    return out;
}

std::pair<int, int> truncation_orders(const SpectralBasis& basis, double delta) {
    if (!(delta > 0.0)) throw std::invalid_argument("truncation_orders: delta must be > 0");
    const CascadeConfig& cfg = basis.config();
    int n0 = 0;
    while (eigenvalue({Branch::B1, n0 + 1}, cfg) >= -delta) ++n0;
    int m0 = 0;
    while (eigenvalue({Branch::B2, m0 + 1}, cfg) >= -delta) ++m0;
    const auto& res = basis.resonance();
    if (!res.delta.empty()) {
        n0 = std::max(n0, res.delta1.back());
        m0 = std::max(m0, res.delta2.back());
    }
    return {n0, m0};
}

ModeOrderings mode_orderings(const ResonanceSets& res, int N0, int M0) {
    if (!res.delta.empty() && (N0 < res.delta1.back() || M0 < res.delta2.back()))
        throw OrderingInfeasible("mode_orderings: truncation does not cover Delta");
    ModeOrderings out;
    out.perm1.reserve(N0 + 1);
    out.perm2.reserve(M0 + 1);
    for (const auto& [n, m] : res.delta) {
        out.perm1.push_back(n);
        out.perm2.push_back(m);
    }
    for (int n = 0; n <= N0; ++n)
        if (!res.in_delta1(n)) out.perm1.push_back(n);
    for (int m = 0; m <= M0; ++m)
        if (!res.in_delta2(m)) out.perm2.push_back(m);
    return out;
}

ReducedModel assemble_reduced(const SpectralBasis& basis, const LiftingProfile& lift,
                              double delta) {
    const CascadeConfig& cfg = basis.config();
    ReducedModel model(cfg);
    model.delta = delta;
    std::tie(model.N0, model.M0) = truncation_orders(basis, delta);
    const auto& res = basis.resonance();
    model.delta_pairs = res.delta;
    model.near_degenerate = res.near_degenerate;
    auto perms = mode_orderings(res, model.N0, model.M0);
    model.perm1 = perms.perm1;
    model.perm2 = perms.perm2;

    const int n_delta = static_cast<int>(res.delta.size());
    // state layout: interleaved Jordan pairs, then B1 tail, then B2 tail
    for (int i = 0; i < n_delta; ++i) {
        model.state_modes.push_back({Branch::B1, model.perm1[i]});
        model.state_modes.push_back({Branch::B2, model.perm2[i]});
    }
    for (int i = n_delta; i <= model.N0; ++i)
        model.state_modes.push_back({Branch::B1, model.perm1[i]});
    for (int i = n_delta; i <= model.M0; ++i)
        model.state_modes.push_back({Branch::B2, model.perm2[i]});

    const int dim = model.dim();
    model.A1 = Eigen::MatrixXd::Zero(dim, dim);
    model.B1u.resize(dim);
    model.B1v.resize(dim);
    for (int i = 0; i < dim; ++i) {
        const ModeIndex mode = model.state_modes[i];
        model.A1(i, i) = basis.eigenvalue(mode);
        const auto coeffs = input_coefficients(mode, basis, lift);
        model.B1u(i) = coeffs.alpha;
        model.B1v(i) = coeffs.beta;
    }
    for (int i = 0; i < n_delta; ++i) {
        const double coupling = -std::sqrt(2.0) * cfg.s * mu(model.perm2[i]);
        // upper-triangular block for the A-variants, lower for the adjoint ones
        if (!uses_adjoint(cfg.variant))
            model.A1(2 * i, 2 * i + 1) = coupling;
        else
            model.A1(2 * i + 1, 2 * i) = coupling;
        model.jordan_blocks.push_back(model.A1.block<2, 2>(2 * i, 2 * i));
    }

    model.A1a = Eigen::MatrixXd::Zero(dim + 1, dim + 1);
    model.A1a.topLeftCorner(dim, dim) = model.A1;
    model.A1a.topRightCorner(dim, 1) = model.B1u;
    model.B1a.resize(dim + 1);
    model.B1a.head(dim) = model.B1v;
    model.B1a(dim) = 1.0;
    return model;
}

MeasurementSpec MeasurementSpec::distributed(std::function<double(double)> weight, int osc) {
    MeasurementSpec m;
    m.kind = Kind::Distributed;
    m.c = weight ? std::move(weight) : [](double) { return 1.0; };
    m.c_osc = osc;
    return m;
}
MeasurementSpec MeasurementSpec::dirichlet(double xi) {
    if (xi < 0.0 || xi > 1.0) throw OutOfDomain("MeasurementSpec: xi outside [0,1]");
    MeasurementSpec m;
    m.kind = Kind::Dirichlet;
    m.xi = xi;
    return m;
}
MeasurementSpec MeasurementSpec::neumann(double xi) {
    if (xi < 0.0 || xi > 1.0) throw OutOfDomain("MeasurementSpec: xi outside [0,1]");
    MeasurementSpec m;
    m.kind = Kind::Neumann;
    m.xi = xi;
    return m;
}

double output_coefficient(const MeasurementSpec& meas, ModeIndex mode,
                          const SpectralBasis& basis) {
    const bool adjoint = uses_adjoint(basis.config().variant);
    // y is measured for S1/S2 (first component of Phi), z for S3/S4 (second
    // component of Psi)
    const BasisVector vec = adjoint ? basis.psi(mode) : basis.phi(mode);
    switch (meas.kind) {
        case MeasurementSpec::Kind::Dirichlet: {
            const BasisEval e = vec.eval(meas.xi);
            return adjoint ? e.v2 : e.v1;
        }
        case MeasurementSpec::Kind::Neumann: {
            const BasisEval e = vec.eval(meas.xi);
            return adjoint ? e.d2 : e.d1;
        }
        case MeasurementSpec::Kind::Distributed: {
            QuadratureGrid q(panels_for_osc(std::max(meas.c_osc, vec.osc())));
            double acc = 0.0;
            for (std::size_t i = 0; i < q.x.size(); ++i) {
                const BasisEval e = vec.eval(q.x[i]);
                acc += q.w[i] * meas.c(q.x[i]) * (adjoint ? e.v2 : e.v1);
            }
            return acc;
        }
    }
    return 0.0;
}

ObserverMatrices assemble_observer_matrices(const ReducedModel& model,
                                            const MeasurementSpec& meas,
                                            const SpectralBasis& basis, int N, int M) {
    if (N < model.N0 || M < model.M0)
        throw DimensionError("assemble_observer_matrices: N >= N0 and M >= M0 required");
    ObserverMatrices out;
    out.N = N;
    out.M = M;
    switch (meas.kind) {
        case MeasurementSpec::Kind::Distributed: out.kappa1 = 0.0; out.kappa2 = 0.0; break;
        case MeasurementSpec::Kind::Dirichlet: out.kappa1 = 1.0; out.kappa2 = 0.0; break;
        case MeasurementSpec::Kind::Neumann: out.kappa1 = 1.75; out.kappa2 = 1.0; break;
    }

    out.C1.resize(model.dim());
    for (int i = 0; i < model.dim(); ++i)
        out.C1(i) = output_coefficient(meas, model.state_modes[i], basis);

    const int tail = (N - model.N0) + (M - model.M0);
    out.A2 = Eigen::MatrixXd::Zero(tail, tail);
    out.B2u.resize(tail);
    out.B2v.resize(tail);
    out.C2.resize(tail);
    out.c_tail.resize(tail);
    const auto lift = lifting_profile(model.cfg.variant, model.cfg);
    for (int n = model.N0 + 1; n <= N; ++n) out.tail_modes.push_back({Branch::B1, n});
    for (int m = model.M0 + 1; m <= M; ++m) out.tail_modes.push_back({Branch::B2, m});
    for (int i = 0; i < tail; ++i) {
        const ModeIndex mode = out.tail_modes[i];
        out.A2(i, i) = basis.eigenvalue(mode);
        const auto coeffs = input_coefficients(mode, basis, lift);
        out.B2u(i) = coeffs.alpha;
        out.B2v(i) = coeffs.beta;
        const double c = output_coefficient(meas, mode, basis);
        out.c_tail(i) = c;
        const double kappa = mode.branch == Branch::B1 ? out.kappa1 : out.kappa2;
        out.C2(i) = c / std::pow(mode.k + 1.0, kappa);
    }
    return out;
}

}  // namespace cascade

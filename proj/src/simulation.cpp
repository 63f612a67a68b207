#include "cascade/simulation.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/LU>
#include <unsupported/Eigen/MatrixFunctions>

namespace cascade {

InitialData zero_initial_data() {
    InitialData d;
    d.y0 = [](double) { return 0.0; };
    d.z0 = [](double) { return 0.0; };
    d.compat_h1 = true;
    d.osc = 0;
    return d;
}

namespace {

InitialData from_modal_sum(const LiftingProfile& lift,
                           std::vector<std::pair<BasisVector, double>> terms, double u0) {
    const bool lift_first = lift.lifts_first_component();
    int osc = 2;
    for (const auto& [vec, c] : terms) osc = std::max(osc, vec.osc());
    InitialData d;
    d.u0 = u0;
    d.compat_h1 = true;
    d.osc = osc;
    d.y0 = [terms, lift, lift_first, u0](double x) {
        double acc = 0.0;
        for (const auto& [vec, c] : terms) acc += c * vec.eval(x).v1;
        if (lift_first) acc += lift.phi(x) * u0;
        return acc;
    };
    d.z0 = [terms, lift, lift_first, u0](double x) {
        double acc = 0.0;
        for (const auto& [vec, c] : terms) acc += c * vec.eval(x).v2;
        if (!lift_first) acc += lift.phi(x) * u0;
        return acc;
    };
    return d;
}

}  // namespace

InitialData smooth_compat_data(const SpectralBasis& basis, const LiftingProfile& lift,
                               double u0, int max_mode) {
    std::vector<std::pair<BasisVector, double>> terms;
    for (int k = 0; k <= max_mode; ++k) {
        terms.emplace_back(basis.primal({Branch::B1, k}), std::exp(-0.7 * k));
        terms.emplace_back(basis.primal({Branch::B2, k}),
                           0.6 * (k % 2 == 0 ? 1.0 : -1.0) * std::exp(-0.7 * k));
    }
    return from_modal_sum(lift, std::move(terms), u0);
}

InitialData modal_initial_data(const SpectralBasis& basis, const LiftingProfile& lift,
                               const std::vector<double>& b1, const std::vector<double>& b2,
                               double u0) {
    std::vector<std::pair<BasisVector, double>> terms;
    for (std::size_t k = 0; k < b1.size(); ++k)
        if (b1[k] != 0.0) terms.emplace_back(basis.primal({Branch::B1, static_cast<int>(k)}), b1[k]);
    for (std::size_t k = 0; k < b2.size(); ++k)
        if (b2[k] != 0.0) terms.emplace_back(basis.primal({Branch::B2, static_cast<int>(k)}), b2[k]);
    return from_modal_sum(lift, std::move(terms), u0);
}

double compatibility_residual(const InitialData& data, const CascadeConfig& cfg) {
    const double h = 1e-6;
    auto d_at = [&](const std::function<double(double)>& f, double x) {
        if (x < h) return (-3.0 * f(0.0) + 4.0 * f(h) - f(2 * h)) / (2.0 * h);
        if (x > 1.0 - h) return (3.0 * f(1.0) - 4.0 * f(1.0 - h) + f(1.0 - 2 * h)) / (2.0 * h);
        return (f(x + h) - f(x - h)) / (2.0 * h);
    };
    const double y1 = data.y0(1.0);
    const double dy0 = d_at(data.y0, 0.0);
    const double dz0 = d_at(data.z0, 0.0);
    const double dz1 = d_at(data.z0, 1.0);
    switch (cfg.variant) {
        case Variant::S1:
            return std::abs(y1) + std::abs(dz1) + std::abs(dy0 - cfg.s * data.z0(0.0)) +
                   std::abs(dz0 - data.u0);
        case Variant::S2:
            return std::abs(y1) + std::abs(dz0) + std::abs(dy0 - cfg.s * data.z0(0.0)) +
                   std::abs(dz1 - data.u0);
        case Variant::S3:
            return std::abs(y1) + std::abs(dz1) + std::abs(dz0 - cfg.s * data.y0(0.0)) +
                   std::abs(dy0 - data.u0);
        case Variant::S4:
            return std::abs(dy0) + std::abs(dz1) + std::abs(dz0 - cfg.s * data.y0(0.0)) +
                   std::abs(data.y0(1.0) - data.u0);
    }
    return 0.0;
}

// ---- field evaluator ---------------------------------------------------------

namespace {

int max_family_osc(const SpectralBasis& basis, int n_sim, int m_sim) {
    int osc = 0;
    for (int n = 0; n <= n_sim; ++n) osc = std::max(osc, basis.primal({Branch::B1, n}).osc());
    for (int m = 0; m <= m_sim; ++m) osc = std::max(osc, basis.primal({Branch::B2, m}).osc());
    return osc;
}

}  // namespace

FieldEvaluator::FieldEvaluator(const SpectralBasis& basis, const LiftingProfile& lift,
                               int n_sim, int m_sim)
    : basis_(basis),
      lift_(lift),
      n_sim_(n_sim),
      m_sim_(m_sim),
      grid_(panels_for_osc(max_family_osc(basis, n_sim, m_sim))) {
    const int modes = n_sim + m_sim + 2;
    const Eigen::Index nodes = static_cast<Eigen::Index>(grid_.x.size());
    v1_.resize(modes, nodes);
    v2_.resize(modes, nodes);
    d1_.resize(modes, nodes);
    d2_.resize(modes, nodes);
    h1_weights_.resize(modes);
    int row = 0;
    auto fill = [&](ModeIndex mode) {
        const BasisVector vec = basis.primal(mode);
        for (Eigen::Index j = 0; j < nodes; ++j) {
            const BasisEval e = vec.eval(grid_.x[j]);
            v1_(row, j) = e.v1;
            v2_(row, j) = e.v2;
            d1_(row, j) = e.d1;
            d2_(row, j) = e.d2;
        }
        h1_weights_(row) = mode.branch == Branch::B1
                               ? (mode.k + 0.5) * (mode.k + 0.5)
                               : 1.0 + static_cast<double>(mode.k) * mode.k;
        ++row;
    };
    for (int n = 0; n <= n_sim; ++n) fill({Branch::B1, n});
    for (int m = 0; m <= m_sim; ++m) fill({Branch::B2, m});

    w_ = Eigen::Map<const Eigen::VectorXd>(grid_.w.data(), nodes);
    lift_vals_.resize(nodes);
    dlift_vals_.resize(nodes);
    for (Eigen::Index j = 0; j < nodes; ++j) {
        lift_vals_(j) = lift.phi(grid_.x[j]);
        dlift_vals_(j) = lift.dphi(grid_.x[j]);
    }
}

void FieldEvaluator::reconstruct(const Eigen::VectorXd& coeffs, double u,
                                 const std::vector<double>& xs, Eigen::VectorXd& y,
                                 Eigen::VectorXd& z, Eigen::VectorXd* dy,
                                 Eigen::VectorXd* dz) const {
    const Eigen::Index n = static_cast<Eigen::Index>(xs.size());
    y.resize(n);
    z.resize(n);
    if (dy) dy->resize(n);
    if (dz) dz->resize(n);
    const bool lift_first = lift_.lifts_first_component();
    std::vector<BasisVector> vecs;
    vecs.reserve(coeffs.size());
    for (int k = 0; k <= n_sim_; ++k) vecs.push_back(basis_.primal({Branch::B1, k}));
    for (int k = 0; k <= m_sim_; ++k) vecs.push_back(basis_.primal({Branch::B2, k}));
    for (Eigen::Index j = 0; j < n; ++j) {
        double yv = 0, zv = 0, dyv = 0, dzv = 0;
        for (Eigen::Index i = 0; i < coeffs.size(); ++i) {
            if (coeffs(i) == 0.0) continue;
            const BasisEval e = vecs[i].eval(xs[j]);
            yv += coeffs(i) * e.v1;
            zv += coeffs(i) * e.v2;
            dyv += coeffs(i) * e.d1;
            dzv += coeffs(i) * e.d2;
        }
        const double lv = lift_.phi(xs[j]) * u;
        const double dlv = lift_.dphi(xs[j]) * u;
        if (lift_first) {
            yv += lv;
            dyv += dlv;
        } else {
            zv += lv;
            dzv += dlv;
        }
        y(j) = yv;
        z(j) = zv;
        if (dy) (*dy)(j) = dyv;
        if (dz) (*dz)(j) = dzv;
    }
}

double FieldEvaluator::field_norm(const Eigen::VectorXd& coeffs, double u,
                                  NormKind kind) const {
    Eigen::VectorXd y = v1_.transpose() * coeffs;
    Eigen::VectorXd z = v2_.transpose() * coeffs;
    const bool lift_first = lift_.lifts_first_component();
    if (lift_first)
        y += u * lift_vals_;
    else
        z += u * lift_vals_;
    if (kind == NormKind::H0)
        return std::sqrt((w_.array() * (y.array().square() + z.array().square())).sum());
    Eigen::VectorXd dy = d1_.transpose() * coeffs;
    Eigen::VectorXd dz = d2_.transpose() * coeffs;
    if (lift_first)
        dy += u * dlift_vals_;
    else
        dz += u * dlift_vals_;
    return std::sqrt((w_.array() *
                      (dy.array().square() + z.array().square() + dz.array().square()))
                         .sum());
}

double FieldEvaluator::state_field_norm(const Eigen::VectorXd& coeffs, NormKind kind) const {
    return field_norm(coeffs, 0.0, kind);
}

double FieldEvaluator::coeff_norm(const Eigen::VectorXd& coeffs, NormKind kind) const {
    if (kind == NormKind::H0) return coeffs.norm();
    return std::sqrt((h1_weights_.array() * coeffs.array().square()).sum());
}

Eigen::VectorXd project_initial(const InitialData& data, const SpectralBasis& basis,
                                const LiftingProfile& lift, int n_sim, int m_sim) {
    const bool lift_first = lift.lifts_first_component();
    const int osc = std::max(data.osc, max_family_osc(basis, n_sim, m_sim));
    QuadratureGrid q(panels_for_osc(osc));
    const Eigen::Index nodes = static_cast<Eigen::Index>(q.x.size());
    // lifted state X~ = X + (beta, 0) u or (0, beta) u with beta = -phi
    Eigen::VectorXd x1(nodes), x2(nodes);
    for (Eigen::Index j = 0; j < nodes; ++j) {
        const double shift = lift.phi(q.x[j]) * data.u0;
        x1(j) = data.y0(q.x[j]) - (lift_first ? shift : 0.0);
        x2(j) = data.z0(q.x[j]) - (lift_first ? 0.0 : shift);
    }
    Eigen::VectorXd coeffs(n_sim + m_sim + 2);
    int row = 0;
    auto project = [&](ModeIndex mode) {
        const BasisVector dual = basis.dual(mode);
        double acc = 0.0;
        for (Eigen::Index j = 0; j < nodes; ++j) {
            const BasisEval e = dual.eval(q.x[j]);
            acc += q.w[j] * (x1(j) * e.v1 + x2(j) * e.v2);
        }
        coeffs(row++) = acc;
    };
    for (int n = 0; n <= n_sim; ++n) project({Branch::B1, n});
    for (int m = 0; m <= m_sim; ++m) project({Branch::B2, m});
    return coeffs;
}

// ---- closed-loop assembly ----------------------------------------------------

Eigen::VectorXd ClosedLoopSim::initial_state(const Eigen::VectorXd& plant_coeffs, double u0,
                                             const Eigen::VectorXd& observer0) const {
    if (plant_coeffs.size() != plant_dim())
        throw DimensionError("initial_state: plant coefficient size mismatch");
    Eigen::VectorXd x = Eigen::VectorXd::Zero(dim());
    x.head(plant_dim()) = plant_coeffs;
    x(u_index()) = u0;
    if (observer0.size() > 0) {
        if (observer0.size() != obs_dim)
            throw DimensionError("initial_state: observer size mismatch");
        x.tail(obs_dim) = observer0;
    }
    return x;
}

ClosedLoopSim assemble_closed_loop(const ReducedModel& model,
                                   const ControllerRealization* controller,
                                   const MeasurementSpec* meas, const SpectralBasis& basis,
                                   const LiftingProfile& lift, int n_sim, int m_sim) {
    if (n_sim < model.N0 || m_sim < model.M0)
        throw DimensionError("assemble_closed_loop: simulation orders below (N0, M0)");
    const bool observing = controller && !controller->state_feedback();
    if (observing && (n_sim < controller->N || m_sim < controller->M))
        throw DimensionError("assemble_closed_loop: simulation orders below observer (N, M)");
    if (observing && !meas)
        throw std::invalid_argument("assemble_closed_loop: observer requires a measurement");

    ClosedLoopSim sim;
    sim.n_sim = n_sim;
    sim.m_sim = m_sim;
    sim.has_observer = observing;
    const int rd = model.dim();
    const int tail = observing ? static_cast<int>(controller->observer->A2.rows()) : 0;
    sim.obs_dim = observing ? rd + tail : 0;
    const int total = sim.dim();
    const int u_idx = sim.u_index();
    const int obs_off = u_idx + 1;

    auto plant_index = [&](ModeIndex mode) {
        return mode.branch == Branch::B1 ? mode.k : n_sim + 1 + mode.k;
    };

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(total, total);
    Eigen::VectorXd bv = Eigen::VectorXd::Zero(total);  // multiplies v

    // plant modes
    const CascadeConfig& cfg = basis.config();
    for (int n = 0; n <= n_sim; ++n) {
        const int i = plant_index({Branch::B1, n});
        A(i, i) = basis.eigenvalue({Branch::B1, n});
        const auto c = input_coefficients({Branch::B1, n}, basis, lift);
        A(i, u_idx) = c.alpha;
        bv(i) = c.beta;
    }
    for (int m = 0; m <= m_sim; ++m) {
        const int i = plant_index({Branch::B2, m});
        A(i, i) = basis.eigenvalue({Branch::B2, m});
        const auto c = input_coefficients({Branch::B2, m}, basis, lift);
        A(i, u_idx) = c.alpha;
        bv(i) = c.beta;
    }
    for (const auto& [n, m] : basis.resonance().delta) {
        if (n > n_sim || m > m_sim) continue;
        const double coupling = -std::sqrt(2.0) * cfg.s * mu(m);
        if (!uses_adjoint(cfg.variant))
            A(plant_index({Branch::B1, n}), plant_index({Branch::B2, m})) = coupling;
        else
            A(plant_index({Branch::B2, m}), plant_index({Branch::B1, n})) = coupling;
    }
    bv(u_idx) = 1.0;  // u' = v

    Eigen::RowVectorXd v_row = Eigen::RowVectorXd::Zero(total);
    if (controller && controller->state_feedback()) {
        // v = -K [X1; u] with X1 selected from the true plant modes
        for (int i = 0; i < rd; ++i)
            v_row(plant_index(model.state_modes[i])) -= controller->K(i);
        v_row(u_idx) -= controller->K(rd);
    } else if (observing) {
        for (int i = 0; i < rd; ++i) v_row(obs_off + i) -= controller->K(i);
        v_row(u_idx) -= controller->K(rd);

        const ObserverMatrices& obs = *controller->observer;
        // measurement over every simulated plant mode
        Eigen::RowVectorXd meas_row = Eigen::RowVectorXd::Zero(total);
        for (int n = 0; n <= n_sim; ++n)
            meas_row(plant_index({Branch::B1, n})) =
                output_coefficient(*meas, {Branch::B1, n}, basis);
        for (int m = 0; m <= m_sim; ++m)
            meas_row(plant_index({Branch::B2, m})) =
                output_coefficient(*meas, {Branch::B2, m}, basis);

        // X^1' = A1 X^1 + B1u u + B1v v - L (C1 X^1 + c_tail x^tail - y_m)
        A.block(obs_off, obs_off, rd, rd) = model.A1;
        A.block(obs_off, u_idx, rd, 1) = model.B1u;
        for (int i = 0; i < rd; ++i) bv(obs_off + i) = model.B1v(i);
        A.block(obs_off, obs_off, rd, rd) -= controller->L * obs.C1;
        if (tail > 0)
            A.block(obs_off, obs_off + rd, rd, tail) -= controller->L * obs.c_tail;
        A.block(obs_off, 0, rd, total) += controller->L * meas_row;

        // observer tail copies
        for (int i = 0; i < tail; ++i) {
            const int r = obs_off + rd + i;
            A(r, r) = obs.A2(i, i);
            A(r, u_idx) = obs.B2u(i);
            bv(r) = obs.B2v(i);
        }
    }

    sim.M = A + bv * v_row;
    return sim;
}

TrajectoryRecord propagate(const Eigen::MatrixXd& Mcl, const Eigen::VectorXd& state0,
                           const std::vector<double>& times) {
    if (times.empty() || times.front() < 0.0)
        throw std::invalid_argument("propagate: times must start at t >= 0");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (times[i] <= times[i - 1])
            throw std::invalid_argument("propagate: times must be strictly increasing");

    TrajectoryRecord rec;
    rec.times = times;
    rec.states.resize(static_cast<Eigen::Index>(times.size()), state0.size());
    Eigen::VectorXd state = state0;
    double prev_t = 0.0, prev_dt = -1.0;
    Eigen::MatrixXd step;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double dt = times[i] - prev_t;
        if (dt > 0.0) {
            if (std::abs(dt - prev_dt) > 1e-15 * std::max(dt, prev_dt)) {
                step = (Mcl * dt).exp();
                prev_dt = dt;
            }
            state = step * state;
        }
        rec.states.row(static_cast<Eigen::Index>(i)) = state.transpose();
        prev_t = times[i];
    }
    return rec;
}

void annotate_norms(TrajectoryRecord& record, const ClosedLoopSim& sim,
                    const FieldEvaluator& fields) {
    const Eigen::Index rows = record.states.rows();
    record.h0_norm.resize(rows);
    record.h1_norm.resize(rows);
    record.u_series.resize(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const Eigen::VectorXd state = record.states.row(i).transpose();
        const Eigen::VectorXd coeffs = sim.plant_coeffs(state);
        const double u = sim.input(state);
        record.h0_norm[i] = fields.field_norm(coeffs, u, NormKind::H0);
        record.h1_norm[i] = fields.field_norm(coeffs, u, NormKind::H1);
        record.u_series[i] = u;
    }
}

// ---- finite-difference oracle --------------------------------------------------

TrajectoryRecord fd_oracle(const ReducedModel& model, const ControllerRealization* controller,
                           const MeasurementSpec* meas, const SpectralBasis& basis,
                           const InitialData& data, const FdOptions& opt) {
    if (opt.nx < 32) throw std::invalid_argument("fd_oracle: nx must be >= 32");
    if (!(opt.dt > 0.0) || !(opt.T > 0.0))
        throw std::invalid_argument("fd_oracle: dt and T must be positive");
    const CascadeConfig& cfg = basis.config();
    const Variant v = cfg.variant;
    const int nx = opt.nx;
    const double h = 1.0 / nx;
    const int ny = nx;       // y_0..y_{nx-1}; y_nx eliminated (Dirichlet row)
    const int nz = nx + 1;   // z_0..z_nx
    const bool state_fb = controller && controller->state_feedback();
    const bool observing = controller && !controller->state_feedback();
    if (observing && !meas)
        throw std::invalid_argument("fd_oracle: observer requires a measurement");
    const int rd = model.dim();
    const int tail = observing ? static_cast<int>(controller->observer->A2.rows()) : 0;
    const int u_idx = ny + nz;
    const int obs_off = u_idx + 1;
    const int total = ny + nz + 1 + (observing ? rd + tail : 0);

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(total, total);
    const double ih2 = 1.0 / (h * h);

    // y rows: ghost-node elimination at x=0, Dirichlet at x=1
    for (int i = 0; i < ny; ++i) {
        A(i, i) += cfg.a;
        if (i == 0) {
            A(0, 0) += -2.0 * ih2;
            A(0, 1) += 2.0 * ih2;
            switch (v) {
                case Variant::S1:
                case Variant::S2: A(0, ny + 0) += -2.0 * cfg.s / h; break;  // y'(0) = s z(0)
                case Variant::S3: A(0, u_idx) += -2.0 / h; break;           // y'(0) = u
                case Variant::S4: break;                                    // y'(0) = 0
            }
        } else {
            A(i, i - 1) += ih2;
            A(i, i) += -2.0 * ih2;
            if (i + 1 < ny)
                A(i, i + 1) += ih2;
            else if (v == Variant::S4)
                A(i, u_idx) += ih2;  // y(1) = u enters the last interior row
            // else y(1) = 0: no contribution
        }
    }
    // z rows: Neumann/Robin ghosts on both ends
    for (int j = 0; j <= nx; ++j) {
        const int r = ny + j;
        A(r, r) += cfg.b;
        if (j == 0) {
            A(r, r) += -2.0 * ih2;
            A(r, r + 1) += 2.0 * ih2;
            switch (v) {
                case Variant::S1: A(r, u_idx) += -2.0 / h; break;      // z'(0) = u
                case Variant::S2: break;                               // z'(0) = 0
                case Variant::S3:
                case Variant::S4: A(r, 0) += -2.0 * cfg.s / h; break;  // z'(0) = s y(0)
            }
        } else if (j == nx) {
            A(r, r - 1) += 2.0 * ih2;
            A(r, r) += -2.0 * ih2;
            if (v == Variant::S2) A(r, u_idx) += 2.0 / h;  // z'(1) = u
        } else {
            A(r, r - 1) += ih2;
            A(r, r) += -2.0 * ih2;
            A(r, r + 1) += ih2;
        }
    }

    auto trap_w = [&](int idx) { return (idx == 0 || idx == nx) ? 0.5 * h : h; };
    // grid value of the eliminated y boundary node
    auto y_boundary_u_coeff = [&]() { return v == Variant::S4 ? 1.0 : 0.0; };

    // rows over the state realizing grid functionals of the measured component
    // (value at each node of the chosen grid, u-column entries included)
    auto component_row = [&](bool on_y, const Eigen::VectorXd& node_weights) {
        Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(total);
        for (int g = 0; g <= nx; ++g) {
            const double wgt = node_weights(g);
            if (wgt == 0.0) continue;
            if (on_y) {
                if (g < ny)
                    row(g) += wgt;
                else
                    row(u_idx) += wgt * y_boundary_u_coeff();
            } else {
                row(ny + g) += wgt;
            }
        }
        return row;
    };

    Eigen::RowVectorXd v_row = Eigen::RowVectorXd::Zero(total);
    if (state_fb) {
        // x~_{i,k} = <(y,z), dual_{i,k}> + beta_{i,k} u;  v = -K [X1; u]
        for (int i = 0; i < rd; ++i) {
            const BasisVector dual = basis.dual(model.state_modes[i]);
            Eigen::VectorXd wy(nx + 1), wz(nx + 1);
            for (int g = 0; g <= nx; ++g) {
                const BasisEval e = dual.eval(g * h);
                wy(g) = trap_w(g) * e.v1;
                wz(g) = trap_w(g) * e.v2;
            }
            Eigen::RowVectorXd proj = component_row(true, wy) + component_row(false, wz);
            proj(u_idx) += model.B1v(i);
            v_row -= controller->K(i) * proj;
        }
        v_row(u_idx) -= controller->K(rd);
    } else if (observing) {
        for (int i = 0; i < rd; ++i) v_row(obs_off + i) -= controller->K(i);
        v_row(u_idx) -= controller->K(rd);
    }

    if (observing) {
        const bool on_y = !uses_adjoint(v);  // y measured for S1/S2, z for S3/S4
        Eigen::VectorXd node_weights = Eigen::VectorXd::Zero(nx + 1);
        switch (meas->kind) {
            case MeasurementSpec::Kind::Distributed:
                for (int g = 0; g <= nx; ++g) node_weights(g) = trap_w(g) * meas->c(g * h);
                break;
            case MeasurementSpec::Kind::Dirichlet: {
                const double pos = meas->xi / h;
                const int g0 = std::min(static_cast<int>(pos), nx - 1);
                const double frac = pos - g0;
                node_weights(g0) = 1.0 - frac;
                node_weights(g0 + 1) = frac;
                break;
            }
            case MeasurementSpec::Kind::Neumann: {
                // interpolate second-order derivative stencils at the two
                // bracketing nodes
                const double pos = meas->xi / h;
                const int g0 = std::min(static_cast<int>(pos), nx - 1);
                const double frac = pos - g0;
                auto add_deriv = [&](int node, double scale) {
                    if (scale == 0.0) return;
                    if (node == 0) {
                        node_weights(0) += scale * (-1.5 / h);
                        node_weights(1) += scale * (2.0 / h);
                        node_weights(2) += scale * (-0.5 / h);
                    } else if (node == nx) {
                        node_weights(nx) += scale * (1.5 / h);
                        node_weights(nx - 1) += scale * (-2.0 / h);
                        node_weights(nx - 2) += scale * (0.5 / h);
                    } else {
                        node_weights(node + 1) += scale * (0.5 / h);
                        node_weights(node - 1) += scale * (-0.5 / h);
                    }
                };
                add_deriv(g0, 1.0 - frac);
                add_deriv(g0 + 1, frac);
                break;
            }
        }
        const Eigen::RowVectorXd meas_row = component_row(on_y, node_weights);

        const ObserverMatrices& obs = *controller->observer;
        A.block(obs_off, obs_off, rd, rd) = model.A1 - controller->L * obs.C1;
        A.block(obs_off, u_idx, rd, 1) += model.B1u;
        if (tail > 0)
            A.block(obs_off, obs_off + rd, rd, tail) -= controller->L * obs.c_tail;
        A.block(obs_off, 0, rd, total) += controller->L * meas_row;
        for (int i = 0; i < tail; ++i) {
            const int r = obs_off + rd + i;
            A(r, r) += obs.A2(i, i);
            A(r, u_idx) += obs.B2u(i);
        }
    }

    Eigen::VectorXd bv = Eigen::VectorXd::Zero(total);
    bv(u_idx) = 1.0;
    if (observing) {
        bv.segment(obs_off, rd) = model.B1v;
        if (tail > 0) bv.segment(obs_off + rd, tail) = controller->observer->B2v;
    }
    const Eigen::MatrixXd M = A + bv * v_row;

    // Crank-Nicolson stepping
    const int steps = static_cast<int>(std::ceil(opt.T / opt.dt - 1e-12));
    const double dt = opt.T / steps;
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(total, total);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(I - 0.5 * dt * M);
    const Eigen::MatrixXd rhs_op = I + 0.5 * dt * M;

    Eigen::VectorXd state = Eigen::VectorXd::Zero(total);
    for (int g = 0; g < ny; ++g) state(g) = data.y0(g * h);
    for (int g = 0; g <= nx; ++g) state(ny + g) = data.z0(g * h);
    state(u_idx) = data.u0;

    TrajectoryRecord rec;
    rec.x_grid.resize(nx + 1);
    for (int g = 0; g <= nx; ++g) rec.x_grid[g] = g * h;
    std::vector<Eigen::VectorXd> stored;
    std::vector<double> stored_t;
    auto store = [&](double t) {
        stored_t.push_back(t);
        Eigen::VectorXd row(2 * (nx + 1) + 1);
        row.head(ny) = state.head(ny);
        row(nx) = y_boundary_u_coeff() * state(u_idx);  // y(1)
        row.segment(nx + 1, nz) = state.segment(ny, nz);
        row(2 * (nx + 1)) = state(u_idx);
        stored.push_back(std::move(row));
    };
    store(0.0);
    for (int k = 1; k <= steps; ++k) {
        state = lu.solve(rhs_op * state);
        if (!state.allFinite() || state.cwiseAbs().maxCoeff() > 1e12)
            throw DivergenceDetected("fd_oracle: state norm exceeded 1e12");
        if (k % opt.store_every == 0 || k == steps) store(k * dt);
    }

    rec.times = stored_t;
    rec.states.resize(static_cast<Eigen::Index>(stored.size()), 2 * (nx + 1) + 1);
    for (std::size_t i = 0; i < stored.size(); ++i)
        rec.states.row(static_cast<Eigen::Index>(i)) = stored[i].transpose();

    // grid norms: trapezoid in space, second-order difference for derivatives
    rec.h0_norm.resize(stored.size());
    rec.h1_norm.resize(stored.size());
    rec.u_series.resize(stored.size());
    auto grid_deriv = [&](const Eigen::VectorXd& f, int g) {
        if (g == 0) return (-1.5 * f(0) + 2.0 * f(1) - 0.5 * f(2)) / h;
        if (g == nx) return (1.5 * f(nx) - 2.0 * f(nx - 1) + 0.5 * f(nx - 2)) / h;
        return (f(g + 1) - f(g - 1)) / (2.0 * h);
    };
    for (std::size_t i = 0; i < stored.size(); ++i) {
        const Eigen::VectorXd y = stored[i].head(nx + 1);
        const Eigen::VectorXd z = stored[i].segment(nx + 1, nx + 1);
        double h0 = 0.0, h1 = 0.0;
        for (int g = 0; g <= nx; ++g) {
            const double wgt = trap_w(g);
            h0 += wgt * (y(g) * y(g) + z(g) * z(g));
            const double dy = grid_deriv(y, g);
            const double dz = grid_deriv(z, g);
            h1 += wgt * (dy * dy + z(g) * z(g) + dz * dz);
        }
        rec.h0_norm[i] = std::sqrt(h0);
        rec.h1_norm[i] = std::sqrt(h1);
        rec.u_series[i] = stored[i](2 * (nx + 1));
    }
    return rec;
}

double fit_decay_rate(const std::vector<double>& times, const std::vector<double>& series,
                      double t_start) {
    if (times.size() != series.size() || times.size() < 2)
        throw std::invalid_argument("fit_decay_rate: size mismatch");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int count = 0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < t_start) continue;
        if (!(series[i] > 0.0))
            throw NonPositiveSeries("fit_decay_rate: series must be positive on the window");
        const double x = times[i];
        const double y = std::log(series[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++count;
    }
    if (count < 2) throw std::invalid_argument("fit_decay_rate: window too short");
    const double denom = count * sxx - sx * sx;
    return (count * sxy - sx * sy) / denom;
}

std::vector<double> uniform_times(double T, int count) {
    std::vector<double> t(count);
    for (int i = 0; i < count; ++i) t[i] = T * i / (count - 1.0);
    return t;
}

}  // namespace cascade

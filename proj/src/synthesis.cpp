#include "cascade/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace cascade {

double spectral_abscissa(const Eigen::MatrixXd& A) {
    if (A.rows() == 0) return -std::numeric_limits<double>::infinity();
    Eigen::EigenSolver<Eigen::MatrixXd> es(A, /*computeEigenvectors=*/false);
    return es.eigenvalues().real().maxCoeff();
}

ControllabilityReport hautus_test(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B_or_C,
                                  bool dual, double tol) {
    if (A.rows() != A.cols()) throw DimensionError("hautus_test: A must be square");
    const Eigen::MatrixXd As = dual ? Eigen::MatrixXd(A.transpose()) : A;
    const Eigen::MatrixXd Bs = dual ? Eigen::MatrixXd(B_or_C.transpose()) : B_or_C;
    if (Bs.rows() != As.rows()) throw DimensionError("hautus_test: incompatible B/C shape");

    const double scale = std::max(A.norm(), 1.0);
    Eigen::EigenSolver<Eigen::MatrixXd> es(As, false);

    ControllabilityReport report;
    report.hautus_min_sv = std::numeric_limits<double>::infinity();
    const Eigen::Index n = As.rows();
    Eigen::MatrixXcd pencil(n, n + Bs.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        const std::complex<double> lam = es.eigenvalues()(i);
        pencil.leftCols(n) = As.cast<std::complex<double>>();
        pencil.leftCols(n).diagonal().array() -= lam;
        pencil.rightCols(Bs.cols()) = Bs.cast<std::complex<double>>();
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(pencil);
        const double smin = svd.singularValues().minCoeff() / scale;
        report.hautus_min_sv = std::min(report.hautus_min_sv, smin);
        if (smin < tol) {
            report.controllable = false;
            report.offending.push_back({std::nullopt, lam.real()});
        }
    }
    return report;
}

namespace {

// Attach mode identities to flagged eigenvalues using the model layout.
void map_offending_modes(ControllabilityReport& report, const ReducedModel& model,
                         const SpectralBasis& basis) {
    for (auto& [mode, lam] : report.offending) {
        for (const ModeIndex& candidate : model.state_modes) {
            const double ev = basis.eigenvalue(candidate);
            if (std::abs(ev - lam) <= 1e-6 * std::max(1.0, std::abs(ev))) {
                mode = candidate;
                break;
            }
        }
    }
    // collapse duplicates (complex pairs, repeated flags)
    std::sort(report.offending.begin(), report.offending.end(),
              [](const auto& a, const auto& b) { return a.second < b.second; });
    report.offending.erase(
        std::unique(report.offending.begin(), report.offending.end(),
                    [](const auto& a, const auto& b) {
                        return std::abs(a.second - b.second) <
                               1e-9 * std::max(1.0, std::abs(a.second));
                    }),
        report.offending.end());
}

std::string offending_to_string(const ControllabilityReport& report) {
    std::ostringstream os;
    for (const auto& [mode, lam] : report.offending) {
        if (mode)
            os << (mode->branch == Branch::B1 ? " lambda_{1," : " lambda_{2,") << mode->k << "}="
               << lam;
        else
            os << " lambda=" << lam;
    }
    return os.str();
}

}  // namespace

ControllabilityReport controllability_verdict(const ReducedModel& model,
                                              const SpectralBasis& basis, double tol) {
    ControllabilityReport report = hautus_test(model.A1a, model.B1a, false, tol);
    map_offending_modes(report, model, basis);
    const Variant v = model.cfg.variant;
    if (v == Variant::S1) {
        auto res = resonance_sets(model.cfg, model.N0);
        report.theta_hits = res.theta;
    } else if (v == Variant::S3) {
        // Theta' indexes the B2 family, truncated at M0.
        auto res = resonance_sets(model.cfg, model.M0);
        report.theta_hits = res.theta_prime;
    }
    return report;
}

ControllabilityReport observability_verdict(const ReducedModel& model,
                                            const MeasurementSpec& meas,
                                            const SpectralBasis& basis, double tol) {
    const CascadeConfig& cfg = model.cfg;
    const bool adjoint = uses_adjoint(cfg.variant);
    const auto& res = basis.resonance();

    // Closed-form condition value per mode; the mode is unobservable exactly
    // when this vanishes.  Modes exempted by the Delta-indexed rules get a
    // sentinel.
    auto condition_value = [&](ModeIndex mode) -> std::optional<double> {
        if (!adjoint) {
            // measurement on y; conditions on Phi first components
            if (mode.branch == Branch::B1) {
                const double w = (mode.k + 0.5) * kPi;
                switch (meas.kind) {
                    case MeasurementSpec::Kind::Dirichlet: return std::cos(w * meas.xi);
                    case MeasurementSpec::Kind::Neumann: return std::sin(w * meas.xi);
                    case MeasurementSpec::Kind::Distributed:
                        return output_coefficient(meas, mode, basis);
                }
            }
            if (res.in_delta2(mode.k)) return std::nullopt;  // exempt
            const double z = cfg.b - cfg.a - static_cast<double>(mode.k) * mode.k * kPiSq;
            switch (meas.kind) {
                case MeasurementSpec::Kind::Dirichlet: return sc_s(z, 1.0 - meas.xi);
                case MeasurementSpec::Kind::Neumann: return sc_c(z, 1.0 - meas.xi);
                case MeasurementSpec::Kind::Distributed:
                    return output_coefficient(meas, mode, basis);
            }
        } else {
            // measurement on z; conditions on Psi second components
            if (mode.branch == Branch::B2) {
                switch (meas.kind) {
                    case MeasurementSpec::Kind::Dirichlet:
                        return std::cos(mode.k * kPi * meas.xi);
                    case MeasurementSpec::Kind::Neumann:
                        // psi_{2,0}^2 is constant: the mode lambda_{2,0} = b is
                        // never observable through a Neumann trace
                        return mode.k == 0 ? 0.0 : std::sin(mode.k * kPi * meas.xi);
                    case MeasurementSpec::Kind::Distributed:
                        return output_coefficient(meas, mode, basis);
                }
            }
            if (res.in_delta1(mode.k)) return std::nullopt;  // exempt
            const double w = cfg.a - cfg.b - (mode.k + 0.5) * (mode.k + 0.5) * kPiSq;
            switch (meas.kind) {
                case MeasurementSpec::Kind::Dirichlet: return sc_c(w, 1.0 - meas.xi);
                case MeasurementSpec::Kind::Neumann: return sc_s(w, 1.0 - meas.xi);
                case MeasurementSpec::Kind::Distributed:
                    return output_coefficient(meas, mode, basis);
            }
        }
        return std::nullopt;
    };

    ControllabilityReport closed;
    for (const ModeIndex& mode : model.state_modes) {
        const auto value = condition_value(mode);
        if (value && std::abs(*value) <= 1e-8) {
            closed.controllable = false;
            closed.offending.push_back({mode, basis.eigenvalue(mode)});
        }
    }

    const Eigen::RowVectorXd C1 = [&] {
        Eigen::RowVectorXd c(model.dim());
        for (int i = 0; i < model.dim(); ++i)
            c(i) = output_coefficient(meas, model.state_modes[i], basis);
        return c;
    }();
    ControllabilityReport pbh = hautus_test(model.A1, C1, true, tol);
    map_offending_modes(pbh, model, basis);

    if (pbh.controllable != closed.controllable)
        throw InternalInconsistency(
            "observability_verdict: closed-form and Hautus verdicts disagree");
    closed.hautus_min_sv = pbh.hautus_min_sv;
    return closed;
}

Eigen::RowVectorXd place_poles(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                               const std::vector<double>& targets) {
    const Eigen::Index n = A.rows();
    if (A.cols() != n || b.size() != n)
        throw DimensionError("place_poles: A must be square with matching b");
    if (static_cast<Eigen::Index>(targets.size()) != n)
        throw std::invalid_argument("place_poles: need one target per state");
    for (std::size_t i = 0; i < targets.size(); ++i)
        for (std::size_t j = i + 1; j < targets.size(); ++j)
            if (std::abs(targets[i] - targets[j]) <
                1e-9 * std::max(1.0, std::abs(targets[i])))
                throw std::invalid_argument("place_poles: targets must be distinct");

    auto ctrb = hautus_test(A, b, false);
    if (!ctrb.controllable)
        throw Uncontrollable("place_poles: pair is uncontrollable at" +
                             offending_to_string(ctrb));

    // Krylov controllability matrix with unit-norm column scaling.
    Eigen::MatrixXd C(n, n);
    Eigen::VectorXd col = b;
    for (Eigen::Index j = 0; j < n; ++j) {
        C.col(j) = col;
        col = A * col;
    }
    Eigen::VectorXd d(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double nrm = C.col(j).norm();
        d(j) = nrm > 0.0 ? 1.0 / nrm : 1.0;
    }
    const Eigen::MatrixXd Cs = C * d.asDiagonal();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Cs, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double cond = svd.singularValues()(0) / svd.singularValues()(n - 1);
    if (!(cond < kPlacementCondLimit))
        throw IllConditioned("place_poles: controllability matrix condition " +
                             std::to_string(cond));

    // Ackermann: K = e_n^T C^{-1} p(A).  With C = Cs diag(1/d) this reads
    // Cs^T w = d_n e_n, solved through the SVD: w = U S^{-1} V^T rhs.
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs(n - 1) = d(n - 1);
    const Eigen::VectorXd w = svd.matrixU() *
                              (svd.singularValues().cwiseInverse().asDiagonal() *
                               (svd.matrixV().transpose() * rhs));
    Eigen::MatrixXd pA = Eigen::MatrixXd::Identity(n, n);
    for (double t : targets) pA = pA * (A - t * Eigen::MatrixXd::Identity(n, n));
    Eigen::RowVectorXd K = w.transpose() * pA;

    // verify the placement before returning it
    Eigen::EigenSolver<Eigen::MatrixXd> es(A - b * K, false);
    std::vector<double> got(n);
    for (Eigen::Index i = 0; i < n; ++i) got[i] = es.eigenvalues()(i).real();
    std::vector<double> want = targets;
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    for (Eigen::Index i = 0; i < n; ++i) {
        const double imag_ok = std::abs(es.eigenvalues()(i).imag());
        if (imag_ok > 1e-5 * std::max(1.0, std::abs(want[i])) ||
            std::abs(got[i] - want[i]) > 1e-6 * std::max(1.0, std::abs(want[i])))
            throw IllConditioned("place_poles: placement verification failed");
    }
    return K;
}

Eigen::VectorXd observer_gain(const Eigen::MatrixXd& A1, const Eigen::RowVectorXd& C1,
                              const std::vector<double>& targets) {
    try {
        Eigen::RowVectorXd Kt =
            place_poles(A1.transpose(), C1.transpose(), targets);
        return Kt.transpose();
    } catch (const Uncontrollable& e) {
        throw Unobservable(std::string("observer_gain: ") + e.what());
    }
}

Eigen::MatrixXd lyapunov_certificate(const Eigen::MatrixXd& Acl, double delta) {
    const double absc = spectral_abscissa(Acl);
    if (!(absc < -delta))
        throw NotStableEnough("lyapunov_certificate: abscissa " + std::to_string(absc) +
                              " not below -delta");
    const Eigen::Index n = Acl.rows();
    const Eigen::MatrixXd As = Acl + delta * Eigen::MatrixXd::Identity(n, n);
    // vec(As^T P + P As) = (I (x) As^T + As^T (x) I) vec(P) = -vec(I)
    Eigen::MatrixXd kron = Eigen::MatrixXd::Zero(n * n, n * n);
    for (Eigen::Index i = 0; i < n; ++i)
        kron.block(i * n, i * n, n, n) = As.transpose();
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index k = 0; k < n; ++k) kron(i * n + k, j * n + k) += As(j, i);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n * n);
    for (Eigen::Index i = 0; i < n; ++i) rhs(i * n + i) = -1.0;
    const Eigen::VectorXd vecP = kron.partialPivLu().solve(rhs);
    Eigen::MatrixXd P(n, n);
    for (Eigen::Index j = 0; j < n; ++j) P.col(j) = vecP.segment(j * n, n);
    P = 0.5 * (P + P.transpose()).eval();

    const double residual =
        (Acl.transpose() * P + P * Acl + 2.0 * delta * P +
         Eigen::MatrixXd::Identity(n, n))
            .norm();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P);
    if (residual > 1e-8 || es.eigenvalues().minCoeff() <= 0.0)
        throw std::runtime_error("lyapunov_certificate: solve failed, residual " +
                                 std::to_string(residual));
    return P;
}

Eigen::RowVectorXd riccati_gain(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                double delta) {
    const Eigen::Index n = A.rows();
    auto ctrb = hautus_test(A, b, false);
    if (!ctrb.controllable)
        throw Uncontrollable("riccati_gain: pair is uncontrollable at" +
                             offending_to_string(ctrb));
    const Eigen::MatrixXd As = A + 2.0 * delta * Eigen::MatrixXd::Identity(n, n);
    // Matrix-sign iteration for the shifted CARE
    //   As^T P + P As - P b b^T P + I = 0
    // (Byers' iteration with determinant scaling).
    Eigen::MatrixXd H(2 * n, 2 * n);
    H << As, b * b.transpose(), Eigen::MatrixXd::Identity(n, n), -As.transpose();
    Eigen::MatrixXd Z = H;
    for (int iter = 0; iter < 200; ++iter) {
        const double ck = std::pow(std::abs(Z.determinant()), -1.0 / (2.0 * n));
        Z *= ck;
        const Eigen::MatrixXd Znext = Z - 0.5 * (Z - Z.inverse());
        const double drift = (Znext - Z).norm();
        Z = Znext;
        if (drift < 1e-12 * std::max(1.0, Z.norm())) break;
    }
    const Eigen::MatrixXd W11 = Z.topLeftCorner(n, n);
    const Eigen::MatrixXd W12 = Z.topRightCorner(n, n);
    const Eigen::MatrixXd W21 = Z.bottomLeftCorner(n, n);
    const Eigen::MatrixXd W22 = Z.bottomRightCorner(n, n);
    Eigen::MatrixXd lhs(2 * n, n), rhs(2 * n, n);
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
    lhs << W12, W22 + eye;
    rhs << W11 + eye, W21;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(lhs, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::MatrixXd P = svd.solve(rhs);
    return (b.transpose() * P).eval();
}

namespace {

// The certificate is optional on extreme plants: when ||Acl|| ||P|| pushes the
// residual floor of double precision past the certificate tolerance, the
// controller is still returned (stability is certified by abscissa and
// simulation), just without P.
std::optional<Eigen::MatrixXd> try_certificate(const Eigen::MatrixXd& Acl, double delta) {
    try {
        return lyapunov_certificate(Acl, delta);
    } catch (const NotStableEnough&) {
        throw;
    } catch (const std::runtime_error&) {
        return std::nullopt;
    }
}

}  // namespace

std::vector<double> default_targets(double delta, int dim) {
    std::vector<double> t(dim);
    for (int j = 0; j < dim; ++j) t[j] = -(delta + 1.0 + 0.5 * j);
    return t;
}

Eigen::MatrixXd output_feedback_matrix(const ReducedModel& model, const ObserverMatrices& obs,
                                       const Eigen::RowVectorXd& K, const Eigen::VectorXd& L) {
    const int na = model.dim_aug();
    const int ne = model.dim();
    const int nt = static_cast<int>(obs.A2.rows());
    const int total = na + ne + 2 * nt;
    Eigen::MatrixXd F = Eigen::MatrixXd::Zero(total, total);
    Eigen::VectorXd La = Eigen::VectorXd::Zero(na);
    La.head(ne) = L;
    Eigen::RowVectorXd C1 = obs.C1;

    F.topLeftCorner(na, na) = model.A1a - model.B1a * K;
    F.block(0, na, na, ne) = La * C1;
    F.block(0, na + ne + nt, na, nt) = La * obs.C2;
    F.block(na, na, ne, ne) = model.A1 - L * C1;
    F.block(na, na + ne + nt, ne, nt) = -L * obs.C2;
    if (nt > 0) {
        Eigen::MatrixXd Bu_row = Eigen::MatrixXd::Zero(nt, na);
        Bu_row.col(na - 1) = obs.B2u;
        F.block(na + ne, 0, nt, na) = Bu_row - obs.B2v * K;
        F.block(na + ne, na + ne, nt, nt) = obs.A2;
        F.block(na + ne + nt, na + ne + nt, nt, nt) = obs.A2;
    }
    return F;
}

namespace {

// F extended with the measurement residues: plant modes beyond (N, M) up to a
// probe truncation, wired through zeta_1 + zeta_2 = sum c_{i,k} x~_{i,k}.
Eigen::MatrixXd residue_extended_matrix(const ReducedModel& model, const ObserverMatrices& obs,
                                        const Eigen::RowVectorXd& K, const Eigen::VectorXd& L,
                                        const SpectralBasis& basis, const MeasurementSpec& meas,
                                        int probe_n, int probe_m) {
    const Eigen::MatrixXd F = output_feedback_matrix(model, obs, K, L);
    const int na = model.dim_aug();
    const int ne = model.dim();
    const int nt = static_cast<int>(obs.A2.rows());
    const int base = na + ne + 2 * nt;
    std::vector<ModeIndex> residues;
    for (int n = obs.N + 1; n <= probe_n; ++n) residues.push_back({Branch::B1, n});
    for (int m = obs.M + 1; m <= probe_m; ++m) residues.push_back({Branch::B2, m});
    const int nr = static_cast<int>(residues.size());

    Eigen::MatrixXd Fx = Eigen::MatrixXd::Zero(base + nr, base + nr);
    Fx.topLeftCorner(base, base) = F;
    const auto lift = lifting_profile(model.cfg.variant, model.cfg);
    Eigen::VectorXd Lscript = Eigen::VectorXd::Zero(base);
    Lscript.head(ne) = L;       // L_a top block of the script-L vector
    Lscript.segment(na, ne) = -L;
    for (int i = 0; i < nr; ++i) {
        const ModeIndex mode = residues[i];
        const int r = base + i;
        Fx(r, r) = basis.eigenvalue(mode);
        const auto coeffs = input_coefficients(mode, basis, lift);
        // u is the last entry of X^1a; v = -K X^1a
        Fx(r, na - 1) += coeffs.alpha;
        Fx.row(r).head(na) -= coeffs.beta * K;
        const double c = output_coefficient(meas, mode, basis);
        Fx.col(r).head(base) += Lscript * c;
    }
    return Fx;
}

}  // namespace

ObserverOrderResult select_observer_orders(const ReducedModel& model,
                                           const MeasurementSpec& meas,
                                           const SpectralBasis& basis,
                                           const Eigen::RowVectorXd& K,
                                           const Eigen::VectorXd& L, double delta,
                                           double margin) {
    int size = 1;  // = N - N0 + 1 = M - M0 + 1, doubled each round
    while (true) {
        const int N = std::min(model.N0 + size - 1, kObserverOrderCap);
        const int M = std::min(model.M0 + size - 1, kObserverOrderCap);
        const auto obs = assemble_observer_matrices(model, meas, basis, N, M);
        // abscissa of the coupled loop with the measurement residues
        // represented up to a probe truncation
        const Eigen::MatrixXd Fx =
            residue_extended_matrix(model, obs, K, L, basis, meas,
                                    std::max(64, N + 16), std::max(64, M + 16));
        const double absc = spectral_abscissa(Fx);
        const bool tails_ok =
            eigenvalue({Branch::B1, N + 1}, model.cfg) + 2.0 * delta < 0.0 &&
            eigenvalue({Branch::B2, M + 1}, model.cfg) + 2.0 * delta < 0.0;
        if (absc < -delta + margin && tails_ok) return {N, M, absc};
        if (N == kObserverOrderCap && M == kObserverOrderCap)
            throw OrderSearchExhausted("select_observer_orders: cap reached at " +
                                       std::to_string(kObserverOrderCap));
        size *= 2;
    }
}

ControllerRealization synthesize_state_feedback(const ReducedModel& model,
                                                const SpectralBasis& basis, double delta,
                                                bool with_certificate, GainMethod method) {
    auto ctrb = controllability_verdict(model, basis);
    if (!ctrb.controllable)
        throw Uncontrollable("synthesize_state_feedback: uncontrollable at" +
                             offending_to_string(ctrb));
    ControllerRealization out;
    if (method == GainMethod::Placement) {
        out.targets = default_targets(delta, model.dim_aug());
        out.K = place_poles(model.A1a, model.B1a, out.targets);
    } else {
        out.K = riccati_gain(model.A1a, model.B1a, delta);
    }
    const Eigen::MatrixXd Acl = model.A1a - model.B1a * out.K;
    out.closed_loop_abscissa = spectral_abscissa(Acl);
    if (with_certificate) out.P = try_certificate(Acl, delta);
    out.N = model.N0;
    out.M = model.M0;
    return out;
}

ControllerRealization synthesize_output_feedback(const ReducedModel& model,
                                                 const MeasurementSpec& meas,
                                                 const SpectralBasis& basis, double delta,
                                                 double margin, bool with_certificate,
                                                 GainMethod method) {
    auto ctrb = controllability_verdict(model, basis);
    if (!ctrb.controllable)
        throw Uncontrollable("synthesize_output_feedback: uncontrollable at" +
                             offending_to_string(ctrb));
    auto obsv = observability_verdict(model, meas, basis);
    if (!obsv.controllable)
        throw Unobservable("synthesize_output_feedback: unobservable at" +
                           offending_to_string(obsv));

    ControllerRealization out;
    Eigen::RowVectorXd C1(model.dim());
    for (int i = 0; i < model.dim(); ++i)
        C1(i) = output_coefficient(meas, model.state_modes[i], basis);
    if (method == GainMethod::Placement) {
        out.targets = default_targets(delta, model.dim_aug());
        out.K = place_poles(model.A1a, model.B1a, out.targets);
        out.L = observer_gain(model.A1, C1, default_targets(delta, model.dim()));
    } else {
        out.K = riccati_gain(model.A1a, model.B1a, delta);
        try {
            out.L = riccati_gain(model.A1.transpose(), C1.transpose(), delta).transpose();
        } catch (const Uncontrollable& e) {
            throw Unobservable(std::string("synthesize_output_feedback: ") + e.what());
        }
    }

    const auto orders = select_observer_orders(model, meas, basis, out.K, out.L, delta, margin);
    out.N = orders.N;
    out.M = orders.M;
    out.observer = assemble_observer_matrices(model, meas, basis, orders.N, orders.M);
    out.kappa1 = out.observer->kappa1;
    out.kappa2 = out.observer->kappa2;

    const Eigen::MatrixXd AK = model.A1a - model.B1a * out.K;
    const Eigen::MatrixXd AL = model.A1 - out.L * C1;
    out.closed_loop_abscissa = std::max(spectral_abscissa(AK), spectral_abscissa(AL));
    if (with_certificate) out.P = try_certificate(AK, delta);
    return out;
}

}  // namespace cascade

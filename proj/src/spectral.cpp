#include "cascade/spectral.hpp"

#include <algorithm>
#include <cmath>

namespace cascade {

namespace {

// 8-node Gauss-Legendre rule on [-1,1].
constexpr double kGlNode[4] = {0.18343464249564980494, 0.52553240991632898582,
                               0.79666647741362673959, 0.96028985649753623168};
constexpr double kGlWeight[4] = {0.36268378337836198297, 0.31370664587788728734,
                                 0.22238103445337447054, 0.10122853629037625915};

long long integer_sqrt(long long t) {
    if (t < 0) return -1;
    long long r = std::llround(std::sqrt(static_cast<double>(t)));
    while (r > 0 && r * r > t) --r;
    while ((r + 1) * (r + 1) <= t) ++r;
    return r;
}

}  // namespace

double sc_s(double z, double x) {
    const double u = z * x * x;
    if (std::abs(u) < 1e-2) {
        // sinh(sqrt(z)x)/sqrt(z) = x (1 + u/6 + u^2/120 + u^3/5040 + u^4/362880)
        return x * (1.0 + u / 6.0 + u * u / 120.0 + u * u * u / 5040.0 +
                    u * u * u * u / 362880.0);
    }
    if (z > 0.0) {
        const double r = std::sqrt(z);
        return std::sinh(r * x) / r;
    }
    const double r = std::sqrt(-z);
    return std::sin(r * x) / r;
}

double sc_c(double z, double x) {
    const double u = z * x * x;
    if (std::abs(u) < 1e-2) {
        return 1.0 + u / 2.0 + u * u / 24.0 + u * u * u / 720.0 + u * u * u * u / 40320.0;
    }
    if (z > 0.0) return std::cosh(std::sqrt(z) * x);
    return std::cos(std::sqrt(-z) * x);
}

double eigenvalue(ModeIndex mode, const CascadeConfig& cfg) {
    if (mode.branch == Branch::B1) {
        const double h = mode.k + 0.5;
        return cfg.a - h * h * kPiSq;
    }
    return cfg.b - static_cast<double>(mode.k) * mode.k * kPiSq;
}

bool ResonanceSets::in_delta1(int n) const {
    return std::binary_search(delta1.begin(), delta1.end(), n);
}
bool ResonanceSets::in_delta2(int m) const {
    return std::binary_search(delta2.begin(), delta2.end(), m);
}
std::optional<int> ResonanceSets::partner_of_b1(int n) const {
    for (const auto& [dn, dm] : delta)
        if (dn == n) return dm;
    return std::nullopt;
}
std::optional<int> ResonanceSets::partner_of_b2(int m) const {
    for (const auto& [dn, dm] : delta)
        if (dm == m) return dn;
    return std::nullopt;
}

ResonanceSets resonance_sets(const CascadeConfig& cfg, int kmax, double tol) {
    if (kmax < 0) throw std::invalid_argument("resonance_sets: kmax must be >= 0");
    ResonanceSets res;
    res.kmax = kmax;
    res.tol = tol;

    const double q4_real = 4.0 * (cfg.b - cfg.a) / kPiSq;
    const long long q4 = std::llround(q4_real);
    res.residual4 =
        std::abs(q4_real - static_cast<double>(q4)) / std::max(1.0, std::abs(static_cast<double>(q4)));
    const bool int4 = res.residual4 <= tol;

    const double q1_real = (cfg.b - cfg.a) / kPiSq;
    const long long q1 = std::llround(q1_real);
    res.residual1 =
        std::abs(q1_real - static_cast<double>(q1)) / std::max(1.0, std::abs(static_cast<double>(q1)));
    const bool int1 = res.residual1 <= tol;

    res.near_degenerate = (!int4 && res.residual4 <= 100.0 * tol) ||
                          (!int1 && res.residual1 <= 100.0 * tol);

    if (int4) {
        // Delta: 4m^2 = q4 + (2n+1)^2, max(n,m) <= |q4|/2 (finite by Lemma 1).
        const long long bound = std::llabs(q4) / 2;
        for (long long n = 0; n <= bound; ++n) {
            const long long t = q4 + (2 * n + 1) * (2 * n + 1);
            if (t <= 0 || t % 4 != 0) continue;
            const long long r = integer_sqrt(t / 4);
            if (r >= 0 && r * r == t / 4) {
                res.delta.emplace_back(static_cast<int>(n), static_cast<int>(r));
                res.delta1.push_back(static_cast<int>(n));
                res.delta2.push_back(static_cast<int>(r));
            }
        }
        // Theta: (2k+1)^2 = q4 + (2n+1)^2 for some k >= 0.
        for (int n = 0; n <= kmax; ++n) {
            const long long t = q4 + (2LL * n + 1) * (2LL * n + 1);
            if (t < 1) continue;
            const long long r = integer_sqrt(t);
            if (r * r == t && r % 2 == 1) res.theta.push_back(n);
        }
    }
    if (int1) {
        // Theta': k^2 = m^2 - q1 for some k >= 1.
        for (int m = 0; m <= kmax; ++m) {
            const long long t = static_cast<long long>(m) * m - q1;
            if (t < 1) continue;
            const long long r = integer_sqrt(t);
            if (r * r == t) res.theta_prime.push_back(m);
        }
    }
    std::sort(res.delta1.begin(), res.delta1.end());
    std::sort(res.delta2.begin(), res.delta2.end());
    return res;
}

// ---- basis construction ----------------------------------------------------

SpectralBasis::SpectralBasis(CascadeConfig cfg, double tol, double cn_perturbation)
    : cfg_(cfg), res_(resonance_sets(cfg, 0, tol)), cn_perturbation_(cn_perturbation) {}

BasisVector SpectralBasis::phi(ModeIndex mode) const {
    BasisVector v(Family::Phi, mode);
    v.lambda_ = eigenvalue(mode);
    v.s_ = cfg_.s;
    const int hyp_margin = 2 + static_cast<int>(std::ceil(std::sqrt(std::abs(cfg_.b - cfg_.a)) / kPi));
    if (mode.branch == Branch::B1) {
        v.profile_ = BasisVector::Profile::PhiB1;
        v.osc_ = mode.k + 1;
        return v;
    }
    if (auto n = res_.partner_of_b2(mode.k)) {
        v.profile_ = BasisVector::Profile::PhiB2Jordan;
        v.partner = *n;
        v.osc_ = std::max(mode.k, *n + 1) + 1;
    } else {
        v.profile_ = BasisVector::Profile::PhiB2Regular;
        v.zq_ = cfg_.b - cfg_.a - static_cast<double>(mode.k) * mode.k * kPiSq;
        v.osc_ = mode.k + hyp_margin;
    }
    return v;
}

BasisVector SpectralBasis::psi(ModeIndex mode) const {
    BasisVector v(Family::Psi, mode);
    v.lambda_ = eigenvalue(mode);
    v.s_ = cfg_.s;
    const int hyp_margin = 2 + static_cast<int>(std::ceil(std::sqrt(std::abs(cfg_.b - cfg_.a)) / kPi));
    if (mode.branch == Branch::B2) {
        v.profile_ = BasisVector::Profile::PsiB2;
        v.osc_ = mode.k + 1;
        return v;
    }
    const int n = mode.k;
    if (auto m = res_.partner_of_b1(n)) {
        v.partner = *m;
        if (*m == 0) {
            v.profile_ = BasisVector::Profile::PsiB1Jordan0;
            const double fac = (2.0 * n + 1.0) * (2.0 * n + 1.0) * kPiSq;
            v.gauge_ = -cfg_.s * std::sqrt(2.0) * (1.0 / 3.0 + 1.0 / fac) + cn_perturbation_;
        } else {
            v.profile_ = BasisVector::Profile::PsiB1JordanK;
            const double k = *m;
            v.gauge_ = -(2.0 * cfg_.s / kPiSq) *
                           (1.0 / ((2.0 * n + 1.0) * (2.0 * n + 1.0)) + 1.0 / (4.0 * k * k)) +
                       cn_perturbation_;
        }
        v.osc_ = std::max(n + 1, *m) + 1;
    } else {
        v.profile_ = BasisVector::Profile::PsiB1Regular;
        v.zq_ = cfg_.a - cfg_.b - (n + 0.5) * (n + 0.5) * kPiSq;
        v.gauge_ = cn_perturbation_;  // fault hook: constant offset on psi^2
        v.osc_ = n + hyp_margin;
    }
    return v;
}

BasisVector SpectralBasis::primal(ModeIndex mode) const {
    return uses_adjoint(cfg_.variant) ? psi(mode) : phi(mode);
}
BasisVector SpectralBasis::dual(ModeIndex mode) const {
    return uses_adjoint(cfg_.variant) ? phi(mode) : psi(mode);
}

BasisEval BasisVector::eval(double x) const {
    if (!(x >= 0.0 && x <= 1.0)) throw OutOfDomain("BasisVector::eval: x outside [0,1]");
    BasisEval e{0, 0, 0, 0, 0, 0};
    const double sqrt2 = std::sqrt(2.0);
    switch (profile_) {
        case Profile::PhiB1: {
            const double w = (mode.k + 0.5) * kPi;
            e.v1 = sqrt2 * std::cos(w * x);
            e.d1 = -sqrt2 * w * std::sin(w * x);
            e.dd1 = -w * w * e.v1;
            break;
        }
        case Profile::PhiB2Regular: {
            const double m = mode.k;
            const double mu_m = mu(mode.k);
            const double denom = sc_c(zq_, 1.0);
            e.v1 = -s_ * mu_m * sc_s(zq_, 1.0 - x) / denom;
            e.d1 = s_ * mu_m * sc_c(zq_, 1.0 - x) / denom;
            e.dd1 = zq_ * e.v1;
            const double w = m * kPi;
            e.v2 = mu_m * std::cos(w * x);
            e.d2 = -mu_m * w * std::sin(w * x);
            e.dd2 = -w * w * e.v2;
            break;
        }
        case Profile::PhiB2Jordan: {
            const double mu_m = mu(mode.k);
            const double w = (partner + 0.5) * kPi;
            const double c = s_ * mu_m / w;
            e.v1 = c * (1.0 - x) * std::sin(w * x);
            e.d1 = c * (-std::sin(w * x) + (1.0 - x) * w * std::cos(w * x));
            e.dd1 = -2.0 * s_ * mu_m * std::cos(w * x) - w * w * e.v1;
            const double wm = mode.k * kPi;
            e.v2 = mu_m * std::cos(wm * x);
            e.d2 = -mu_m * wm * std::sin(wm * x);
            e.dd2 = -wm * wm * e.v2;
            break;
        }
        case Profile::PsiB2: {
            const double w = mode.k * kPi;
            const double mu_m = mu(mode.k);
            e.v2 = mu_m * std::cos(w * x);
            e.d2 = -mu_m * w * std::sin(w * x);
            e.dd2 = -w * w * e.v2;
            break;
        }
        case Profile::PsiB1Regular: {
            const double w = (mode.k + 0.5) * kPi;
            e.v1 = sqrt2 * std::cos(w * x);
            e.d1 = -sqrt2 * w * std::sin(w * x);
            e.dd1 = -w * w * e.v1;
            const double denom = zq_ * sc_s(zq_, 1.0);
            e.v2 = -sqrt2 * s_ * sc_c(zq_, 1.0 - x) / denom + gauge_;
            e.d2 = sqrt2 * s_ * sc_s(zq_, 1.0 - x) / sc_s(zq_, 1.0);
            e.dd2 = zq_ * (e.v2 - gauge_);
            break;
        }
        case Profile::PsiB1Jordan0: {
            const double w = (mode.k + 0.5) * kPi;
            e.v1 = sqrt2 * std::cos(w * x);
            e.d1 = -sqrt2 * w * std::sin(w * x);
            e.dd1 = -w * w * e.v1;
            e.v2 = gauge_ + sqrt2 * s_ * x - 0.5 * sqrt2 * s_ * x * x;
            e.d2 = sqrt2 * s_ * (1.0 - x);
            e.dd2 = -sqrt2 * s_;
            break;
        }
        case Profile::PsiB1JordanK: {
            const double w = (mode.k + 0.5) * kPi;
            e.v1 = sqrt2 * std::cos(w * x);
            e.d1 = -sqrt2 * w * std::sin(w * x);
            e.dd1 = -w * w * e.v1;
            const double wk = partner * kPi;
            const double c = sqrt2 * s_ / wk;
            const double base = c * (1.0 - x) * std::sin(wk * x);
            e.v2 = base + gauge_ * sqrt2 * std::cos(wk * x);
            e.d2 = c * (-std::sin(wk * x) + (1.0 - x) * wk * std::cos(wk * x)) -
                   gauge_ * sqrt2 * wk * std::sin(wk * x);
            e.dd2 = -2.0 * sqrt2 * s_ * std::cos(wk * x) - wk * wk * e.v2;
            break;
        }
    }
    return e;
}

// ---- quadrature ------------------------------------------------------------

QuadratureGrid::QuadratureGrid(int panels) {
    if (panels < 1) panels = 1;
    x.reserve(8 * panels);
    w.reserve(8 * panels);
    const double hw = 0.5 / panels;
    for (int p = 0; p < panels; ++p) {
        const double mid = (p + 0.5) / panels;
        for (int j = 3; j >= 0; --j) {
            x.push_back(mid - hw * kGlNode[j]);
            w.push_back(hw * kGlWeight[j]);
        }
        for (int j = 0; j < 4; ++j) {
            x.push_back(mid + hw * kGlNode[j]);
            w.push_back(hw * kGlWeight[j]);
        }
    }
}

FieldFn as_field(const BasisVector& v) {
    FieldFn f;
    f.c1 = [v](double x) { return v.eval(x).v1; };
    f.c2 = [v](double x) { return v.eval(x).v2; };
    f.osc = v.osc();
    return f;
}

double inner_product_H0(const FieldFn& u, const FieldFn& v) {
    QuadratureGrid q(panels_for_osc(std::max(u.osc, v.osc)));
    double acc = 0.0;
    for (std::size_t i = 0; i < q.x.size(); ++i) {
        const double x = q.x[i];
        acc += q.w[i] * (u.c1(x) * v.c1(x) + u.c2(x) * v.c2(x));
    }
    return acc;
}

namespace {

std::vector<BasisVector> family_vectors(const SpectralBasis& basis, Family fam, int nmax,
                                        int mmax) {
    std::vector<BasisVector> out;
    out.reserve(nmax + mmax + 2);
    for (int n = 0; n <= nmax; ++n)
        out.push_back(fam == Family::Phi ? basis.phi({Branch::B1, n}) : basis.psi({Branch::B1, n}));
    for (int m = 0; m <= mmax; ++m)
        out.push_back(fam == Family::Phi ? basis.phi({Branch::B2, m}) : basis.psi({Branch::B2, m}));
    return out;
}

// Rows of values/derivatives sampled on the grid, one row per basis vector.
struct SampledFamily {
    Eigen::MatrixXd v1, v2, d1, d2;
};

SampledFamily sample_family(const std::vector<BasisVector>& vecs, const QuadratureGrid& q) {
    const Eigen::Index rows = static_cast<Eigen::Index>(vecs.size());
    const Eigen::Index cols = static_cast<Eigen::Index>(q.x.size());
    SampledFamily s;
    s.v1.resize(rows, cols);
    s.v2.resize(rows, cols);
    s.d1.resize(rows, cols);
    s.d2.resize(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            const BasisEval e = vecs[i].eval(q.x[j]);
            s.v1(i, j) = e.v1;
            s.v2(i, j) = e.v2;
            s.d1(i, j) = e.d1;
            s.d2(i, j) = e.d2;
        }
    }
    return s;
}

}  // namespace

GramResult biorthogonality_matrix(const SpectralBasis& basis, int nmax, int mmax) {
    if (nmax < 0 || mmax < 0)
        throw std::invalid_argument("biorthogonality_matrix: nmax, mmax must be >= 0");
    auto phis = family_vectors(basis, Family::Phi, nmax, mmax);
    auto psis = family_vectors(basis, Family::Psi, nmax, mmax);
    int osc = 0;
    for (const auto& v : phis) osc = std::max(osc, v.osc());
    for (const auto& v : psis) osc = std::max(osc, v.osc());
    QuadratureGrid q(panels_for_osc(osc));
    const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(q.w.data(), q.w.size());
    auto sp = sample_family(phis, q);
    auto sq = sample_family(psis, q);
    GramResult out;
    out.G = sp.v1 * w.asDiagonal() * sq.v1.transpose() +
            sp.v2 * w.asDiagonal() * sq.v2.transpose();
    out.max_abs_deviation =
        (out.G - Eigen::MatrixXd::Identity(out.G.rows(), out.G.cols())).cwiseAbs().maxCoeff();
    return out;
}

Eigen::MatrixXd family_gram(const SpectralBasis& basis, Family fam, int nmax, int mmax,
                            bool h1) {
    auto vecs = family_vectors(basis, fam, nmax, mmax);
    int osc = 0;
    for (const auto& v : vecs) osc = std::max(osc, v.osc());
    QuadratureGrid q(panels_for_osc(osc));
    const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(q.w.data(), q.w.size());
    auto s = sample_family(vecs, q);
    if (!h1)
        return s.v1 * w.asDiagonal() * s.v1.transpose() + s.v2 * w.asDiagonal() * s.v2.transpose();
    return s.d1 * w.asDiagonal() * s.d1.transpose() + s.v2 * w.asDiagonal() * s.v2.transpose() +
           s.d2 * w.asDiagonal() * s.d2.transpose();
}

// ---- residual diagnostics ---------------------------------------------------

double operator_residual(const BasisVector& vec, const SpectralBasis& basis,
                         const std::vector<double>& samples) {
    const auto& cfg = basis.config();
    const double lam = vec.lambda();
    const double sqrt2 = std::sqrt(2.0);
    double worst = 0.0;
    for (double x : samples) {
        const BasisEval e = vec.eval(x);
        double rhs1 = lam * e.v1;
        double rhs2 = lam * e.v2;
        if (vec.partner >= 0) {
            if (vec.family == Family::Phi && vec.mode.branch == Branch::B2) {
                // A phi_{2,m} = lambda phi_{2,m} - sqrt2 s mu_m phi_{1,n}
                const double w = (vec.partner + 0.5) * kPi;
                rhs1 -= sqrt2 * cfg.s * mu(vec.mode.k) * sqrt2 * std::cos(w * x);
            } else if (vec.family == Family::Psi && vec.mode.branch == Branch::B1) {
                // A* psi_{1,n} = lambda psi_{1,n} - sqrt2 s mu_m psi_{2,m}
                const double m = vec.partner;
                rhs2 -= sqrt2 * cfg.s * mu(vec.partner) * mu(vec.partner) * std::cos(m * kPi * x);
            }
        }
        const double r = std::abs(e.dd1 + cfg.a * e.v1 - rhs1) +
                         std::abs(e.dd2 + cfg.b * e.v2 - rhs2);
        worst = std::max(worst, r);
    }
    return worst;
}

double boundary_residual(const BasisVector& vec, const CascadeConfig& cfg) {
    const BasisEval e0 = vec.eval(0.0);
    const BasisEval e1 = vec.eval(1.0);
    if (vec.family == Family::Phi) {
        // D(A): f(1) = g'(0) = g'(1) = 0, f'(0) = s g(0)
        return std::abs(e1.v1) + std::abs(e0.d2) + std::abs(e1.d2) +
               std::abs(e0.d1 - cfg.s * e0.v2);
    }
    // D(A*): f(1) = f'(0) = g'(1) = 0, g'(0) = s f(0)
    return std::abs(e1.v1) + std::abs(e0.d1) + std::abs(e1.d2) +
           std::abs(e0.d2 - cfg.s * e0.v1);
}

std::vector<double> chebyshev_samples(int count) {
    std::vector<double> x(count);
    for (int j = 0; j < count; ++j)
        x[j] = 0.5 + 0.5 * std::cos((2.0 * j + 1.0) * kPi / (2.0 * count));
    return x;
}

}  // namespace cascade

#pragma once

// Closed-form eigenstructure of the boundary-coupled heat-heat cascade.
//
// The underlying operator is A(f,g) = (f'' + a f, g'' + b g) on
//   D(A)  : f(1) = g'(0) = g'(1) = 0,  f'(0) = s g(0)      (variants S1/S2)
//   D(A*) : f(1) = f'(0) = g'(1) = 0,  g'(0) = s f(0)      (variants S3/S4)
// with point spectrum
//   lambda_{1,n} = a - (n+1/2)^2 pi^2,   lambda_{2,m} = b - m^2 pi^2.
//
// The two eigenvalue families may collide; the collision pairs
//   Delta(a,b)  = { (n,m) : 4(b-a) = (4m^2 - (2n+1)^2) pi^2 }
// produce 2x2 Jordan blocks.  Single-mode controllability is lost on
//   Theta(a,b)  = { n : exists k >= 0, 4(b-a) = ((2k+1)^2 - (2n+1)^2) pi^2 }
//   Theta'(a,b) = { m : exists k >= 1,   b-a  = (m^2 - k^2) pi^2 }.
//
// The generalized eigenvectors Phi of A form a Riesz basis of
// L^2(0,1) x L^2(0,1); Psi is its biorthogonal dual (the generalized
// eigenvectors of A*).  All hyperbolic/trigonometric profiles are written in
// terms of the sign-uniform kernels
//   S(z,x) = sinh(sqrt(z) x)/sqrt(z)   (z>0), x (z=0), sin(sqrt(-z) x)/sqrt(-z) (z<0)
//   C(z,x) = cosh(sqrt(z) x)           (z>0), 1 (z=0), cos(sqrt(-z) x)          (z<0)
// so one real code path covers both signs of r^2 and the r -> 0 limit.

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cascade/types.hpp"

namespace cascade {

// Relative tolerance of the integer-resonance test on 4(b-a)/pi^2.
inline constexpr double kResonanceTol = 1e-9;

// S(z,x) and C(z,x) with d/dx S = C and d/dx C = z S.
double sc_s(double z, double x);
double sc_c(double z, double x);

double eigenvalue(ModeIndex mode, const CascadeConfig& cfg);

struct ResonanceSets {
    // Jordan pairs (n, m), sorted simultaneously increasing in both slots.
    std::vector<std::pair<int, int>> delta;
    std::vector<int> delta1;       // projections of delta
    std::vector<int> delta2;
    std::vector<int> theta;        // Theta(a,b)  intersected with {0..kmax}
    std::vector<int> theta_prime;  // Theta'(a,b) intersected with {0..kmax}
    int kmax = 0;
    double tol = kResonanceTol;
    // Residuals of the integer tests (relative); a residual inside
    // (tol, 100 tol] classifies as non-resonant but flags the config.
    double residual4 = 0.0;  // on 4(b-a)/pi^2
    double residual1 = 0.0;  // on (b-a)/pi^2
    bool near_degenerate = false;

    bool in_delta1(int n) const;
    bool in_delta2(int m) const;
    // Partner index within a Delta pair, or nullopt.
    std::optional<int> partner_of_b1(int n) const;
    std::optional<int> partner_of_b2(int m) const;
};

ResonanceSets resonance_sets(const CascadeConfig& cfg, int kmax, double tol = kResonanceTol);

enum class Family { Phi, Psi };

struct BasisEval {
    double v1, d1, dd1;  // first component: value, d/dx, d^2/dx^2
    double v2, d2, dd2;  // second component
};

// One (generalized) eigenvector of A or A*, with closed-form evaluation of
// both components and their first two derivatives.
class BasisVector {
public:
    Family family;
    ModeIndex mode;
    // Delta-partner index when the mode sits in a Jordan pair, else -1.
    int partner = -1;

    BasisEval eval(double x) const;  // throws OutOfDomain for x outside [0,1]
    double lambda() const { return lambda_; }
    // Oscillation index controlling quadrature panel counts.
    int osc() const { return osc_; }

private:
    friend class SpectralBasis;
    enum class Profile {
        PhiB1,         // (sqrt2 cos((n+1/2)pi x), 0)
        PhiB2Regular,  // first comp -s mu S(z,1-x)/C(z,1)
        PhiB2Jordan,   // first comp s mu/(w) (1-x) sin(w x), w=(k+1/2)pi
        PsiB2,         // (0, mu cos(m pi x))
        PsiB1Regular,  // second comp -sqrt2 s C(w,1-x)/(w S(w,1))
        PsiB1Jordan0,  // second comp c0 + sqrt2 s x - sqrt2/2 s x^2
        PsiB1JordanK,  // second comp sqrt2 s/(k pi)(1-x)sin(k pi x) + c_n sqrt2 cos(k pi x)
    };
    Profile profile_;
    double lambda_ = 0.0;
    double s_ = 0.0;
    double zq_ = 0.0;     // the r^2 argument of S/C where applicable
    double gauge_ = 0.0;  // c0 or c_n dual constant
    int osc_ = 0;

    BasisVector(Family f, ModeIndex m) : family(f), mode(m) {}
};

// Factory for Phi/Psi elements of one configuration.  Immutable after
// construction; all evaluations are pure.
class SpectralBasis {
public:
    // cn_perturbation is a fault-injection hook for the dual-gauge constants
    // c0/c_n (verification tooling only); leave 0 for correct duals.
    explicit SpectralBasis(CascadeConfig cfg, double tol = kResonanceTol,
                           double cn_perturbation = 0.0);

    const CascadeConfig& config() const { return cfg_; }
    const ResonanceSets& resonance() const { return res_; }

    double eigenvalue(ModeIndex mode) const { return cascade::eigenvalue(mode, cfg_); }
    BasisVector phi(ModeIndex mode) const;
    BasisVector psi(ModeIndex mode) const;
    // Primal expansion family of the variant: Phi for S1/S2, Psi for S3/S4.
    BasisVector primal(ModeIndex mode) const;
    // Dual family used for projections: Psi for S1/S2, Phi for S3/S4.
    BasisVector dual(ModeIndex mode) const;

private:
    CascadeConfig cfg_;
    ResonanceSets res_;
    double cn_perturbation_;
};

// ---- quadrature -----------------------------------------------------------

// Composite 8-node Gauss-Legendre grid on [0,1].
struct QuadratureGrid {
    explicit QuadratureGrid(int panels);
    std::vector<double> x;
    std::vector<double> w;
};

inline int panels_for_osc(int osc) { return 4 * (1 + osc); }

// A two-component function on [0,1] with an oscillation hint.
struct FieldFn {
    std::function<double(double)> c1;
    std::function<double(double)> c2;
    int osc = 0;
};

FieldFn as_field(const BasisVector& v);

// integral of (u1 v1 + u2 v2) over [0,1]; panel count follows the highest
// oscillation index involved.
double inner_product_H0(const FieldFn& u, const FieldFn& v);

struct GramResult {
    Eigen::MatrixXd G;          // G(i,j) = <Phi_i, Psi_j>, side nmax+mmax+2
    double max_abs_deviation;   // max |G - I|
};

// Combined index order: B1 0..nmax, then B2 0..mmax (both families).
GramResult biorthogonality_matrix(const SpectralBasis& basis, int nmax, int mmax);

// Gram matrix of one family against itself in the H0 (which=false) or H1
// (which=true) inner product; used for empirical Riesz frame bounds.
Eigen::MatrixXd family_gram(const SpectralBasis& basis, Family fam, int nmax, int mmax,
                            bool h1);

// ---- residual diagnostics -------------------------------------------------

// Max over samples of |f'' + a f - (RHS)_1| + |g'' + b g - (RHS)_2| where RHS
// is the eigen- or generalized-eigen relation of the mode's resonance class.
double operator_residual(const BasisVector& vec, const SpectralBasis& basis,
                         const std::vector<double>& samples);

// Residual of the domain boundary conditions: D(A) for Phi, D(A*) for Psi.
double boundary_residual(const BasisVector& vec, const CascadeConfig& cfg);

// 33 Chebyshev points in (0,1), the standard residual sample set.
std::vector<double> chebyshev_samples(int count = 33);

}  // namespace cascade

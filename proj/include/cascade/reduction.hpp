#pragma once

// Spectral reduction of the cascade: boundary-input lifting, modal input and
// output coefficients, truncation orders, Jordan-aware mode orderings, and
// the finite-dimensional matrices
//   X1'  = A1 X1 + B1u u + B1v v,        X1a = col(X1, u),
//   X1a' = A1a X1a + B1a v,   A1a = [[A1, B1u],[0,0]], B1a = [B1v; 1].
//
// The lifting z~ = z - phi(x) u (resp. y~ = y - phi(x) u for the adjoint
// variants) moves the boundary input into the distributed pair
// (alpha, beta) = (phi'' + c_reac phi, -phi) and augments the state with u,
// the new input being v = du/dt.

#include <array>
#include <functional>

#include <Eigen/Dense>

#include "cascade/spectral.hpp"

namespace cascade {

struct LiftingProfile {
    Variant variant;
    double c_reac;                  // b for S1/S2, a for S3/S4
    std::array<double, 3> poly;     // phi(x) = p0 + p1 x + p2 x^2

    double phi(double x) const { return poly[0] + x * (poly[1] + x * poly[2]); }
    double dphi(double x) const { return poly[1] + 2.0 * poly[2] * x; }
    double ddphi() const { return 2.0 * poly[2]; }
    double alpha(double x) const { return ddphi() + c_reac * phi(x); }
    double beta(double x) const { return -phi(x); }
    // true when the lifted input enters the first PDE component (S3/S4)
    bool lifts_first_component() const { return uses_adjoint(variant); }
};

LiftingProfile lifting_profile(Variant v, const CascadeConfig& cfg);

struct InputCoefficients {
    double alpha;      // projection of the alpha source on the dual mode
    double beta;       // projection of the beta source on the dual mode
    double nu_closed;  // variant-specific closed-form boundary trace
    double nu_quad;    // alpha + lambda beta (+ Jordan correction when paired)
};

InputCoefficients input_coefficients(ModeIndex mode, const SpectralBasis& basis,
                                     const LiftingProfile& lift);

// Smallest (N0, M0) with lambda_{1,N0+1} < -delta, lambda_{2,M0+1} < -delta,
// N0 >= max Delta_1 and M0 >= max Delta_2 (vacuous when Delta is empty).
std::pair<int, int> truncation_orders(const SpectralBasis& basis, double delta);

struct ModeOrderings {
    std::vector<int> perm1;  // permutation of {0..N0}: Delta_1 first, then increasing
    std::vector<int> perm2;  // permutation of {0..M0}
};

ModeOrderings mode_orderings(const ResonanceSets& res, int N0, int M0);

struct ReducedModel {
    explicit ReducedModel(CascadeConfig c) : cfg(c) {}

    CascadeConfig cfg;
    double delta = 0.0;
    int N0 = 0, M0 = 0;
    std::vector<std::pair<int, int>> delta_pairs;
    std::vector<int> perm1, perm2;
    // Modal state layout: interleaved Jordan pairs first, then the B1 tail,
    // then the B2 tail; size N0 + M0 + 2.
    std::vector<ModeIndex> state_modes;
    Eigen::MatrixXd A1;
    Eigen::VectorXd B1u, B1v;
    Eigen::MatrixXd A1a;  // side N0 + M0 + 3
    Eigen::VectorXd B1a;
    std::vector<Eigen::Matrix2d> jordan_blocks;
    bool near_degenerate = false;

    int dim() const { return N0 + M0 + 2; }
    int dim_aug() const { return N0 + M0 + 3; }
};

ReducedModel assemble_reduced(const SpectralBasis& basis, const LiftingProfile& lift,
                              double delta);

struct MeasurementSpec {
    enum class Kind { Distributed, Dirichlet, Neumann };
    Kind kind = Kind::Distributed;
    double xi = 0.0;                  // pointwise location in [0,1]
    std::function<double(double)> c;  // distributed weight (defaults to 1)
    int c_osc = 0;

    static MeasurementSpec distributed(std::function<double(double)> weight = nullptr,
                                       int osc = 0);
    static MeasurementSpec dirichlet(double xi);
    static MeasurementSpec neumann(double xi);
};

// The scalar c_{i,k} of the variant's measured component: Phi first components
// for S1/S2 (measurement on y), Psi second components for S3/S4 (measurement
// on z).
double output_coefficient(const MeasurementSpec& meas, ModeIndex mode,
                          const SpectralBasis& basis);

struct ObserverMatrices {
    int N = 0, M = 0;
    double kappa1 = 0.0, kappa2 = 0.0;
    Eigen::MatrixXd A2;       // diag of tail eigenvalues, side (N-N0)+(M-M0)
    Eigen::VectorXd B2u, B2v;
    Eigen::RowVectorXd C1;    // width N0 + M0 + 2, ordered like state_modes
    Eigen::RowVectorXd C2;    // kappa-scaled tail output coefficients
    std::vector<ModeIndex> tail_modes;
    // Raw (unscaled) tail output coefficients, same order as tail_modes.
    Eigen::RowVectorXd c_tail;
};

ObserverMatrices assemble_observer_matrices(const ReducedModel& model,
                                            const MeasurementSpec& meas,
                                            const SpectralBasis& basis, int N, int M);

}  // namespace cascade

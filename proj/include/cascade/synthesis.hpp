#pragma once

// Gain synthesis for the reduced cascade model: PBH controllability and
// observability verdicts, single-input pole placement, Luenberger observer
// gains, Lyapunov decay certificates, and the observer truncation-order
// search.  The closed-loop targets are abscissa < -delta for both
// A1a - B1a K and A1 - L C1.

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "cascade/reduction.hpp"

namespace cascade {

// Relative singular-value threshold of the PBH test.
inline constexpr double kHautusTol = 1e-8;
// Condition-number ceiling of the scaled controllability matrix.
inline constexpr double kPlacementCondLimit = 1e12;
// Hard cap of the observer-order search, per branch.
inline constexpr int kObserverOrderCap = 512;

struct ControllabilityReport {
    bool controllable = true;
    // flagged eigenvalues with the mode they belong to (when identifiable)
    std::vector<std::pair<std::optional<ModeIndex>, double>> offending;
    // Theta (S1) / Theta' (S3) indices inside the truncation; empty for S2/S4
    std::vector<int> theta_hits;
    double hautus_min_sv = 1.0;  // min over eigenvalues, relative to ||A||
};

// PBH rank test: for each eigenvalue of A, the smallest singular value of
// [A - lambda I, B] (dual=false) or [A - lambda I; C] (dual=true), flagged
// below tol * ||A||.
ControllabilityReport hautus_test(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B_or_C,
                                  bool dual, double tol = kHautusTol);

// Hautus verdict on (A1a, B1a) with flagged eigenvalues mapped back to modes
// and compared against the Theta / Theta' set prediction.
ControllabilityReport controllability_verdict(const ReducedModel& model,
                                              const SpectralBasis& basis,
                                              double tol = kHautusTol);

// Closed-form observability conditions of the variant/measurement pair AND
// the PBH test on (A1, C1); throws InternalInconsistency when they disagree.
ControllabilityReport observability_verdict(const ReducedModel& model,
                                            const MeasurementSpec& meas,
                                            const SpectralBasis& basis,
                                            double tol = kHautusTol);

// Single-input Ackermann placement via controllability-matrix inversion with
// column scaling.  Requires distinct real targets, one per state.
Eigen::RowVectorXd place_poles(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                               const std::vector<double>& targets);

// Observer gain by placement on the transposed pair.
Eigen::VectorXd observer_gain(const Eigen::MatrixXd& A1, const Eigen::RowVectorXd& C1,
                              const std::vector<double>& targets);

// P > 0 solving Acl^T P + P Acl + 2 delta P + I = 0 (Kronecker solve).
// Requires abscissa(Acl) < -delta.
Eigen::MatrixXd lyapunov_certificate(const Eigen::MatrixXd& Acl, double delta);

// LQR alternative to pole placement: stabilizes the 2delta-shifted pair with
// state cost I and control cost 1 via the matrix-sign CARE solve.
Eigen::RowVectorXd riccati_gain(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                double delta);

double spectral_abscissa(const Eigen::MatrixXd& A);

// Default placement targets {-(delta + 1 + 0.5 j)}, j = 0..dim-1.
std::vector<double> default_targets(double delta, int dim);

// The coupled plant/observer matrix F of the output-feedback loop, built from
// the reduced model, gains, and kappa-scaled tail blocks (residues zeroed).
Eigen::MatrixXd output_feedback_matrix(const ReducedModel& model, const ObserverMatrices& obs,
                                       const Eigen::RowVectorXd& K, const Eigen::VectorXd& L);

struct ObserverOrderResult {
    int N = 0, M = 0;
    double abscissa = 0.0;  // of the final F
};

// Doubling search on N - N0 + 1 and M - M0 + 1 until abscissa(F) < -delta +
// margin and the tail decay margins lambda_{1,N+1} + 2 delta < 0,
// lambda_{2,M+1} + 2 delta < 0 hold; capped at kObserverOrderCap.
ObserverOrderResult select_observer_orders(const ReducedModel& model,
                                           const MeasurementSpec& meas,
                                           const SpectralBasis& basis,
                                           const Eigen::RowVectorXd& K,
                                           const Eigen::VectorXd& L, double delta,
                                           double margin);

// Gain synthesis route.  Riccati (the default) solves the 2delta-shifted LQR
// problem, whose optimal damping keeps closed-loop transients moderate;
// Placement realizes the Ackermann route at the ladder of default_targets.
enum class GainMethod { Riccati, Placement };

struct ControllerRealization {
    Eigen::RowVectorXd K;  // [Kx ku], width N0 + M0 + 3
    Eigen::VectorXd L;     // height N0 + M0 + 2 (empty for state feedback)
    int N = 0, M = 0;      // observer truncation orders
    double kappa1 = 0.0, kappa2 = 0.0;
    double closed_loop_abscissa = 0.0;
    std::optional<Eigen::MatrixXd> P;  // Lyapunov certificate for A1a - B1a K
    std::optional<ObserverMatrices> observer;
    std::vector<double> targets;  // placement only

    bool state_feedback() const { return !observer.has_value(); }
};

ControllerRealization synthesize_state_feedback(const ReducedModel& model,
                                                const SpectralBasis& basis, double delta,
                                                bool with_certificate = true,
                                                GainMethod method = GainMethod::Riccati);

ControllerRealization synthesize_output_feedback(const ReducedModel& model,
                                                 const MeasurementSpec& meas,
                                                 const SpectralBasis& basis, double delta,
                                                 double margin = 0.05,
                                                 bool with_certificate = true,
                                                 GainMethod method = GainMethod::Riccati);

}  // namespace cascade

#pragma once

// Closed-loop simulation at high modal order, plus an independent
// finite-difference oracle.
//
// The modal simulator propagates the truncated pair dynamics
//   x~'_{i,k} = lambda_{i,k} x~_{i,k} + alpha_{i,k} u + beta_{i,k} v
// (with the 2x2 Jordan couplings on Delta pairs), the integrator u' = v, and
// optionally the observer of the output-feedback controller, as one constant
// matrix whose flow is evaluated by scaling-and-squaring matrix exponential.
// The oracle discretizes the original PDE cascade with second-order ghost-node
// boundary stencils and integrates plant and controller together with the
// trapezoidal rule.

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "cascade/synthesis.hpp"

namespace cascade {

struct InitialData {
    std::function<double(double)> y0;
    std::function<double(double)> z0;
    double u0 = 0.0;
    bool compat_h1 = false;
    int osc = 8;  // oscillation hint for quadrature against the data
};

InitialData zero_initial_data();

// Finite modal sum sum_k c_k Primal_k with exponentially decaying weights;
// lies in D(A) (resp. D(A*)) by construction, so the physical fields satisfy
// the variant compatibility conditions for the given u0.
InitialData smooth_compat_data(const SpectralBasis& basis, const LiftingProfile& lift,
                               double u0 = 0.3, int max_mode = 5);

// Same construction from explicit per-branch coefficient lists of the lifted
// state X~(0).
InitialData modal_initial_data(const SpectralBasis& basis, const LiftingProfile& lift,
                               const std::vector<double>& b1, const std::vector<double>& b2,
                               double u0);

// Residual of the variant compatibility conditions (used to validate
// compat_h1 data).
double compatibility_residual(const InitialData& data, const CascadeConfig& cfg);

struct TrajectoryRecord {
    std::vector<double> times;
    // one row per time; modal runs store the full simulator state, FD runs
    // store [y on grid, z on grid, u]
    Eigen::MatrixXd states;
    std::vector<double> h0_norm;
    std::vector<double> h1_norm;
    std::vector<double> u_series;
    double fitted_rate = 0.0;
    std::vector<double> x_grid;  // nonempty for FD records
};

enum class NormKind { H0, H1 };

// Caches sampled basis values so per-time-step norms are matrix products.
class FieldEvaluator {
public:
    FieldEvaluator(const SpectralBasis& basis, const LiftingProfile& lift, int n_sim,
                   int m_sim);

    // physical fields (lifting undone on the actuated component)
    void reconstruct(const Eigen::VectorXd& coeffs, double u, const std::vector<double>& xs,
                     Eigen::VectorXd& y, Eigen::VectorXd& z, Eigen::VectorXd* dy = nullptr,
                     Eigen::VectorXd* dz = nullptr) const;
    // quadrature norm of the physical pair (y, z)
    double field_norm(const Eigen::VectorXd& coeffs, double u, NormKind kind) const;
    // quadrature norm of the lifted state X~ itself
    double state_field_norm(const Eigen::VectorXd& coeffs, NormKind kind) const;
    // coefficient route: plain l2 for H0, weights (n+1/2)^2 and (1+m^2) for H1
    double coeff_norm(const Eigen::VectorXd& coeffs, NormKind kind) const;

    int n_sim() const { return n_sim_; }
    int m_sim() const { return m_sim_; }

private:
    SpectralBasis basis_;
    LiftingProfile lift_;
    int n_sim_, m_sim_;
    QuadratureGrid grid_;
    Eigen::MatrixXd v1_, v2_, d1_, d2_;  // modes x nodes
    Eigen::VectorXd w_, lift_vals_, dlift_vals_;
    Eigen::VectorXd h1_weights_;
};

// coefficients of X~(0) = X(0) + lift u0 against the variant's dual family
Eigen::VectorXd project_initial(const InitialData& data, const SpectralBasis& basis,
                                const LiftingProfile& lift, int n_sim, int m_sim);

class ClosedLoopSim {
public:
    Eigen::MatrixXd M;  // constant closed-loop matrix
    int n_sim = 0, m_sim = 0;
    bool has_observer = false;
    int obs_dim = 0;  // reduced block + tails when observing

    int plant_dim() const { return n_sim + m_sim + 2; }
    int u_index() const { return plant_dim(); }
    int dim() const { return plant_dim() + 1 + obs_dim; }

    Eigen::VectorXd initial_state(const Eigen::VectorXd& plant_coeffs, double u0,
                                  const Eigen::VectorXd& observer0 = Eigen::VectorXd()) const;
    Eigen::VectorXd plant_coeffs(const Eigen::VectorXd& state) const {
        return state.head(plant_dim());
    }
    double input(const Eigen::VectorXd& state) const { return state(u_index()); }
    double observer_sq_norm(const Eigen::VectorXd& state) const {
        return has_observer ? state.tail(obs_dim).squaredNorm() : 0.0;
    }
};

// controller == nullptr gives the open loop (v = 0, u frozen at u0).
// State-feedback controllers wire v = -K [X1; u] from the true modal states;
// output-feedback controllers carry the observer, the measurement being taken
// from ALL simulated plant modes so the residues are represented up to the
// simulation truncation (meas required in that case).
ClosedLoopSim assemble_closed_loop(const ReducedModel& model,
                                   const ControllerRealization* controller,
                                   const MeasurementSpec* meas, const SpectralBasis& basis,
                                   const LiftingProfile& lift, int n_sim, int m_sim);

// exact LTI flow state(t) = exp(M t) state0 on the given time grid
TrajectoryRecord propagate(const Eigen::MatrixXd& Mcl, const Eigen::VectorXd& state0,
                           const std::vector<double>& times);

// fills h0/h1/u series of a modal record
void annotate_norms(TrajectoryRecord& record, const ClosedLoopSim& sim,
                    const FieldEvaluator& fields);

struct FdOptions {
    int nx = 256;
    double dt = 5e-4;
    double T = 1.0;
    int store_every = 10;  // keep every k-th step in the record
};

TrajectoryRecord fd_oracle(const ReducedModel& model, const ControllerRealization* controller,
                           const MeasurementSpec* meas, const SpectralBasis& basis,
                           const InitialData& data, const FdOptions& opt);

// least-squares slope of log(series) on [t_start, end]
double fit_decay_rate(const std::vector<double>& times, const std::vector<double>& series,
                      double t_start);

std::vector<double> uniform_times(double T, int count);

}  // namespace cascade

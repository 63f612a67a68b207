#pragma once

// Weighted coefficient spaces of the exact-controllability analysis: V0 (null
// controllability), V(T) (exact controllability at time T), and W (final-state
// observability).  The B1 weight of V0 is 1 + n^4/(s^2 (a-b)^2); both spaces
// collapse when s = 0 or a = b.  The observability-ratio probe is an empirical
// witness for the finite-time observability constant C_T^0 of the dual system
// X' = A* X observed through X^2(t, 0); it is not a rigorous lower bound.

#include <cstdint>
#include <vector>

#include "cascade/reduction.hpp"

namespace cascade {

struct WeightedSpace {
    enum class Kind { V0, V, W };
    Kind kind = Kind::V0;
    double a = 0.0, b = 0.0, s = 1.0;  // V0/V parameters
    double T = 0.0;                    // V horizon
    // W stores per-mode squared output coefficients
    std::vector<double> w_b1, w_b2;

    // positive weight of one mode; throws SpaceCollapse for V0/V when a = b
    // or s = 0
    double weight(ModeIndex mode) const;
};

WeightedSpace weighted_space_v0(double a, double b, double s);
WeightedSpace weighted_space_v(double a, double b, double s, double T);
WeightedSpace weighted_space_w(const MeasurementSpec& meas, const SpectralBasis& basis,
                               int nmax, int mmax);

// finite weighted l2 sum over per-branch coefficient vectors (index = mode)
double weighted_norm(const std::vector<double>& b1, const std::vector<double>& b2,
                     const WeightedSpace& space);

// Minimum over >= `draws` random coefficient vectors (standard normal entries,
// deterministic per seed; restrictions of each draw to the prefixes of
// mode_subset are evaluated too, so enlarging the subset never raises the
// minimum) of
//   integral_0^T |X^2(t,0)|^2 dt  /  ||X(T)||^2_{V0'}
// for the dual flow X' = A* X supported on mode_subset.  Requires
// Theta(a,b) to be empty.
double observability_ratio_probe(const SpectralBasis& basis, double T,
                                 const std::vector<ModeIndex>& mode_subset,
                                 int draws = 100, std::uint64_t seed = 1);

}  // namespace cascade

#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace cascade {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kPiSq = kPi * kPi;

// Which of the four boundary-coupled heat-heat cascades is being controlled.
// S1/S2 evolve under the operator A (coupling f'(0) = s g(0)), S3/S4 under
// its adjoint A* (coupling g'(0) = s f(0)).  S1/S3 are collocated (input and
// coupling at the same boundary of the actuated equation), S2/S4 are not.
enum class Variant { S1, S2, S3, S4 };

inline bool uses_adjoint(Variant v) { return v == Variant::S3 || v == Variant::S4; }

inline const char* variant_name(Variant v) {
    switch (v) {
        case Variant::S1: return "S1";
        case Variant::S2: return "S2";
        case Variant::S3: return "S3";
        case Variant::S4: return "S4";
    }
    return "?";
}

// B1 <-> eigenvalue family a - (k+1/2)^2 pi^2, B2 <-> family b - k^2 pi^2.
enum class Branch { B1, B2 };

struct ModeIndex {
    Branch branch;
    int k;

    ModeIndex(Branch br, int idx) : branch(br), k(idx) {
        if (idx < 0) throw std::invalid_argument("ModeIndex: k must be >= 0");
    }
    bool operator==(const ModeIndex&) const = default;
};

struct CascadeConfig {
    double a;
    double b;
    double s;
    Variant variant;

    CascadeConfig(double a_, double b_, double s_, Variant v)
        : a(a_), b(b_), s(s_), variant(v) {
        if (s == 0.0) throw std::invalid_argument("CascadeConfig: coupling gain s must be nonzero");
        if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(s))
            throw std::invalid_argument("CascadeConfig: coefficients must be finite");
    }
};

// mu_m = value of the B2 cosine profile at x = 0: 1 for m = 0, sqrt(2) otherwise.
inline double mu(int m) { return m == 0 ? 1.0 : std::sqrt(2.0); }

// ---- error taxonomy -------------------------------------------------------

struct OutOfDomain : std::domain_error {
    using std::domain_error::domain_error;
};
struct OrderingInfeasible : std::logic_error {
    using std::logic_error::logic_error;
};
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct Uncontrollable : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct Unobservable : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IllConditioned : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NotStableEnough : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct OrderSearchExhausted : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InternalInconsistency : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DivergenceDetected : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NonPositiveSeries : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SpaceCollapse : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ThetaNonEmpty : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace cascade

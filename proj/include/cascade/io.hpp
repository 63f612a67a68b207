#pragma once

// Configuration parsing, report serialization, and the verification runner
// behind the command-line front end.  Config files are strict JSON: unknown
// keys are rejected so coefficient-sweep typos fail loudly.  CSV output is
// RFC-4180 (CRLF, '.' decimal separator) with 17 significant digits so doubles
// round-trip losslessly.

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "cascade/simulation.hpp"
#include "cascade/spaces.hpp"

namespace cascade {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MeasurementConfig {
    std::string kind = "state_feedback";  // distributed | dirichlet | neumann
    double xi = 0.0;
    std::string c_preset = "one";  // one | exp
    std::vector<double> c_poly;    // overrides c_preset when nonempty

    bool is_state_feedback() const { return kind == "state_feedback"; }
    MeasurementSpec to_spec() const;
};

struct InitialConfig {
    std::string preset = "smooth_compat";  // zero | smooth_compat | modal
    std::vector<double> b1, b2;            // modal coefficients of X~(0)
    double u0 = 0.3;

    InitialData build(const SpectralBasis& basis, const LiftingProfile& lift) const;
};

struct SimConfig {
    int n_sim = 64;
    int m_sim = 64;
    double T = 2.0;
    double dt_out = 0.01;
    int nx_oracle = 256;
    double probe_x = 0.5;
};

struct RunConfig {
    double a = 12.0, b = 3.0, s = 1.0;
    Variant variant = Variant::S1;
    double delta = 1.0;
    MeasurementConfig measurement;
    InitialConfig initial;
    SimConfig sim;
    std::uint64_t seed = 1;

    CascadeConfig cascade() const { return {a, b, s, variant}; }
};

RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);
nlohmann::json run_config_to_json(const RunConfig& cfg);

// ---- command backends ------------------------------------------------------

nlohmann::json cmd_analyze(const RunConfig& cfg);

// throws Uncontrollable / Unobservable for infeasible synthesis (exit 4)
nlohmann::json cmd_synthesize(const RunConfig& cfg);

ControllerRealization controller_from_json(const nlohmann::json& doc, const RunConfig& cfg,
                                           const ReducedModel& model,
                                           const SpectralBasis& basis);

struct SimulateResult {
    std::string csv;          // RFC-4180 trajectory table
    nlohmann::json sidecar;   // fitted_rate, envelope_constant, ...
};

// controller == nullptr simulates the open loop
SimulateResult cmd_simulate(const RunConfig& cfg, const nlohmann::json* controller_doc);

struct VerifyGroup {
    std::string name;
    bool pass = false;
    double measured = 0.0;
    double tolerance = 0.0;
};

struct VerifyResult {
    std::vector<VerifyGroup> groups;
    bool all_pass = true;
    nlohmann::json to_json() const;
};

// cn_perturbation is the fault-injection hook on the dual gauge constants
VerifyResult cmd_verify(const RunConfig& cfg, double cn_perturbation = 0.0);

// 17-significant-digit decimal rendering used in CSV and reports
std::string format_double(double v);

}  // namespace cascade

// cascadectl - analyze, synthesize, simulate, and verify boundary-coupled
// heat-heat cascade controllers.
//
// Exit codes: 0 ok, 1 verify failure, 2 config error, 3 near-degenerate
// (strict mode), 4 synthesis infeasible, 5 divergence.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "cascade/io.hpp"

namespace fs = std::filesystem;
using namespace cascade;
using nlohmann::json;

namespace {

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("JSON parse error in ") + path + ": " + e.what());
    }
    return j;
}

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

bool near_degenerate(const RunConfig& cfg) {
    return resonance_sets(cfg.cascade(), 0).near_degenerate;
}

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    bool strict_degenerate = false;
    std::optional<std::uint64_t> seed;

    RunConfig load() const {
        RunConfig cfg = load_run_config(config_path);
        if (seed) cfg.seed = *seed;
        return cfg;
    }
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required = true) {
    auto* opt = cmd->add_option("--config", args.config_path, "JSON run configuration");
    if (config_required) opt->required();
    cmd->add_option("--out", args.out_dir, "output directory for report files");
    cmd->add_flag("--strict-degenerate", args.strict_degenerate,
                  "exit with code 3 when the resonance classification is fragile");
    cmd->add_option("--seed", args.seed, "override the config seed");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"controller synthesis for boundary-coupled heat-heat cascades"};
    app.require_subcommand(1);

    CommonArgs analyze_args, synth_args, sim_args, verify_args, sweep_args;
    std::string controller_path;
    double inject_cn = 0.0;

    auto* analyze = app.add_subcommand("analyze", "spectral/controllability report");
    add_common(analyze, analyze_args);
    auto* synthesize = app.add_subcommand("synthesize", "state- or output-feedback gains");
    add_common(synthesize, synth_args);
    auto* simulate = app.add_subcommand("simulate", "closed- or open-loop trajectory CSV");
    add_common(simulate, sim_args);
    simulate->add_option("--controller", controller_path,
                         "controller JSON from 'synthesize' (omit for open loop)");
    auto* verify = app.add_subcommand("verify", "run the invariant suites");
    add_common(verify, verify_args);
    verify
        ->add_option("--inject-cn-error", inject_cn,
                     "perturb the dual gauge constants (fault-injection hook)")
        ->default_val(0.0);
    auto* sweep = app.add_subcommand("sweep", "analyze over an (a, b) grid");
    add_common(sweep, sweep_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (analyze->parsed()) {
            RunConfig cfg = analyze_args.load();
            if (analyze_args.strict_degenerate && near_degenerate(cfg)) {
                std::cerr << "near-degenerate resonance classification\n";
                return 3;
            }
            const json report = cmd_analyze(cfg);
            std::cout << report.dump(2) << "\n";
            if (!analyze_args.out_dir.empty())
                write_text(fs::path(analyze_args.out_dir) / "analyze.json", report.dump(2));
            return 0;
        }
        if (synthesize->parsed()) {
            RunConfig cfg = synth_args.load();
            if (synth_args.strict_degenerate && near_degenerate(cfg)) {
                std::cerr << "near-degenerate resonance classification\n";
                return 3;
            }
            json doc;
            try {
                doc = cmd_synthesize(cfg);
            } catch (const Uncontrollable& e) {
                std::cout << json{{"error", "uncontrollable"}, {"detail", e.what()}}.dump(2)
                          << "\n";
                return 4;
            } catch (const Unobservable& e) {
                std::cout << json{{"error", "unobservable"}, {"detail", e.what()}}.dump(2)
                          << "\n";
                return 4;
            }
            std::cout << doc.dump(2) << "\n";
            if (!synth_args.out_dir.empty())
                write_text(fs::path(synth_args.out_dir) / "controller.json", doc.dump(2));
            return 0;
        }
        if (simulate->parsed()) {
            RunConfig cfg = sim_args.load();
            if (sim_args.strict_degenerate && near_degenerate(cfg)) {
                std::cerr << "near-degenerate resonance classification\n";
                return 3;
            }
            std::optional<json> ctrl_doc;
            if (!controller_path.empty()) ctrl_doc = load_json_file(controller_path);
            SimulateResult result;
            try {
                result = cmd_simulate(cfg, ctrl_doc ? &*ctrl_doc : nullptr);
            } catch (const DivergenceDetected& e) {
                std::cerr << e.what() << "\n";
                return 5;
            }
            const fs::path dir = sim_args.out_dir.empty() ? "." : sim_args.out_dir;
            write_text(dir / "trajectory.csv", result.csv);
            write_text(dir / "trajectory.json", result.sidecar.dump(2));
            std::cout << result.sidecar.dump(2) << "\n";
            return 0;
        }
        if (verify->parsed()) {
            RunConfig cfg = verify_args.load();
            const VerifyResult result = cmd_verify(cfg, inject_cn);
            for (const auto& g : result.groups)
                std::cerr << (g.pass ? "PASS " : "FAIL ") << g.name
                          << " measured=" << format_double(g.measured)
                          << " tol=" << format_double(g.tolerance) << "\n";
            std::cout << result.to_json().dump(2) << "\n";
            return result.all_pass ? 0 : 1;
        }
        if (sweep->parsed()) {
            const json raw = load_json_file(sweep_args.config_path);
            if (!raw.contains("sweep"))
                throw ConfigError("sweep: config needs a 'sweep' block with 'a' and 'b' arrays");
            const json& sw = raw["sweep"];
            for (const auto& [key, value] : sw.items())
                if (key != "a" && key != "b")
                    throw ConfigError("sweep: unknown key '" + key + "'");
            const auto avals = sw.value("a", std::vector<double>{});
            const auto bvals = sw.value("b", std::vector<double>{});
            if (avals.empty() || bvals.empty())
                throw ConfigError("sweep: 'a' and 'b' must be nonempty arrays");
            RunConfig base = sweep_args.load();
            const fs::path dir = sweep_args.out_dir.empty() ? "sweep_out" : sweep_args.out_dir;
            std::string summary = "i,j,a,b,controllable,theta_hits,delta_pairs,N0,M0\r\n";
            for (std::size_t i = 0; i < avals.size(); ++i) {
                for (std::size_t j = 0; j < bvals.size(); ++j) {
                    RunConfig cfg = base;
                    cfg.a = avals[i];
                    cfg.b = bvals[j];
                    const json report = cmd_analyze(cfg);
                    write_text(dir / ("analyze_" + std::to_string(i) + "_" +
                                      std::to_string(j) + ".json"),
                               report.dump(2));
                    summary += std::to_string(i) + "," + std::to_string(j) + "," +
                               format_double(cfg.a) + "," + format_double(cfg.b) + "," +
                               (report["controllability"]["ok"].get<bool>() ? "1" : "0") +
                               "," +
                               std::to_string(report["controllability"]["theta_hits"].size()) +
                               "," + std::to_string(report["resonance"]["delta"].size()) +
                               "," + std::to_string(report["N0"].get<int>()) + "," +
                               std::to_string(report["M0"].get<int>()) + "\r\n";
                }
            }
            write_text(dir / "sweep_summary.csv", summary);
            std::cout << "wrote " << (dir / "sweep_summary.csv").string() << "\n";
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

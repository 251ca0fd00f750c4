// plan: command-line front end for coverage prediction, placement search,
// model calibration and the HTTP service.

#include <csignal>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "applan/jobs.hpp"
#include "applan/scenario_io.hpp"
#include "applan/service.hpp"

namespace fs = std::filesystem;
using namespace applan;

namespace {

PlannerService* g_service = nullptr;

void on_signal(int) {
    if (g_service != nullptr) g_service->stop();
}

ScenarioFile load(const std::string& path) { return parse_scenario(read_file(path)); }

void write_outputs(const fs::path& out_dir, const std::string& artifact_name, const JobOutput& job) {
    write_file_atomic(out_dir / artifact_name, canonical_dump(job.artifact));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Access point placement planner"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string out_dir = "plan-out";

    auto* validate = app.add_subcommand("validate", "Check a scenario file against the scheme invariants");
    validate->add_option("scenario", scenario_path, "Scenario JSON file")->required();

    auto* coverage = app.add_subcommand("coverage", "Predict power and bitrate for every cell");
    std::string decision_path;
    bool existing = false;
    coverage->add_option("scenario", scenario_path, "Scenario JSON file")->required();
    auto* decision_opt = coverage->add_option("--decision", decision_path, "Decision JSON file");
    auto* existing_opt = coverage->add_flag("--existing", existing, "Use the scenario's existing equipment");
    decision_opt->excludes(existing_opt);
    coverage->add_option("--out", out_dir, "Output directory")->capture_default_str();

    auto* optimize = app.add_subcommand("optimize", "Search the cost / coverage Pareto front");
    std::string solver = "vps";
    std::uint64_t seed = 0;
    optimize->add_option("scenario", scenario_path, "Scenario JSON file")->required();
    optimize->add_option("--solver", solver, "oracle (exhaustive) or vps (probability search)")
        ->check(CLI::IsMember({"oracle", "vps"}))
        ->capture_default_str();
    optimize->add_option("--seed", seed, "Random seed for vps")->capture_default_str();
    optimize->add_option("--out", out_dir, "Output directory")->capture_default_str();

    auto* calibrate_cmd = app.add_subcommand("calibrate", "Fit obstacle absorptions to measured levels");
    CalibrationConfig cal;
    calibrate_cmd->add_option("scenario", scenario_path, "Scenario JSON file")->required();
    calibrate_cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();
    calibrate_cmd->add_option("--min-loss", cal.absorption_min_dB, "Lower absorption bound, dB")->capture_default_str();
    calibrate_cmd->add_option("--max-loss", cal.absorption_max_dB, "Upper absorption bound, dB")->capture_default_str();
    calibrate_cmd->add_option("--quantum", cal.quantum_dB, "Absorption grid step, dB")->capture_default_str();
    calibrate_cmd->add_option("--trigger", cal.invisible_trigger_dB, "Invisible obstacle trigger, dB")
        ->capture_default_str();
    calibrate_cmd->add_option("--max-passes", cal.max_passes, "Coordinate descent passes")->capture_default_str();

    auto* serve = app.add_subcommand("serve", "Run the HTTP API");
    ServerConfig server;
    std::string data_dir = server.data_dir.string();
    serve->add_option("--host", server.host, "Bind address")->capture_default_str();
    serve->add_option("--port", server.port, "Port (0 = any free port)")->capture_default_str();
    serve->add_option("--data-dir", data_dir, "Directory for scenarios and run results")->capture_default_str();
    serve->add_option("--workers", server.workers, "Concurrent runs (0 = CPU count)")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) {
            const auto text = read_file(scenario_path);
            try {
                parse_scenario(text);
            } catch (const PlanError& e) {
                if (e.violations().empty()) throw;
                for (const auto& v : e.violations()) std::cout << v.code << ": " << v.message << "\n";
                return kExitError;
            }
            std::cout << "ok\n";
            return kExitOk;
        }

        if (coverage->parsed()) {
            const auto scenario = load(scenario_path);
            PlacementDecision decision;
            if (!decision_path.empty()) decision = parse_decision(read_file(decision_path));
            else if (existing) decision = PlacementDecision::existing(scenario.scheme);
            const auto job = run_coverage(scenario.scheme, decision);
            write_outputs(out_dir, "coverage.json", job);
            write_file_atomic(fs::path(out_dir) / "receivers.txt", job.summary);
            std::cout << job.summary;
            return job.exit_code;
        }

        if (optimize->parsed()) {
            const auto scenario = load(scenario_path);
            const auto job = run_optimize(scenario.scheme, solver_from_string(solver), seed);
            write_outputs(out_dir, "front.json", job);
            write_file_atomic(fs::path(out_dir) / "front.txt", job.summary);
            std::size_t i = 0;
            for (const auto& p : job.artifact.at("points")) {
                const nlohmann::json decision{{"format_version", kScenarioFormatVersion}, {"assignment", p.at("assignment")}};
                write_file_atomic(fs::path(out_dir) / "decisions" / fmt::format("point_{:03d}.json", i++),
                                  canonical_dump(decision));
            }
            std::cout << job.summary;
            if (job.artifact.at("points").empty()) std::cerr << "no feasible placement\n";
            return job.exit_code;
        }

        if (calibrate_cmd->parsed()) {
            const auto scenario = load(scenario_path);
            cal.validate();
            const auto job = run_calibrate(scenario, cal);
            write_outputs(out_dir, "calibration.json", job);
            write_file_atomic(fs::path(out_dir) / "calibrated_scenario.json", serialize_scenario(*job.updated_scenario));
            std::cout << job.summary;
            return job.exit_code;
        }

        if (serve->parsed()) {
            server.data_dir = data_dir;
            PlannerService service(server);
            const int port = service.bind();
            g_service = &service;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cout << "listening on " << server.host << ":" << port << std::endl;
            service.listen();
            g_service = nullptr;
            return kExitOk;
        }
    } catch (const PlanError& e) {
        std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitOk;
}

#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "applan/calibration.hpp"
#include "applan/optimizer.hpp"
#include "applan/scenario_io.hpp"

namespace applan {

// Process exit codes shared by the CLI and run records.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitInfeasible = 2;

enum class SolverKind { oracle, vps };

SolverKind solver_from_string(const std::string& name);
const char* to_string(SolverKind solver);

// Output of one coverage/optimize/calibrate job. `artifact` is the exact
// payload the CLI writes and the HTTP API returns.
struct JobOutput {
    nlohmann::json artifact;
    std::string summary;  // human-readable table
    int exit_code = kExitOk;
    std::optional<ScenarioFile> updated_scenario;  // calibrate only
};

// Coverage grid plus per-receiver table. Grids are flat row-major arrays with
// null for uncovered cells; serving_site indexes the artifact's site list.
JobOutput run_coverage(const GridScheme& scheme, const PlacementDecision& decision);

JobOutput run_optimize(const GridScheme& scheme, SolverKind solver, std::uint64_t seed,
                       const SearchParams& base = {});

JobOutput run_calibrate(const ScenarioFile& scenario, const CalibrationConfig& config);

nlohmann::json pareto_to_json(const ParetoResult& result);
nlohmann::json calibration_to_json(const CalibrationResult& result);

// FNV-1a over the canonical text; stable across runs and platforms.
std::string inputs_hash(std::string_view canonical_text);

}  // namespace applan

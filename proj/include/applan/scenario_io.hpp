#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "applan/calibration.hpp"
#include "applan/scheme.hpp"

namespace applan {

inline constexpr int kScenarioFormatVersion = 1;

struct ScenarioFile {
    int format_version = kScenarioFormatVersion;
    GridScheme scheme;
    nlohmann::json annotations = nlohmann::json::object();

    friend bool operator==(const ScenarioFile&, const ScenarioFile&) = default;
};

// Strict parse: unknown fields are rejected and the scheme must validate.
// Throws PlanError with malformed_syntax, schema_violation or unsupported_version.
ScenarioFile parse_scenario(std::string_view text);

// Canonical form: sorted keys, two-space indent, trailing newline, optional
// fields omitted when unset, shortest round-trip number formatting.
std::string serialize_scenario(const ScenarioFile& file);

nlohmann::json scheme_to_json(const GridScheme& scheme);
nlohmann::json obstacle_to_json(const Obstacle& obstacle);

// Decision file: {"format_version": 1, "assignment": {"<site>": "<equipment>"}}.
PlacementDecision parse_decision(std::string_view text);
std::string serialize_decision(const PlacementDecision& decision);
nlohmann::json decision_to_json(const PlacementDecision& decision);
PlacementDecision decision_from_json(const nlohmann::json& j);

CalibrationConfig calibration_config_from_json(const nlohmann::json& j);

std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temp file and renames it over `path`, so readers see the
// old or the new content, never a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// Canonical JSON text used for artifacts and hashing.
std::string canonical_dump(const nlohmann::json& j);

}  // namespace applan

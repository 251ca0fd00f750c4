#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace applan {

// Discrete cell coordinates. col grows to the right, row grows "up" in the
// bearing convention used by in_sector (0 deg = +col, counterclockwise).
struct Cell {
    int col = 0;
    int row = 0;

    friend auto operator<=>(const Cell&, const Cell&) = default;
};

enum class PatternKind { omni, sector, beam };

struct AntennaPattern {
    PatternKind kind = PatternKind::omni;
    double azimuth_deg = 0.0;   // sector only
    double width_deg = 360.0;   // sector only, (0, 360]
    Cell partner{};             // beam only

    static AntennaPattern omni() { return {}; }
    static AntennaPattern sector(double azimuth_deg, double width_deg) {
        return {PatternKind::sector, azimuth_deg, width_deg, {}};
    }
    static AntennaPattern beam(Cell partner) {
        return {PatternKind::beam, 0.0, 360.0, partner};
    }

    friend bool operator==(const AntennaPattern&, const AntennaPattern&) = default;
};

// Absorber made of whole cells. loss_per_cell_dB is the positive attenuation
// of a one-cell-thick traversal (a -7 dB wall is stored as 7).
struct Obstacle {
    std::string id;
    std::vector<Cell> cells;
    double loss_per_cell_dB = 0.0;
    std::string material_label;
    bool calibratable = false;

    friend bool operator==(const Obstacle&, const Obstacle&) = default;
};

struct EquipmentType {
    std::string id;
    double tx_power_dBm = 0.0;
    double tx_gain_dBi = 0.0;  // net of cable loss
    double cost = 0.0;
    AntennaPattern pattern;

    friend bool operator==(const EquipmentType&, const EquipmentType&) = default;
};

struct CandidateSite {
    std::string id;
    Cell cell;
    double infra_cost = 0.0;
    std::vector<std::string> allowed_equipment;
    std::optional<std::string> existing_equipment;

    friend bool operator==(const CandidateSite&, const CandidateSite&) = default;
};

inline constexpr double kDefaultNoise_dBm = -95.0;
inline constexpr double kDefaultRxGain_dBi = 0.0;

struct ReceiverCell {
    std::string id;
    Cell cell;
    double weight = 1.0;
    double min_bitrate_mbps = 0.0;
    double noise_dBm = kDefaultNoise_dBm;
    double rx_gain_dBi = kDefaultRxGain_dBi;
    std::optional<double> measured_power_dBm;
    std::optional<std::string> measured_from_site;

    friend bool operator==(const ReceiverCell&, const ReceiverCell&) = default;
};

struct BitrateTier {
    double snr_threshold_dB = 0.0;
    double rate_mbps = 0.0;

    friend bool operator==(const BitrateTier&, const BitrateTier&) = default;
};

// Tiers ordered by strictly decreasing threshold and rate. Anything below the
// last threshold gets 0.
struct BitrateTable {
    std::vector<BitrateTier> tiers;

    static BitrateTable standard();

    friend bool operator==(const BitrateTable&, const BitrateTable&) = default;
};

struct GridScheme {
    int width_cells = 0;
    int height_cells = 0;
    double cell_size_m = 1.0;
    double frequency_GHz = 2.44;
    // Received level reported when the target is the AP's own cell.
    double same_cell_power_dBm = 0.0;
    std::vector<Obstacle> obstacles;
    std::vector<CandidateSite> sites;
    std::vector<EquipmentType> equipment;
    std::vector<ReceiverCell> receivers;
    BitrateTable bitrate_table = BitrateTable::standard();

    bool in_bounds(Cell c) const {
        return c.col >= 0 && c.row >= 0 && c.col < width_cells && c.row < height_cells;
    }
    std::size_t cell_count() const {
        return static_cast<std::size_t>(width_cells) * static_cast<std::size_t>(height_cells);
    }
    std::size_t index_of(Cell c) const {
        return static_cast<std::size_t>(c.row) * static_cast<std::size_t>(width_cells) +
               static_cast<std::size_t>(c.col);
    }

    const CandidateSite* find_site(const std::string& id) const;
    const EquipmentType* find_equipment(const std::string& id) const;
    const ReceiverCell* find_receiver(const std::string& id) const;
    const Obstacle* find_obstacle(const std::string& id) const;

    friend bool operator==(const GridScheme&, const GridScheme&) = default;
};

struct Violation {
    std::string code;
    std::string message;

    friend bool operator==(const Violation&, const Violation&) = default;
};

// Machine-readable violation codes.
namespace violation {
inline constexpr const char* kBadDimensions = "bad-dimensions";
inline constexpr const char* kOutOfBounds = "out-of-bounds";
inline constexpr const char* kDuplicateId = "duplicate-id";
inline constexpr const char* kDuplicateSite = "duplicate-site";
inline constexpr const char* kEmptyObstacle = "empty-obstacle";
inline constexpr const char* kNegativeLoss = "negative-loss";
inline constexpr const char* kNegativeCost = "negative-cost";
inline constexpr const char* kBadSectorWidth = "bad-sector-width";
inline constexpr const char* kUnknownEquipment = "unknown-equipment";
inline constexpr const char* kEmptyAllowed = "empty-allowed-equipment";
inline constexpr const char* kExistingNotAllowed = "existing-not-allowed";
inline constexpr const char* kNegativeWeight = "negative-weight";
inline constexpr const char* kNegativeMinBitrate = "negative-min-bitrate";
inline constexpr const char* kMeasurementMismatch = "measurement-mismatch";
inline constexpr const char* kUnknownSite = "unknown-site";
inline constexpr const char* kBadBitrateTable = "bad-bitrate-table";
inline constexpr const char* kNonFinite = "non-finite";
}  // namespace violation

// Returns every invariant violation; an empty list means the scheme is valid.
std::vector<Violation> validate_scheme(const GridScheme& scheme);

// Assignment of at most one equipment type per site (absent key = no AP).
// The map shape makes two types on one site unrepresentable.
class PlacementDecision {
public:
    PlacementDecision() = default;
    explicit PlacementDecision(std::map<std::string, std::string> assignment)
        : assignment_(std::move(assignment)) {}

    void assign(const std::string& site_id, const std::string& equipment_id) {
        assignment_[site_id] = equipment_id;
    }
    void clear(const std::string& site_id) { assignment_.erase(site_id); }

    std::optional<std::string> equipment_at(const std::string& site_id) const;
    const std::map<std::string, std::string>& assignment() const { return assignment_; }
    bool empty() const { return assignment_.empty(); }
    std::size_t size() const { return assignment_.size(); }

    // Decision made of the scheme's existing_equipment entries.
    static PlacementDecision existing(const GridScheme& scheme);

    friend auto operator<=>(const PlacementDecision&, const PlacementDecision&) = default;

private:
    std::map<std::string, std::string> assignment_;
};

std::vector<Violation> validate_decision(const GridScheme& scheme, const PlacementDecision& decision);

enum class ErrorCode {
    malformed_syntax,
    schema_violation,
    unsupported_version,
    invalid_decision,
    instance_too_large,
    no_measurements,
    dangling_measurement,
    io_error,
    invalid_argument,
};

const char* to_string(ErrorCode code);

class PlanError : public std::runtime_error {
public:
    PlanError(ErrorCode code, const std::string& message, std::vector<Violation> violations = {})
        : std::runtime_error(message), code_(code), violations_(std::move(violations)) {}

    ErrorCode code() const noexcept { return code_; }
    const std::vector<Violation>& violations() const noexcept { return violations_; }

private:
    ErrorCode code_;
    std::vector<Violation> violations_;
};

}  // namespace applan

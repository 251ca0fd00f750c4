#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "applan/scheme.hpp"

namespace applan {

// Fresnel diameter constant for 2.44 GHz, meters^(1/2).
inline constexpr double kFresnelConstant = 0.3531;
// Zones thinner than this (in cells) collapse to the line of sight.
inline constexpr double kFresnelMinThickness = 1.5;
// Per-segment occupancy above which an obstacle blocks the whole cut.
inline constexpr double kSegmentProportionalLimit = 0.25;
// Whole-zone occupancy above which an obstacle counts as full blockage.
inline constexpr double kZoneBlockageLimit = 0.30;

double free_space_loss(double distance_m);

int fresnel_thickness_cells(double d_to_ap_m, double d_to_rx_m, double cell_size_m);

struct ObstacleHit {
    std::size_t obstacle = 0;  // index into GridScheme::obstacles
    int occupied_count = 0;
    double ratio = 0.0;        // occupied_count / thickness
};

// Normal cut of the Fresnel zone through one line-of-sight cell. Cells that
// fall outside the grid are dropped from segment_cells but still count toward
// the thickness used as the ratio denominator.
struct SegmentSample {
    Cell center_cell;
    int thickness = 1;
    std::vector<Cell> segment_cells;
    std::vector<ObstacleHit> hits;  // sorted by obstacle index
};

struct PathProfile {
    Cell ap_cell;
    Cell rx_cell;
    std::vector<Cell> los_cells;
    std::vector<int> fresnel_thickness_cells;
    std::vector<SegmentSample> segments;

    std::size_t zone_cells() const;
};

// Linear contribution of one obstacle to a path: loss = coefficient * loss_per_cell.
struct ObstacleTerm {
    std::size_t obstacle = 0;
    double coefficient = 0.0;
    int segments_hit = 0;
    int zone_cells_hit = 0;
    bool blocked = false;  // zone occupancy above kZoneBlockageLimit
};

struct LinkBudget {
    std::string site_id;
    std::string equipment_id;
    Cell rx_cell;
    double tx_power_dBm = 0.0;
    double tx_gain_dBi = 0.0;
    double rx_gain_dBi = 0.0;
    double distance_m = 0.0;
    double fsl_dB = 0.0;
    double obstacle_loss_dB = 0.0;
    double received_dBm = 0.0;
    double snr_dB = 0.0;
    double rate_mbps = 0.0;
};

// The one expression every predicted level goes through.
inline double budget_received(double tx_power_dBm, double tx_gain_dBi, double rx_gain_dBi, double obstacle_loss_dB,
                              double fsl_dB) {
    return tx_power_dBm + tx_gain_dBi + rx_gain_dBi - obstacle_loss_dB - fsl_dB;
}

double bitrate(double snr_dB, const BitrateTable& table);

double segment_loss(const SegmentSample& segment, const std::vector<Obstacle>& obstacles);

std::vector<ObstacleTerm> obstacle_terms(const PathProfile& profile, std::size_t obstacle_count);

double path_obstacle_loss(const PathProfile& profile, const std::vector<Obstacle>& obstacles);

// Cell -> obstacle lookup in compressed row layout. Obstacles may overlap.
class ObstacleIndex {
public:
    ObstacleIndex() = default;
    explicit ObstacleIndex(const GridScheme& scheme);

    // Obstacle indices covering `cell`, ascending.
    std::pair<const std::size_t*, const std::size_t*> at(std::size_t cell_index) const {
        return {indices_.data() + offsets_[cell_index], indices_.data() + offsets_[cell_index + 1]};
    }

private:
    std::vector<std::size_t> offsets_;
    std::vector<std::size_t> indices_;
};

// Propagation queries against one scheme. Holds a reference: the scheme must
// outlive the model and stay unmodified.
class PropagationModel {
public:
    explicit PropagationModel(const GridScheme& scheme);

    const GridScheme& scheme() const { return scheme_; }

    PathProfile profile(Cell ap_cell, Cell rx_cell) const;
    double obstacle_loss(Cell ap_cell, Cell rx_cell) const;

    std::optional<LinkBudget> link(const CandidateSite& site, const EquipmentType& equipment, Cell target,
                                   double rx_gain_dBi, double noise_dBm) const;

    std::optional<LinkBudget> best_link(const PlacementDecision& decision, Cell target, double rx_gain_dBi,
                                        double noise_dBm) const;

private:
    const GridScheme& scheme_;
    ObstacleIndex index_;
};

PathProfile build_path_profile(const GridScheme& scheme, Cell ap_cell, Cell rx_cell);

// Predicted level at target, or nullopt when the antenna pattern misses it.
std::optional<double> received_power(const GridScheme& scheme, const CandidateSite& site,
                                     const EquipmentType& equipment, Cell target, double rx_gain_dBi);

std::optional<LinkBudget> best_link(const GridScheme& scheme, const PlacementDecision& decision,
                                    const ReceiverCell& rx);

struct CoverageEntry {
    std::optional<double> received_dBm;  // nullopt = no coverage
    double snr_dB = 0.0;
    double rate_mbps = 0.0;
    std::optional<std::string> site_id;
};

struct CoverageMap {
    int width = 0;
    int height = 0;
    std::vector<CoverageEntry> cells;  // row-major

    const CoverageEntry& at(Cell c) const {
        return cells[static_cast<std::size_t>(c.row) * static_cast<std::size_t>(width) +
                     static_cast<std::size_t>(c.col)];
    }
};

// best_link for every cell with default receiver gain and noise.
CoverageMap coverage_map(const GridScheme& scheme, const PlacementDecision& decision);

}  // namespace applan

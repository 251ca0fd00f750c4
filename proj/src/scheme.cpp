#include "applan/scheme.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

namespace applan {

BitrateTable BitrateTable::standard() {
    return BitrateTable{{{25.0, 54.0}, {15.0, 18.0}, {4.0, 1.0}}};
}

namespace {

template <typename T>
const T* find_by_id(const std::vector<T>& items, const std::string& id) {
    auto it = std::find_if(items.begin(), items.end(), [&](const T& x) { return x.id == id; });
    return it == items.end() ? nullptr : &*it;
}

std::string cell_str(Cell c) { return fmt::format("({}, {})", c.col, c.row); }

template <typename T>
void check_unique_ids(const std::vector<T>& items, const char* what, std::vector<Violation>& out) {
    std::set<std::string> seen;
    for (const auto& item : items) {
        if (!seen.insert(item.id).second) {
            out.push_back({violation::kDuplicateId, fmt::format("duplicate {} id '{}'", what, item.id)});
        }
    }
}

}  // namespace

const CandidateSite* GridScheme::find_site(const std::string& id) const { return find_by_id(sites, id); }
const EquipmentType* GridScheme::find_equipment(const std::string& id) const {
    return find_by_id(equipment, id);
}
const ReceiverCell* GridScheme::find_receiver(const std::string& id) const {
    return find_by_id(receivers, id);
}
const Obstacle* GridScheme::find_obstacle(const std::string& id) const { return find_by_id(obstacles, id); }

std::vector<Violation> validate_scheme(const GridScheme& s) {
    std::vector<Violation> out;
    auto add = [&](const char* code, std::string msg) { out.push_back({code, std::move(msg)}); };

    if (s.width_cells <= 0 || s.height_cells <= 0) {
        add(violation::kBadDimensions,
            fmt::format("grid must be at least 1x1, got {}x{}", s.width_cells, s.height_cells));
    }
    if (!(s.cell_size_m > 0.0) || !std::isfinite(s.cell_size_m)) {
        add(violation::kBadDimensions, fmt::format("cell_size_m must be positive, got {}", s.cell_size_m));
    }
    if (!(s.frequency_GHz > 0.0) || !std::isfinite(s.frequency_GHz)) {
        add(violation::kBadDimensions, fmt::format("frequency_GHz must be positive, got {}", s.frequency_GHz));
    }
    if (!std::isfinite(s.same_cell_power_dBm)) {
        add(violation::kNonFinite, "same_cell_power_dBm must be finite");
    }

    check_unique_ids(s.obstacles, "obstacle", out);
    check_unique_ids(s.sites, "site", out);
    check_unique_ids(s.equipment, "equipment", out);
    check_unique_ids(s.receivers, "receiver", out);

    for (const auto& o : s.obstacles) {
        if (o.cells.empty()) add(violation::kEmptyObstacle, fmt::format("obstacle '{}' has no cells", o.id));
        if (!(o.loss_per_cell_dB >= 0.0) || !std::isfinite(o.loss_per_cell_dB)) {
            add(violation::kNegativeLoss,
                fmt::format("obstacle '{}' loss_per_cell_dB must be >= 0, got {}", o.id, o.loss_per_cell_dB));
        }
        for (Cell c : o.cells) {
            if (!s.in_bounds(c)) {
                add(violation::kOutOfBounds, fmt::format("obstacle '{}' cell {} out of bounds", o.id, cell_str(c)));
            }
        }
    }

    for (const auto& e : s.equipment) {
        if (!std::isfinite(e.tx_power_dBm) || !std::isfinite(e.tx_gain_dBi)) {
            add(violation::kNonFinite, fmt::format("equipment '{}' power/gain must be finite", e.id));
        }
        if (!(e.cost >= 0.0) || !std::isfinite(e.cost)) {
            add(violation::kNegativeCost, fmt::format("equipment '{}' cost must be >= 0", e.id));
        }
        if (e.pattern.kind == PatternKind::sector &&
            !(e.pattern.width_deg > 0.0 && e.pattern.width_deg <= 360.0)) {
            add(violation::kBadSectorWidth,
                fmt::format("equipment '{}' sector width must be in (0, 360], got {}", e.id, e.pattern.width_deg));
        }
        if (e.pattern.kind == PatternKind::sector && !std::isfinite(e.pattern.azimuth_deg)) {
            add(violation::kNonFinite, fmt::format("equipment '{}' azimuth must be finite", e.id));
        }
        if (e.pattern.kind == PatternKind::beam && !s.in_bounds(e.pattern.partner)) {
            add(violation::kOutOfBounds,
                fmt::format("equipment '{}' beam partner {} out of bounds", e.id, cell_str(e.pattern.partner)));
        }
    }

    std::set<Cell> site_cells;
    for (const auto& site : s.sites) {
        if (!s.in_bounds(site.cell)) {
            add(violation::kOutOfBounds, fmt::format("site '{}' cell {} out of bounds", site.id, cell_str(site.cell)));
        }
        if (!site_cells.insert(site.cell).second) {
            add(violation::kDuplicateSite,
                fmt::format("site '{}' shares cell {} with another site", site.id, cell_str(site.cell)));
        }
        if (!(site.infra_cost >= 0.0) || !std::isfinite(site.infra_cost)) {
            add(violation::kNegativeCost, fmt::format("site '{}' infra_cost must be >= 0", site.id));
        }
        if (site.allowed_equipment.empty()) {
            add(violation::kEmptyAllowed, fmt::format("site '{}' allows no equipment", site.id));
        }
        for (const auto& eq : site.allowed_equipment) {
            if (s.find_equipment(eq) == nullptr) {
                add(violation::kUnknownEquipment, fmt::format("site '{}' allows unknown equipment '{}'", site.id, eq));
            }
        }
        if (site.existing_equipment) {
            const auto& ex = *site.existing_equipment;
            if (std::find(site.allowed_equipment.begin(), site.allowed_equipment.end(), ex) ==
                site.allowed_equipment.end()) {
                add(violation::kExistingNotAllowed,
                    fmt::format("site '{}' existing equipment '{}' is not in allowed_equipment", site.id, ex));
            }
        }
    }

    for (const auto& rx : s.receivers) {
        if (!s.in_bounds(rx.cell)) {
            add(violation::kOutOfBounds, fmt::format("receiver '{}' cell {} out of bounds", rx.id, cell_str(rx.cell)));
        }
        if (!(rx.weight >= 0.0) || !std::isfinite(rx.weight)) {
            add(violation::kNegativeWeight, fmt::format("receiver '{}' weight must be >= 0", rx.id));
        }
        if (!(rx.min_bitrate_mbps >= 0.0) || !std::isfinite(rx.min_bitrate_mbps)) {
            add(violation::kNegativeMinBitrate, fmt::format("receiver '{}' min_bitrate_mbps must be >= 0", rx.id));
        }
        if (!std::isfinite(rx.noise_dBm) || !std::isfinite(rx.rx_gain_dBi) ||
            (rx.measured_power_dBm && !std::isfinite(*rx.measured_power_dBm))) {
            add(violation::kNonFinite, fmt::format("receiver '{}' has a non-finite level", rx.id));
        }
        if (rx.measured_power_dBm.has_value() != rx.measured_from_site.has_value()) {
            add(violation::kMeasurementMismatch,
                fmt::format("receiver '{}' must set measured_power_dBm and measured_from_site together", rx.id));
        }
        if (rx.measured_from_site && s.find_site(*rx.measured_from_site) == nullptr) {
            add(violation::kUnknownSite,
                fmt::format("receiver '{}' measured from unknown site '{}'", rx.id, *rx.measured_from_site));
        }
    }

    const auto& tiers = s.bitrate_table.tiers;
    for (std::size_t i = 0; i < tiers.size(); ++i) {
        if (!std::isfinite(tiers[i].snr_threshold_dB) || !(tiers[i].rate_mbps > 0.0) ||
            !std::isfinite(tiers[i].rate_mbps)) {
            add(violation::kBadBitrateTable, fmt::format("bitrate tier {} must have finite threshold and rate > 0", i));
        }
        if (i > 0 && !(tiers[i].snr_threshold_dB < tiers[i - 1].snr_threshold_dB &&
                       tiers[i].rate_mbps < tiers[i - 1].rate_mbps)) {
            add(violation::kBadBitrateTable,
                fmt::format("bitrate tier {} must have strictly lower threshold and rate than tier {}", i, i - 1));
        }
    }
    return out;
}

std::optional<std::string> PlacementDecision::equipment_at(const std::string& site_id) const {
    auto it = assignment_.find(site_id);
    if (it == assignment_.end()) return std::nullopt;
    return it->second;
}

PlacementDecision PlacementDecision::existing(const GridScheme& scheme) {
    PlacementDecision d;
    for (const auto& site : scheme.sites) {
        if (site.existing_equipment) d.assign(site.id, *site.existing_equipment);
    }
    return d;
}

std::vector<Violation> validate_decision(const GridScheme& scheme, const PlacementDecision& decision) {
    std::vector<Violation> out;
    for (const auto& [site_id, eq_id] : decision.assignment()) {
        const auto* site = scheme.find_site(site_id);
        if (site == nullptr) {
            out.push_back({violation::kUnknownSite, fmt::format("decision assigns unknown site '{}'", site_id)});
            continue;
        }
        if (std::find(site->allowed_equipment.begin(), site->allowed_equipment.end(), eq_id) ==
            site->allowed_equipment.end()) {
            out.push_back({violation::kUnknownEquipment,
                           fmt::format("equipment '{}' is not allowed at site '{}'", eq_id, site_id)});
        }
    }
    return out;
}

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::malformed_syntax: return "malformed-syntax";
        case ErrorCode::schema_violation: return "schema-violation";
        case ErrorCode::unsupported_version: return "unsupported-version";
        case ErrorCode::invalid_decision: return "invalid-decision";
        case ErrorCode::instance_too_large: return "instance-too-large";
        case ErrorCode::no_measurements: return "no-measurements";
        case ErrorCode::dangling_measurement: return "dangling-measurement";
        case ErrorCode::io_error: return "io-error";
        case ErrorCode::invalid_argument: return "invalid-argument";
    }
    return "unknown";
}

}  // namespace applan

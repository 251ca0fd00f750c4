#include "applan/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "applan/geometry.hpp"
#include "applan/propagation.hpp"

namespace applan {

void CalibrationConfig::validate() const {
    auto fail = [](const std::string& msg) { throw PlanError(ErrorCode::invalid_argument, msg); };
    if (!(absorption_min_dB >= 0.0) || !(absorption_min_dB <= absorption_max_dB) || !std::isfinite(absorption_max_dB)) {
        fail("absorption bounds must satisfy 0 <= min <= max");
    }
    if (!(quantum_dB > 0.0)) fail("quantum_dB must be > 0");
    if (!(invisible_trigger_dB > 0.0)) fail("invisible_trigger_dB must be > 0");
    if (max_passes < 1) fail("max_passes must be >= 1");
    if (!(unreachable_penalty_dB >= 0.0)) fail("unreachable_penalty_dB must be >= 0");
}

namespace {

// Measurements whose predicted discrepancy sits this close below the trigger
// still fire; absorbs rounding in predicted - measured.
constexpr double kTriggerSlack_dB = 1e-9;

struct Measurement {
    std::string rx_id;
    double measured_dBm = 0.0;
    bool reachable = false;
    bool saturated = false;
    double tx_power_dBm = 0.0;
    double tx_gain_dBi = 0.0;
    double rx_gain_dBi = 0.0;
    double fsl_dB = 0.0;
    std::vector<ObstacleTerm> terms;
    std::vector<Cell> los_cells;
    std::vector<int> thickness;
};

// Path geometry does not depend on absorption values, so each measurement is
// reduced once to a linear loss model over obstacle indices.
class MeasurementModel {
public:
    MeasurementModel(const GridScheme& scheme, const CalibrationConfig& config) : scheme_(scheme), config_(config) {
        const PropagationModel prop(scheme);
        for (const auto& rx : scheme.receivers) {
            if (!rx.measured_power_dBm) continue;
            if (!rx.measured_from_site) {
                throw PlanError(ErrorCode::dangling_measurement,
                                fmt::format("receiver '{}' has a measurement without measured_from_site", rx.id));
            }
            const auto* site = scheme.find_site(*rx.measured_from_site);
            if (site == nullptr || !site->existing_equipment) {
                throw PlanError(ErrorCode::dangling_measurement,
                                fmt::format("receiver '{}' is measured from '{}', which is not an existing AP", rx.id,
                                            *rx.measured_from_site));
            }
            const auto* eq = scheme.find_equipment(*site->existing_equipment);
            if (eq == nullptr) {
                throw PlanError(ErrorCode::dangling_measurement,
                                fmt::format("site '{}' has unknown existing equipment '{}'", site->id,
                                            *site->existing_equipment));
            }
            Measurement m;
            m.rx_id = rx.id;
            m.measured_dBm = *rx.measured_power_dBm;
            m.reachable = in_sector(site->cell, eq->pattern, rx.cell);
            m.saturated = rx.cell == site->cell;
            m.tx_power_dBm = eq->tx_power_dBm;
            m.tx_gain_dBi = eq->tx_gain_dBi;
            m.rx_gain_dBi = rx.rx_gain_dBi;
            if (m.saturated) {
                m.fsl_dB = budget_received(m.tx_power_dBm, m.tx_gain_dBi, m.rx_gain_dBi, 0.0, 0.0) -
                           scheme.same_cell_power_dBm;
            } else {
                m.fsl_dB = free_space_loss(distance_m(site->cell, rx.cell, scheme.cell_size_m));
                auto profile = prop.profile(site->cell, rx.cell);
                m.terms = obstacle_terms(profile, scheme.obstacles.size());
                m.los_cells = std::move(profile.los_cells);
                m.thickness = std::move(profile.fresnel_thickness_cells);
            }
            measurements_.push_back(std::move(m));
        }
        if (measurements_.empty()) {
            throw PlanError(ErrorCode::no_measurements, "scheme has no receivers with measured_power_dBm");
        }
    }

    const std::vector<Measurement>& measurements() const { return measurements_; }

    double predicted(const Measurement& m, const std::vector<double>& losses) const {
        double loss = 0.0;
        for (const auto& t : m.terms) loss += t.coefficient * losses[t.obstacle];
        return budget_received(m.tx_power_dBm, m.tx_gain_dBi, m.rx_gain_dBi, loss, m.fsl_dB);
    }

    double error(const Measurement& m, const std::vector<double>& losses) const {
        if (!m.reachable) return config_.unreachable_penalty_dB;
        return std::abs(m.measured_dBm - predicted(m, losses));
    }

    double residual(const std::vector<double>& losses) const {
        double sum = 0.0;
        for (const auto& m : measurements_) sum += error(m, losses);
        return sum;
    }

private:
    const GridScheme& scheme_;
    const CalibrationConfig& config_;
    std::vector<Measurement> measurements_;
};

std::vector<double> catalog_losses(const GridScheme& scheme) {
    std::vector<double> out;
    out.reserve(scheme.obstacles.size());
    for (const auto& o : scheme.obstacles) out.push_back(o.loss_per_cell_dB);
    return out;
}

std::vector<double> loss_grid(const CalibrationConfig& c) {
    const auto steps = static_cast<long>(std::floor((c.absorption_max_dB - c.absorption_min_dB) / c.quantum_dB + 1e-9));
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(steps) + 1);
    for (long k = 0; k <= steps; ++k) grid.push_back(c.absorption_min_dB + static_cast<double>(k) * c.quantum_dB);
    return grid;
}

double snap_to_grid(double value, const CalibrationConfig& c) {
    const auto grid = loss_grid(c);
    const long k = std::lround((value - c.absorption_min_dB) / c.quantum_dB);
    return grid[static_cast<std::size_t>(std::clamp<long>(k, 0, static_cast<long>(grid.size()) - 1))];
}

}  // namespace

double residual(const GridScheme& scheme, const std::map<std::string, double>& losses,
                const CalibrationConfig& config) {
    const MeasurementModel model(scheme, config);
    auto values = catalog_losses(scheme);
    for (const auto& [id, loss] : losses) {
        bool found = false;
        for (std::size_t i = 0; i < scheme.obstacles.size(); ++i) {
            if (scheme.obstacles[i].id == id) {
                values[i] = loss;
                found = true;
            }
        }
        if (!found) throw PlanError(ErrorCode::invalid_argument, fmt::format("unknown obstacle '{}'", id));
    }
    return model.residual(values);
}

CalibrationResult fit_absorptions(const GridScheme& scheme, const CalibrationConfig& config) {
    config.validate();
    const MeasurementModel model(scheme, config);
    auto losses = catalog_losses(scheme);
    const auto grid = loss_grid(config);

    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < scheme.obstacles.size(); ++i) {
        if (scheme.obstacles[i].calibratable) order.push_back(i);
    }
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scheme.obstacles[a].id < scheme.obstacles[b].id; });

    CalibrationResult result;
    result.residual_before_dB = model.residual(losses);
    double current = result.residual_before_dB;

    for (int pass = 0; pass < config.max_passes && !order.empty(); ++pass) {
        ++result.passes;
        bool changed = false;
        for (std::size_t q : order) {
            const double original = losses[q];
            double best_value = grid.front();
            double best_residual = 0.0;
            for (std::size_t k = 0; k < grid.size(); ++k) {
                losses[q] = grid[k];
                const double r = model.residual(losses);
                if (k == 0 || r < best_residual) {
                    best_residual = r;
                    best_value = grid[k];
                }
            }
            // Ties with the current value move to the smallest grid minimizer.
            if (best_residual <= current && best_value != original) {
                losses[q] = best_value;
                current = best_residual;
                changed = true;
            } else {
                losses[q] = original;
            }
        }
        if (!changed) break;
    }

    result.residual_after_dB = model.residual(losses);
    for (std::size_t i = 0; i < scheme.obstacles.size(); ++i) result.fitted_losses[scheme.obstacles[i].id] = losses[i];
    for (const auto& m : model.measurements()) result.per_measurement_error[m.rx_id] = model.error(m, losses);
    return result;
}

std::vector<Obstacle> detect_invisible_obstacles(const GridScheme& scheme, const CalibrationConfig& config) {
    config.validate();
    const MeasurementModel model(scheme, config);
    const auto losses = catalog_losses(scheme);

    std::set<std::string> taken;
    for (const auto& o : scheme.obstacles) taken.insert(o.id);

    std::vector<Obstacle> inserted;
    for (const auto& m : model.measurements()) {
        if (!m.reachable || m.saturated || !m.terms.empty()) continue;
        const double discrepancy = model.predicted(m, losses) - m.measured_dBm;
        if (discrepancy < config.invisible_trigger_dB - kTriggerSlack_dB) continue;

        const std::size_t mid = m.los_cells.size() / 2;
        const Cell center = m.los_cells[mid];
        const int radius = m.thickness[mid];

        Obstacle o;
        o.material_label = kInvisibleMaterial;
        o.calibratable = true;
        for (int dr = -radius; dr <= radius; ++dr) {
            for (int dc = -radius; dc <= radius; ++dc) {
                const Cell c{center.col + dc, center.row + dr};
                if (dc * dc + dr * dr <= radius * radius && scheme.in_bounds(c)) o.cells.push_back(c);
            }
        }
        const std::set<Cell> disc(o.cells.begin(), o.cells.end());
        const auto crossed = std::count_if(m.los_cells.begin(), m.los_cells.end(),
                                           [&](Cell c) { return disc.contains(c); });
        o.loss_per_cell_dB = discrepancy / static_cast<double>(crossed);

        std::string id = "invisible-" + m.rx_id;
        for (int n = 2; taken.contains(id); ++n) id = fmt::format("invisible-{}-{}", m.rx_id, n);
        taken.insert(id);
        o.id = std::move(id);
        inserted.push_back(std::move(o));
    }
    return inserted;
}

GridScheme apply_calibration(const GridScheme& scheme, const CalibrationResult& result) {
    GridScheme out = scheme;
    for (auto& o : out.obstacles) {
        if (auto it = result.fitted_losses.find(o.id); it != result.fitted_losses.end()) o.loss_per_cell_dB = it->second;
    }
    for (auto o : result.inserted_obstacles) {
        if (out.find_obstacle(o.id) != nullptr) continue;
        if (auto it = result.fitted_losses.find(o.id); it != result.fitted_losses.end()) o.loss_per_cell_dB = it->second;
        out.obstacles.push_back(std::move(o));
    }
    return out;
}

CalibrationResult calibrate(const GridScheme& scheme, const CalibrationConfig& config) {
    auto first = fit_absorptions(scheme, config);
    const GridScheme fitted = apply_calibration(scheme, first);

    auto inserted = detect_invisible_obstacles(fitted, config);
    if (inserted.empty()) return first;

    GridScheme augmented = fitted;
    for (auto& o : inserted) {
        o.loss_per_cell_dB = snap_to_grid(o.loss_per_cell_dB, config);
        augmented.obstacles.push_back(o);
    }
    auto second = fit_absorptions(augmented, config);
    if (second.residual_after_dB > first.residual_after_dB) return first;

    for (auto& o : inserted) o.loss_per_cell_dB = second.fitted_losses.at(o.id);
    second.residual_before_dB = first.residual_before_dB;
    second.inserted_obstacles = std::move(inserted);
    second.passes += first.passes;
    return second;
}

}  // namespace applan

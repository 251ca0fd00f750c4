#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "applan/scheme.hpp"

namespace applan {

struct CalibrationConfig {
    double absorption_min_dB = 0.0;
    double absorption_max_dB = 30.0;
    double quantum_dB = 0.5;
    double invisible_trigger_dB = 10.0;
    int max_passes = 20;
    std::uint64_t seed = 0;
    // Residual charged for a measurement whose antenna pattern misses the receiver.
    double unreachable_penalty_dB = 100.0;

    void validate() const;
};

inline constexpr const char* kInvisibleMaterial = "invisible";

struct CalibrationResult {
    std::map<std::string, double> fitted_losses;
    double residual_before_dB = 0.0;
    double residual_after_dB = 0.0;
    std::map<std::string, double> per_measurement_error;
    std::vector<Obstacle> inserted_obstacles;
    int passes = 0;
};

// Sum over measured receivers of |measured - predicted| with obstacle losses
// overridden by `losses` (ids absent from the map keep their catalog value).
double residual(const GridScheme& scheme, const std::map<std::string, double>& losses,
                const CalibrationConfig& config = {});

CalibrationResult fit_absorptions(const GridScheme& scheme, const CalibrationConfig& config);

std::vector<Obstacle> detect_invisible_obstacles(const GridScheme& scheme, const CalibrationConfig& config);

// fit -> detect on the fitted scheme -> refit with the inserted obstacles.
CalibrationResult calibrate(const GridScheme& scheme, const CalibrationConfig& config);

// Copy of `scheme` with fitted losses written back and inserted obstacles appended.
GridScheme apply_calibration(const GridScheme& scheme, const CalibrationResult& result);

}  // namespace applan

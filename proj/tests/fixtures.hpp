#pragma once

// Scheme builders shared by the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "applan/propagation.hpp"
#include "applan/scheme.hpp"

namespace applan::testing {

inline PlacementDecision decision(std::map<std::string, std::string> assignment) {
    return PlacementDecision(std::move(assignment));
}

inline GridScheme empty_scheme(int width, int height, double cell_size_m) {
    GridScheme s;
    s.width_cells = width;
    s.height_cells = height;
    s.cell_size_m = cell_size_m;
    return s;
}

inline Obstacle rect_obstacle(std::string id, Cell lo, Cell hi, double loss, bool calibratable = false,
                              std::string material = "wall") {
    Obstacle o;
    o.id = std::move(id);
    for (int r = lo.row; r <= hi.row; ++r) {
        for (int c = lo.col; c <= hi.col; ++c) o.cells.push_back({c, r});
    }
    o.loss_per_cell_dB = loss;
    o.calibratable = calibratable;
    o.material_label = std::move(material);
    return o;
}

inline EquipmentType omni_equipment(std::string id, double tx, double gain, double cost) {
    return {std::move(id), tx, gain, cost, AntennaPattern::omni()};
}

inline CandidateSite site(std::string id, Cell cell, double infra, std::vector<std::string> allowed,
                          std::optional<std::string> existing = std::nullopt) {
    return {std::move(id), cell, infra, std::move(allowed), std::move(existing)};
}

inline ReceiverCell receiver(std::string id, Cell cell, double weight = 1.0, double min_rate = 0.0) {
    ReceiverCell r;
    r.id = std::move(id);
    r.cell = cell;
    r.weight = weight;
    r.min_bitrate_mbps = min_rate;
    return r;
}

// Five candidate sites, two equipment types: 3^5 = 243 decisions. Cells are
// 5 m so that links span the whole bitrate table.
inline GridScheme five_site_instance() {
    GridScheme s = empty_scheme(60, 40, 5.0);
    s.equipment = {omni_equipment("basic", 0.0, 0.0, 40.0), omni_equipment("pro", 8.0, 3.0, 90.0)};
    const std::vector<std::string> both{"basic", "pro"};
    s.sites = {site("A", {5, 5}, 100.0, both), site("B", {30, 6}, 60.0, both), site("C", {54, 5}, 120.0, both),
               site("D", {14, 32}, 80.0, both), site("E", {46, 33}, 70.0, both)};
    s.obstacles = {rect_obstacle("w1", {20, 0}, {20, 24}, 12.0), rect_obstacle("w2", {40, 15}, {40, 39}, 12.0),
                   rect_obstacle("w3", {0, 20}, {15, 20}, 12.0), rect_obstacle("glass", {41, 18}, {59, 18}, 2.0)};
    s.receivers = {receiver("r1", {10, 12}, 3.0, 1.0), receiver("r2", {28, 15}, 2.0),
                   receiver("r3", {50, 10}, 2.0),      receiver("r4", {8, 36}, 1.0),
                   receiver("r5", {30, 35}, 3.0),      receiver("r6", {55, 30}, 1.0),
                   receiver("r7", {35, 22}, 2.0),      receiver("r8", {58, 38}, 1.0)};
    return s;
}

// Random scheme for property checks. Small enough for the exhaustive oracle
// when max_sites <= 5 and max_types <= 2.
inline GridScheme random_scheme(std::mt19937_64& rng, int max_sites = 4, int max_types = 2, int max_receivers = 6) {
    auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    auto real = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

    GridScheme s = empty_scheme(uni(8, 40), uni(8, 40), real(0.5, 6.0));
    const int types = uni(1, max_types);
    for (int k = 0; k < types; ++k) {
        EquipmentType e = omni_equipment("e" + std::to_string(k), real(5.0, 25.0), real(0.0, 9.0), std::round(real(10, 100)));
        const int pat = uni(0, 5);
        if (pat == 4) e.pattern = AntennaPattern::sector(real(0.0, 360.0), real(30.0, 240.0));
        e.id = "e" + std::to_string(k);
        s.equipment.push_back(e);
    }
    std::vector<std::string> all;
    for (const auto& e : s.equipment) all.push_back(e.id);

    const int n_obstacles = uni(0, 5);
    for (int o = 0; o < n_obstacles; ++o) {
        const Cell lo{uni(0, s.width_cells - 1), uni(0, s.height_cells - 1)};
        const Cell hi{std::min(s.width_cells - 1, lo.col + uni(0, 6)), std::min(s.height_cells - 1, lo.row + uni(0, 6))};
        s.obstacles.push_back(rect_obstacle("o" + std::to_string(o), lo, hi, std::round(real(0.0, 15.0) * 2) / 2));
    }

    const int n_sites = uni(1, max_sites);
    std::vector<Cell> used;
    for (int i = 0; i < n_sites; ++i) {
        Cell c;
        do {
            c = {uni(0, s.width_cells - 1), uni(0, s.height_cells - 1)};
        } while (std::find(used.begin(), used.end(), c) != used.end());
        used.push_back(c);
        s.sites.push_back(site("s" + std::to_string(i), c, std::round(real(0.0, 150.0)), all));
    }

    const int n_rx = uni(1, max_receivers);
    for (int j = 0; j < n_rx; ++j) {
        ReceiverCell r = receiver("r" + std::to_string(j), {uni(0, s.width_cells - 1), uni(0, s.height_cells - 1)},
                                  std::round(real(0.0, 5.0) * 4) / 4, uni(0, 3) == 0 ? 1.0 : 0.0);
        r.noise_dBm = real(-100.0, -85.0);
        r.rx_gain_dBi = real(0.0, 3.0);
        s.receivers.push_back(r);
    }
    return s;
}

// Fills measured_power_dBm for every receiver from `truth`, as seen from the
// existing AP at `site_id`. `noise` is added per receiver when given.
inline void synthesize_measurements(GridScheme& target, const GridScheme& truth, const std::string& site_id,
                                    const std::vector<double>& noise = {}) {
    const auto* s = truth.find_site(site_id);
    const auto* e = truth.find_equipment(*s->existing_equipment);
    for (std::size_t j = 0; j < target.receivers.size(); ++j) {
        auto& rx = target.receivers[j];
        const auto p = received_power(truth, *s, *e, rx.cell, rx.rx_gain_dBi);
        rx.measured_power_dBm = *p + (j < noise.size() ? noise[j] : 0.0);
        rx.measured_from_site = site_id;
    }
}

// One existing AP, a calibratable wall between it and six receivers. The
// catalog loss is deliberately off; the measurements come from `true_loss`.
inline GridScheme planted_wall_instance(double true_loss, double catalog_loss = 3.0) {
    GridScheme s = empty_scheme(40, 30, 1.0);
    s.equipment = {omni_equipment("e", 20.0, 3.0, 50.0)};
    s.sites = {site("ap", {5, 15}, 0.0, {"e"}, "e")};
    s.obstacles = {rect_obstacle("wall", {20, 0}, {20, 29}, true_loss, true)};
    s.receivers = {receiver("m1", {30, 5}),  receiver("m2", {32, 10}), receiver("m3", {35, 15}),
                   receiver("m4", {30, 20}), receiver("m5", {33, 25}), receiver("m6", {28, 28})};
    GridScheme truth = s;
    synthesize_measurements(s, truth, "ap");
    s.obstacles[0].loss_per_cell_dB = catalog_loss;
    return s;
}

// Field-survey analog: two existing APs, two calibratable walls whose catalog
// values are wrong, one unmodeled absorber on an otherwise clear path, and
// uniform +-2 dB measurement noise drawn from `noise_seed`.
inline GridScheme field_survey_instance(std::uint64_t noise_seed) {
    GridScheme s = empty_scheme(80, 50, 1.0);
    s.equipment = {omni_equipment("e", 20.0, 3.0, 50.0)};
    s.sites = {site("ap1", {10, 25}, 0.0, {"e"}, "e"), site("ap2", {70, 25}, 0.0, {"e"}, "e")};
    s.obstacles = {rect_obstacle("wall_a", {25, 0}, {25, 49}, 8.0, true),
                   rect_obstacle("wall_b", {55, 0}, {55, 49}, 12.0, true)};
    s.receivers = {receiver("p01", {10, 45}), receiver("p02", {5, 5}),   receiver("p03", {20, 10}),
                   receiver("p04", {40, 15}), receiver("p05", {40, 35}), receiver("p06", {45, 25}),
                   receiver("p07", {60, 10}), receiver("q01", {45, 10}), receiver("q02", {45, 40}),
                   receiver("q03", {40, 26}), receiver("q04", {75, 5}),  receiver("q05", {75, 45})};

    GridScheme truth = s;
    truth.obstacles.push_back(rect_obstacle("cabinet", {9, 34}, {11, 36}, 6.0));

    std::mt19937_64 rng(noise_seed);
    std::uniform_real_distribution<double> noise(-2.0, 2.0);
    for (auto& rx : s.receivers) {
        const std::string from = rx.id[0] == 'p' ? "ap1" : "ap2";
        const auto* site_ptr = truth.find_site(from);
        rx.measured_power_dBm = *received_power(truth, *site_ptr, truth.equipment[0], rx.cell, rx.rx_gain_dBi) + noise(rng);
        rx.measured_from_site = from;
    }
    s.obstacles[0].loss_per_cell_dB = 3.0;
    s.obstacles[1].loss_per_cell_dB = 6.0;
    return s;
}

// Six-cell clear link on 1 cm cells: the midpoint disc (radius 3) covers all
// six line-of-sight cells. Measured = predicted - discrepancy.
inline GridScheme clear_link_instance(double discrepancy) {
    GridScheme s = empty_scheme(12, 12, 0.01);
    s.equipment = {omni_equipment("e", 10.0, 0.0, 0.0)};
    s.sites = {site("ap", {0, 5}, 0.0, {"e"}, "e")};
    s.receivers = {receiver("m", {5, 5})};
    synthesize_measurements(s, s, "ap", {-discrepancy});
    return s;
}

}  // namespace applan::testing

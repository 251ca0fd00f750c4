#include <doctest.h>

#include <cmath>
#include <random>

#include "applan/calibration.hpp"
#include "applan/propagation.hpp"
#include "fixtures.hpp"

using namespace applan;
using namespace applan::testing;

namespace {

bool on_grid(double v, const CalibrationConfig& c) {
    const double k = (v - c.absorption_min_dB) / c.quantum_dB;
    return std::abs(k - std::round(k)) < 1e-9 && v >= c.absorption_min_dB - 1e-12 && v <= c.absorption_max_dB + 1e-12;
}

}  // namespace

TEST_CASE("residual") {
    GridScheme s = empty_scheme(30, 10, 1.0);
    s.equipment = {omni_equipment("e", 20.0, 0.0, 0.0)};
    s.sites = {site("ap", {0, 5}, 0.0, {"e"}, "e")};
    s.obstacles = {rect_obstacle("w", {15, 0}, {15, 9}, 7.0, true)};
    s.receivers = {receiver("a", {10, 5}), receiver("b", {25, 5})};
    synthesize_measurements(s, s, "ap");

    CHECK(residual(s, {}) == 0.0);
    CHECK(residual(s, {{"w", 7.0}}) == 0.0);

    SUBCASE("single term") {
        *s.receivers[0].measured_power_dBm += 3.0;
        s.receivers[1].measured_power_dBm.reset();
        s.receivers[1].measured_from_site.reset();
        CHECK(residual(s, {}) == doctest::Approx(3.0));
    }
    SUBCASE("L1 sum") {
        *s.receivers[0].measured_power_dBm += 2.0;
        *s.receivers[1].measured_power_dBm -= 5.0;
        CHECK(residual(s, {}) == doctest::Approx(7.0));
    }
    SUBCASE("loss override moves the prediction") {
        CHECK(residual(s, {{"w", 9.0}}) == doctest::Approx(2.0));
    }
    SUBCASE("no measurements") {
        for (auto& rx : s.receivers) {
            rx.measured_power_dBm.reset();
            rx.measured_from_site.reset();
        }
        try {
            residual(s, {});
            FAIL("expected no-measurements");
        } catch (const PlanError& e) {
            CHECK(e.code() == ErrorCode::no_measurements);
        }
    }
    SUBCASE("measured from a site without equipment") {
        s.sites[0].existing_equipment.reset();
        try {
            residual(s, {});
            FAIL("expected dangling-measurement");
        } catch (const PlanError& e) {
            CHECK(e.code() == ErrorCode::dangling_measurement);
        }
    }
    SUBCASE("unreachable measurements cost the penalty") {
        s.equipment[0].pattern = AntennaPattern::sector(180.0, 30.0);
        CalibrationConfig c;
        c.unreachable_penalty_dB = 40.0;
        CHECK(residual(s, {}, c) == doctest::Approx(80.0));
    }
}

TEST_CASE("fit_absorptions") {
    const CalibrationConfig config;
    SUBCASE("planted wall is recovered") {
        const auto s = planted_wall_instance(7.0);
        const auto r = fit_absorptions(s, config);
        CHECK(r.residual_before_dB > 10.0);
        CHECK(r.fitted_losses.at("wall") == 7.0);
        CHECK(std::abs(r.fitted_losses.at("wall") - 7.0) <= config.quantum_dB);
        CHECK(r.residual_after_dB <= 1e-6);
        CHECK(r.per_measurement_error.size() == 6);
    }
    SUBCASE("non-calibratable obstacles keep catalog values") {
        auto s = planted_wall_instance(7.0);
        s.obstacles[0].calibratable = false;
        const auto r = fit_absorptions(s, config);
        CHECK(r.fitted_losses.at("wall") == 3.0);
        CHECK(r.residual_after_dB == r.residual_before_dB);
    }
    SUBCASE("two walls seen by disjoint measurement sets") {
        GridScheme s = empty_scheme(60, 20, 1.0);
        s.equipment = {omni_equipment("e", 20.0, 3.0, 0.0)};
        s.sites = {site("ap", {30, 10}, 0.0, {"e"}, "e")};
        s.obstacles = {rect_obstacle("west", {20, 0}, {20, 19}, 4.5, true),
                       rect_obstacle("east", {40, 0}, {40, 19}, 11.0, true)};
        s.receivers = {receiver("w1", {5, 4}), receiver("w2", {8, 10}), receiver("w3", {4, 17}),
                       receiver("e1", {55, 3}), receiver("e2", {52, 10}), receiver("e3", {56, 16})};
        const GridScheme truth = s;
        synthesize_measurements(s, truth, "ap");
        s.obstacles[0].loss_per_cell_dB = 0.0;
        s.obstacles[1].loss_per_cell_dB = 20.0;
        const auto r = fit_absorptions(s, config);
        CHECK(r.fitted_losses.at("west") == 4.5);
        CHECK(r.fitted_losses.at("east") == 11.0);
        CHECK(r.residual_after_dB <= 1e-6);
    }
    SUBCASE("never increases the residual, stays on the grid") {
        std::mt19937_64 rng(17);
        std::uniform_real_distribution<double> noise(-4.0, 4.0), loss(0.0, 25.0);
        CalibrationConfig c;
        c.quantum_dB = 0.25;
        c.absorption_max_dB = 20.0;
        for (int n = 0; n < 20; ++n) {
            auto s = planted_wall_instance(loss(rng), loss(rng));
            for (auto& rx : s.receivers) *rx.measured_power_dBm += noise(rng);
            // On-grid catalog start; the fit never leaves the grid from there.
            s.obstacles[0].loss_per_cell_dB = std::min(20.0, std::round(s.obstacles[0].loss_per_cell_dB * 4) / 4);
            const auto r = fit_absorptions(s, c);
            REQUIRE(r.residual_after_dB <= r.residual_before_dB + 1e-12);
            REQUIRE(on_grid(r.fitted_losses.at("wall"), c));
        }
    }
}

TEST_CASE("detect_invisible_obstacles") {
    const CalibrationConfig config;
    SUBCASE("below the trigger") {
        CHECK(detect_invisible_obstacles(clear_link_instance(4.0), config).empty());
        CHECK(detect_invisible_obstacles(clear_link_instance(9.9), config).empty());
    }
    SUBCASE("twelve dB over six line-of-sight cells") {
        const auto s = clear_link_instance(12.0);
        const auto profile = build_path_profile(s, {0, 5}, {5, 5});
        REQUIRE(profile.los_cells.size() == 6);
        REQUIRE(profile.fresnel_thickness_cells[3] == 3);

        const auto inserted = detect_invisible_obstacles(s, config);
        REQUIRE(inserted.size() == 1);
        const auto& o = inserted[0];
        CHECK(o.loss_per_cell_dB == doctest::Approx(2.0));
        CHECK(o.material_label == kInvisibleMaterial);
        CHECK(o.calibratable);
        CHECK(o.id == "invisible-m");
        // Disc of radius 3 around (3, 5).
        for (const Cell c : o.cells) CHECK((c.col - 3) * (c.col - 3) + (c.row - 5) * (c.row - 5) <= 9);
        CHECK(o.cells.size() == 29);
        // The input is untouched.
        CHECK(s.obstacles.empty());
    }
    SUBCASE("prediction below measurement never inserts") {
        CHECK(detect_invisible_obstacles(clear_link_instance(-15.0), config).empty());
    }
    SUBCASE("paths that cross a known obstacle never trigger") {
        auto s = planted_wall_instance(7.0, 0.0);
        for (auto& rx : s.receivers) *rx.measured_power_dBm -= 30.0;
        CHECK(detect_invisible_obstacles(s, config).empty());
    }
    SUBCASE("idempotent on its own output") {
        auto s = clear_link_instance(15.0);
        const auto inserted = detect_invisible_obstacles(s, config);
        REQUIRE(inserted.size() == 1);
        s.obstacles.insert(s.obstacles.end(), inserted.begin(), inserted.end());
        CHECK(detect_invisible_obstacles(s, config).empty());
    }
}

TEST_CASE("calibrate") {
    const CalibrationConfig config;
    SUBCASE("planted wall only: same as fit, nothing inserted") {
        const auto s = planted_wall_instance(7.0);
        const auto a = calibrate(s, config);
        const auto b = fit_absorptions(s, config);
        CHECK(a.inserted_obstacles.empty());
        CHECK(a.fitted_losses == b.fitted_losses);
        CHECK(a.residual_after_dB == b.residual_after_dB);
    }
    SUBCASE("hidden absorber on a clear path") {
        GridScheme s = empty_scheme(60, 30, 1.0);
        s.equipment = {omni_equipment("e", 20.0, 3.0, 0.0)};
        s.sites = {site("ap", {5, 15}, 0.0, {"e"}, "e")};
        s.receivers = {receiver("far", {55, 15}), receiver("side", {5, 2})};
        GridScheme truth = s;
        truth.obstacles = {rect_obstacle("cabinet", {29, 13}, {31, 17}, 6.0)};
        synthesize_measurements(s, truth, "ap");

        const auto r = calibrate(s, config);
        REQUIRE(r.inserted_obstacles.size() == 1);
        CHECK(r.residual_after_dB < r.residual_before_dB);
        CHECK(r.per_measurement_error.at("far") <= config.quantum_dB);

        const auto updated = apply_calibration(s, r);
        CHECK(updated.obstacles.size() == 1);
        CHECK(validate_scheme(updated).empty());
        for (const auto& [id, v] : r.fitted_losses) CHECK(on_grid(v, config));
    }
    SUBCASE("config validation") {
        CalibrationConfig bad;
        bad.quantum_dB = 0.0;
        CHECK_THROWS_AS(calibrate(planted_wall_instance(7.0), bad), PlanError);
        bad = {};
        bad.absorption_min_dB = 5.0;
        bad.absorption_max_dB = 1.0;
        CHECK_THROWS_AS(bad.validate(), PlanError);
    }
}

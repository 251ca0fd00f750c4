#include "applan/jobs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "applan/base64.hpp"
#include "applan/propagation.hpp"

namespace applan {

using nlohmann::json;

SolverKind solver_from_string(const std::string& name) {
    if (name == "oracle") return SolverKind::oracle;
    if (name == "vps") return SolverKind::vps;
    throw PlanError(ErrorCode::invalid_argument, fmt::format("unknown solver '{}' (expected oracle or vps)", name));
}

const char* to_string(SolverKind solver) { return solver == SolverKind::oracle ? "oracle" : "vps"; }

namespace {

constexpr std::int16_t kNoSignal = std::numeric_limits<std::int16_t>::min();
constexpr std::uint16_t kNoSite = std::numeric_limits<std::uint16_t>::max();

template <typename T>
void put_le(std::string& out, T value) {
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(value);
    for (std::size_t b = 0; b < sizeof(T); ++b) out.push_back(static_cast<char>((u >> (8 * b)) & 0xFF));
}

json assignment_json(const PlacementDecision& d) { return decision_to_json(d).at("assignment"); }

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt::format("{:.2f}", *v) : "-"; }

}  // namespace

JobOutput run_coverage(const GridScheme& scheme, const PlacementDecision& decision) {
    if (auto bad = validate_decision(scheme, decision); !bad.empty()) {
        throw PlanError(ErrorCode::invalid_decision, bad.front().message, bad);
    }
    const auto map = coverage_map(scheme, decision);

    std::vector<std::string> site_ids;
    for (const auto& s : scheme.sites) site_ids.push_back(s.id);
    std::sort(site_ids.begin(), site_ids.end());

    std::vector<double> levels{0.0};
    for (const auto& t : scheme.bitrate_table.tiers) levels.push_back(t.rate_mbps);
    std::sort(levels.begin(), levels.end());

    std::string power_bytes, rate_bytes, site_bytes;
    power_bytes.reserve(map.cells.size() * 2);
    rate_bytes.reserve(map.cells.size());
    site_bytes.reserve(map.cells.size() * 2);
    for (const auto& e : map.cells) {
        std::int16_t p = kNoSignal;
        if (e.received_dBm) {
            p = static_cast<std::int16_t>(std::clamp<long>(std::lround(*e.received_dBm * 10.0), -32767, 32767));
        }
        put_le(power_bytes, p);
        const auto level = std::lower_bound(levels.begin(), levels.end(), e.rate_mbps) - levels.begin();
        rate_bytes.push_back(static_cast<char>(level));
        std::uint16_t site = kNoSite;
        if (e.site_id) {
            site = static_cast<std::uint16_t>(std::lower_bound(site_ids.begin(), site_ids.end(), *e.site_id) -
                                              site_ids.begin());
        }
        put_le(site_bytes, site);
    }

    const PropagationModel model(scheme);
    json receivers = json::array();
    bool feasible = true;
    std::string table = fmt::format("{:<16} {:<16} {:>12} {:>8} {:>10} {:>8} {}\n", "receiver", "best_site",
                                    "received_dBm", "snr_dB", "rate_mbps", "min_mbps", "meets_min");
    for (const auto& rx : scheme.receivers) {
        auto best = model.best_link(decision, rx.cell, rx.rx_gain_dBi, rx.noise_dBm);
        const double rate = best ? best->rate_mbps : 0.0;
        const bool meets = rate >= rx.min_bitrate_mbps;
        feasible = feasible && meets;
        json r{{"id", rx.id},
               {"best_site", best ? json(best->site_id) : json(nullptr)},
               {"equipment", best ? json(best->equipment_id) : json(nullptr)},
               {"received_dBm", best ? json(best->received_dBm) : json(nullptr)},
               {"snr_dB", best ? json(best->snr_dB) : json(nullptr)},
               {"obstacle_loss_dB", best ? json(best->obstacle_loss_dB) : json(nullptr)},
               {"fsl_dB", best ? json(best->fsl_dB) : json(nullptr)},
               {"rate_mbps", rate},
               {"min_bitrate_mbps", rx.min_bitrate_mbps},
               {"meets_min", meets}};
        receivers.push_back(std::move(r));
        table += fmt::format("{:<16} {:<16} {:>12} {:>8} {:>10.1f} {:>8.1f} {}\n", rx.id,
                             best ? best->site_id : std::string("-"),
                             fmt_opt(best ? std::optional(best->received_dBm) : std::nullopt),
                             fmt_opt(best ? std::optional(best->snr_dB) : std::nullopt), rate, rx.min_bitrate_mbps,
                             meets ? "yes" : "NO");
    }

    JobOutput out;
    out.artifact = {{"kind", "coverage"},
                    {"assignment", assignment_json(decision)},
                    {"width", map.width},
                    {"height", map.height},
                    {"sites", site_ids},
                    {"rate_levels_mbps", levels},
                    {"grid",
                     {{"encoding", "base64 little-endian, row-major"},
                      {"received_ddBm_i16", base64_encode(power_bytes)},
                      {"rate_level_u8", base64_encode(rate_bytes)},
                      {"serving_site_u16", base64_encode(site_bytes)}}},
                    {"receivers", std::move(receivers)},
                    {"feasible", feasible}};
    out.summary = std::move(table);
    out.exit_code = feasible ? kExitOk : kExitInfeasible;
    return out;
}

json pareto_to_json(const ParetoResult& result) {
    json points = json::array();
    for (const auto& p : result.points) {
        points.push_back({{"cost", p.objectives.total_cost},
                          {"weighted_coverage", p.objectives.weighted_coverage},
                          {"assignment", assignment_json(p.decision)},
                          {"per_receiver_rates", p.objectives.per_receiver_rates}});
    }
    return {{"kind", "optimize"},
            {"solver", result.info.solver},
            {"seed", result.info.seed},
            {"evaluations", result.info.evaluations},
            {"points", std::move(points)}};
}

JobOutput run_optimize(const GridScheme& scheme, SolverKind solver, std::uint64_t seed, const SearchParams& base) {
    ParetoResult result;
    if (solver == SolverKind::oracle) {
        result = brute_force_pareto(scheme);
    } else {
        SearchParams params = base;
        params.seed = seed;
        result = variant_probability_search(scheme, params);
    }

    JobOutput out;
    out.artifact = pareto_to_json(result);
    std::string table = fmt::format("{:>12} {:>18}  {}\n", "cost", "weighted_coverage", "assignment");
    for (const auto& p : result.points) {
        std::string assign;
        for (const auto& [site, eq] : p.decision.assignment()) {
            if (!assign.empty()) assign += ",";
            assign += site + "=" + eq;
        }
        table += fmt::format("{:>12.2f} {:>18.2f}  {}\n", p.objectives.total_cost, p.objectives.weighted_coverage,
                             assign.empty() ? "(none)" : assign);
    }
    out.summary = std::move(table);
    out.exit_code = result.points.empty() ? kExitInfeasible : kExitOk;
    return out;
}

json calibration_to_json(const CalibrationResult& r) {
    json inserted = json::array();
    for (const auto& o : r.inserted_obstacles) inserted.push_back(obstacle_to_json(o));
    return {{"kind", "calibrate"},
            {"fitted_losses", r.fitted_losses},
            {"residual_before_dB", r.residual_before_dB},
            {"residual_after_dB", r.residual_after_dB},
            {"per_measurement_error", r.per_measurement_error},
            {"inserted_obstacles", std::move(inserted)},
            {"passes", r.passes}};
}

JobOutput run_calibrate(const ScenarioFile& scenario, const CalibrationConfig& config) {
    const auto result = calibrate(scenario.scheme, config);

    ScenarioFile updated = scenario;
    updated.scheme = apply_calibration(scenario.scheme, result);
    updated.annotations["calibration"] = {{"residual_before_dB", result.residual_before_dB},
                                          {"residual_after_dB", result.residual_after_dB},
                                          {"inserted_obstacles", result.inserted_obstacles.size()}};

    JobOutput out;
    out.artifact = calibration_to_json(result);
    out.artifact["scenario"] = json::parse(serialize_scenario(updated));

    std::string table = fmt::format("residual before: {:.3f} dB\nresidual after:  {:.3f} dB\n",
                                    result.residual_before_dB, result.residual_after_dB);
    table += fmt::format("{:<16} {:>10}\n", "obstacle", "loss_dB");
    for (const auto& [id, loss] : result.fitted_losses) table += fmt::format("{:<16} {:>10.2f}\n", id, loss);
    table += fmt::format("{:<16} {:>10}\n", "measurement", "error_dB");
    for (const auto& [id, err] : result.per_measurement_error) table += fmt::format("{:<16} {:>10.2f}\n", id, err);
    for (const auto& o : result.inserted_obstacles) {
        table += fmt::format("inserted {} ({} cells, {:.2f} dB/cell)\n", o.id, o.cells.size(), o.loss_per_cell_dB);
    }
    out.summary = std::move(table);
    out.updated_scenario = std::move(updated);
    return out;
}

std::string inputs_hash(std::string_view canonical_text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : canonical_text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return fmt::format("{:016x}", h);
}

}  // namespace applan

#include "applan/scenario_io.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <system_error>

#include <fmt/format.h>

namespace applan {

using nlohmann::json;

namespace {

namespace field_code {
constexpr const char* kUnknown = "unknown-field";
constexpr const char* kMissing = "missing-field";
constexpr const char* kType = "bad-field-type";
}  // namespace field_code

[[noreturn]] void schema_error(const char* code, std::string message) {
    std::vector<Violation> v{{code, message}};
    throw PlanError(ErrorCode::schema_violation, message, std::move(v));
}

// Field access over one JSON object that rejects keys nobody asked about.
class Fields {
public:
    Fields(const json& j, std::string where, std::initializer_list<const char*> allowed) : j_(j), where_(std::move(where)) {
        if (!j.is_object()) schema_error(field_code::kType, fmt::format("{} must be an object", where_));
        std::set<std::string> ok(allowed.begin(), allowed.end());
        for (const auto& [key, _] : j.items()) {
            if (!ok.contains(key)) schema_error(field_code::kUnknown, fmt::format("{}: unknown field '{}'", where_, key));
        }
    }

    bool has(const char* key) const { return j_.contains(key); }

    const json& get(const char* key) const {
        if (!j_.contains(key)) schema_error(field_code::kMissing, fmt::format("{}: missing field '{}'", where_, key));
        return j_.at(key);
    }

    double number(const char* key) const { return as_number(get(key), key); }
    double number_or(const char* key, double fallback) const {
        return has(key) ? as_number(j_.at(key), key) : fallback;
    }
    int integer(const char* key) const {
        const auto& v = get(key);
        if (!v.is_number_integer()) schema_error(field_code::kType, fmt::format("{}.{} must be an integer", where_, key));
        return v.get<int>();
    }
    std::string string(const char* key) const { return as_string(get(key), key); }
    std::string string_or(const char* key, std::string fallback) const {
        return has(key) ? as_string(j_.at(key), key) : fallback;
    }
    bool boolean_or(const char* key, bool fallback) const {
        if (!has(key)) return fallback;
        const auto& v = j_.at(key);
        if (!v.is_boolean()) schema_error(field_code::kType, fmt::format("{}.{} must be a boolean", where_, key));
        return v.get<bool>();
    }
    const json& array(const char* key) const {
        const auto& v = get(key);
        if (!v.is_array()) schema_error(field_code::kType, fmt::format("{}.{} must be an array", where_, key));
        return v;
    }
    const std::string& where() const { return where_; }

private:
    double as_number(const json& v, const char* key) const {
        if (!v.is_number()) schema_error(field_code::kType, fmt::format("{}.{} must be a number", where_, key));
        return v.get<double>();
    }
    std::string as_string(const json& v, const char* key) const {
        if (!v.is_string()) schema_error(field_code::kType, fmt::format("{}.{} must be a string", where_, key));
        return v.get<std::string>();
    }

    const json& j_;
    std::string where_;
};

Cell cell_from_json(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer()) {
        schema_error(field_code::kType, fmt::format("{} must be a [col, row] integer pair", where));
    }
    return {j[0].get<int>(), j[1].get<int>()};
}

json cell_to_json(Cell c) { return json::array({c.col, c.row}); }

AntennaPattern pattern_from_json(const json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
        schema_error(field_code::kType, fmt::format("{} must be an object with a string 'kind'", where));
    }
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "omni") {
        Fields f(j, where, {"kind"});
        return AntennaPattern::omni();
    }
    if (kind == "sector") {
        Fields f(j, where, {"kind", "azimuth_deg", "width_deg"});
        return AntennaPattern::sector(f.number("azimuth_deg"), f.number("width_deg"));
    }
    if (kind == "beam") {
        Fields f(j, where, {"kind", "partner_cell"});
        return AntennaPattern::beam(cell_from_json(f.get("partner_cell"), where + ".partner_cell"));
    }
    schema_error(field_code::kType, fmt::format("{}.kind must be omni, sector or beam, got '{}'", where, kind));
}

json pattern_to_json(const AntennaPattern& p) {
    switch (p.kind) {
        case PatternKind::omni: return {{"kind", "omni"}};
        case PatternKind::sector: return {{"kind", "sector"}, {"azimuth_deg", p.azimuth_deg}, {"width_deg", p.width_deg}};
        case PatternKind::beam: return {{"kind", "beam"}, {"partner_cell", cell_to_json(p.partner)}};
    }
    return {};
}

std::vector<std::string> string_list(const json& j, const std::string& where) {
    if (!j.is_array()) schema_error(field_code::kType, fmt::format("{} must be an array of strings", where));
    std::vector<std::string> out;
    for (const auto& v : j) {
        if (!v.is_string()) schema_error(field_code::kType, fmt::format("{} must be an array of strings", where));
        out.push_back(v.get<std::string>());
    }
    return out;
}

GridScheme scheme_from_json(const json& j) {
    Fields f(j, "scheme",
             {"width_cells", "height_cells", "cell_size_m", "frequency_GHz", "same_cell_power_dBm", "obstacles",
              "equipment", "sites", "receivers", "bitrate_table"});
    GridScheme s;
    s.width_cells = f.integer("width_cells");
    s.height_cells = f.integer("height_cells");
    s.cell_size_m = f.number("cell_size_m");
    s.frequency_GHz = f.number_or("frequency_GHz", 2.44);
    s.same_cell_power_dBm = f.number_or("same_cell_power_dBm", 0.0);

    if (f.has("obstacles")) {
        std::size_t i = 0;
        for (const auto& oj : f.array("obstacles")) {
            const auto where = fmt::format("scheme.obstacles[{}]", i++);
            Fields of(oj, where, {"id", "cells", "loss_per_cell_dB", "material_label", "calibratable"});
            Obstacle o;
            o.id = of.string("id");
            std::size_t k = 0;
            for (const auto& cj : of.array("cells")) o.cells.push_back(cell_from_json(cj, fmt::format("{}.cells[{}]", where, k++)));
            o.loss_per_cell_dB = of.number("loss_per_cell_dB");
            o.material_label = of.string_or("material_label", "");
            o.calibratable = of.boolean_or("calibratable", false);
            s.obstacles.push_back(std::move(o));
        }
    }

    if (f.has("equipment")) {
        std::size_t i = 0;
        for (const auto& ej : f.array("equipment")) {
            const auto where = fmt::format("scheme.equipment[{}]", i++);
            Fields ef(ej, where, {"id", "tx_power_dBm", "tx_gain_dBi", "cost", "pattern"});
            EquipmentType e;
            e.id = ef.string("id");
            e.tx_power_dBm = ef.number("tx_power_dBm");
            e.tx_gain_dBi = ef.number_or("tx_gain_dBi", 0.0);
            e.cost = ef.number_or("cost", 0.0);
            e.pattern = ef.has("pattern") ? pattern_from_json(ef.get("pattern"), where + ".pattern") : AntennaPattern::omni();
            s.equipment.push_back(std::move(e));
        }
    }

    if (f.has("sites")) {
        std::size_t i = 0;
        for (const auto& sj : f.array("sites")) {
            const auto where = fmt::format("scheme.sites[{}]", i++);
            Fields sf(sj, where, {"id", "cell", "infra_cost", "allowed_equipment", "existing_equipment"});
            CandidateSite site;
            site.id = sf.string("id");
            site.cell = cell_from_json(sf.get("cell"), where + ".cell");
            site.infra_cost = sf.number_or("infra_cost", 0.0);
            if (sf.has("allowed_equipment")) {
                site.allowed_equipment = string_list(sf.get("allowed_equipment"), where + ".allowed_equipment");
            } else {
                for (const auto& e : s.equipment) site.allowed_equipment.push_back(e.id);
            }
            if (sf.has("existing_equipment")) site.existing_equipment = sf.string("existing_equipment");
            s.sites.push_back(std::move(site));
        }
    }

    if (f.has("receivers")) {
        std::size_t i = 0;
        for (const auto& rj : f.array("receivers")) {
            const auto where = fmt::format("scheme.receivers[{}]", i++);
            Fields rf(rj, where,
                      {"id", "cell", "weight", "min_bitrate_mbps", "noise_dBm", "rx_gain_dBi", "measured_power_dBm",
                       "measured_from_site"});
            ReceiverCell rx;
            rx.id = rf.string("id");
            rx.cell = cell_from_json(rf.get("cell"), where + ".cell");
            rx.weight = rf.number_or("weight", 1.0);
            rx.min_bitrate_mbps = rf.number_or("min_bitrate_mbps", 0.0);
            rx.noise_dBm = rf.number_or("noise_dBm", kDefaultNoise_dBm);
            rx.rx_gain_dBi = rf.number_or("rx_gain_dBi", kDefaultRxGain_dBi);
            if (rf.has("measured_power_dBm")) rx.measured_power_dBm = rf.number("measured_power_dBm");
            if (rf.has("measured_from_site")) rx.measured_from_site = rf.string("measured_from_site");
            s.receivers.push_back(std::move(rx));
        }
    }

    if (f.has("bitrate_table")) {
        s.bitrate_table.tiers.clear();
        std::size_t i = 0;
        for (const auto& tj : f.array("bitrate_table")) {
            Fields tf(tj, fmt::format("scheme.bitrate_table[{}]", i++), {"snr_threshold_dB", "rate_mbps"});
            s.bitrate_table.tiers.push_back({tf.number("snr_threshold_dB"), tf.number("rate_mbps")});
        }
    }
    return s;
}

}  // namespace

json obstacle_to_json(const Obstacle& o) {
    json cells = json::array();
    for (Cell c : o.cells) cells.push_back(cell_to_json(c));
    return {{"id", o.id},
            {"cells", std::move(cells)},
            {"loss_per_cell_dB", o.loss_per_cell_dB},
            {"material_label", o.material_label},
            {"calibratable", o.calibratable}};
}

json scheme_to_json(const GridScheme& s) {
    json j;
    j["width_cells"] = s.width_cells;
    j["height_cells"] = s.height_cells;
    j["cell_size_m"] = s.cell_size_m;
    j["frequency_GHz"] = s.frequency_GHz;
    j["same_cell_power_dBm"] = s.same_cell_power_dBm;

    j["obstacles"] = json::array();
    for (const auto& o : s.obstacles) j["obstacles"].push_back(obstacle_to_json(o));

    j["equipment"] = json::array();
    for (const auto& e : s.equipment) {
        j["equipment"].push_back({{"id", e.id},
                                  {"tx_power_dBm", e.tx_power_dBm},
                                  {"tx_gain_dBi", e.tx_gain_dBi},
                                  {"cost", e.cost},
                                  {"pattern", pattern_to_json(e.pattern)}});
    }

    j["sites"] = json::array();
    for (const auto& site : s.sites) {
        json sj{{"id", site.id},
                {"cell", cell_to_json(site.cell)},
                {"infra_cost", site.infra_cost},
                {"allowed_equipment", site.allowed_equipment}};
        if (site.existing_equipment) sj["existing_equipment"] = *site.existing_equipment;
        j["sites"].push_back(std::move(sj));
    }

    j["receivers"] = json::array();
    for (const auto& rx : s.receivers) {
        json rj{{"id", rx.id},
                {"cell", cell_to_json(rx.cell)},
                {"weight", rx.weight},
                {"min_bitrate_mbps", rx.min_bitrate_mbps},
                {"noise_dBm", rx.noise_dBm},
                {"rx_gain_dBi", rx.rx_gain_dBi}};
        if (rx.measured_power_dBm) rj["measured_power_dBm"] = *rx.measured_power_dBm;
        if (rx.measured_from_site) rj["measured_from_site"] = *rx.measured_from_site;
        j["receivers"].push_back(std::move(rj));
    }

    j["bitrate_table"] = json::array();
    for (const auto& t : s.bitrate_table.tiers) {
        j["bitrate_table"].push_back({{"snr_threshold_dB", t.snr_threshold_dB}, {"rate_mbps", t.rate_mbps}});
    }
    return j;
}

std::string canonical_dump(const json& j) { return j.dump(2) + "\n"; }

ScenarioFile parse_scenario(std::string_view text) {
    json j;
    try {
        j = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw PlanError(ErrorCode::malformed_syntax, fmt::format("scenario is not valid JSON: {}", e.what()));
    }
    if (!j.is_object()) throw PlanError(ErrorCode::malformed_syntax, "scenario must be a JSON object");
    if (!j.contains("format_version") || !j.at("format_version").is_number_integer()) {
        throw PlanError(ErrorCode::unsupported_version, "scenario needs an integer format_version");
    }
    const int version = j.at("format_version").get<int>();
    if (version != kScenarioFormatVersion) {
        throw PlanError(ErrorCode::unsupported_version,
                        fmt::format("format_version {} is not supported (expected {})", version, kScenarioFormatVersion));
    }

    Fields f(j, "scenario", {"format_version", "scheme", "annotations"});
    ScenarioFile file;
    file.format_version = version;
    file.scheme = scheme_from_json(f.get("scheme"));
    if (f.has("annotations")) {
        file.annotations = f.get("annotations");
        if (!file.annotations.is_object()) schema_error(field_code::kType, "scenario.annotations must be an object");
    }

    if (auto violations = validate_scheme(file.scheme); !violations.empty()) {
        std::string msg = "scheme is invalid:";
        for (const auto& v : violations) msg += fmt::format(" [{}] {};", v.code, v.message);
        throw PlanError(ErrorCode::schema_violation, msg, std::move(violations));
    }
    return file;
}

std::string serialize_scenario(const ScenarioFile& file) {
    json j{{"format_version", file.format_version},
           {"scheme", scheme_to_json(file.scheme)},
           {"annotations", file.annotations}};
    return canonical_dump(j);
}

json decision_to_json(const PlacementDecision& d) {
    json assignment = json::object();
    for (const auto& [site, eq] : d.assignment()) assignment[site] = eq;
    return {{"format_version", kScenarioFormatVersion}, {"assignment", std::move(assignment)}};
}

PlacementDecision decision_from_json(const json& j) {
    Fields f(j, "decision", {"format_version", "assignment"});
    if (f.has("format_version") && f.integer("format_version") != kScenarioFormatVersion) {
        throw PlanError(ErrorCode::unsupported_version, "decision format_version is not supported");
    }
    const auto& a = f.get("assignment");
    if (!a.is_object()) schema_error(field_code::kType, "decision.assignment must be an object");
    PlacementDecision d;
    for (const auto& [site, eq] : a.items()) {
        if (!eq.is_string()) schema_error(field_code::kType, fmt::format("decision.assignment.{} must be a string", site));
        d.assign(site, eq.get<std::string>());
    }
    return d;
}

PlacementDecision parse_decision(std::string_view text) {
    json j;
    try {
        j = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw PlanError(ErrorCode::malformed_syntax, fmt::format("decision is not valid JSON: {}", e.what()));
    }
    return decision_from_json(j);
}

std::string serialize_decision(const PlacementDecision& decision) { return canonical_dump(decision_to_json(decision)); }

CalibrationConfig calibration_config_from_json(const json& j) {
    Fields f(j, "calibration",
             {"absorption_min_dB", "absorption_max_dB", "quantum_dB", "invisible_trigger_dB", "max_passes", "seed",
              "unreachable_penalty_dB"});
    CalibrationConfig c;
    c.absorption_min_dB = f.number_or("absorption_min_dB", c.absorption_min_dB);
    c.absorption_max_dB = f.number_or("absorption_max_dB", c.absorption_max_dB);
    c.quantum_dB = f.number_or("quantum_dB", c.quantum_dB);
    c.invisible_trigger_dB = f.number_or("invisible_trigger_dB", c.invisible_trigger_dB);
    if (f.has("max_passes")) c.max_passes = f.integer("max_passes");
    if (f.has("seed")) {
        const auto& s = f.get("seed");
        if (!s.is_number_unsigned()) schema_error(field_code::kType, "calibration.seed must be a non-negative integer");
        c.seed = s.get<std::uint64_t>();
    }
    c.unreachable_penalty_dB = f.number_or("unreachable_penalty_dB", c.unreachable_penalty_dB);
    c.validate();
    return c;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PlanError(ErrorCode::io_error, fmt::format("cannot read '{}'", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw PlanError(ErrorCode::io_error, fmt::format("cannot write '{}'", tmp.string()));
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw PlanError(ErrorCode::io_error, fmt::format("short write to '{}'", tmp.string()));
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw PlanError(ErrorCode::io_error, fmt::format("cannot replace '{}': {}", path.string(), ec.message()));
}

}  // namespace applan

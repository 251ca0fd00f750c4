#include "applan/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "applan/geometry.hpp"
#include "applan/parallel.hpp"

namespace applan {

double free_space_loss(double distance_m) {
    return 40.0 + 20.0 * std::log10(std::max(distance_m, 1.0));
}

int fresnel_thickness_cells(double d_to_ap_m, double d_to_rx_m, double cell_size_m) {
    const double total = d_to_ap_m + d_to_rx_m;
    if (!(total > 0.0)) return 1;
    const double r = kFresnelConstant / cell_size_m * std::sqrt(d_to_ap_m * d_to_rx_m / total);
    if (r < kFresnelMinThickness) return 1;
    return static_cast<int>(std::floor(r));
}

std::size_t PathProfile::zone_cells() const {
    std::size_t n = 0;
    for (int t : fresnel_thickness_cells) n += static_cast<std::size_t>(t);
    return n;
}

double bitrate(double snr_dB, const BitrateTable& table) {
    for (const auto& tier : table.tiers) {
        if (snr_dB >= tier.snr_threshold_dB) return tier.rate_mbps;
    }
    return 0.0;
}

double segment_loss(const SegmentSample& segment, const std::vector<Obstacle>& obstacles) {
    double total = 0.0;
    for (const auto& hit : segment.hits) {
        const double loss = obstacles.at(hit.obstacle).loss_per_cell_dB;
        total += hit.ratio <= kSegmentProportionalLimit ? hit.ratio * loss : loss;
    }
    return total;
}

std::vector<ObstacleTerm> obstacle_terms(const PathProfile& profile, std::size_t obstacle_count) {
    struct Acc {
        double proportional = 0.0;
        int segments = 0;
        int cells = 0;
    };
    std::map<std::size_t, Acc> acc;
    for (const auto& seg : profile.segments) {
        for (const auto& hit : seg.hits) {
            if (hit.obstacle >= obstacle_count) continue;
            auto& a = acc[hit.obstacle];
            a.proportional += hit.ratio <= kSegmentProportionalLimit ? hit.ratio : 1.0;
            a.segments += 1;
            a.cells += hit.occupied_count;
        }
    }
    const double zone = static_cast<double>(profile.zone_cells());
    std::vector<ObstacleTerm> terms;
    terms.reserve(acc.size());
    for (const auto& [idx, a] : acc) {
        ObstacleTerm t;
        t.obstacle = idx;
        t.segments_hit = a.segments;
        t.zone_cells_hit = a.cells;
        t.blocked = zone > 0.0 && static_cast<double>(a.cells) / zone > kZoneBlockageLimit;
        t.coefficient = t.blocked ? static_cast<double>(a.segments) : a.proportional;
        terms.push_back(t);
    }
    return terms;
}

double path_obstacle_loss(const PathProfile& profile, const std::vector<Obstacle>& obstacles) {
    double total = 0.0;
    for (const auto& t : obstacle_terms(profile, obstacles.size())) {
        total += t.coefficient * obstacles[t.obstacle].loss_per_cell_dB;
    }
    return total;
}

ObstacleIndex::ObstacleIndex(const GridScheme& scheme) {
    const std::size_t n = scheme.cell_count();
    // A cell listed twice in one obstacle counts once.
    std::vector<std::vector<Cell>> cells(scheme.obstacles.size());
    for (std::size_t oi = 0; oi < scheme.obstacles.size(); ++oi) {
        auto& cs = cells[oi];
        for (Cell c : scheme.obstacles[oi].cells) {
            if (scheme.in_bounds(c)) cs.push_back(c);
        }
        std::sort(cs.begin(), cs.end());
        cs.erase(std::unique(cs.begin(), cs.end()), cs.end());
    }
    offsets_.assign(n + 1, 0);
    for (const auto& cs : cells) {
        for (Cell c : cs) ++offsets_[scheme.index_of(c) + 1];
    }
    for (std::size_t i = 0; i < n; ++i) offsets_[i + 1] += offsets_[i];
    indices_.assign(offsets_[n], 0);
    std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
    for (std::size_t oi = 0; oi < cells.size(); ++oi) {
        for (Cell c : cells[oi]) indices_[fill[scheme.index_of(c)]++] = oi;
    }
}

PropagationModel::PropagationModel(const GridScheme& scheme) : scheme_(scheme), index_(scheme) {}

PathProfile PropagationModel::profile(Cell ap_cell, Cell rx_cell) const {
    PathProfile p;
    p.ap_cell = ap_cell;
    p.rx_cell = rx_cell;
    p.los_cells = cells_of_line(ap_cell, rx_cell);
    p.fresnel_thickness_cells.reserve(p.los_cells.size());
    p.segments.reserve(p.los_cells.size());

    // Unit step along the normal (left of travel), dominant axis stepping by 1.
    const double nx = -static_cast<double>(rx_cell.row - ap_cell.row);
    const double ny = static_cast<double>(rx_cell.col - ap_cell.col);
    const double dominant = std::max(std::abs(nx), std::abs(ny));
    const double sx = dominant > 0.0 ? nx / dominant : 0.0;
    const double sy = dominant > 0.0 ? ny / dominant : 0.0;

    std::map<std::size_t, int> counts;
    for (Cell center : p.los_cells) {
        const int t = fresnel_thickness_cells(distance_m(ap_cell, center, scheme_.cell_size_m),
                                              distance_m(center, rx_cell, scheme_.cell_size_m), scheme_.cell_size_m);
        p.fresnel_thickness_cells.push_back(t);

        SegmentSample seg;
        seg.center_cell = center;
        seg.thickness = t;
        const int lo = (t % 2 == 1) ? -(t - 1) / 2 : -(t / 2 - 1);
        const int hi = (t % 2 == 1) ? (t - 1) / 2 : t / 2;
        for (int k = lo; k <= hi; ++k) {
            const Cell c{center.col + static_cast<int>(std::lround(k * sx)),
                         center.row + static_cast<int>(std::lround(k * sy))};
            if (scheme_.in_bounds(c)) seg.segment_cells.push_back(c);
        }

        counts.clear();
        for (Cell c : seg.segment_cells) {
            auto [first, last] = index_.at(scheme_.index_of(c));
            for (auto it = first; it != last; ++it) ++counts[*it];
        }
        for (const auto& [obstacle, n] : counts) {
            seg.hits.push_back({obstacle, n, static_cast<double>(n) / static_cast<double>(t)});
        }
        p.segments.push_back(std::move(seg));
    }
    return p;
}

double PropagationModel::obstacle_loss(Cell ap_cell, Cell rx_cell) const {
    return path_obstacle_loss(profile(ap_cell, rx_cell), scheme_.obstacles);
}

std::optional<LinkBudget> PropagationModel::link(const CandidateSite& site, const EquipmentType& equipment,
                                                 Cell target, double rx_gain_dBi, double noise_dBm) const {
    if (!in_sector(site.cell, equipment.pattern, target)) return std::nullopt;
    LinkBudget b;
    b.site_id = site.id;
    b.equipment_id = equipment.id;
    b.rx_cell = target;
    b.tx_power_dBm = equipment.tx_power_dBm;
    b.tx_gain_dBi = equipment.tx_gain_dBi;
    b.rx_gain_dBi = rx_gain_dBi;
    b.distance_m = distance_m(site.cell, target, scheme_.cell_size_m);
    if (target == site.cell) {
        // Saturated: the FSL term absorbs whatever brings the budget to the configured level.
        b.obstacle_loss_dB = 0.0;
        b.fsl_dB = budget_received(b.tx_power_dBm, b.tx_gain_dBi, b.rx_gain_dBi, 0.0, 0.0) -
                   scheme_.same_cell_power_dBm;
    } else {
        b.obstacle_loss_dB = obstacle_loss(site.cell, target);
        b.fsl_dB = free_space_loss(b.distance_m);
    }
    b.received_dBm = budget_received(b.tx_power_dBm, b.tx_gain_dBi, b.rx_gain_dBi, b.obstacle_loss_dB, b.fsl_dB);
    b.snr_dB = b.received_dBm - noise_dBm;
    b.rate_mbps = bitrate(b.snr_dB, scheme_.bitrate_table);
    return b;
}

std::optional<LinkBudget> PropagationModel::best_link(const PlacementDecision& decision, Cell target,
                                                      double rx_gain_dBi, double noise_dBm) const {
    std::optional<LinkBudget> best;
    // Map iteration is ascending by site id, so strict > keeps the lowest id on ties.
    for (const auto& [site_id, eq_id] : decision.assignment()) {
        const auto* site = scheme_.find_site(site_id);
        const auto* eq = scheme_.find_equipment(eq_id);
        if (site == nullptr || eq == nullptr) {
            throw PlanError(ErrorCode::invalid_decision,
                            fmt::format("decision references unknown site '{}' or equipment '{}'", site_id, eq_id));
        }
        auto candidate = link(*site, *eq, target, rx_gain_dBi, noise_dBm);
        if (candidate && (!best || candidate->received_dBm > best->received_dBm)) best = std::move(candidate);
    }
    return best;
}

PathProfile build_path_profile(const GridScheme& scheme, Cell ap_cell, Cell rx_cell) {
    return PropagationModel(scheme).profile(ap_cell, rx_cell);
}

std::optional<double> received_power(const GridScheme& scheme, const CandidateSite& site,
                                     const EquipmentType& equipment, Cell target, double rx_gain_dBi) {
    auto b = PropagationModel(scheme).link(site, equipment, target, rx_gain_dBi, kDefaultNoise_dBm);
    if (!b) return std::nullopt;
    return b->received_dBm;
}

std::optional<LinkBudget> best_link(const GridScheme& scheme, const PlacementDecision& decision,
                                    const ReceiverCell& rx) {
    return PropagationModel(scheme).best_link(decision, rx.cell, rx.rx_gain_dBi, rx.noise_dBm);
}

CoverageMap coverage_map(const GridScheme& scheme, const PlacementDecision& decision) {
    CoverageMap map;
    map.width = scheme.width_cells;
    map.height = scheme.height_cells;
    map.cells.resize(scheme.cell_count());
    if (decision.empty()) return map;

    const PropagationModel model(scheme);
    parallel_for(static_cast<std::size_t>(scheme.height_cells), [&](std::size_t row) {
        for (int col = 0; col < scheme.width_cells; ++col) {
            const Cell c{col, static_cast<int>(row)};
            auto best = model.best_link(decision, c, kDefaultRxGain_dBi, kDefaultNoise_dBm);
            if (!best) continue;
            auto& e = map.cells[scheme.index_of(c)];
            e.received_dBm = best->received_dBm;
            e.snr_dB = best->snr_dB;
            e.rate_mbps = best->rate_mbps;
            e.site_id = best->site_id;
        }
    });
    return map;
}

}  // namespace applan

#include "applan/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "applan/propagation.hpp"

namespace applan {

namespace {

constexpr double kRelTol = 1e-9;
constexpr double kUnreachable = -std::numeric_limits<double>::infinity();

double tol(double a, double b) { return kRelTol * std::max({1.0, std::abs(a), std::abs(b)}); }
bool approx_eq(double a, double b) { return std::abs(a - b) <= tol(a, b); }
bool approx_lt(double a, double b) { return a < b - tol(a, b); }
bool approx_le(double a, double b) { return a <= b + tol(a, b); }

using Choices = std::vector<std::uint16_t>;

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

void SearchParams::validate() const {
    auto fail = [](const std::string& msg) { throw PlanError(ErrorCode::invalid_argument, msg); };
    if (population < 1) fail("population must be >= 1");
    if (generations < 1) fail("generations must be >= 1");
    if (!(elite_fraction > 0.0 && elite_fraction <= 1.0)) fail("elite_fraction must be in (0, 1]");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) fail("learning_rate must be in (0, 1]");
    if (!(prob_floor >= 0.0 && prob_floor < 1.0)) fail("prob_floor must be in [0, 1)");
    if (budget_levels < 1) fail("budget_levels must be >= 1");
}

ObjectiveVector evaluate(const GridScheme& scheme, const PlacementDecision& decision) {
    if (auto bad = validate_decision(scheme, decision); !bad.empty()) {
        throw PlanError(ErrorCode::invalid_decision, bad.front().message, bad);
    }
    ObjectiveVector out;
    for (const auto& [site_id, eq_id] : decision.assignment()) {
        out.total_cost += scheme.find_site(site_id)->infra_cost + scheme.find_equipment(eq_id)->cost;
    }
    const PropagationModel model(scheme);
    out.feasible = true;
    for (const auto& rx : scheme.receivers) {
        auto best = model.best_link(decision, rx.cell, rx.rx_gain_dBi, rx.noise_dBm);
        const double rate = best ? best->rate_mbps : 0.0;
        out.per_receiver_rates[rx.id] = rate;
        out.weighted_coverage += rx.weight * rate;
        if (rate < rx.min_bitrate_mbps) out.feasible = false;
    }
    return out;
}

bool dominates(const ObjectiveVector& a, const ObjectiveVector& b) {
    return approx_le(a.total_cost, b.total_cost) && approx_le(b.weighted_coverage, a.weighted_coverage) &&
           (approx_lt(a.total_cost, b.total_cost) || approx_lt(b.weighted_coverage, a.weighted_coverage));
}

std::vector<ParetoPoint> pareto_filter(std::vector<ParetoPoint> points) {
    std::sort(points.begin(), points.end(), [](const ParetoPoint& a, const ParetoPoint& b) {
        if (a.objectives.total_cost != b.objectives.total_cost) return a.objectives.total_cost < b.objectives.total_cost;
        if (a.objectives.weighted_coverage != b.objectives.weighted_coverage) {
            return a.objectives.weighted_coverage > b.objectives.weighted_coverage;
        }
        return a.decision < b.decision;
    });
    points.erase(std::unique(points.begin(), points.end(),
                             [](const ParetoPoint& a, const ParetoPoint& b) { return a.decision == b.decision; }),
                 points.end());

    // Sweep: a point can only survive if it beats the best coverage seen at a
    // lower cost; near-ties at near-equal cost are kept for the exact pass below.
    std::vector<ParetoPoint> candidates;
    double best_cov = -std::numeric_limits<double>::infinity();
    double best_cost = 0.0;
    for (auto& p : points) {
        const double cov = p.objectives.weighted_coverage;
        const double cost = p.objectives.total_cost;
        if (candidates.empty() || approx_lt(best_cov, cov)) {
            best_cov = cov;
            best_cost = cost;
            candidates.push_back(std::move(p));
        } else if (approx_eq(cov, best_cov) && approx_eq(cost, best_cost)) {
            candidates.push_back(std::move(p));
        }
    }

    std::vector<ParetoPoint> front;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& p = candidates[i];
        bool keep = true;
        for (std::size_t j = 0; j < candidates.size() && keep; ++j) {
            if (i == j) continue;
            const auto& q = candidates[j];
            if (dominates(q.objectives, p.objectives)) keep = false;
            else if (!dominates(p.objectives, q.objectives) &&
                     approx_eq(p.objectives.total_cost, q.objectives.total_cost) &&
                     approx_eq(p.objectives.weighted_coverage, q.objectives.weighted_coverage) &&
                     q.decision < p.decision) {
                keep = false;
            }
        }
        if (keep) front.push_back(p);
    }
    return front;
}

PlacementEvaluator::PlacementEvaluator(const GridScheme& scheme) : scheme_(scheme) {
    for (const auto& s : scheme.sites) sites_.push_back(&s);
    std::sort(sites_.begin(), sites_.end(), [](auto* a, auto* b) { return a->id < b->id; });

    const PropagationModel model(scheme);
    for (const auto* site : sites_) {
        options_.push_back(site->allowed_equipment);
        std::vector<double> costs{0.0};
        std::vector<std::vector<double>> levels;
        for (const auto& eq_id : site->allowed_equipment) {
            const auto* eq = scheme.find_equipment(eq_id);
            if (eq == nullptr) {
                throw PlanError(ErrorCode::schema_violation,
                                fmt::format("site '{}' allows unknown equipment '{}'", site->id, eq_id));
            }
            costs.push_back(site->infra_cost + eq->cost);
            std::vector<double> per_rx;
            per_rx.reserve(scheme.receivers.size());
            for (const auto& rx : scheme.receivers) {
                auto b = model.link(*site, *eq, rx.cell, rx.rx_gain_dBi, rx.noise_dBm);
                per_rx.push_back(b ? b->received_dBm : kUnreachable);
            }
            levels.push_back(std::move(per_rx));
        }
        cost_.push_back(std::move(costs));
        received_.push_back(std::move(levels));
    }
    for (const auto& rx : scheme.receivers) {
        noise_.push_back(rx.noise_dBm);
        weight_.push_back(rx.weight);
        min_rate_.push_back(rx.min_bitrate_mbps);
    }
}

std::vector<double> PlacementEvaluator::rates(const Choices& choices) const {
    std::vector<double> out(noise_.size(), 0.0);
    for (std::size_t j = 0; j < noise_.size(); ++j) {
        double best = kUnreachable;
        for (std::size_t i = 0; i < sites_.size(); ++i) {
            if (choices[i] == 0) continue;
            const double p = received_[i][choices[i] - 1][j];
            if (p > best) best = p;
        }
        if (best != kUnreachable) out[j] = bitrate(best - noise_[j], scheme_.bitrate_table);
    }
    return out;
}

PlacementEvaluator::Score PlacementEvaluator::score(const Choices& choices) const {
    Score s;
    for (std::size_t i = 0; i < sites_.size(); ++i) {
        if (choices[i] != 0) s.cost += cost_[i][choices[i]];
    }
    const auto r = rates(choices);
    for (std::size_t j = 0; j < r.size(); ++j) {
        s.coverage += weight_[j] * r[j];
        if (r[j] < min_rate_[j]) s.shortfall_mbps += min_rate_[j] - r[j];
    }
    s.feasible = s.shortfall_mbps == 0.0;
    return s;
}

PlacementDecision PlacementEvaluator::decode(const Choices& choices) const {
    PlacementDecision d;
    for (std::size_t i = 0; i < sites_.size(); ++i) {
        if (choices[i] != 0) d.assign(sites_[i]->id, options_[i][choices[i] - 1]);
    }
    return d;
}

ObjectiveVector PlacementEvaluator::objectives(const Choices& choices) const {
    const auto s = score(choices);
    const auto r = rates(choices);
    ObjectiveVector out;
    out.total_cost = s.cost;
    out.weighted_coverage = s.coverage;
    out.feasible = s.feasible;
    for (std::size_t j = 0; j < r.size(); ++j) out.per_receiver_rates[scheme_.receivers[j].id] = r[j];
    return out;
}

std::uint64_t PlacementEvaluator::decision_count() const {
    std::uint64_t n = 1;
    for (std::size_t i = 0; i < sites_.size(); ++i) {
        const std::uint64_t k = option_count(i);
        if (n > std::numeric_limits<std::uint64_t>::max() / k) return std::numeric_limits<std::uint64_t>::max();
        n *= k;
    }
    return n;
}

namespace {

struct Compact {
    Choices choices;
    double cost = 0.0;
    double coverage = 0.0;
};

// Reduces compact points to a superset of the front, then materializes them for
// the exact filter.
std::vector<ParetoPoint> finish_front(const PlacementEvaluator& ev, std::vector<Compact> pts) {
    std::sort(pts.begin(), pts.end(), [](const Compact& a, const Compact& b) {
        if (a.cost != b.cost) return a.cost < b.cost;
        return a.coverage > b.coverage;
    });
    std::vector<ParetoPoint> materialized;
    double best_cov = -std::numeric_limits<double>::infinity();
    double best_cost = 0.0;
    bool any = false;
    for (const auto& p : pts) {
        if (!any || approx_lt(best_cov, p.coverage)) {
            best_cov = p.coverage;
            best_cost = p.cost;
            any = true;
        } else if (!(approx_eq(p.coverage, best_cov) && approx_eq(p.cost, best_cost))) {
            continue;
        }
        materialized.push_back({ev.decode(p.choices), ev.objectives(p.choices)});
    }
    return pareto_filter(std::move(materialized));
}

}  // namespace

ParetoResult brute_force_pareto(const GridScheme& scheme) {
    const auto start = std::chrono::steady_clock::now();
    const PlacementEvaluator ev(scheme);
    const std::uint64_t total = ev.decision_count();
    if (total > kOracleDecisionLimit) {
        throw PlanError(ErrorCode::instance_too_large,
                        fmt::format("instance has {} decisions, oracle limit is {}", total, kOracleDecisionLimit));
    }

    std::vector<Compact> feasible;
    Choices choices(ev.site_count(), 0);
    for (std::uint64_t n = 0; n < total; ++n) {
        const auto s = ev.score(choices);
        if (s.feasible) feasible.push_back({choices, s.cost, s.coverage});
        // Odometer increment, last site fastest.
        for (std::size_t i = ev.site_count(); i-- > 0;) {
            if (++choices[i] < ev.option_count(i)) break;
            choices[i] = 0;
        }
    }

    ParetoResult result;
    result.points = finish_front(ev, std::move(feasible));
    result.info = {"oracle", 0, total, seconds_since(start)};
    return result;
}

namespace {

// Deterministic, library-independent uniform draw in [0, 1).
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Ranking key for a sample under a budget; larger is better.
struct Rank {
    int tier = 0;  // 2 feasible within budget, 1 infeasible within budget, 0 over budget
    double primary = 0.0;
    double secondary = 0.0;

    bool better_than(const Rank& o) const {
        if (tier != o.tier) return tier > o.tier;
        if (primary != o.primary) return primary > o.primary;
        return secondary > o.secondary;
    }
};

Rank rank_of(const PlacementEvaluator::Score& s, double budget) {
    if (!approx_le(s.cost, budget)) return {0, -s.cost, s.coverage};
    if (!s.feasible) return {1, -s.shortfall_mbps, s.coverage};
    return {2, s.coverage, -s.cost};
}

// Nondominated archive of feasible samples; equal objectives keep the
// lexicographically smallest decision.
class Archive {
public:
    explicit Archive(const PlacementEvaluator& ev) : ev_(ev) {}

    void offer(const Choices& c, const PlacementEvaluator::Score& s) {
        const ObjectiveVector cand{s.cost, s.coverage, true, {}};
        for (auto it = items_.begin(); it != items_.end();) {
            const ObjectiveVector cur{it->cost, it->coverage, true, {}};
            if (dominates(cur, cand)) return;
            if (approx_eq(cur.total_cost, cand.total_cost) && approx_eq(cur.weighted_coverage, cand.weighted_coverage)) {
                if (it->choices == c || !(ev_.decode(c) < ev_.decode(it->choices))) return;
                it = items_.erase(it);
                continue;
            }
            if (dominates(cand, cur)) {
                it = items_.erase(it);
                continue;
            }
            ++it;
        }
        items_.push_back({c, s.cost, s.coverage});
    }

    std::vector<Compact> take() { return std::move(items_); }

private:
    const PlacementEvaluator& ev_;
    std::vector<Compact> items_;
};

std::vector<double> budget_grid(const PlacementEvaluator& ev, int levels) {
    double max_cost = 0.0;
    std::vector<double> budgets;
    for (std::size_t i = 0; i < ev.site_count(); ++i) {
        double site_max = 0.0;
        for (std::size_t k = 1; k < ev.option_count(i); ++k) {
            site_max = std::max(site_max, ev.option_cost(i, k));
            budgets.push_back(ev.option_cost(i, k));
        }
        max_cost += site_max;
    }
    if (levels == 1) {
        budgets.push_back(max_cost);
    } else {
        for (int l = 0; l < levels; ++l) budgets.push_back(max_cost * l / (levels - 1));
    }
    std::sort(budgets.begin(), budgets.end());
    budgets.erase(std::unique(budgets.begin(), budgets.end()), budgets.end());
    return budgets;
}

}  // namespace

ParetoResult variant_probability_search(const GridScheme& scheme, const SearchParams& params) {
    params.validate();
    const auto start = std::chrono::steady_clock::now();
    const PlacementEvaluator ev(scheme);
    const std::size_t n_sites = ev.site_count();
    const auto budgets = budget_grid(ev, params.budget_levels);
    const std::size_t pop = static_cast<std::size_t>(params.population);
    const std::size_t elite =
        std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(params.elite_fraction * params.population)), 1, pop);

    Archive archive(ev);
    std::vector<Compact> recorded;
    std::uint64_t evaluations = 0;

    std::vector<Choices> samples(pop, Choices(n_sites, 0));
    std::vector<PlacementEvaluator::Score> scores(pop);
    std::vector<Rank> ranks(pop);
    std::vector<std::size_t> order(pop);

    for (std::size_t level = 0; level < budgets.size(); ++level) {
        const double budget = budgets[level];
        std::seed_seq seq{static_cast<std::uint32_t>(params.seed), static_cast<std::uint32_t>(params.seed >> 32),
                          static_cast<std::uint32_t>(level)};
        std::mt19937_64 rng(seq);

        std::vector<std::vector<double>> prob(n_sites);
        for (std::size_t i = 0; i < n_sites; ++i) prob[i].assign(ev.option_count(i), 1.0 / ev.option_count(i));

        bool have_best = false;
        Compact best;
        Rank best_rank;

        for (int gen = 0; gen < params.generations; ++gen) {
            for (std::size_t s = 0; s < pop; ++s) {
                for (std::size_t i = 0; i < n_sites; ++i) {
                    const double u = uniform01(rng);
                    double acc = 0.0;
                    std::uint16_t pick = static_cast<std::uint16_t>(prob[i].size() - 1);
                    for (std::size_t k = 0; k < prob[i].size(); ++k) {
                        acc += prob[i][k];
                        if (u < acc) {
                            pick = static_cast<std::uint16_t>(k);
                            break;
                        }
                    }
                    samples[s][i] = pick;
                }
            }
            for (std::size_t s = 0; s < pop; ++s) {
                scores[s] = ev.score(samples[s]);
                ranks[s] = rank_of(scores[s], budget);
            }
            evaluations += pop;

            for (std::size_t s = 0; s < pop; ++s) {
                if (ranks[s].tier != 2) continue;
                archive.offer(samples[s], scores[s]);
                if (!have_best || ranks[s].better_than(best_rank)) {
                    have_best = true;
                    best_rank = ranks[s];
                    best = {samples[s], scores[s].cost, scores[s].coverage};
                }
            }

            std::iota(order.begin(), order.end(), std::size_t{0});
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t a, std::size_t b) { return ranks[a].better_than(ranks[b]); });

            for (std::size_t i = 0; i < n_sites; ++i) {
                auto& p = prob[i];
                std::vector<double> freq(p.size(), 0.0);
                for (std::size_t e = 0; e < elite; ++e) freq[samples[order[e]][i]] += 1.0;
                const double floor = std::min(params.prob_floor, 1.0 / static_cast<double>(p.size()));
                double sum = 0.0;
                for (std::size_t k = 0; k < p.size(); ++k) {
                    p[k] = (1.0 - params.learning_rate) * p[k] + params.learning_rate * freq[k] / elite;
                    p[k] = std::max(p[k], floor);
                    sum += p[k];
                }
                for (auto& v : p) v /= sum;
            }
        }
        if (have_best) recorded.push_back(std::move(best));
    }

    auto pts = archive.take();
    pts.insert(pts.end(), std::make_move_iterator(recorded.begin()), std::make_move_iterator(recorded.end()));

    ParetoResult result;
    result.points = finish_front(ev, std::move(pts));
    result.info = {"vps", params.seed, evaluations, seconds_since(start)};
    return result;
}

}  // namespace applan

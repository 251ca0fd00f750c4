#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "applan/scheme.hpp"

namespace applan {

struct ObjectiveVector {
    double total_cost = 0.0;
    double weighted_coverage = 0.0;
    bool feasible = false;
    std::map<std::string, double> per_receiver_rates;
};

struct ParetoPoint {
    PlacementDecision decision;
    ObjectiveVector objectives;
};

struct SolverInfo {
    std::string solver;
    std::uint64_t seed = 0;
    std::uint64_t evaluations = 0;
    double wall_time_s = 0.0;  // informational; excluded from artifacts
};

// Feasible, mutually nondominated points sorted by ascending cost.
struct ParetoResult {
    std::vector<ParetoPoint> points;
    SolverInfo info;
};

struct SearchParams {
    std::uint64_t seed = 0;
    int population = 64;
    int generations = 200;
    double elite_fraction = 0.125;
    double learning_rate = 0.3;
    double prob_floor = 0.02;
    int budget_levels = 16;

    // Throws PlanError(invalid_argument) when a field is out of range.
    void validate() const;
};

inline constexpr std::uint64_t kOracleDecisionLimit = std::uint64_t{1} << 20;

ObjectiveVector evaluate(const GridScheme& scheme, const PlacementDecision& decision);

// Pareto dominance on (cost down, coverage up). Values closer than a relative
// 1e-9 compare equal so summation order cannot manufacture dominance.
bool dominates(const ObjectiveVector& a, const ObjectiveVector& b);

// Nondominated sublist sorted by cost; points with equal objectives collapse to
// the lexicographically smallest decision.
std::vector<ParetoPoint> pareto_filter(std::vector<ParetoPoint> points);

// Exhaustive front. Throws instance_too_large above kOracleDecisionLimit decisions.
ParetoResult brute_force_pareto(const GridScheme& scheme);

// Per-site categorical probability search swept over cost budgets.
ParetoResult variant_probability_search(const GridScheme& scheme, const SearchParams& params);

// Precomputed site x option x receiver link table. Decisions are encoded as one
// choice per site (sites in ascending id order, 0 = no AP, k = k-th allowed type).
class PlacementEvaluator {
public:
    explicit PlacementEvaluator(const GridScheme& scheme);

    struct Score {
        double cost = 0.0;
        double coverage = 0.0;
        double shortfall_mbps = 0.0;  // sum of unmet minimum bitrates
        bool feasible = false;
    };

    std::size_t site_count() const { return sites_.size(); }
    std::size_t option_count(std::size_t site) const { return options_[site].size() + 1; }
    double option_cost(std::size_t site, std::size_t choice) const { return cost_[site][choice]; }

    Score score(const std::vector<std::uint16_t>& choices) const;
    std::vector<double> rates(const std::vector<std::uint16_t>& choices) const;
    PlacementDecision decode(const std::vector<std::uint16_t>& choices) const;
    ObjectiveVector objectives(const std::vector<std::uint16_t>& choices) const;

    // Number of distinct decisions, saturating at max uint64.
    std::uint64_t decision_count() const;

private:
    const GridScheme& scheme_;
    std::vector<const CandidateSite*> sites_;
    std::vector<std::vector<std::string>> options_;
    std::vector<std::vector<double>> cost_;                   // [site][choice]
    std::vector<std::vector<std::vector<double>>> received_;  // [site][choice-1][rx], -inf = unreachable
    std::vector<double> noise_;
    std::vector<double> weight_;
    std::vector<double> min_rate_;
};

}  // namespace applan

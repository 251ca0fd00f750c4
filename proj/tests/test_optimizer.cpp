#include <doctest.h>

#include <algorithm>
#include <functional>
#include <random>
#include <set>

#include "applan/optimizer.hpp"
#include "applan/propagation.hpp"
#include "fixtures.hpp"

using namespace applan;
using namespace applan::testing;

namespace {

// Independent oracle: recursive enumeration through evaluate() (no link
// table), then the textbook O(n^2) nondominated filter on exact values.
std::set<PlacementDecision> reference_front(const GridScheme& s) {
    std::vector<std::pair<PlacementDecision, ObjectiveVector>> all;
    std::function<void(std::size_t, PlacementDecision&)> rec = [&](std::size_t i, PlacementDecision& d) {
        if (i == s.sites.size()) {
            auto obj = evaluate(s, d);
            if (obj.feasible) all.emplace_back(d, std::move(obj));
            return;
        }
        rec(i + 1, d);
        for (const auto& eq : s.sites[i].allowed_equipment) {
            d.assign(s.sites[i].id, eq);
            rec(i + 1, d);
            d.clear(s.sites[i].id);
        }
    };
    PlacementDecision d;
    rec(0, d);

    auto near = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)}); };
    std::set<PlacementDecision> front;
    for (std::size_t i = 0; i < all.size(); ++i) {
        const auto& p = all[i].second;
        bool keep = true;
        for (std::size_t j = 0; j < all.size() && keep; ++j) {
            if (i == j) continue;
            const auto& q = all[j].second;
            const bool le = q.total_cost <= p.total_cost || near(q.total_cost, p.total_cost);
            const bool ge = q.weighted_coverage >= p.weighted_coverage || near(q.weighted_coverage, p.weighted_coverage);
            const bool same = near(q.total_cost, p.total_cost) && near(q.weighted_coverage, p.weighted_coverage);
            if (le && ge && !same) keep = false;
            if (same && all[j].first < all[i].first) keep = false;
        }
        if (keep) front.insert(all[i].first);
    }
    return front;
}

std::set<PlacementDecision> decisions_of(const ParetoResult& r) {
    std::set<PlacementDecision> out;
    for (const auto& p : r.points) out.insert(p.decision);
    return out;
}

ObjectiveVector obj(double cost, double cov) { return {cost, cov, true, {}}; }

void check_front_shape(const GridScheme& s, const ParetoResult& r) {
    for (std::size_t i = 0; i < r.points.size(); ++i) {
        const auto& p = r.points[i];
        REQUIRE(p.objectives.feasible);
        REQUIRE(validate_decision(s, p.decision).empty());
        const auto fresh = evaluate(s, p.decision);
        REQUIRE(fresh.total_cost == doctest::Approx(p.objectives.total_cost));
        REQUIRE(fresh.weighted_coverage == doctest::Approx(p.objectives.weighted_coverage));
        if (i > 0) REQUIRE(r.points[i - 1].objectives.total_cost <= p.objectives.total_cost);
        for (const auto& q : r.points) REQUIRE_FALSE(dominates(q.objectives, p.objectives));
    }
}

}  // namespace

TEST_CASE("evaluate") {
    GridScheme s = empty_scheme(30, 10, 1.0);
    s.equipment = {omni_equipment("e", 20.0, 0.0, 40.0)};
    s.sites = {site("a", {0, 5}, 100.0, {"e"})};
    s.receivers = {receiver("r", {10, 5}, 2.0)};

    const auto none = evaluate(s, PlacementDecision{});
    CHECK(none.total_cost == 0.0);
    CHECK(none.weighted_coverage == 0.0);
    CHECK(none.feasible);
    CHECK(none.per_receiver_rates.at("r") == 0.0);

    const auto one = evaluate(s, decision({{"a", "e"}}));
    CHECK(one.total_cost == 140.0);
    CHECK(one.per_receiver_rates.at("r") == 54.0);  // -40 dBm against -95 noise
    CHECK(one.weighted_coverage == 108.0);

    s.receivers[0].min_bitrate_mbps = 1.0;
    CHECK_FALSE(evaluate(s, PlacementDecision{}).feasible);
    CHECK(evaluate(s, decision({{"a", "e"}})).feasible);
}

TEST_CASE("dominates") {
    CHECK(dominates(obj(10, 5), obj(12, 5)));
    CHECK_FALSE(dominates(obj(10, 5), obj(10, 5)));
    CHECK_FALSE(dominates(obj(10, 5), obj(8, 7)));
    CHECK(dominates(obj(8, 7), obj(10, 5)));
    // Summation-order noise does not create dominance.
    CHECK_FALSE(dominates(obj(0.1 + 0.2, 5), obj(0.3, 5)));
}

TEST_CASE("pareto_filter") {
    auto pt = [](std::string site, double cost, double cov) {
        return ParetoPoint{decision({{std::move(site), "e"}}), obj(cost, cov)};
    };
    SUBCASE("single point") {
        const auto f = pareto_filter({pt("a", 1, 1)});
        REQUIRE(f.size() == 1);
        CHECK(f[0].decision == decision({{"a", "e"}}));
    }
    SUBCASE("dominating chain keeps the best") {
        const auto f = pareto_filter({pt("c", 3, 1), pt("b", 2, 2), pt("a", 1, 3)});
        REQUIRE(f.size() == 1);
        CHECK(f[0].objectives.total_cost == 1.0);
    }
    SUBCASE("equal objectives collapse to the smallest decision") {
        const auto f = pareto_filter({pt("z", 5, 5), pt("m", 5, 5), pt("m", 5, 5), pt("q", 2, 1)});
        REQUIRE(f.size() == 2);
        CHECK(f[1].decision == decision({{"m", "e"}}));
    }
    SUBCASE("idempotent and absorbs dominated points") {
        std::mt19937_64 rng(8);
        std::uniform_int_distribution<int> v(0, 20);
        for (int n = 0; n < 200; ++n) {
            std::vector<ParetoPoint> pts;
            for (int k = 0; k < 30; ++k) pts.push_back(pt("s" + std::to_string(k), v(rng), v(rng)));
            const auto once = pareto_filter(pts);
            const auto twice = pareto_filter(once);
            REQUIRE(once.size() == twice.size());
            for (std::size_t k = 0; k < once.size(); ++k) REQUIRE(once[k].decision == twice[k].decision);

            auto extended = once;
            for (const auto& p : once) extended.push_back(pt("zz", p.objectives.total_cost + 1, p.objectives.weighted_coverage));
            const auto again = pareto_filter(extended);
            REQUIRE(again.size() == once.size());
        }
    }
}

TEST_CASE("brute_force_pareto small cases") {
    SUBCASE("no candidate sites") {
        GridScheme s = empty_scheme(5, 5, 1.0);
        s.receivers = {receiver("r", {1, 1})};
        const auto r = brute_force_pareto(s);
        REQUIRE(r.points.size() == 1);
        CHECK(r.points[0].decision.empty());
        s.receivers[0].min_bitrate_mbps = 1;
        CHECK(brute_force_pareto(s).points.empty());
    }
    SUBCASE("two mandatory receivers need both sites") {
        // Sector antennas facing apart: each site can serve only its own receiver.
        GridScheme s = empty_scheme(40, 5, 1.0);
        EquipmentType e = omni_equipment("e", 10.0, 0.0, 10.0);
        e.pattern = AntennaPattern::sector(180.0, 90.0);
        EquipmentType w = omni_equipment("w", 10.0, 0.0, 10.0);
        w.pattern = AntennaPattern::sector(0.0, 90.0);
        s.equipment = {e, w};
        s.sites = {site("left", {15, 2}, 5, {"e"}), site("right", {25, 2}, 5, {"w"})};
        s.receivers = {receiver("rl", {5, 2}, 1, 1), receiver("rr", {35, 2}, 1, 1)};
        const auto r = brute_force_pareto(s);
        REQUIRE(r.points.size() == 1);
        CHECK(r.points[0].decision == decision({{"left", "e"}, {"right", "w"}}));
        CHECK(r.info.evaluations == 4);
    }
    SUBCASE("refuses oversized instances") {
        GridScheme s = empty_scheme(30, 30, 1.0);
        s.equipment = {omni_equipment("a", 1, 1, 1), omni_equipment("b", 1, 1, 1), omni_equipment("c", 1, 1, 1)};
        for (int i = 0; i < 11; ++i) s.sites.push_back(site("s" + std::to_string(i), {i, 0}, 0, {"a", "b", "c"}));
        try {
            brute_force_pareto(s);
            FAIL("expected instance-too-large");
        } catch (const PlanError& e) {
            CHECK(e.code() == ErrorCode::instance_too_large);
        }
    }
}

TEST_CASE("brute_force_pareto matches an independent enumerator") {
    const auto s = five_site_instance();
    const auto r = brute_force_pareto(s);
    CHECK(r.info.evaluations == 243);
    CHECK(decisions_of(r) == reference_front(s));
    CHECK(r.points.size() >= 8);
    check_front_shape(s, r);

    std::mt19937_64 rng(404);
    for (int n = 0; n < 40; ++n) {
        const auto rs = random_scheme(rng, 5, 2, 6);
        const auto rr = brute_force_pareto(rs);
        REQUIRE(decisions_of(rr) == reference_front(rs));
        check_front_shape(rs, rr);
    }
}

TEST_CASE("placement evaluator agrees with evaluate") {
    std::mt19937_64 rng(12);
    for (int n = 0; n < 60; ++n) {
        const auto s = random_scheme(rng, 5, 3, 6);
        const PlacementEvaluator ev(s);
        std::vector<std::uint16_t> choices(ev.site_count());
        for (int k = 0; k < 20; ++k) {
            for (std::size_t i = 0; i < choices.size(); ++i) choices[i] = static_cast<std::uint16_t>(rng() % ev.option_count(i));
            const auto a = ev.objectives(choices);
            const auto b = evaluate(s, ev.decode(choices));
            REQUIRE(a.total_cost == doctest::Approx(b.total_cost));
            REQUIRE(a.weighted_coverage == doctest::Approx(b.weighted_coverage));
            REQUIRE(a.feasible == b.feasible);
            REQUIRE(a.per_receiver_rates == b.per_receiver_rates);
        }
    }
}

TEST_CASE("variant_probability_search") {
    const auto s = five_site_instance();
    SearchParams params;

    SUBCASE("matches the oracle on the five-site instance") {
        const auto oracle = decisions_of(brute_force_pareto(s));
        int hits = 0;
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            params.seed = seed;
            const auto r = variant_probability_search(s, params);
            check_front_shape(s, r);
            if (decisions_of(r) == oracle) ++hits;
        }
        CHECK(hits >= 9);
    }
    SUBCASE("deterministic for a fixed seed") {
        params.seed = 7;
        const auto a = variant_probability_search(s, params);
        const auto b = variant_probability_search(s, params);
        REQUIRE(a.points.size() == b.points.size());
        for (std::size_t i = 0; i < a.points.size(); ++i) {
            CHECK(a.points[i].decision == b.points[i].decision);
            CHECK(a.points[i].objectives.weighted_coverage == b.points[i].objectives.weighted_coverage);
        }
        CHECK(a.info.evaluations == b.info.evaluations);
    }
    SUBCASE("no feasible decision gives an empty front") {
        auto hard = s;
        hard.receivers[0].min_bitrate_mbps = 1000.0;
        CHECK(variant_probability_search(hard, params).points.empty());
    }
    SUBCASE("never returns points dominated by the oracle front") {
        std::mt19937_64 rng(31);
        for (int n = 0; n < 15; ++n) {
            const auto rs = random_scheme(rng, 5, 2, 6);
            const auto oracle = brute_force_pareto(rs);
            params.seed = n;
            params.generations = 60;
            const auto r = variant_probability_search(rs, params);
            check_front_shape(rs, r);
            for (const auto& p : r.points) {
                for (const auto& q : oracle.points) REQUIRE_FALSE(dominates(q.objectives, p.objectives));
            }
        }
    }
    SUBCASE("parameter validation") {
        params.population = 0;
        CHECK_THROWS_AS(params.validate(), PlanError);
        params = {};
        params.elite_fraction = 1.5;
        CHECK_THROWS_AS(variant_probability_search(s, params), PlanError);
    }
}

TEST_CASE("weight scaling leaves the Pareto decisions unchanged") {
    std::mt19937_64 rng(1234);
    for (int n = 0; n < 20; ++n) {
        const auto s = random_scheme(rng, 5, 2, 6);
        auto scaled = s;
        for (auto& rx : scaled.receivers) rx.weight *= 3.7;
        const auto a = brute_force_pareto(s);
        const auto b = brute_force_pareto(scaled);
        REQUIRE(decisions_of(a) == decisions_of(b));
        for (std::size_t k = 0; k < a.points.size(); ++k) {
            REQUIRE(b.points[k].objectives.weighted_coverage ==
                    doctest::Approx(3.7 * a.points[k].objectives.weighted_coverage));
        }
    }
}

TEST_CASE("adding a candidate site never worsens the oracle front") {
    std::mt19937_64 rng(55);
    for (int n = 0; n < 20; ++n) {
        auto s = random_scheme(rng, 4, 2, 5);
        const auto before = brute_force_pareto(s);
        Cell c;
        do {
            c = {static_cast<int>(rng() % s.width_cells), static_cast<int>(rng() % s.height_cells)};
        } while (std::any_of(s.sites.begin(), s.sites.end(), [&](const CandidateSite& x) { return x.cell == c; }));
        std::vector<std::string> all;
        for (const auto& e : s.equipment) all.push_back(e.id);
        s.sites.push_back(site("extra", c, 10.0, all));
        const auto after = brute_force_pareto(s);
        for (const auto& old : before.points) {
            const bool covered = std::any_of(after.points.begin(), after.points.end(), [&](const ParetoPoint& p) {
                return !dominates(old.objectives, p.objectives);
            });
            REQUIRE(covered);
            for (const auto& p : after.points) REQUIRE_FALSE(dominates(old.objectives, p.objectives));
        }
    }
}

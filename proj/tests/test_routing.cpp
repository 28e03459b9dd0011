#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <deque>

#include "mixsim/net.hpp"
#include "mixsim/routing.hpp"
#include "mixsim/scenario.hpp"

using namespace mixsim;
using Catch::Matchers::WithinAbs;

namespace {

VehicleState on_edge(int id, VehicleClass k, int edge) {
    VehicleState v;
    v.id = id;
    v.klass = k;
    v.route.edges = {edge};
    return v;
}

int edge_between(const RoadNetwork& net, int from, int to) {
    for (const Edge& e : net.edges)
        if (e.from == from && e.to == to) return e.id;
    FAIL("no such edge");
    return -1;
}

// 2x2 grid and a north-entry -> far south-exit vehicle with headroom before
// its first junction, the base case every reroute test perturbs.
struct RerouteFixture {
    RoadNetwork net = build_grid(2, 2, 100.0, 13.9);
    std::vector<double> lengths = net.edge_lengths();
    int entry_nw = boundary_entry_edge(net, 2, 2, Side::North, 0);
    int exit_se = boundary_exit_edge(net, 2, 2, Side::South, 1);
    int east_leg = edge_between(net, 0, 1);   // j0 -> j1
    int south_leg = edge_between(net, 0, 2);  // j0 -> j2
    RerouteConfig cfg;

    VehicleState vehicle() const {
        VehicleState v;
        v.id = 1;
        v.klass = VehicleClass::RV;
        v.route = *shortest_path(net, entry_nw, exit_se, lengths);
        v.base_cost = v.route.base_cost;
        v.pos = 10.0;  // 90 m from the junction: outside commitment
        return v;
    }

    CostMap map_with(std::vector<double> cost, long generation = 1) const {
        CostMap m;
        m.cost = std::move(cost);
        m.generation = generation;
        return m;
    }
};

}  // namespace

TEST_CASE("coverage is the RV share among vehicles driving the edge") {
    std::vector<VehicleState> vs;
    REQUIRE_FALSE(measure_coverage(3, vs).has_value());

    vs.push_back(on_edge(0, VehicleClass::RV, 3));
    vs.push_back(on_edge(1, VehicleClass::RV, 3));
    vs.push_back(on_edge(2, VehicleClass::HV, 3));
    vs.push_back(on_edge(3, VehicleClass::RV, 7));  // other edge
    REQUIRE_THAT(*measure_coverage(3, vs), WithinAbs(2.0 / 3.0, 1e-15));
    REQUIRE_THAT(*measure_coverage(7, vs), WithinAbs(1.0, 1e-15));
    REQUIRE_FALSE(measure_coverage(5, vs).has_value());

    vs.push_back(on_edge(4, VehicleClass::HV, 3));
    vs.back().in_interior = true;  // interior and finished vehicles do not count
    vs.push_back(on_edge(5, VehicleClass::HV, 3));
    vs.back().finish_time = 12.0;
    REQUIRE_THAT(*measure_coverage(3, vs), WithinAbs(2.0 / 3.0, 1e-15));
}

TEST_CASE("trend recovers the slope of a linear history") {
    std::deque<double> h{0.2, 0.3, 0.4, 0.5, 0.6};
    REQUIRE_THAT(trend(h, 5), WithinAbs(0.1, 1e-15));

    std::deque<double> rev(h.rbegin(), h.rend());
    REQUIRE_THAT(trend(rev, 5), WithinAbs(-0.1, 1e-15));

    std::deque<double> flat(7, 0.42);
    REQUIRE_THAT(trend(flat, 7), WithinAbs(0.0, 1e-15));

    RngStream rng(11, "trend");
    for (int trial = 0; trial < 200; ++trial) {
        double a = rng.uniform(-1.0, 1.0), b = rng.uniform(-0.2, 0.2);
        int k = rng.uniform_int(2, 12);
        std::deque<double> lin;
        for (int i = 0; i < k; ++i) lin.push_back(a + b * i);
        REQUIRE_THAT(trend(lin, k), WithinAbs(b, 1e-12));
    }

    REQUIRE_THROWS_AS(trend(h, 4), ConfigError);
    REQUIRE_THROWS_AS(trend(h, 6), ConfigError);
}

TEST_CASE("prediction extrapolates and clips to a valid share") {
    REQUIRE_THAT(predict(0.4, 0.1, 2.0), WithinAbs(0.6, 1e-15));
    REQUIRE(predict(0.9, 0.1, 5.0) == 1.0);
    REQUIRE(predict(0.1, -0.2, 2.0) == 0.0);
    REQUIRE(predict(0.5, 0.0, 100.0) == 0.5);
}

TEST_CASE("shortage is the unmet part of the coverage target") {
    REQUIRE(shortage(0.8, 0.55) == 0.0);
    REQUIRE_THAT(shortage(0.25, 0.55), WithinAbs(0.3, 1e-15));
    REQUIRE(shortage(0.55, 0.55) == 0.0);
}

TEST_CASE("cost adjustment discounts exactly the predicted shortage") {
    std::vector<double> base{100.0, 80.0, 60.0};
    auto out = adjust_costs(base, {0.3, 0.0, 0.5}, 1.0);
    REQUIRE_THAT(out[0], WithinAbs(70.0, 1e-12));
    REQUIRE(out[1] == 80.0);
    REQUIRE_THAT(out[2], WithinAbs(30.0, 1e-12));

    out = adjust_costs(base, {0.3, 0.0, 0.5}, 0.0);  // alpha off: broadcast is inert
    REQUIRE(out == base);

    REQUIRE_THROWS_AS(adjust_costs(base, {1.0, 0.0, 0.0}, 1.0), ConfigError);
}

TEST_CASE("coordinator settings are validated") {
    CoordinatorConfig c;
    REQUIRE_NOTHROW(c.validate());
    auto bad = [&](auto mut) {
        CoordinatorConfig b = c;
        mut(b);
        REQUIRE_THROWS_AS(b.validate(), ConfigError);
    };
    bad([](CoordinatorConfig& b) { b.alpha = -0.1; });
    bad([](CoordinatorConfig& b) { b.p_target = -0.1; });
    bad([](CoordinatorConfig& b) { b.p_target = 1.1; });
    bad([](CoordinatorConfig& b) { b.horizon_steps = -1; });
    bad([](CoordinatorConfig& b) { b.update_interval = 0; });
    bad([](CoordinatorConfig& b) { b.window = 1; });
    bad([](CoordinatorConfig& b) { b.alpha = 2.0, b.p_target = 0.5; });  // would zero a cost
}

TEST_CASE("reroute settings are validated") {
    RerouteConfig c;
    REQUIRE_NOTHROW(c.validate());
    auto bad = [&](auto mut) {
        RerouteConfig b = c;
        mut(b);
        REQUIRE_THROWS_AS(b.validate(), ConfigError);
    };
    bad([](RerouteConfig& b) { b.rho = -0.1; });
    bad([](RerouteConfig& b) { b.rho = 1.1; });
    bad([](RerouteConfig& b) { b.delta = 1.0; });
    bad([](RerouteConfig& b) { b.delta = 0.9; });
    bad([](RerouteConfig& b) { b.cooldown_steps = -1; });
    bad([](RerouteConfig& b) { b.commitment = -1.0; });
}

TEST_CASE("coordinator tracks one edge through a full broadcast cycle") {
    RoadNetwork net = build_grid(1, 1, 100.0, 13.9);
    CoordinatorConfig cfg;
    cfg.alpha = 1.0;
    cfg.p_target = 0.9;
    cfg.horizon_steps = 120;  // two sample periods ahead
    cfg.update_interval = 60;
    cfg.window = 5;
    Coordinator coord(cfg, net.edge_lengths());
    int e = boundary_entry_edge(net, 1, 1, Side::North, 0);
    int other = boundary_entry_edge(net, 1, 1, Side::East, 0);

    auto mix = [&](int rv, int hv) {
        std::vector<VehicleState> vs;
        int id = 0;
        for (int i = 0; i < rv; ++i) vs.push_back(on_edge(id++, VehicleClass::RV, e));
        for (int i = 0; i < hv; ++i) vs.push_back(on_edge(id++, VehicleClass::HV, e));
        return vs;
    };

    // First sample: no trend yet, the latest share stands in for the forecast.
    double sum = coord.update(mix(1, 4));  // coverage 0.2
    REQUIRE_THAT(sum, WithinAbs(0.7, 1e-12));
    REQUIRE_THAT(coord.shortages()[e], WithinAbs(0.7, 1e-12));
    REQUIRE_THAT(coord.cost_map().cost[e], WithinAbs(30.0, 1e-12));
    REQUIRE(coord.cost_map().cost[other] == 100.0);  // never sampled: baseline
    REQUIRE(coord.history(other).empty());
    REQUIRE(coord.cost_map().generation == 1);

    coord.update(mix(3, 7));   // 0.3
    coord.update(mix(2, 3));   // 0.4
    coord.update(mix(1, 1));   // 0.5
    sum = coord.update(mix(3, 2));  // 0.6 fills the window
    REQUIRE(coord.history(e).size() == 5);
    // slope 0.1 per period, extrapolated 2 periods from 0.6 -> 0.8
    REQUIRE_THAT(coord.shortages()[e], WithinAbs(0.1, 1e-12));
    REQUIRE_THAT(coord.cost_map().cost[e], WithinAbs(90.0, 1e-12));
    REQUIRE_THAT(sum, WithinAbs(0.1, 1e-12));
    REQUIRE(coord.cost_map().generation == 5);

    sum = coord.update(mix(7, 3));  // 0.7 evicts 0.2; forecast ~0.9 meets target
    REQUIRE(coord.history(e).size() == 5);
    REQUIRE_THAT(coord.history(e).front(), WithinAbs(0.3, 1e-15));
    REQUIRE_THAT(coord.shortages()[e], WithinAbs(0.0, 1e-12));
    REQUIRE_THAT(coord.cost_map().cost[e], WithinAbs(100.0, 1e-9));
    REQUIRE_THAT(sum, WithinAbs(0.0, 1e-12));

    // An empty step leaves the history alone but still re-broadcasts.
    sum = coord.update({});
    REQUIRE(coord.history(e).size() == 5);
    REQUIRE(coord.cost_map().generation == 7);
    REQUIRE_THAT(sum, WithinAbs(0.0, 1e-12));
}

TEST_CASE("a collapsing share clips the forecast at zero") {
    RoadNetwork net = build_grid(1, 1, 100.0, 13.9);
    CoordinatorConfig cfg;
    cfg.p_target = 0.5;
    cfg.horizon_steps = 120;
    cfg.update_interval = 60;
    Coordinator coord(cfg, net.edge_lengths());
    int e = boundary_entry_edge(net, 1, 1, Side::North, 0);

    for (double p : {0.9, 0.7, 0.5, 0.3, 0.1}) {
        std::vector<VehicleState> vs;
        for (int i = 0; i < 10; ++i)
            vs.push_back(on_edge(i, i < static_cast<int>(p * 10 + 0.5) ? VehicleClass::RV
                                                                       : VehicleClass::HV, e));
        coord.update(vs);
    }
    // raw forecast 0.1 - 0.2 * 2 < 0, so the shortage is the whole target
    REQUIRE_THAT(coord.shortages()[e], WithinAbs(0.5, 1e-12));
    REQUIRE_THAT(coord.cost_map().cost[e], WithinAbs(50.0, 1e-12));
}

TEST_CASE("vehicles that cannot change course are never offered a reroute") {
    RerouteFixture f;
    CostMap map = f.map_with(f.lengths);

    auto check_ineligible = [&](VehicleState v) {
        RerouteOutcome out = consider_reroute(f.net, v, map, f.lengths, f.cfg, 42, 100.0, 1.0);
        REQUIRE_FALSE(out.eligible);
        REQUIRE_FALSE(out.gated);
        REQUIRE_FALSE(out.adopted);
        REQUIRE(out.candidate_cost == -1);
    };

    VehicleState v = f.vehicle();
    v.in_interior = true;
    check_ineligible(v);

    v = f.vehicle();
    v.finish_time = 50.0;
    check_ineligible(v);

    v = f.vehicle();
    v.route_index = static_cast<int>(v.route.edges.size()) - 1;
    check_ineligible(v);

    v = f.vehicle();
    v.last_reroute = 50.0;  // 50 s ago < 60-step cooldown at dt=1
    check_ineligible(v);

    v = f.vehicle();
    v.pos = 60.0;  // 40 m out: inside the commitment zone
    check_ineligible(v);

    // Boundary cases that stay eligible (rho=1 so the draw always activates).
    f.cfg.rho = 1.0;
    v = f.vehicle();
    v.last_reroute = 40.0;  // exactly one cooldown ago
    REQUIRE(consider_reroute(f.net, v, map, f.lengths, f.cfg, 42, 100.0, 1.0).eligible);
    v = f.vehicle();
    v.pos = 50.0;  // exactly at the commitment boundary
    REQUIRE(consider_reroute(f.net, v, map, f.lengths, f.cfg, 42, 100.0, 1.0).eligible);
}

TEST_CASE("the activation draw is deterministic and generation-keyed") {
    RerouteFixture f;
    CostMap map = f.map_with(f.lengths);
    VehicleState v = f.vehicle();

    int gated = 0;
    for (long gen = 0; gen < 60; ++gen) {
        map.generation = gen;
        RerouteOutcome a = consider_reroute(f.net, v, map, f.lengths, f.cfg, 42, 100.0, 1.0);
        RerouteOutcome b = consider_reroute(f.net, v, map, f.lengths, f.cfg, 42, 100.0, 1.0);
        REQUIRE(a.eligible);
        REQUIRE(a.gated == b.gated);  // re-evaluation cannot flip the draw
        REQUIRE(a.adopted == b.adopted);
        gated += a.gated;
    }
    // rho = 0.15: over 60 broadcasts some draws activate and most gate
    REQUIRE(gated > 30);
    REQUIRE(gated < 60);

    f.cfg.rho = 0.0;
    map.generation = 1;
    RerouteOutcome out = consider_reroute(f.net, v, map, f.lengths, f.cfg, 42, 100.0, 1.0);
    REQUIRE(out.eligible);
    REQUIRE(out.gated);
    REQUIRE_FALSE(out.adopted);
}

TEST_CASE("candidates are found under adjusted costs but vetted at baseline") {
    RerouteFixture f;
    f.cfg.rho = 1.0;
    VehicleState v = f.vehicle();
    REQUIRE(v.base_cost == 400.0);

    // Penalize the east leg under tau' so the search swings south. The two
    // routes tie at baseline, so the detour check passes with room to spare.
    std::vector<double> adjusted = f.lengths;
    adjusted[f.east_leg] = 1000.0;
    CostMap map = f.map_with(adjusted);
    RerouteOutcome out = consider_reroute(f.net, v, map, f.lengths, f.cfg, 42, 100.0, 1.0);
    REQUIRE(out.eligible);
    REQUIRE_FALSE(out.gated);
    REQUIRE(out.adopted);
    REQUIRE(out.candidate_cost == 400.0);  // valued at baseline, not at 1000+
    REQUIRE(out.new_route.has_value());
    std::vector<int> want{f.entry_nw, f.south_leg, edge_between(f.net, 2, 3), f.exit_se};
    REQUIRE(out.new_route->edges == want);

    // Same steering, but now the southern corridor is genuinely longer than
    // the detour budget allows: the candidate is reported and rejected.
    std::vector<double> baseline = f.lengths;
    baseline[f.south_leg] = 200.0;
    baseline[edge_between(f.net, 2, 3)] = 200.0;
    out = consider_reroute(f.net, v, map, baseline, f.cfg, 42, 100.0, 1.0);
    REQUIRE(out.eligible);
    REQUIRE_FALSE(out.adopted);
    REQUIRE(out.candidate_cost == 600.0);  // > 1.2 * 400
    REQUIRE_FALSE(out.new_route.has_value());

    // A clearly affordable detour is adopted.
    baseline[f.south_leg] = 130.0;
    baseline[edge_between(f.net, 2, 3)] = 130.0;
    out = consider_reroute(f.net, v, map, baseline, f.cfg, 42, 100.0, 1.0);
    REQUIRE(out.adopted);
    REQUIRE(out.candidate_cost == 460.0);

    // No discount anywhere: the candidate is the current route, still adopted.
    map = f.map_with(f.lengths);
    out = consider_reroute(f.net, v, map, f.lengths, f.cfg, 42, 100.0, 1.0);
    REQUIRE(out.adopted);
    REQUIRE(out.new_route->edges == v.route.edges);
}

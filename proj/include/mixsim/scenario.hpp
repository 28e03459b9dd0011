#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mixsim/engine.hpp"
#include "mixsim/errors.hpp"

// Scenario assembly: boundary lookups for grid networks, canned demand
// patterns, and a JSON loader so experiments can be described in files
// instead of code.

namespace mixsim {

enum class Side { North, East, South, West };

namespace detail {

inline Vec2 side_direction(Side s) {
    switch (s) {
        case Side::North: return {0.0, 1.0};
        case Side::East: return {1.0, 0.0};
        case Side::South: return {0.0, -1.0};
        default: return {-1.0, 0.0};
    }
}

// Grid junction adjacent to the boundary stub addressed by (side, index).
// North/South index by column, East/West by row.
inline int boundary_junction(int rows, int cols, Side side, int index) {
    switch (side) {
        case Side::North:
            if (index < 0 || index >= cols) throw ConfigError("boundary index out of range");
            return index;
        case Side::South:
            if (index < 0 || index >= cols) throw ConfigError("boundary index out of range");
            return (rows - 1) * cols + index;
        case Side::East:
            if (index < 0 || index >= rows) throw ConfigError("boundary index out of range");
            return index * cols + (cols - 1);
        default:
            if (index < 0 || index >= rows) throw ConfigError("boundary index out of range");
            return index * cols;
    }
}

inline int boundary_edge(const RoadNetwork& net, int rows, int cols, Side side, int index,
                         bool entry) {
    int jid = boundary_junction(rows, cols, side, index);
    if (jid < 0 || jid >= static_cast<int>(net.junctions.size()))
        throw ConfigError("boundary lookup: junction id out of range (not a grid network?)");
    const Junction& j = net.junctions[jid];
    Vec2 dir = side_direction(side);
    for (int eid : (entry ? j.in_edges : j.out_edges)) {
        const Edge& e = net.edges[eid];
        const Junction& other = net.junctions[entry ? e.from : e.to];
        if (other.internal) continue;  // grid-interior edge, not a stub
        Vec2 d = other.pos - j.pos;
        if (dot(d, dir) > 0.0 && std::abs(cross(d, dir)) < 1e-9) return eid;
    }
    throw ConfigError("boundary lookup: no stub on that side (not a grid network?)");
}

}  // namespace detail

// Edge from the boundary stub into the grid (vehicles spawn here).
inline int boundary_entry_edge(const RoadNetwork& net, int rows, int cols, Side side, int index) {
    return detail::boundary_edge(net, rows, cols, side, index, true);
}

// Edge from the grid out to the boundary stub (vehicles finish here).
inline int boundary_exit_edge(const RoadNetwork& net, int rows, int cols, Side side, int index) {
    return detail::boundary_edge(net, rows, cols, side, index, false);
}

// One OD pair per boundary entry, each heading straight across to the exit on
// the opposite side: 2*(rows+cols) flows in total.
inline std::vector<OdDemand> through_demand(const RoadNetwork& net, int rows, int cols, double rate,
                                            std::optional<double> rv_rate = std::nullopt) {
    std::vector<OdDemand> demand;
    auto add = [&](Side in, Side out, int count) {
        for (int i = 0; i < count; ++i)
            demand.push_back({boundary_entry_edge(net, rows, cols, in, i),
                              boundary_exit_edge(net, rows, cols, out, i), rate, rv_rate});
    };
    add(Side::North, Side::South, cols);
    add(Side::South, Side::North, cols);
    add(Side::West, Side::East, rows);
    add(Side::East, Side::West, rows);
    return demand;
}

namespace detail {

template <typename T>
T json_get(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    return j.at(key).get<T>();
}

inline void apply_overrides(const nlohmann::json& j, ScenarioConfig& cfg) {
    if (j.contains("idm")) {
        const auto& o = j.at("idm");
        cfg.idm.a_max = json_get(o, "a_max", cfg.idm.a_max);
        cfg.idm.b = json_get(o, "b", cfg.idm.b);
        cfg.idm.s0 = json_get(o, "s0", cfg.idm.s0);
        cfg.idm.T = json_get(o, "headway", cfg.idm.T);
        cfg.idm.exponent = json_get(o, "exponent", cfg.idm.exponent);
    }
    if (j.contains("zone")) {
        const auto& o = j.at("zone");
        cfg.zone.radius = json_get(o, "radius", cfg.zone.radius);
        cfg.zone.cell_length = json_get(o, "cell_length", cfg.zone.cell_length);
        cfg.zone.c0 = json_get(o, "c0", cfg.zone.c0);
        cfg.zone.cell_weights = json_get(o, "cell_weights", cfg.zone.cell_weights);
        cfg.zone.z = json_get(o, "z", cfg.zone.z);
        cfg.zone.wait_cap = json_get(o, "wait_cap", cfg.zone.wait_cap);
        cfg.zone.queue_capacity = json_get(o, "queue_capacity", cfg.zone.queue_capacity);
    }
    if (j.contains("rewards")) {
        const auto& o = j.at("rewards");
        cfg.rewards.lambda_parity = json_get(o, "lambda_parity", cfg.rewards.lambda_parity);
        cfg.rewards.lambda_threat = json_get(o, "lambda_threat", cfg.rewards.lambda_threat);
        cfg.rewards.p_c = json_get(o, "conflict_penalty", cfg.rewards.p_c);
    }
    if (j.contains("coordinator")) {
        const auto& o = j.at("coordinator");
        cfg.coord.alpha = json_get(o, "alpha", cfg.coord.alpha);
        cfg.coord.horizon_steps = json_get(o, "horizon_steps", cfg.coord.horizon_steps);
        cfg.coord.update_interval = json_get(o, "update_interval", cfg.coord.update_interval);
        cfg.coord.window = json_get(o, "window", cfg.coord.window);
    }
    if (j.contains("reroute")) {
        const auto& o = j.at("reroute");
        cfg.reroute.rho = json_get(o, "rho", cfg.reroute.rho);
        cfg.reroute.delta = json_get(o, "delta", cfg.reroute.delta);
        cfg.reroute.cooldown_steps = json_get(o, "cooldown_steps", cfg.reroute.cooldown_steps);
        cfg.reroute.commitment = json_get(o, "commitment", cfg.reroute.commitment);
    }
}

}  // namespace detail

// Builds a ScenarioConfig from a JSON document. The network comes either from
// "grid": {rows, cols, edge_length, speed_limit} or from explicit "junctions"
// + "edges" arrays; demand from an explicit "demand" array and/or, on grids,
// a "through_rate" that fans out to every boundary crossing. All Table-style
// knobs have defaults and may be overridden under "idm", "zone", "rewards",
// "coordinator", and "reroute".
inline ScenarioConfig scenario_from_json(const nlohmann::json& j) {
    static const std::vector<std::string> known = {
        "grid",    "junctions", "edges",   "demand", "through_rate", "rv_rate",     "horizon",
        "window",  "dt",        "routing", "p_target", "idm",        "zone",        "rewards",
        "coordinator", "reroute"};
    for (const auto& item : j.items())
        if (std::find(known.begin(), known.end(), item.key()) == known.end())
            throw ConfigError("scenario: unknown key \"" + item.key() + "\"");

    try {
        ScenarioConfig cfg;
        int rows = 0, cols = 0;

        bool has_grid = j.contains("grid");
        bool has_explicit = j.contains("junctions") || j.contains("edges");
        if (has_grid == has_explicit)
            throw ConfigError("scenario: provide exactly one of \"grid\" or \"junctions\"/\"edges\"");
        if (has_grid) {
            const auto& g = j.at("grid");
            rows = g.at("rows").get<int>();
            cols = g.at("cols").get<int>();
            cfg.net = build_grid(rows, cols, g.at("edge_length").get<double>(),
                                 g.at("speed_limit").get<double>());
        } else {
            for (const auto& row : j.at("junctions"))
                cfg.net.junctions.push_back({row.at("id").get<int>(),
                                             {row.at("x").get<double>(), row.at("y").get<double>()},
                                             detail::json_get(row, "internal", true),
                                             {},
                                             {},
                                             {},
                                             {}});
            for (const auto& row : j.at("edges"))
                cfg.net.edges.push_back({row.at("id").get<int>(), row.at("from").get<int>(),
                                         row.at("to").get<int>(), row.at("length").get<double>(),
                                         row.at("speed_limit").get<double>()});
            cfg.net.finalize();
        }

        cfg.rv_rate = detail::json_get(j, "rv_rate", cfg.rv_rate);
        cfg.horizon = detail::json_get(j, "horizon", cfg.horizon);
        cfg.dt = detail::json_get(j, "dt", cfg.dt);
        cfg.routing_enabled = detail::json_get(j, "routing", cfg.routing_enabled);
        if (j.contains("window")) {
            const auto& w = j.at("window");
            if (!w.is_array() || w.size() != 2)
                throw ConfigError("scenario: \"window\" must be [t0, t1]");
            cfg.window = {w.at(0).get<double>(), w.at(1).get<double>()};
        }
        if (j.contains("p_target")) cfg.p_target = j.at("p_target").get<double>();

        if (j.contains("through_rate")) {
            if (!has_grid) throw ConfigError("scenario: \"through_rate\" needs a \"grid\" network");
            auto flows = through_demand(cfg.net, rows, cols, j.at("through_rate").get<double>());
            cfg.demand.insert(cfg.demand.end(), flows.begin(), flows.end());
        }
        if (j.contains("demand"))
            for (const auto& row : j.at("demand")) {
                OdDemand od{row.at("from_edge").get<int>(), row.at("to_edge").get<int>(),
                            row.at("rate").get<double>(), std::nullopt};
                if (row.contains("rv_rate")) od.rv_rate = row.at("rv_rate").get<double>();
                cfg.demand.push_back(od);
            }
        if (cfg.demand.empty()) throw ConfigError("scenario: no demand defined");

        detail::apply_overrides(j, cfg);
        cfg.validate();
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    }
}

inline ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file: " + path);
    try {
        return scenario_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("scenario " + path + ": " + e.what());
    }
}

}  // namespace mixsim

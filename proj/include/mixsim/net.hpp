#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "mixsim/errors.hpp"
#include "mixsim/geometry.hpp"

namespace mixsim {

constexpr int kMaxApproaches = 8;

struct Edge {
    int id = -1;
    int from = -1;  // junction ids
    int to = -1;
    double length = 0.0;       // m
    double speed_limit = 0.0;  // m/s
};

struct Junction {
    int id = -1;
    Vec2 pos;
    bool internal = false;  // true for real intersections, false for boundary stubs
    std::vector<int> in_edges;
    std::vector<int> out_edges;
    // Fixed clockwise-from-north approach slots; -1 where no approach exists.
    std::array<int, kMaxApproaches> slot_edge{};
    std::vector<int> movement_ids;

    int slot_of(int in_edge) const {
        for (int s = 0; s < kMaxApproaches; ++s)
            if (slot_edge[s] == in_edge) return s;
        return -1;
    }
};

// One way of driving through a junction: from an incoming edge (approach slot
// k) onto an outgoing edge, along an explicit polyline across the junction box.
struct Movement {
    int id = -1;
    int junction = -1;
    int in_edge = -1;
    int out_edge = -1;
    int approach = -1;  // slot k of the incoming edge at this junction
    std::vector<Vec2> path;
    double length = 0.0;
};

struct Route {
    std::vector<int> edges;
    double base_cost = 0.0;  // sum of member edge lengths, cached at build time

    bool empty() const { return edges.empty(); }
};

class RoadNetwork;
std::vector<std::vector<int>> derive_conflicts(const RoadNetwork& net);

class RoadNetwork {
public:
    std::vector<Junction> junctions;
    std::vector<Edge> edges;
    std::vector<Movement> movements;
    // movement id -> sorted ids of conflicting movements at the same junction
    std::vector<std::vector<int>> conflicts;

    // Junction box geometry used to lay out interior paths.
    double box_half = 6.0;    // half-size of the square conflict region
    double lane_offset = 2.0; // right-hand lane offset from the road centerline

    const std::vector<int>& movements_from(int edge_id) const { return from_edge_[edge_id]; }

    int find_movement(int in_edge, int out_edge) const {
        for (int m : from_edge_[in_edge])
            if (movements[m].out_edge == out_edge) return m;
        return -1;
    }

    bool conflicting(int a, int b) const {
        const auto& c = conflicts[a];
        return std::binary_search(c.begin(), c.end(), b);
    }

    std::vector<double> edge_lengths() const {
        std::vector<double> out(edges.size());
        for (const Edge& e : edges) out[e.id] = e.length;
        return out;
    }

    // Call once after junctions/edges are filled in: checks invariants, assigns
    // approach slots, builds interior movements and the conflict map.
    void finalize() {
        validate();
        index_edges();
        assign_slots();
        build_movements();
        derive_conflict_map();
    }

private:
    std::vector<std::vector<int>> from_edge_;

    void validate() const {
        for (const Edge& e : edges) {
            if (e.length <= 0.0) throw ConfigError("edge " + std::to_string(e.id) + ": length must be > 0");
            if (e.speed_limit <= 0.0)
                throw ConfigError("edge " + std::to_string(e.id) + ": speed limit must be > 0");
            if (e.from < 0 || e.from >= static_cast<int>(junctions.size()) || e.to < 0 ||
                e.to >= static_cast<int>(junctions.size()))
                throw ConfigError("edge " + std::to_string(e.id) + ": endpoint junction does not exist");
            if (e.from == e.to) throw ConfigError("edge " + std::to_string(e.id) + ": self-loop");
        }
    }

    void index_edges() {
        for (Junction& j : junctions) {
            j.in_edges.clear();
            j.out_edges.clear();
            j.movement_ids.clear();
            j.slot_edge.fill(-1);
        }
        for (const Edge& e : edges) {
            junctions[e.to].in_edges.push_back(e.id);
            junctions[e.from].out_edges.push_back(e.id);
        }
    }

    // Clockwise-from-north bearing of the direction a->b, in [0, 2pi).
    static double bearing(Vec2 a, Vec2 b) {
        double ang = std::atan2(b.x - a.x, b.y - a.y);
        if (ang < 0.0) ang += 2.0 * M_PI;
        return ang;
    }

    void assign_slots() {
        for (Junction& j : junctions) {
            if (static_cast<int>(j.in_edges.size()) > kMaxApproaches)
                throw ConfigError("junction " + std::to_string(j.id) + ": more than 8 approaches");
            std::vector<int> in = j.in_edges;
            std::sort(in.begin(), in.end());
            for (int e : in) {
                Vec2 from_pos = junctions[edges[e].from].pos;
                double ang = bearing(j.pos, from_pos);
                int want = static_cast<int>(std::lround(ang / (M_PI / 4.0))) % kMaxApproaches;
                int slot = want;
                while (j.slot_edge[slot] != -1) slot = (slot + 1) % kMaxApproaches;  // next clockwise free
                j.slot_edge[slot] = e;
            }
        }
    }

    std::vector<Vec2> interior_path(const Edge& in, const Edge& out) const {
        const Junction& j = junctions[in.to];
        Vec2 d_in = normalized(j.pos - junctions[in.from].pos);
        Vec2 d_out = normalized(junctions[out.to].pos - j.pos);
        Vec2 entry = j.pos - d_in * box_half + right_of(d_in) * lane_offset;
        Vec2 exit = j.pos + d_out * box_half + right_of(d_out) * lane_offset;
        if (dot(d_in, d_out) > 0.999) return {entry, exit};  // straight through
        Vec2 knee;
        if (line_intersection(entry, d_in, exit, d_out, knee) &&
            norm(knee - j.pos) <= 3.0 * box_half) {
            std::vector<Vec2> path{entry, knee, exit};
            if (polyline_length(path) >= box_half) return path;
        }
        // Hairpin turns: the lane rays meet nowhere sensible (or exactly on
        // top of each other), so sweep through the middle of the box instead.
        return {entry, j.pos, exit};
    }

    void build_movements() {
        movements.clear();
        from_edge_.assign(edges.size(), {});
        for (Junction& j : junctions) {
            std::vector<int> in = j.in_edges;
            std::vector<int> out = j.out_edges;
            std::sort(in.begin(), in.end());
            std::sort(out.begin(), out.end());
            for (int ie : in) {
                for (int oe : out) {
                    if (edges[oe].to == edges[ie].from) continue;  // no u-turns
                    Movement m;
                    m.id = static_cast<int>(movements.size());
                    m.junction = j.id;
                    m.in_edge = ie;
                    m.out_edge = oe;
                    m.approach = j.slot_of(ie);
                    m.path = interior_path(edges[ie], edges[oe]);
                    m.length = polyline_length(m.path);
                    j.movement_ids.push_back(m.id);
                    from_edge_[ie].push_back(m.id);
                    movements.push_back(std::move(m));
                }
            }
        }
    }

    void derive_conflict_map() { conflicts = derive_conflicts(*this); }
};

// Two movements at the same junction conflict when their interior paths cross
// or they merge onto the same outgoing edge. Movements leaving from the same
// incoming edge are one queue and never conflict with each other.
inline std::vector<std::vector<int>> derive_conflicts(const RoadNetwork& net) {
    for (const Movement& m : net.movements)
        if (polyline_length(m.path) <= 0.0)
            throw ConfigError("movement " + std::to_string(m.id) + ": degenerate interior path");
    std::vector<std::vector<int>> conflicts(net.movements.size());
    for (const Junction& j : net.junctions) {
        const auto& ms = j.movement_ids;
        for (std::size_t a = 0; a < ms.size(); ++a) {
            for (std::size_t b = a + 1; b < ms.size(); ++b) {
                const Movement& ma = net.movements[ms[a]];
                const Movement& mb = net.movements[ms[b]];
                if (ma.in_edge == mb.in_edge) continue;
                bool merge = ma.out_edge == mb.out_edge;
                if (merge || polylines_intersect(ma.path, mb.path)) {
                    conflicts[ma.id].push_back(mb.id);
                    conflicts[mb.id].push_back(ma.id);
                }
            }
        }
    }
    for (auto& c : conflicts) std::sort(c.begin(), c.end());
    return conflicts;
}

// Manhattan grid of rows x cols intersections, spaced one edge length apart,
// with a source/sink stub one edge length outside every boundary side. All
// edges come in both directions.
inline RoadNetwork build_grid(int rows, int cols, double edge_length, double speed_limit) {
    if (rows < 1 || cols < 1) throw ConfigError("grid dimensions must be >= 1");
    if (edge_length <= 0.0) throw ConfigError("edge length must be > 0");
    if (speed_limit <= 0.0) throw ConfigError("speed limit must be > 0");

    RoadNetwork net;
    auto grid_id = [cols](int r, int c) { return r * cols + c; };
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            net.junctions.push_back({grid_id(r, c),
                                     {c * edge_length, -r * edge_length},
                                     true,
                                     {},
                                     {},
                                     {},
                                     {}});

    auto add_edge = [&](int from, int to) {
        int id = static_cast<int>(net.edges.size());
        net.edges.push_back({id, from, to, edge_length, speed_limit});
    };
    auto add_stub = [&](int jid, Vec2 offset) {
        int sid = static_cast<int>(net.junctions.size());
        net.junctions.push_back({sid, net.junctions[jid].pos + offset, false, {}, {}, {}, {}});
        add_edge(sid, jid);  // entry
        add_edge(jid, sid);  // exit
    };

    // N, E, S, W in that order at each junction so edge ids are reproducible.
    const std::array<std::pair<int, int>, 4> dirs{{{-1, 0}, {0, 1}, {1, 0}, {0, -1}}};
    const std::array<Vec2, 4> offsets{{{0.0, edge_length},
                                       {edge_length, 0.0},
                                       {0.0, -edge_length},
                                       {-edge_length, 0.0}}};
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            for (int d = 0; d < 4; ++d) {
                int nr = r + dirs[d].first, nc = c + dirs[d].second;
                if (nr >= 0 && nr < rows && nc >= 0 && nc < cols)
                    add_edge(grid_id(r, c), grid_id(nr, nc));
                else
                    add_stub(grid_id(r, c), offsets[d]);
            }
        }
    }
    net.finalize();
    return net;
}

// Edge-based Dijkstra: states are edges, transitions are movements, so the
// result respects turn restrictions (no u-turns). The returned cost of entry
// includes both endpoint edges. Ties resolve toward smaller edge ids.
inline std::optional<Route> shortest_path(const RoadNetwork& net, int from_edge, int to_edge,
                                          const std::vector<double>& costs) {
    int n = static_cast<int>(net.edges.size());
    if (from_edge < 0 || from_edge >= n || to_edge < 0 || to_edge >= n)
        throw ConfigError("shortest_path: edge id out of range");
    if (static_cast<int>(costs.size()) != n) throw ConfigError("shortest_path: cost map size mismatch");
    for (double c : costs)
        if (!(c > 0.0)) throw ConfigError("shortest_path: all edge costs must be > 0");

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(n, inf);
    std::vector<int> pred(n, -1);
    std::vector<bool> done(n, false);
    using Item = std::pair<double, int>;  // (cost, edge) — id as tie-break
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[from_edge] = costs[from_edge];
    pq.push({dist[from_edge], from_edge});

    while (!pq.empty()) {
        auto [d, e] = pq.top();
        pq.pop();
        if (done[e]) continue;
        done[e] = true;
        if (e == to_edge) break;
        for (int mid : net.movements_from(e)) {
            int f = net.movements[mid].out_edge;
            if (done[f]) continue;
            double nd = d + costs[f];
            if (nd < dist[f]) {
                dist[f] = nd;
                pred[f] = e;
                pq.push({nd, f});
            } else if (nd == dist[f] && (pred[f] == -1 || e < pred[f])) {
                pred[f] = e;  // equal cost: keep the smaller predecessor id
            }
        }
    }
    if (!done[to_edge]) return std::nullopt;

    Route route;
    for (int e = to_edge; e != -1; e = pred[e]) route.edges.push_back(e);
    std::reverse(route.edges.begin(), route.edges.end());
    for (int e : route.edges) route.base_cost += net.edges[e].length;
    return route;
}

inline double route_cost(const Route& route, const std::vector<double>& costs) {
    if (route.empty()) throw ConfigError("route_cost: empty route");
    double total = 0.0;
    for (int e : route.edges) total += costs.at(e);
    return total;
}

}  // namespace mixsim

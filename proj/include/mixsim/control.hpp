#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <vector>

#include "mixsim/dynamics.hpp"
#include "mixsim/net.hpp"

namespace mixsim {

enum class Action { Stop = 0, Go = 1 };

inline const char* to_string(Action a) { return a == Action::Go ? "Go" : "Stop"; }

struct ControlZoneConfig {
    double radius = 30.0;       // m around the junction where RVs take decisions
    double cell_length = 10.0;  // m per entry-zone cell
    int c0 = 3;                 // cells that count toward conflict pressure
    std::vector<double> cell_weights = {1.0, 1.0, 1.0};  // w_c for cells 1..C0
    double z = 5.0;             // threat normalizer Z_j
    double wait_cap = 60.0;     // s; waits normalize against this
    // floor(radius / (s0 + vehicle length)) = floor(30 / 7): how many queued
    // vehicles physically fit in one approach's zone segment.
    int queue_capacity = 4;

    int total_cells() const { return static_cast<int>(std::ceil(radius / cell_length)); }

    void validate() const {
        if (radius <= 0 || cell_length <= 0) throw ConfigError("control zone geometry must be positive");
        if (c0 < 1 || c0 > total_cells()) throw ConfigError("C0 must lie in [1, total cells]");
        if (static_cast<int>(cell_weights.size()) < c0) throw ConfigError("need a weight per counted cell");
        for (double w : cell_weights)
            if (w < 0) throw ConfigError("cell weights must be non-negative");
        if (z <= 0) throw ConfigError("threat normalizer Z must be > 0");
        if (wait_cap <= 0 || queue_capacity < 1) throw ConfigError("bad normalization constants");
    }
};

// Per-movement, per-cell vehicle counts in one junction's entry zone.
// Cell 1 is nearest the conflict region.
struct OccupancyGrid {
    int junction = -1;
    int cells = 0;
    std::map<int, std::vector<int>> counts;  // movement id -> counts, index 0 = cell 1

    int at(int movement, int cell) const {  // cell is 1-based
        auto it = counts.find(movement);
        if (it == counts.end() || cell < 1 || cell > cells) return 0;
        return it->second[cell - 1];
    }
};

// A vehicle's movement through the junction it is currently approaching, or
// -1 when it is not on an approach of that junction.
inline int approach_movement(const RoadNetwork& net, const VehicleState& v, int junction) {
    if (v.in_interior || v.finished()) return -1;
    const Edge& e = net.edges[v.current_edge()];
    if (e.to != junction) return -1;
    if (v.on_last_edge()) return -1;  // despawns at the edge end, never crosses
    return net.find_movement(v.current_edge(), v.route.edges[v.route_index + 1]);
}

inline double distance_to_junction(const RoadNetwork& net, const VehicleState& v) {
    return net.edges[v.current_edge()].length - v.pos;
}

inline OccupancyGrid build_occupancy(const RoadNetwork& net, int junction,
                                     const std::vector<VehicleState>& vehicles,
                                     const ControlZoneConfig& cfg) {
    OccupancyGrid grid;
    grid.junction = junction;
    grid.cells = cfg.total_cells();
    for (const VehicleState& v : vehicles) {
        int m = approach_movement(net, v, junction);
        if (m < 0) continue;
        double d = distance_to_junction(net, v);
        if (d > cfg.radius) continue;
        int cell = std::min(static_cast<int>(d / cfg.cell_length), grid.cells - 1);
        auto& row = grid.counts[m];
        if (row.empty()) row.assign(grid.cells, 0);
        row[cell] += 1;
    }
    return grid;
}

// Conflict pressure S for approach k: weighted occupancy of the first C0
// cells of every movement that conflicts with any of k's movements.
inline double conflict_pressure(const RoadNetwork& net, const OccupancyGrid& grid, int k,
                                const ControlZoneConfig& cfg) {
    const Junction& j = net.junctions[grid.junction];
    std::vector<int> conflicting;
    for (int mid : j.movement_ids) {
        if (net.movements[mid].approach != k) continue;
        for (int c : net.conflicts[mid]) conflicting.push_back(c);
    }
    std::sort(conflicting.begin(), conflicting.end());
    conflicting.erase(std::unique(conflicting.begin(), conflicting.end()), conflicting.end());

    double s = 0.0;
    for (int p : conflicting)
        for (int c = 1; c <= cfg.c0; ++c) s += cfg.cell_weights[c - 1] * grid.at(p, c);
    return s;
}

inline double threat_score(double s, double z) {
    if (s < 0 || z <= 0) throw ConfigError("threat_score: need S >= 0 and Z > 0");
    return std::min(s / z, 1.0);
}

inline std::array<double, kMaxApproaches> threat_vector(const RoadNetwork& net,
                                                        const OccupancyGrid& grid,
                                                        const ControlZoneConfig& cfg) {
    std::array<double, kMaxApproaches> t{};
    for (int k = 0; k < kMaxApproaches; ++k)
        t[k] = threat_score(conflict_pressure(net, grid, k, cfg), cfg.z);
    return t;
}

// Everything a policy decision at one junction needs, frozen at the start of
// the decision phase so every RV that decides this step sees the same world.
struct ZoneSnapshot {
    int junction = -1;
    OccupancyGrid grid;
    std::array<double, kMaxApproaches> queue_count{};
    std::array<double, kMaxApproaches> queue_wait{};  // mean stop streak of queued vehicles
    std::vector<int> active_movements;  // interior occupants plus live grants, deduped
    std::array<double, kMaxApproaches> threat{};
};

struct Observation {
    std::array<double, kMaxApproaches> q{};  // normalized queue lengths
    std::array<double, kMaxApproaches> w{};  // normalized mean waits
    std::array<double, kMaxApproaches> t{};  // threat vector
    std::array<double, kMaxApproaches> interior_conflict{};  // per approach: conflicting interior/grant present
    std::vector<double> entry;               // kMaxApproaches x C0 entry-cell occupancy bits
    int ego_approach = -1;
    int c0 = 3;
};

inline Observation build_observation(const RoadNetwork& net, const ZoneSnapshot& snap,
                                     int ego_approach, const ControlZoneConfig& cfg) {
    Observation o;
    o.ego_approach = ego_approach;
    o.c0 = cfg.c0;
    o.t = snap.threat;
    for (int k = 0; k < kMaxApproaches; ++k) {
        o.q[k] = std::min(snap.queue_count[k] / cfg.queue_capacity, 1.0);
        o.w[k] = std::min(snap.queue_wait[k] / cfg.wait_cap, 1.0);
    }
    const Junction& j = net.junctions[snap.junction];
    o.entry.assign(kMaxApproaches * cfg.c0, 0.0);
    for (int mid : j.movement_ids) {
        int k = net.movements[mid].approach;
        for (int m : snap.active_movements) {
            if (net.conflicting(m, mid)) {
                o.interior_conflict[k] = 1.0;
                break;
            }
        }
        for (int c = 1; c <= cfg.c0; ++c)
            if (snap.grid.at(mid, c) > 0) o.entry[k * cfg.c0 + (c - 1)] = 1.0;
    }
    return o;
}

// Width of the flat feature vector fed to value functions: q, w, T, interior
// bits, entry bits, one-hot ego approach.
inline int feature_width(int c0) { return 5 * kMaxApproaches + kMaxApproaches * c0; }

inline std::vector<double> features(const Observation& o) {
    std::vector<double> x;
    x.reserve(feature_width(o.c0));
    x.insert(x.end(), o.q.begin(), o.q.end());
    x.insert(x.end(), o.w.begin(), o.w.end());
    x.insert(x.end(), o.t.begin(), o.t.end());
    x.insert(x.end(), o.interior_conflict.begin(), o.interior_conflict.end());
    x.insert(x.end(), o.entry.begin(), o.entry.end());
    for (int k = 0; k < kMaxApproaches; ++k) x.push_back(k == o.ego_approach ? 1.0 : 0.0);
    return x;
}

// Commanded acceleration for a Stop/Go decision, before the engine applies
// the car-following cap. Stop brakes just hard enough to halt at the line.
inline double apply_action(double speed, Action a, double d_int, const IdmParams& p) {
    if (a == Action::Go) return p.a_max;
    if (speed <= 0.0) return 0.0;
    if (d_int <= 0.0) return -kEmergencyDecel;  // already at/past the line
    return -(speed * speed) / (2.0 * d_int);
}

struct OverrideDecision {
    Action final_action = Action::Stop;
    bool conflict = false;  // true when a Go was forced to Stop
};

// Hard safety layer: a Go survives only if no interior occupant and no live
// grant conflicts with the ego movement. Stop is never touched.
inline OverrideDecision safety_override(const RoadNetwork& net,
                                        const std::vector<int>& active_movements,
                                        int ego_movement, Action a) {
    if (a == Action::Stop) return {Action::Stop, false};
    for (int m : active_movements)
        if (net.conflicting(m, ego_movement)) return {Action::Stop, true};
    return {Action::Go, false};
}

}  // namespace mixsim

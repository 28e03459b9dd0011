#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mixsim/errors.hpp"
#include "mixsim/net.hpp"
#include "mixsim/rng.hpp"

namespace mixsim {

constexpr double kStopThreshold = 0.1;   // m/s, below this a vehicle counts as stopped
constexpr double kVehicleLength = 5.0;   // m
constexpr double kEmergencyDecel = 9.0;  // m/s^2, fallback when geometry degenerates

enum class VehicleClass { RV, HV };

inline const char* to_string(VehicleClass k) { return k == VehicleClass::RV ? "RV" : "HV"; }

struct IdmParams {
    double v0 = 15.0;     // desired speed, m/s (engine overrides with the edge limit)
    double a_max = 2.6;   // m/s^2
    double b = 4.5;       // comfortable decel, m/s^2
    double s0 = 2.0;      // standstill gap, m
    double T = 1.0;       // headway time, s
    double exponent = 4.0;

    void validate() const {
        if (v0 <= 0 || a_max <= 0 || b <= 0 || s0 <= 0 || T <= 0 || exponent <= 0)
            throw ConfigError("IDM parameters must all be strictly positive");
    }
};

// Standard IDM: a = a_max * [1 - (u/v0)^exp - (s*/gap)^2], with the desired
// gap s* = s0 + u*T + u*du/(2*sqrt(a_max*b)). No leader is gap = +inf. The
// result is clamped so one Euler step of length dt cannot drive speed negative.
inline double idm_accel(double ego_speed, double gap, double leader_speed, const IdmParams& p,
                        double dt = 1.0) {
    if (gap <= 0.0)
        throw SimulationError("idm_accel: non-positive gap (" + std::to_string(gap) +
                              " m) — follower overlaps its leader");
    double free_term = std::pow(ego_speed / p.v0, p.exponent);
    double interaction = 0.0;
    if (std::isfinite(gap)) {
        double du = ego_speed - leader_speed;
        double s_star = p.s0 + ego_speed * p.T + ego_speed * du / (2.0 * std::sqrt(p.a_max * p.b));
        interaction = (s_star / gap) * (s_star / gap);
    }
    double a = p.a_max * (1.0 - free_term - interaction);
    return std::max(a, -ego_speed / dt);
}

struct VehicleState {
    int id = -1;
    VehicleClass klass = VehicleClass::HV;
    Route route;
    int route_index = 0;
    bool in_interior = false;
    int movement = -1;  // valid while in_interior
    double pos = 0.0;   // m along the current edge, or along the interior path
    double speed = 0.0;
    double accel = 0.0;         // commanded this step
    double stopped_time = 0.0;  // cumulative seconds below the stop threshold
    double stop_streak = 0.0;   // consecutive stopped seconds (resets on motion)
    std::optional<double> stop_start;
    double base_cost = 0.0;  // C(R_base): spawn-time route cost, never rebased
    std::optional<double> last_reroute;
    double spawn_time = 0.0;
    std::optional<double> finish_time;
    std::vector<int> traveled;  // edges actually driven, for free-flow delay
    bool has_grant = false;     // holds an interior passage grant

    int current_edge() const { return route.edges[route_index]; }
    bool on_last_edge() const { return route_index + 1 == static_cast<int>(route.edges.size()); }
    bool finished() const { return finish_time.has_value(); }
};

struct StepEvents {
    bool entered_interior = false;
    int entered_movement = -1;
    bool exited_interior = false;
    int exited_junction = -1;
    int exited_movement = -1;
    bool completed = false;
    bool blocked_at_line = false;  // wanted to enter the interior but was refused
};

// Explicit Euler step with hand-off across edge ends and junction interiors.
// `may_enter` is consulted at the moment the vehicle would cross the stop
// line; a refusal pins it at the line with zero speed. Speed is capped at the
// current edge's limit so free-flow time is a true lower bound on travel time.
inline StepEvents integrate(const RoadNetwork& net, VehicleState& v, double accel, double dt,
                            double t,
                            const std::function<bool(const VehicleState&, int)>& may_enter = {}) {
    StepEvents ev;
    v.accel = accel;
    double vn = std::max(0.0, v.speed + accel * dt);
    if (!v.in_interior) vn = std::min(vn, net.edges[v.current_edge()].speed_limit);
    v.speed = vn;
    double dist = vn * dt;

    while (dist > 0.0 && !v.finished()) {
        if (v.in_interior) {
            const Movement& m = net.movements[v.movement];
            double remain = m.length - v.pos;
            if (dist < remain) {
                v.pos += dist;
                dist = 0.0;
            } else {
                dist -= remain;
                ev.exited_interior = true;
                ev.exited_junction = m.junction;
                ev.exited_movement = m.id;
                v.in_interior = false;
                v.movement = -1;
                v.route_index += 1;
                v.pos = 0.0;
                v.traveled.push_back(v.current_edge());
                v.speed = std::min(v.speed, net.edges[v.current_edge()].speed_limit);
            }
        } else {
            const Edge& e = net.edges[v.current_edge()];
            double remain = e.length - v.pos;
            if (dist < remain) {
                v.pos += dist;
                dist = 0.0;
            } else if (v.on_last_edge()) {
                v.pos = e.length;
                v.finish_time = t + dt;
                ev.completed = true;
                dist = 0.0;
            } else {
                int next = v.route.edges[v.route_index + 1];
                int mid = net.find_movement(v.current_edge(), next);
                if (mid < 0)
                    throw SimulationError("vehicle " + std::to_string(v.id) +
                                          ": route has no movement from edge " +
                                          std::to_string(v.current_edge()) + " to " +
                                          std::to_string(next));
                if (may_enter && !may_enter(v, mid)) {
                    v.pos = e.length;
                    v.speed = 0.0;
                    ev.blocked_at_line = true;
                    dist = 0.0;
                } else {
                    dist -= remain;
                    v.in_interior = true;
                    v.movement = mid;
                    v.pos = 0.0;
                    ev.entered_interior = true;
                    ev.entered_movement = mid;
                }
            }
        }
    }

    if (!v.finished()) {
        if (v.speed < kStopThreshold) {
            v.stopped_time += dt;
            v.stop_streak += dt;
            if (!v.stop_start) v.stop_start = t;
        } else {
            v.stop_streak = 0.0;
            v.stop_start.reset();
        }
    }
    return ev;
}

struct OdDemand {
    int origin_edge = -1;
    int dest_edge = -1;
    double rate = 0.0;  // veh/s
    std::optional<double> rv_rate;  // overrides the scenario-wide RV share
};

// Bernoulli arrivals per OD per step; class drawn at arrival time so the
// spawn stream's consumption never depends on downstream congestion (paired
// runs with different routing settings share identical demand).
class Spawner {
public:
    Spawner(const RoadNetwork& net, std::vector<OdDemand> demand, double rv_rate, double dt)
        : demand_(std::move(demand)), rv_rate_(rv_rate), dt_(dt) {
        if (rv_rate < 0.0 || rv_rate > 1.0) throw ConfigError("rv_rate must lie in [0,1]");
        auto lengths = net.edge_lengths();
        for (const OdDemand& od : demand_) {
            if (od.rate < 0.0 || od.rate * dt > 1.0)
                throw ConfigError("OD rate " + std::to_string(od.rate) +
                                  " veh/s is outside [0, 1/dt] for dt = " + std::to_string(dt));
            if (od.rv_rate && (*od.rv_rate < 0.0 || *od.rv_rate > 1.0))
                throw ConfigError("per-OD rv_rate must lie in [0,1]");
            auto route = shortest_path(net, od.origin_edge, od.dest_edge, lengths);
            if (!route)
                throw ConfigError("OD pair " + std::to_string(od.origin_edge) + " -> " +
                                  std::to_string(od.dest_edge) + " is unreachable");
            routes_.push_back(std::move(*route));
            waiting_.emplace_back();
        }
    }

    // Draw this step's arrivals, then release queue heads whose entry edge has
    // room. `entry_speed(edge)` yields the spawn speed, or nullopt if the edge
    // lacks headroom. Returns fully-initialized vehicles.
    std::vector<VehicleState> step(double t, RngStream& rng,
                                   const std::function<std::optional<double>(int)>& entry_speed) {
        for (std::size_t i = 0; i < demand_.size(); ++i) {
            if (!rng.bernoulli(demand_[i].rate * dt_)) continue;
            double p_rv = demand_[i].rv_rate.value_or(rv_rate_);
            waiting_[i].push_back(rng.bernoulli(p_rv) ? VehicleClass::RV : VehicleClass::HV);
        }
        std::vector<VehicleState> spawned;
        for (std::size_t i = 0; i < demand_.size(); ++i) {
            while (!waiting_[i].empty()) {
                auto speed = entry_speed(demand_[i].origin_edge);
                if (!speed) break;
                VehicleState v;
                v.id = next_id_++;
                v.klass = waiting_[i].front();
                waiting_[i].erase(waiting_[i].begin());
                v.route = routes_[i];
                v.base_cost = routes_[i].base_cost;
                v.speed = *speed;
                v.spawn_time = t;
                v.traveled.push_back(v.route.edges.front());
                spawned.push_back(std::move(v));
            }
        }
        return spawned;
    }

    int total_waiting() const {
        int n = 0;
        for (const auto& q : waiting_) n += static_cast<int>(q.size());
        return n;
    }

private:
    std::vector<OdDemand> demand_;
    double rv_rate_;
    double dt_;
    std::vector<Route> routes_;
    std::vector<std::vector<VehicleClass>> waiting_;
    int next_id_ = 0;
};

}  // namespace mixsim

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "mixsim/agent.hpp"
#include "mixsim/control.hpp"
#include "mixsim/dynamics.hpp"
#include "mixsim/errors.hpp"
#include "mixsim/metrics.hpp"
#include "mixsim/net.hpp"
#include "mixsim/reward.hpp"
#include "mixsim/routing.hpp"
#include "mixsim/rng.hpp"

namespace mixsim {

struct ScenarioConfig {
    RoadNetwork net;
    std::vector<OdDemand> demand;
    double rv_rate = 0.6;
    double horizon = 1000.0;  // s
    Window window{500.0, 1000.0};
    double dt = 1.0;
    bool routing_enabled = false;
    IdmParams idm;
    ControlZoneConfig zone;
    RewardWeights rewards;
    CoordinatorConfig coord;
    RerouteConfig reroute;
    // Coverage target; when unset it tracks the demand at rv_rate - 0.05.
    std::optional<double> p_target;

    double resolved_p_target() const {
        return p_target.value_or(std::max(0.0, rv_rate - 0.05));
    }

    void validate() const {
        if (dt <= 0) throw ConfigError("dt must be > 0");
        if (horizon <= 0) throw ConfigError("horizon must be > 0");
        if (window.t0 < 0 || window.t1 > horizon || window.t0 >= window.t1)
            throw ConfigError("measurement window must satisfy 0 <= t0 < t1 <= horizon");
        idm.validate();
        zone.validate();
        rewards.validate();
        reroute.validate();
        for (const Edge& e : net.edges)
            if (e.speed_limit * dt > zone.radius)
                throw ConfigError("edge " + std::to_string(e.id) +
                                  ": speed limit * dt exceeds the control zone radius, so a "
                                  "vehicle could cross the zone without ever deciding");
    }
};

struct RunResult {
    MetricsReport report;
    RunTrace trace;
    double episode_return = 0.0;  // summed decision rewards
    int decisions = 0;
};

// Called once per completed RV decision transition: features, chosen action,
// reward, next features, terminal flag (interior entry or episode end).
using TransitionSink =
    std::function<void(const std::vector<double>&, Action, double, const std::vector<double>&, bool)>;

class Engine {
public:
    Engine(const ScenarioConfig& cfg, std::uint64_t seed, Policy& policy)
        : cfg_(validated(cfg)),
          policy_(policy),
          spawn_rng_(seed, "spawn"),
          policy_rng_(seed, "policy"),
          routing_seed_(hash_combine(seed, hash_str("routing"))),
          spawner_(cfg_.net, cfg_.demand, cfg_.rv_rate, cfg_.dt),
          coordinator_(make_coord_config(cfg_), cfg_.net.edge_lengths()),
          baseline_(cfg_.net.edge_lengths()) {
        edge_occ_.resize(cfg_.net.edges.size());
        for (const Junction& j : cfg_.net.junctions) {
            if (!j.internal) continue;
            ++trace_.internal_junctions;
            for (int k = 0; k < kMaxApproaches; ++k) {
                if (j.slot_edge[k] == -1) continue;
                series_index_[{j.id, k}] = static_cast<int>(trace_.wait_series.size());
                trace_.wait_series.push_back({j.id, k, 0.0, cfg_.dt, {}});
            }
        }
    }

    void set_transition_sink(TransitionSink sink) { sink_ = std::move(sink); }
    void enable_trajectories(bool on) { dump_trajectories_ = on; }
    const Coordinator& coordinator() const { return coordinator_; }
    bool explore = false;  // pass-through to the policy's exploration flag

    RunResult run() {
        int steps = static_cast<int>(std::llround(cfg_.horizon / cfg_.dt));
        for (int step = 0; step < steps; ++step) {
            double t = step * cfg_.dt;
            do_spawn(t);
            if (step % coordinator_.config().update_interval == 0) {
                double total = coordinator_.update(vehicles_);
                trace_.shortage_series.emplace_back(t, total);
                if (cfg_.routing_enabled) do_reroutes(t);
            }
            index_vehicles();
            build_snapshots();
            append_wait_series();
            do_decisions(t);
            compute_accels();
            do_motion(t);
            verify_interiors();
            remove_finished();
        }
        flush_pending();

        RunResult res;
        res.report = compute_metrics(trace_, cfg_.window, cfg_.dt);
        res.trace = std::move(trace_);
        res.episode_return = episode_return_;
        res.decisions = decisions_;
        return res;
    }

private:
    static ScenarioConfig validated(ScenarioConfig cfg) {
        cfg.validate();
        return cfg;
    }

    static CoordinatorConfig make_coord_config(const ScenarioConfig& cfg) {
        CoordinatorConfig c = cfg.coord;
        c.p_target = cfg.resolved_p_target();
        return c;
    }

    struct Pending {
        std::vector<double> x;
        Action a = Action::Stop;
        double r = 0.0;
    };

    ScenarioConfig cfg_;
    Policy& policy_;
    RngStream spawn_rng_;
    RngStream policy_rng_;
    std::uint64_t routing_seed_;
    Spawner spawner_;
    Coordinator coordinator_;
    std::vector<double> baseline_;

    std::vector<VehicleState> vehicles_;  // always sorted by id
    std::vector<std::vector<int>> edge_occ_;  // edge -> vehicle indices, pos descending
    std::map<int, std::vector<int>> interior_occ_;  // junction -> vehicle indices (live in motion)
    std::map<int, int> grants_;  // vehicle id -> granted movement
    std::map<int, ZoneSnapshot> snapshots_;
    std::map<int, Action> commands_;  // vehicle id -> decided action this step
    std::map<int, Pending> pending_;  // vehicle id -> transition awaiting its successor
    std::map<std::pair<int, int>, int> series_index_;
    std::vector<double> accels_;

    RunTrace trace_;
    TransitionSink sink_;
    bool dump_trajectories_ = false;
    double episode_return_ = 0.0;
    int decisions_ = 0;

    VehicleState& by_id(int id) {
        auto it = std::lower_bound(vehicles_.begin(), vehicles_.end(), id,
                                   [](const VehicleState& v, int key) { return v.id < key; });
        return *it;
    }

    void do_spawn(double t) {
        std::set<int> claimed;
        auto entry_speed = [&](int e) -> std::optional<double> {
            if (claimed.count(e)) return std::nullopt;
            double tail_pos = std::numeric_limits<double>::infinity();
            double tail_speed = 0.0;
            for (const VehicleState& v : vehicles_) {
                if (v.in_interior || v.finished() || v.current_edge() != e) continue;
                if (v.pos < tail_pos) {
                    tail_pos = v.pos;
                    tail_speed = v.speed;
                }
            }
            double limit = cfg_.net.edges[e].speed_limit;
            if (std::isinf(tail_pos)) {
                claimed.insert(e);
                return limit;
            }
            if (tail_pos < cfg_.idm.s0 + kVehicleLength) return std::nullopt;
            claimed.insert(e);
            return std::min(limit, tail_speed);
        };
        for (VehicleState& v : spawner_.step(t, spawn_rng_, entry_speed)) {
            ++trace_.spawned;
            vehicles_.push_back(std::move(v));
        }
    }

    void do_reroutes(double t) {
        for (VehicleState& v : vehicles_) {
            if (v.klass != VehicleClass::RV || v.finished()) continue;
            RerouteOutcome out = consider_reroute(cfg_.net, v, coordinator_.cost_map(), baseline_,
                                                  cfg_.reroute, routing_seed_, t, cfg_.dt);
            trace_.routing_log.push_back(
                {t, v.id, out.eligible, out.gated, out.candidate_cost, v.base_cost, out.adopted});
            if (out.adopted) {
                v.route = std::move(*out.new_route);
                v.route_index = 0;  // the new route starts at the current edge
                v.last_reroute = t;
            }
        }
    }

    void index_vehicles() {
        for (auto& occ : edge_occ_) occ.clear();
        interior_occ_.clear();
        for (int i = 0; i < static_cast<int>(vehicles_.size()); ++i) {
            const VehicleState& v = vehicles_[i];
            if (v.finished()) continue;
            if (v.in_interior)
                interior_occ_[cfg_.net.movements[v.movement].junction].push_back(i);
            else
                edge_occ_[v.current_edge()].push_back(i);
        }
        auto deeper = [this](int a, int b) { return vehicles_[a].pos > vehicles_[b].pos; };
        for (auto& occ : edge_occ_) std::sort(occ.begin(), occ.end(), deeper);
        for (auto& [j, occ] : interior_occ_) std::sort(occ.begin(), occ.end(), deeper);
    }

    // Interior occupants plus live grants at one junction, as movement ids.
    std::vector<int> active_movements(int junction) const {
        std::vector<int> act;
        auto it = interior_occ_.find(junction);
        if (it != interior_occ_.end())
            for (int idx : it->second) act.push_back(vehicles_[idx].movement);
        for (const auto& [vid, m] : grants_)
            if (cfg_.net.movements[m].junction == junction) act.push_back(m);
        std::sort(act.begin(), act.end());
        act.erase(std::unique(act.begin(), act.end()), act.end());
        return act;
    }

    void build_snapshots() {
        snapshots_.clear();
        for (const Junction& j : cfg_.net.junctions) {
            if (!j.internal) continue;
            ZoneSnapshot snap;
            snap.junction = j.id;
            snap.grid = build_occupancy(cfg_.net, j.id, vehicles_, cfg_.zone);
            snap.active_movements = active_movements(j.id);
            snap.threat = threat_vector(cfg_.net, snap.grid, cfg_.zone);
            std::array<int, kMaxApproaches> n{};
            std::array<double, kMaxApproaches> streak_sum{};
            for (int k = 0; k < kMaxApproaches; ++k) {
                int e = j.slot_edge[k];
                if (e == -1) continue;
                for (int idx : edge_occ_[e]) {
                    const VehicleState& v = vehicles_[idx];
                    if (distance_to_junction(cfg_.net, v) > cfg_.zone.radius) continue;
                    if (v.speed >= kStopThreshold) continue;
                    n[k] += 1;
                    streak_sum[k] += v.stop_streak;
                }
            }
            for (int k = 0; k < kMaxApproaches; ++k) {
                snap.queue_count[k] = n[k];
                snap.queue_wait[k] = n[k] > 0 ? streak_sum[k] / n[k] : 0.0;
            }
            snapshots_.emplace(j.id, std::move(snap));
        }
    }

    void append_wait_series() {
        for (const auto& [key, si] : series_index_)
            trace_.wait_series[si].mean_wait.push_back(snapshots_.at(key.first).queue_wait[key.second]);
    }

    void do_decisions(double t) {
        commands_.clear();
        struct Req {
            int junction;
            double streak;
            int vid;
            int movement;
            int approach;
        };
        std::vector<Req> reqs;
        for (const auto& [jid, snap] : snapshots_) {
            const Junction& j = cfg_.net.junctions[jid];
            for (int k = 0; k < kMaxApproaches; ++k) {
                int e = j.slot_edge[k];
                if (e == -1) continue;
                // Zone leader: the vehicle nearest the stop line within the
                // control zone. Only a leading robot vehicle consults the
                // policy; everything behind it simply car-follows.
                for (int idx : edge_occ_[e]) {
                    const VehicleState& v = vehicles_[idx];
                    if (distance_to_junction(cfg_.net, v) > cfg_.zone.radius) break;
                    if (v.klass == VehicleClass::RV) {
                        int m = approach_movement(cfg_.net, v, jid);
                        if (m >= 0) reqs.push_back({jid, v.stop_streak, v.id, m, k});
                    }
                    break;  // first in-zone vehicle is the leader, RV or not
                }
            }
        }
        // Simultaneous requests at one junction are granted in a fixed
        // priority: longest current wait first, then lowest vehicle id.
        std::sort(reqs.begin(), reqs.end(), [](const Req& a, const Req& b) {
            if (a.junction != b.junction) return a.junction < b.junction;
            if (a.streak != b.streak) return a.streak > b.streak;
            return a.vid < b.vid;
        });

        for (const Req& req : reqs) {
            const ZoneSnapshot& snap = snapshots_.at(req.junction);
            Observation obs = build_observation(cfg_.net, snap, req.approach, cfg_.zone);
            Action chosen = policy_.act(obs, explore, policy_rng_);
            OverrideDecision od =
                safety_override(cfg_.net, active_movements(req.junction), req.movement, chosen);
            VehicleState& v = by_id(req.vid);
            if (od.final_action == Action::Go) {
                grants_[req.vid] = req.movement;
                v.has_grant = true;
            } else if (v.has_grant) {
                grants_.erase(req.vid);  // a stopping holder gives the interior back
                v.has_grant = false;
            }
            commands_[req.vid] = od.final_action;

            double w_ego = std::min(v.stop_streak / cfg_.zone.wait_cap, 1.0);
            RewardBreakdown rb =
                total_reward(w_ego, obs.q, obs.t[req.approach], chosen, od.conflict, cfg_.rewards);
            trace_.control_log.push_back({t, req.junction, req.vid, chosen, od.conflict,
                                          obs.t[req.approach]});
            episode_return_ += rb.total;
            ++decisions_;

            if (sink_) {
                std::vector<double> x = features(obs);
                if (auto it = pending_.find(req.vid); it != pending_.end())
                    sink_(it->second.x, it->second.a, it->second.r, x, false);
                pending_[req.vid] = {std::move(x), chosen, rb.total};
            }
        }
    }

    // Bumper-to-bumper gap and speed of the vehicle ahead, looking from the
    // current edge through the own-movement interior onto the next edge.
    std::pair<double, double> leader_ahead(const VehicleState& v) const {
        const double inf = std::numeric_limits<double>::infinity();
        if (v.in_interior) {
            const Movement& m = cfg_.net.movements[v.movement];
            const VehicleState* best = nullptr;
            for (int idx : interior_occ_.at(m.junction)) {
                const VehicleState& o = vehicles_[idx];
                if (o.id == v.id || o.movement != v.movement || o.pos <= v.pos) continue;
                if (!best || o.pos < best->pos) best = &o;
            }
            if (best) return {best->pos - v.pos - kVehicleLength, best->speed};
            double ahead = m.length - v.pos;
            if (const VehicleState* tail = edge_tail(m.out_edge))
                return {ahead + tail->pos - kVehicleLength, tail->speed};
            return {inf, 0.0};
        }
        // pos-descending order: the predecessor is the entry just before ours
        const std::vector<int>& occ = edge_occ_[v.current_edge()];
        const VehicleState* pred = nullptr;
        for (int idx : occ) {
            const VehicleState& o = vehicles_[idx];
            if (o.id == v.id) break;
            pred = &o;
        }
        if (pred) return {pred->pos - v.pos - kVehicleLength, pred->speed};
        if (v.on_last_edge()) return {inf, 0.0};
        double ahead = cfg_.net.edges[v.current_edge()].length - v.pos;
        int mid = cfg_.net.find_movement(v.current_edge(), v.route.edges[v.route_index + 1]);
        if (mid < 0) return {inf, 0.0};
        const Movement& m = cfg_.net.movements[mid];
        const VehicleState* inside = nullptr;
        if (auto it = interior_occ_.find(m.junction); it != interior_occ_.end()) {
            for (int idx : it->second) {
                const VehicleState& o = vehicles_[idx];
                if (o.movement != mid) continue;
                if (!inside || o.pos < inside->pos) inside = &o;
            }
        }
        if (inside) return {ahead + inside->pos - kVehicleLength, inside->speed};
        if (const VehicleState* tail = edge_tail(m.out_edge))
            return {ahead + m.length + tail->pos - kVehicleLength, tail->speed};
        return {inf, 0.0};
    }

    const VehicleState* edge_tail(int edge) const {
        const std::vector<int>& occ = edge_occ_[edge];
        if (occ.empty()) return nullptr;
        return &vehicles_[occ.back()];  // pos-descending, so the back is the tail
    }

    void compute_accels() {
        // Grants are final for the step here, so active sets can be cached.
        std::map<int, std::vector<int>> active;
        for (const Junction& j : cfg_.net.junctions)
            if (j.internal) active.emplace(j.id, active_movements(j.id));
        auto blocked = [&](int movement) {
            for (int m : active.at(cfg_.net.movements[movement].junction))
                if (cfg_.net.conflicting(m, movement)) return true;
            return false;
        };

        accels_.assign(vehicles_.size(), 0.0);
        for (std::size_t i = 0; i < vehicles_.size(); ++i) {
            const VehicleState& v = vehicles_[i];
            if (v.finished()) continue;
            IdmParams p = cfg_.idm;
            auto [gap, lead_speed] = leader_ahead(v);
            if (gap <= 0.0)
                throw SimulationError("vehicle " + std::to_string(v.id) +
                                      " overlaps its leader (gap " + std::to_string(gap) + ")");
            if (v.in_interior) {
                p.v0 = cfg_.net.edges[cfg_.net.movements[v.movement].out_edge].speed_limit;
                accels_[i] = capped(v, idm_accel(v.speed, gap, lead_speed, p, cfg_.dt), gap);
                continue;
            }
            const Edge& e = cfg_.net.edges[v.current_edge()];
            p.v0 = e.speed_limit;
            double a = idm_accel(v.speed, gap, lead_speed, p, cfg_.dt);
            double d_int = e.length - v.pos;
            int m = approach_movement(cfg_.net, v, e.to);
            bool internal = m >= 0 && cfg_.net.junctions[e.to].internal;

            if (auto it = commands_.find(v.id); it != commands_.end()) {
                if (it->second == Action::Stop)
                    a = std::min(a, apply_action(v.speed, Action::Stop, d_int, p));
                // Go: the grant removes the stop-line wall; IDM still caps.
            } else if (internal) {
                bool wall = v.klass == VehicleClass::RV
                                ? (!v.has_grant && d_int <= cfg_.zone.radius)
                                : blocked(m);
                if (wall) a = std::min(a, idm_accel(v.speed, std::max(d_int, 0.05), 0.0, p, cfg_.dt));
            }
            accels_[i] = capped(v, a, gap);
        }
    }

    // Hard cap: even if the leader froze in place, one step at this speed
    // must leave a positive bumper gap.
    double capped(const VehicleState& v, double a, double gap) const {
        if (std::isinf(gap)) return a;
        double v_max = std::max(0.0, gap - 0.3) / cfg_.dt;
        double v_next = v.speed + a * cfg_.dt;
        if (v_next > v_max) a = (v_max - v.speed) / cfg_.dt;
        return a;
    }

    void do_motion(double t) {
        // Leaders move first: interiors (nearest exit first), then edges.
        std::vector<int> order;
        for (const auto& [j, occ] : interior_occ_) order.insert(order.end(), occ.begin(), occ.end());
        for (const auto& occ : edge_occ_) order.insert(order.end(), occ.begin(), occ.end());

        auto may_enter = [this](const VehicleState& veh, int mid) {
            const Junction& j = cfg_.net.junctions[cfg_.net.movements[mid].junction];
            if (!j.internal) return true;
            if (veh.klass == VehicleClass::RV) {
                auto it = grants_.find(veh.id);
                return it != grants_.end() && it->second == mid;
            }
            if (auto it = interior_occ_.find(j.id); it != interior_occ_.end())
                for (int idx : it->second)
                    if (cfg_.net.conflicting(vehicles_[idx].movement, mid)) return false;
            for (const auto& [vid, g] : grants_)
                if (vid != veh.id && cfg_.net.movements[g].junction == j.id &&
                    cfg_.net.conflicting(g, mid))
                    return false;
            return true;
        };

        for (int idx : order) {
            VehicleState& v = vehicles_[idx];
            StepEvents ev = integrate(cfg_.net, v, accels_[idx], cfg_.dt, t, may_enter);
            if (ev.entered_interior) {
                auto& occ = interior_occ_[cfg_.net.movements[ev.entered_movement].junction];
                occ.push_back(idx);
                if (v.klass == VehicleClass::RV && sink_) {
                    if (auto it = pending_.find(v.id); it != pending_.end()) {
                        sink_(it->second.x, it->second.a, it->second.r,
                              std::vector<double>(feature_width(cfg_.zone.c0), 0.0), true);
                        pending_.erase(it);
                    }
                }
            }
            if (ev.exited_interior) {
                auto& occ = interior_occ_[ev.exited_junction];
                occ.erase(std::remove(occ.begin(), occ.end(), idx), occ.end());
                if (grants_.erase(v.id)) v.has_grant = false;
                trace_.crossings.push_back({t, ev.exited_junction});
            }
            if (ev.completed) {
                double free_flow = 0.0;
                for (int e : v.traveled)
                    free_flow += cfg_.net.edges[e].length / cfg_.net.edges[e].speed_limit;
                trace_.completions.push_back(
                    {v.id, v.klass, v.spawn_time, *v.finish_time, free_flow});
            }
            capture_samples(t, v);
        }
    }

    void capture_samples(double t, const VehicleState& v) {
        if (!v.finished()) {
            int zone_junction = -1;
            if (v.in_interior) {
                zone_junction = cfg_.net.movements[v.movement].junction;
            } else {
                const Edge& e = cfg_.net.edges[v.current_edge()];
                if (cfg_.net.junctions[e.to].internal &&
                    distance_to_junction(cfg_.net, v) <= cfg_.zone.radius)
                    zone_junction = e.to;
            }
            if (zone_junction >= 0)
                trace_.zone_samples.push_back(
                    {t, v.id, zone_junction, v.speed, v.accel, v.speed < kStopThreshold});
        }
        if (dump_trajectories_) {
            std::string loc = v.in_interior ? "interior:" + std::to_string(v.movement)
                                            : "edge:" + std::to_string(v.current_edge());
            trace_.trajectories.push_back({t, v.id, v.klass, loc, v.pos, v.speed, v.accel});
        }
    }

    // The invariant the whole control stack exists to uphold: no two
    // conflicting movements ever co-occupy a junction interior.
    void verify_interiors() const {
        for (const auto& [j, occ] : interior_occ_) {
            for (std::size_t a = 0; a < occ.size(); ++a) {
                for (std::size_t b = a + 1; b < occ.size(); ++b) {
                    int ma = vehicles_[occ[a]].movement;
                    int mb = vehicles_[occ[b]].movement;
                    if (cfg_.net.conflicting(ma, mb))
                        throw SimulationError(
                            "conflicting movements co-occupy junction " + std::to_string(j) +
                            ": vehicles " + std::to_string(vehicles_[occ[a]].id) + " and " +
                            std::to_string(vehicles_[occ[b]].id));
                }
            }
        }
    }

    void remove_finished() {
        vehicles_.erase(std::remove_if(vehicles_.begin(), vehicles_.end(),
                                       [](const VehicleState& v) { return v.finished(); }),
                        vehicles_.end());
    }

    void flush_pending() {
        if (sink_) {
            std::vector<double> zeros(feature_width(cfg_.zone.c0), 0.0);
            for (const auto& [vid, p] : pending_) sink_(p.x, p.a, p.r, zeros, true);
        }
        pending_.clear();
    }
};

inline RunResult run_scenario(const ScenarioConfig& cfg, std::uint64_t seed, Policy& policy) {
    Engine engine(cfg, seed, policy);
    return engine.run();
}

struct SweepCell {
    double rv_rate = 0.0;
    std::uint64_t seed = 0;
    std::optional<MetricsReport> report;
    std::string error;  // non-empty when the run failed
};

struct SweepTable {
    std::vector<double> rv_rates;
    std::vector<std::uint64_t> seeds;
    std::vector<SweepCell> cells;  // rate-major order
};

// Cross product of penetration rates and seeds; independent runs execute in
// parallel. Failures are recorded per cell and never abort the sweep.
inline SweepTable sweep(const ScenarioConfig& base, const std::vector<double>& rv_rates,
                        const std::vector<std::uint64_t>& seeds,
                        const std::function<std::unique_ptr<Policy>()>& make_policy,
                        unsigned threads = std::thread::hardware_concurrency()) {
    if (rv_rates.empty() || seeds.empty()) throw ConfigError("sweep needs rates and seeds");
    SweepTable table;
    table.rv_rates = rv_rates;
    table.seeds = seeds;
    table.cells.resize(rv_rates.size() * seeds.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next.fetch_add(1); i < table.cells.size(); i = next.fetch_add(1)) {
            SweepCell& cell = table.cells[i];
            cell.rv_rate = rv_rates[i / seeds.size()];
            cell.seed = seeds[i % seeds.size()];
            try {
                ScenarioConfig cfg = base;
                cfg.rv_rate = cell.rv_rate;
                auto policy = make_policy();
                cell.report = run_scenario(cfg, cell.seed, *policy).report;
            } catch (const std::exception& e) {
                cell.error = e.what();
            }
        }
    };
    unsigned n = std::max(1u, std::min<unsigned>(threads, table.cells.size()));
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    return table;
}

}  // namespace mixsim

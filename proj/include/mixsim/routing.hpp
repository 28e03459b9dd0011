#pragma once

#include <algorithm>
#include <deque>
#include <optional>
#include <vector>

#include "mixsim/control.hpp"
#include "mixsim/dynamics.hpp"
#include "mixsim/net.hpp"
#include "mixsim/rng.hpp"

namespace mixsim {

struct CoordinatorConfig {
    double alpha = 1.0;        // incentive strength
    double p_target = 0.55;    // desired RV coverage; engine defaults this to rv_rate - 0.05
    int horizon_steps = 60;    // prediction horizon h, in engine steps
    int update_interval = 60;  // steps between coverage samples / broadcasts
    int window = 5;            // ring-buffer length k

    void validate() const {
        if (alpha < 0) throw ConfigError("alpha must be >= 0");
        if (p_target < 0 || p_target > 1) throw ConfigError("P_target must lie in [0,1]");
        if (horizon_steps < 0) throw ConfigError("prediction horizon must be >= 0");
        if (update_interval < 1 || window < 2) throw ConfigError("bad coordinator cadence");
        if (alpha * p_target >= 1.0)
            throw ConfigError("alpha * P_target >= 1 would drive adjusted costs to zero");
    }
};

struct CostMap {
    std::vector<double> cost;  // adjusted tau' per edge
    long generation = 0;       // broadcast counter; RVs gate per generation
};

struct RerouteConfig {
    double rho = 0.15;          // per-broadcast activation probability
    double delta = 1.20;        // max detour ratio against C(R_base)
    int cooldown_steps = 60;    // min steps between adopted reroutes
    double commitment = 50.0;   // m before a junction where the route is locked

    void validate() const {
        if (rho < 0 || rho > 1) throw ConfigError("rho must lie in [0,1]");
        if (delta <= 1.0) throw ConfigError("detour ratio delta must exceed 1");
        if (cooldown_steps < 0 || commitment < 0) throw ConfigError("bad reroute constraints");
    }
};

// RV share of the vehicles currently on an edge; empty edges yield no sample
// so the history simply holds (an unused edge has nothing to coordinate).
inline std::optional<double> measure_coverage(int edge, const std::vector<VehicleState>& vehicles) {
    int total = 0, rv = 0;
    for (const VehicleState& v : vehicles) {
        if (v.in_interior || v.finished()) continue;
        if (v.current_edge() != edge) continue;
        ++total;
        if (v.klass == VehicleClass::RV) ++rv;
    }
    if (total == 0) return std::nullopt;
    return static_cast<double>(rv) / total;
}

// OLS slope of coverage samples against their index; call only with a full
// window (the coordinator falls back to the last sample otherwise).
inline double trend(const std::deque<double>& history, int window) {
    if (static_cast<int>(history.size()) != window)
        throw ConfigError("trend: history must hold exactly the window of samples");
    double n = window;
    double mean_x = (n - 1.0) / 2.0;
    double mean_y = 0.0;
    for (double y : history) mean_y += y;
    mean_y /= n;
    double num = 0.0, den = 0.0;
    for (int i = 0; i < window; ++i) {
        num += (i - mean_x) * (history[i] - mean_y);
        den += (i - mean_x) * (i - mean_x);
    }
    return num / den;
}

inline double predict(double p_now, double slope, double horizon) {
    return std::clamp(p_now + slope * horizon, 0.0, 1.0);
}

inline double shortage(double p_hat, double p_target) { return std::max(0.0, p_target - p_hat); }

// tau'(e) = tau(e) * (1 - alpha * S(e)): edges expecting an RV shortage get
// cheaper, everything else keeps its baseline cost.
inline std::vector<double> adjust_costs(const std::vector<double>& baseline,
                                        const std::vector<double>& shortages, double alpha) {
    std::vector<double> out(baseline.size());
    for (std::size_t e = 0; e < baseline.size(); ++e) {
        out[e] = baseline[e] * (1.0 - alpha * shortages[e]);
        if (out[e] <= 0.0)
            throw ConfigError("adjusted cost <= 0 on edge " + std::to_string(e) +
                              "; lower alpha or P_target");
    }
    return out;
}

// Central coverage coordinator: samples RV coverage once per update interval,
// extrapolates each edge's trend, and broadcasts discounted costs for edges
// predicted to fall short of the target. It never learns what any RV does
// with the broadcast.
class Coordinator {
public:
    Coordinator(CoordinatorConfig cfg, std::vector<double> baseline)
        : cfg_(cfg), baseline_(std::move(baseline)), history_(baseline_.size()) {
        cfg_.validate();
        map_.cost = baseline_;
        shortages_.assign(baseline_.size(), 0.0);
    }

    // One broadcast cycle; returns the summed predicted shortage over edges.
    double update(const std::vector<VehicleState>& vehicles) {
        std::vector<int> total(baseline_.size(), 0), rv(baseline_.size(), 0);
        for (const VehicleState& v : vehicles) {
            if (v.in_interior || v.finished()) continue;
            int e = v.current_edge();
            ++total[e];
            if (v.klass == VehicleClass::RV) ++rv[e];
        }
        double sum = 0.0;
        for (std::size_t e = 0; e < baseline_.size(); ++e) {
            auto& h = history_[e];
            if (total[e] > 0) {
                h.push_back(static_cast<double>(rv[e]) / total[e]);
                if (static_cast<int>(h.size()) > cfg_.window) h.pop_front();
            }
            double s = 0.0;
            if (!h.empty()) {
                double p_now = h.back();
                double p_hat = p_now;
                if (static_cast<int>(h.size()) == cfg_.window) {
                    // The horizon is configured in steps; samples arrive once
                    // per update interval, so convert before extrapolating.
                    double periods = static_cast<double>(cfg_.horizon_steps) / cfg_.update_interval;
                    p_hat = predict(p_now, trend(h, cfg_.window), periods);
                }
                s = shortage(p_hat, cfg_.p_target);
            }
            shortages_[e] = s;
            sum += s;
        }
        map_.cost = adjust_costs(baseline_, shortages_, cfg_.alpha);
        map_.generation += 1;
        return sum;
    }

    const CostMap& cost_map() const { return map_; }
    const std::vector<double>& shortages() const { return shortages_; }
    const std::vector<double>& baseline() const { return baseline_; }
    const std::deque<double>& history(int edge) const { return history_[edge]; }
    const CoordinatorConfig& config() const { return cfg_; }

private:
    CoordinatorConfig cfg_;
    std::vector<double> baseline_;
    std::vector<std::deque<double>> history_;
    std::vector<double> shortages_;
    CostMap map_;
};

struct RerouteOutcome {
    bool eligible = false;
    bool gated = false;          // eligible but lost the activation draw
    double candidate_cost = -1;  // baseline cost of the candidate route
    bool adopted = false;
    std::optional<Route> new_route;
};

// Decentralized reroute check an RV runs when it receives a broadcast. The
// activation draw is keyed on (vehicle id, generation) so evaluation order
// across vehicles cannot change any outcome. Candidate routes are found
// under the adjusted costs but verified against baseline costs: adopt only
// if the candidate stays within delta of the spawn-time route cost.
inline RerouteOutcome consider_reroute(const RoadNetwork& net, const VehicleState& v,
                                       const CostMap& map, const std::vector<double>& baseline,
                                       const RerouteConfig& cfg, std::uint64_t routing_seed,
                                       double now, double dt) {
    RerouteOutcome out;
    if (v.in_interior || v.finished() || v.on_last_edge()) return out;
    if (v.last_reroute && now - *v.last_reroute < cfg.cooldown_steps * dt) return out;
    if (distance_to_junction(net, v) < cfg.commitment) return out;
    out.eligible = true;
    double draw = hash_uniform(routing_seed, static_cast<std::uint64_t>(v.id),
                               static_cast<std::uint64_t>(map.generation));
    if (draw >= cfg.rho) {
        out.gated = true;
        return out;
    }
    auto candidate = shortest_path(net, v.current_edge(), v.route.edges.back(), map.cost);
    if (!candidate) return out;  // destination unreachable under tau': keep the old route
    out.candidate_cost = route_cost(*candidate, baseline);
    if (out.candidate_cost <= cfg.delta * v.base_cost) {
        out.adopted = true;
        out.new_route = std::move(*candidate);
    }
    return out;
}

}  // namespace mixsim

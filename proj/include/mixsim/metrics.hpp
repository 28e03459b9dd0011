#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mixsim/control.hpp"
#include "mixsim/dynamics.hpp"

namespace mixsim {

struct Window {
    double t0 = 500.0;
    double t1 = 1000.0;
    bool contains(double t) const { return t >= t0 && t < t1; }
    double length() const { return t1 - t0; }
};

// One vehicle-step spent inside a control zone (approach segment or junction
// interior), with the state that step ended in.
struct ZoneStepSample {
    double t = 0.0;
    int vehicle = -1;
    int junction = -1;
    double speed = 0.0;
    double accel = 0.0;
    bool stopped = false;
};

struct CompletionRecord {
    int vehicle = -1;
    VehicleClass klass = VehicleClass::HV;
    double spawn_t = 0.0;
    double finish_t = 0.0;
    double free_flow = 0.0;  // sum of length/limit over the edges actually driven
};

struct CrossingEvent {
    double t = 0.0;
    int junction = -1;
};

struct ControlLogRow {
    double t = 0.0;
    int junction = -1;
    int vehicle = -1;
    Action action = Action::Stop;  // what the policy chose, pre-override
    bool overridden = false;
    double threat = 0.0;  // ego-approach threat at decision time
};

struct RoutingLogRow {
    double t = 0.0;
    int vehicle = -1;
    bool eligible = false;
    bool gated = false;
    double candidate_cost = -1.0;
    double base_cost = 0.0;  // C(R_base)
    bool adopted = false;
};

// Per-step mean stop streak of the queued vehicles on one approach; 0 when
// the approach has no queued vehicle that step.
struct ApproachWaitSeries {
    int junction = -1;
    int approach = -1;
    double t0 = 0.0;
    double dt = 1.0;
    std::vector<double> mean_wait;
};

struct TrajectoryRow {
    double t = 0.0;
    int vehicle = -1;
    VehicleClass klass = VehicleClass::HV;
    std::string location;  // "edge:<id>" or "interior:<movement>"
    double pos = 0.0;
    double speed = 0.0;
    double accel = 0.0;
};

struct RunTrace {
    std::vector<ZoneStepSample> zone_samples;
    std::vector<CompletionRecord> completions;
    std::vector<CrossingEvent> crossings;
    std::vector<ControlLogRow> control_log;
    std::vector<RoutingLogRow> routing_log;
    std::vector<ApproachWaitSeries> wait_series;
    std::vector<std::pair<double, double>> shortage_series;  // (t, total predicted shortage)
    std::vector<TrajectoryRow> trajectories;                 // only when dumping is on
    int spawned = 0;
    int internal_junctions = 0;
};

// Surrogate instantaneous fuel rate (ml/s): idling burns a little, cruising
// burns with speed and drag, and throttle on top of speed burns the most.
// Chosen so stop-and-go over a distance costs more than smooth cruising.
constexpr double kFuelIdle = 0.22;
constexpr double kFuelSpeed = 0.024;
constexpr double kFuelDrag = 3e-5;
constexpr double kFuelAccel = 0.09;

inline double fuel_rate(double speed, double accel) {
    double r = kFuelIdle + kFuelSpeed * speed + kFuelDrag * speed * speed * speed +
               kFuelAccel * std::max(0.0, accel) * speed;
    return std::max(0.0, r);
}

namespace detail {
// Windowed stopped seconds per vehicle, for every vehicle with any in-window
// zone presence (vehicles that never stop contribute 0).
inline std::map<int, double> stopped_seconds(const std::vector<ZoneStepSample>& samples,
                                             const Window& win, double dt) {
    std::map<int, double> by_vehicle;
    for (const ZoneStepSample& s : samples) {
        if (!win.contains(s.t)) continue;
        auto [it, _] = by_vehicle.try_emplace(s.vehicle, 0.0);
        if (s.stopped) it->second += dt;
    }
    return by_vehicle;
}
}  // namespace detail

inline std::optional<double> avg_wait(const std::vector<ZoneStepSample>& samples,
                                      const Window& win, double dt) {
    auto per_vehicle = detail::stopped_seconds(samples, win, dt);
    if (per_vehicle.empty()) return std::nullopt;
    double sum = 0.0;
    for (const auto& [_, s] : per_vehicle) sum += s;
    return sum / per_vehicle.size();
}

inline std::pair<double, double> throughput(const std::vector<CrossingEvent>& crossings,
                                            int internal_junctions,
                                            const std::vector<CompletionRecord>& completions,
                                            const Window& win) {
    int crossed = 0;
    for (const CrossingEvent& c : crossings)
        if (win.contains(c.t)) ++crossed;
    int completed = 0;
    for (const CompletionRecord& c : completions)
        if (win.contains(c.finish_t)) ++completed;
    double theta_int =
        internal_junctions > 0 ? static_cast<double>(crossed) / internal_junctions : 0.0;
    return {theta_int, static_cast<double>(completed)};
}

inline std::optional<double> avg_delay(const std::vector<CompletionRecord>& completions,
                                       const Window& win) {
    double sum = 0.0;
    int n = 0;
    for (const CompletionRecord& c : completions) {
        if (!win.contains(c.finish_t)) continue;
        sum += (c.finish_t - c.spawn_t) - c.free_flow;
        ++n;
    }
    if (n == 0) return std::nullopt;
    return sum / n;
}

// Longest consecutive stretch (seconds) any approach's mean wait stays above
// the starvation threshold inside the window.
inline double max_starvation(const std::vector<ApproachWaitSeries>& series, const Window& win,
                             double threshold = 60.0) {
    double worst = 0.0;
    for (const ApproachWaitSeries& s : series) {
        int run = 0;
        for (std::size_t i = 0; i < s.mean_wait.size(); ++i) {
            double t = s.t0 + i * s.dt;
            if (!win.contains(t)) {
                run = 0;
                continue;
            }
            if (s.mean_wait[i] > threshold) {
                ++run;
                worst = std::max(worst, run * s.dt);
            } else {
                run = 0;
            }
        }
    }
    return worst;
}

inline std::optional<double> p99_wait(const std::vector<ZoneStepSample>& samples,
                                      const Window& win, double dt) {
    auto per_vehicle = detail::stopped_seconds(samples, win, dt);
    if (per_vehicle.empty()) return std::nullopt;
    std::vector<double> waits;
    waits.reserve(per_vehicle.size());
    for (const auto& [_, s] : per_vehicle) waits.push_back(s);
    std::sort(waits.begin(), waits.end());
    std::size_t rank = static_cast<std::size_t>(std::ceil(0.99 * waits.size()));  // nearest rank
    return waits[rank - 1];
}

inline std::optional<double> conflict_rate(const std::vector<ControlLogRow>& log,
                                           const Window& win) {
    int go = 0, overridden = 0;
    for (const ControlLogRow& r : log) {
        if (!win.contains(r.t) || r.action != Action::Go) continue;
        ++go;
        if (r.overridden) ++overridden;
    }
    if (go == 0) return std::nullopt;
    return static_cast<double>(overridden) / go;
}

inline std::optional<double> fuel_avg(const std::vector<ZoneStepSample>& samples,
                                      const Window& win) {
    double sum = 0.0;
    int n = 0;
    for (const ZoneStepSample& s : samples) {
        if (!win.contains(s.t)) continue;
        sum += fuel_rate(s.speed, s.accel);
        ++n;
    }
    if (n == 0) return std::nullopt;
    return sum / n;
}

struct MetricsReport {
    std::optional<double> w_avg;      // mean in-zone stopped seconds per vehicle
    double theta_int = 0.0;           // mean interior crossings per intersection
    double theta_net = 0.0;           // completed trips in the window
    std::optional<double> d_avg;      // mean delay vs free flow, completed trips
    double w_max = 0.0;               // longest starvation run, seconds
    std::optional<double> w_p99;      // tail wait
    std::optional<double> c_rate;     // overridden share of RV Go decisions
    std::optional<double> f_avg;      // mean surrogate fuel rate, ml/s
    Window window;
    // run accounting, reported alongside the metric suite
    int spawned = 0;
    int completed_total = 0;
    int reroutes_considered = 0;
    int reroutes_adopted = 0;
    std::optional<double> avg_total_shortage;  // mean of the coordinator's summed shortage
};

inline MetricsReport compute_metrics(const RunTrace& trace, const Window& win, double dt) {
    MetricsReport r;
    r.window = win;
    r.w_avg = avg_wait(trace.zone_samples, win, dt);
    auto [ti, tn] = throughput(trace.crossings, trace.internal_junctions, trace.completions, win);
    r.theta_int = ti;
    r.theta_net = tn;
    r.d_avg = avg_delay(trace.completions, win);
    r.w_max = max_starvation(trace.wait_series, win);
    r.w_p99 = p99_wait(trace.zone_samples, win, dt);
    r.c_rate = conflict_rate(trace.control_log, win);
    r.f_avg = fuel_avg(trace.zone_samples, win);
    r.spawned = trace.spawned;
    r.completed_total = static_cast<int>(trace.completions.size());
    for (const RoutingLogRow& row : trace.routing_log) {
        ++r.reroutes_considered;
        if (row.adopted) ++r.reroutes_adopted;
    }
    double ssum = 0.0;
    int sn = 0;
    for (const auto& [t, s] : trace.shortage_series) {
        if (!win.contains(t)) continue;
        ssum += s;
        ++sn;
    }
    if (sn > 0) r.avg_total_shortage = ssum / sn;
    return r;
}

inline nlohmann::ordered_json to_json(const MetricsReport& r) {
    auto opt = [](const std::optional<double>& v) {
        return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
    };
    nlohmann::ordered_json j;
    j["window"] = {{"t0", r.window.t0}, {"t1", r.window.t1}};
    j["W_avg"] = opt(r.w_avg);
    j["Theta_int"] = r.theta_int;
    j["Theta_net"] = r.theta_net;
    j["D_avg"] = opt(r.d_avg);
    j["W_max"] = r.w_max;
    j["W_p99"] = opt(r.w_p99);
    j["C_rate"] = opt(r.c_rate);
    j["F_avg"] = opt(r.f_avg);
    j["counts"] = {{"spawned", r.spawned},
                   {"completed_total", r.completed_total},
                   {"reroutes_considered", r.reroutes_considered},
                   {"reroutes_adopted", r.reroutes_adopted}};
    j["avg_total_shortage"] = opt(r.avg_total_shortage);
    return j;
}

}  // namespace mixsim

#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "mixsim/metrics.hpp"

using namespace mixsim;
using Catch::Matchers::WithinAbs;

namespace {

ZoneStepSample sample(double t, int vehicle, bool stopped, double speed = 0.0,
                      double accel = 0.0) {
    ZoneStepSample s;
    s.t = t;
    s.vehicle = vehicle;
    s.stopped = stopped;
    s.speed = speed;
    s.accel = accel;
    return s;
}

const Window kWin{500.0, 1000.0};

}  // namespace

TEST_CASE("window is half-open") {
    REQUIRE_FALSE(kWin.contains(499.999));
    REQUIRE(kWin.contains(500.0));
    REQUIRE(kWin.contains(999.999));
    REQUIRE_FALSE(kWin.contains(1000.0));
    REQUIRE(kWin.length() == 500.0);
}

TEST_CASE("fuel surrogate matches hand-computed rates") {
    REQUIRE_THAT(fuel_rate(0.0, 0.0), WithinAbs(0.22, 1e-15));  // idling
    REQUIRE_THAT(fuel_rate(10.0, 0.0), WithinAbs(0.49, 1e-12));
    REQUIRE_THAT(fuel_rate(10.0, 2.6), WithinAbs(2.83, 1e-12));
    REQUIRE(fuel_rate(10.0, -3.0) == fuel_rate(10.0, 0.0));  // braking burns nothing extra
    REQUIRE(fuel_rate(20.0, 1.0) > fuel_rate(10.0, 1.0));
    REQUIRE(fuel_rate(10.0, 2.0) > fuel_rate(10.0, 1.0));
}

TEST_CASE("average wait is stopped seconds per observed vehicle") {
    std::vector<ZoneStepSample> zs;
    REQUIRE_FALSE(avg_wait(zs, kWin, 1.0).has_value());

    for (int i = 0; i < 10; ++i) zs.push_back(sample(600.0 + i, 1, i < 4));
    for (int i = 0; i < 5; ++i) zs.push_back(sample(700.0 + i, 2, false));
    REQUIRE_THAT(*avg_wait(zs, kWin, 1.0), WithinAbs(2.0, 1e-15));  // (4 + 0) / 2

    zs.push_back(sample(499.0, 1, true));  // outside the window: ignored
    zs.push_back(sample(1000.0, 1, true));
    zs.push_back(sample(300.0, 3, true));  // vehicle seen only outside: not counted at all
    REQUIRE_THAT(*avg_wait(zs, kWin, 1.0), WithinAbs(2.0, 1e-15));

    REQUIRE_THAT(*avg_wait(zs, kWin, 0.5), WithinAbs(1.0, 1e-15));  // dt scales the seconds
}

TEST_CASE("throughput counts window crossings per intersection and completions") {
    std::vector<CrossingEvent> cs{{499.0, 0}, {500.0, 0}, {750.0, 1}, {999.5, 0}, {1000.0, 1}};
    std::vector<CompletionRecord> done;
    done.push_back({1, VehicleClass::RV, 100.0, 600.0, 0.0});
    done.push_back({2, VehicleClass::HV, 100.0, 999.0, 0.0});
    done.push_back({3, VehicleClass::HV, 100.0, 1000.0, 0.0});  // just misses

    auto [theta_int, theta_net] = throughput(cs, 2, done, kWin);
    REQUIRE_THAT(theta_int, WithinAbs(1.5, 1e-15));
    REQUIRE(theta_net == 2.0);

    auto [empty_int, empty_net] = throughput({}, 0, {}, kWin);
    REQUIRE(empty_int == 0.0);
    REQUIRE(empty_net == 0.0);
}

TEST_CASE("delay compares realized travel time with free flow") {
    std::vector<CompletionRecord> done;
    REQUIRE_FALSE(avg_delay(done, kWin).has_value());

    done.push_back({1, VehicleClass::RV, 400.0, 600.0, 150.0});  // 200 s trip, 50 s delay
    done.push_back({2, VehicleClass::HV, 500.0, 900.0, 320.0});  // 400 s trip, 80 s delay
    done.push_back({3, VehicleClass::HV, 100.0, 499.0, 10.0});   // out of window
    REQUIRE_THAT(*avg_delay(done, kWin), WithinAbs(65.0, 1e-12));
}

TEST_CASE("starvation is the longest in-window run above the threshold") {
    ApproachWaitSeries s;
    s.t0 = 500.0;
    s.dt = 1.0;
    s.mean_wait.assign(200, 0.0);
    for (int i = 10; i < 90; ++i) s.mean_wait[i] = 70.0;  // 80 consecutive seconds
    for (int i = 120; i < 140; ++i) s.mean_wait[i] = 100.0;
    REQUIRE(max_starvation({s}, kWin) == 80.0);

    // sitting exactly at the threshold is not starvation
    ApproachWaitSeries at;
    at.t0 = 500.0;
    at.mean_wait.assign(50, 60.0);
    REQUIRE(max_starvation({at}, kWin) == 0.0);

    // a dip below the threshold resets the run
    s.mean_wait[50] = 0.0;
    REQUIRE(max_starvation({s}, kWin) == 40.0);
}

TEST_CASE("starvation runs are clipped to the window") {
    ApproachWaitSeries s;
    s.t0 = 480.0;
    s.dt = 1.0;
    s.mean_wait.assign(60, 90.0);  // above threshold from 480 to 539
    REQUIRE(max_starvation({s}, kWin) == 40.0);  // only 500..539 counts

    ApproachWaitSeries full;
    full.t0 = 0.0;
    full.dt = 1.0;
    full.mean_wait.assign(2000, 61.0);  // saturated approach
    REQUIRE(max_starvation({full}, kWin) == 500.0);

    REQUIRE(max_starvation({s, full}, kWin) == 500.0);
}

TEST_CASE("tail wait uses the nearest-rank 99th percentile") {
    std::vector<ZoneStepSample> zs;
    REQUIRE_FALSE(p99_wait(zs, kWin, 1.0).has_value());

    // vehicle v stops for exactly v seconds, v = 1..100
    for (int v = 1; v <= 100; ++v)
        for (int i = 0; i < v; ++i) zs.push_back(sample(500.0 + i, v, true));
    REQUIRE_THAT(*p99_wait(zs, kWin, 1.0), WithinAbs(99.0, 1e-15));

    std::vector<ZoneStepSample> one{sample(600.0, 7, true), sample(601.0, 7, true)};
    REQUIRE_THAT(*p99_wait(one, kWin, 1.0), WithinAbs(2.0, 1e-15));
}

TEST_CASE("conflict rate is the overridden share of Go decisions") {
    std::vector<ControlLogRow> log;
    REQUIRE_FALSE(conflict_rate(log, kWin).has_value());

    log.push_back({600.0, 0, 1, Action::Go, true, 0.5});
    log.push_back({601.0, 0, 2, Action::Go, false, 0.1});
    log.push_back({602.0, 0, 3, Action::Go, false, 0.0});
    log.push_back({603.0, 0, 4, Action::Stop, false, 0.9});  // Stops never count
    log.push_back({400.0, 0, 5, Action::Go, true, 0.9});     // out of window
    REQUIRE_THAT(*conflict_rate(log, kWin), WithinAbs(1.0 / 3.0, 1e-15));

    std::vector<ControlLogRow> stops{{600.0, 0, 1, Action::Stop, false, 0.0}};
    REQUIRE_FALSE(conflict_rate(stops, kWin).has_value());
}

TEST_CASE("fuel average integrates the surrogate over in-window zone steps") {
    std::vector<ZoneStepSample> zs;
    REQUIRE_FALSE(fuel_avg(zs, kWin).has_value());

    zs.push_back(sample(600.0, 1, false, 10.0, 0.0));
    zs.push_back(sample(601.0, 1, false, 10.0, 2.6));
    zs.push_back(sample(100.0, 1, false, 30.0, 2.0));  // ignored
    REQUIRE_THAT(*fuel_avg(zs, kWin), WithinAbs((0.49 + 2.83) / 2.0, 1e-12));
}

TEST_CASE("the report mirrors the individual metrics and serializes stably") {
    RunTrace trace;
    trace.internal_junctions = 2;
    trace.spawned = 7;
    for (int i = 0; i < 10; ++i) trace.zone_samples.push_back(sample(600.0 + i, 1, i < 4, 10.0));
    trace.crossings = {{600.0, 0}, {700.0, 1}, {100.0, 0}};
    trace.completions.push_back({1, VehicleClass::RV, 400.0, 600.0, 150.0});
    trace.completions.push_back({2, VehicleClass::HV, 100.0, 300.0, 10.0});  // pre-window
    trace.control_log.push_back({650.0, 0, 1, Action::Go, true, 0.4});
    trace.control_log.push_back({651.0, 0, 1, Action::Go, false, 0.0});
    trace.routing_log.push_back({650.0, 1, true, false, 400.0, 400.0, true});
    trace.routing_log.push_back({710.0, 2, true, true, -1.0, 380.0, false});
    trace.shortage_series = {{440.0, 9.0}, {500.0, 2.0}, {560.0, 4.0}};
    ApproachWaitSeries ws;
    ws.t0 = 500.0;
    ws.mean_wait.assign(70, 65.0);
    trace.wait_series.push_back(ws);

    MetricsReport r = compute_metrics(trace, kWin, 1.0);
    REQUIRE_THAT(*r.w_avg, WithinAbs(4.0, 1e-15));
    REQUIRE_THAT(r.theta_int, WithinAbs(1.0, 1e-15));
    REQUIRE(r.theta_net == 1.0);
    REQUIRE_THAT(*r.d_avg, WithinAbs(50.0, 1e-12));
    REQUIRE(r.w_max == 70.0);
    REQUIRE_THAT(*r.w_p99, WithinAbs(4.0, 1e-15));
    REQUIRE_THAT(*r.c_rate, WithinAbs(0.5, 1e-15));
    REQUIRE(r.f_avg.has_value());
    REQUIRE(r.spawned == 7);
    REQUIRE(r.completed_total == 2);  // all completions, not only windowed ones
    REQUIRE(r.reroutes_considered == 2);
    REQUIRE(r.reroutes_adopted == 1);
    REQUIRE_THAT(*r.avg_total_shortage, WithinAbs(3.0, 1e-15));

    nlohmann::ordered_json j = to_json(r);
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
    std::vector<std::string> want{"window", "W_avg",  "Theta_int", "Theta_net",
                                  "D_avg",  "W_max",  "W_p99",     "C_rate",
                                  "F_avg",  "counts", "avg_total_shortage"};
    REQUIRE(keys == want);
    REQUIRE(j["W_avg"].get<double>() == *r.w_avg);
    REQUIRE(j["counts"]["reroutes_adopted"].get<int>() == 1);

    MetricsReport empty = compute_metrics(RunTrace{}, kWin, 1.0);
    nlohmann::ordered_json je = to_json(empty);
    REQUIRE(je["W_avg"].is_null());
    REQUIRE(je["D_avg"].is_null());
    REQUIRE(je["C_rate"].is_null());
    REQUIRE(je["avg_total_shortage"].is_null());
    REQUIRE(je["Theta_int"].get<double>() == 0.0);
    REQUIRE(to_json(empty).dump() == je.dump());  // byte-stable serialization
}

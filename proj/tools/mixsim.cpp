// Command-line driver: seeded single runs, RV-penetration sweeps, policy
// training, and a small report viewer over saved metrics files.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mixsim/agent.hpp"
#include "mixsim/engine.hpp"
#include "mixsim/scenario.hpp"
#include "mixsim/training.hpp"

namespace {

// Everything a scenario can configure, mirrored as flags. Defaults match the
// library defaults so a bare `mixsim run` is a sensible 3x3 experiment.
struct ScenarioOpts {
    std::string scenario_file;
    int rows = 3, cols = 3;
    double edge_length = 150.0;
    double speed_limit = 13.9;
    double through_rate = 0.08;

    double rv_rate = 0.6;
    double horizon = 1000.0;
    double dt = 1.0;
    double window_start = 500.0, window_end = 1000.0;
    bool routing = false;
    double p_target = -1.0;  // negative = track rv_rate - 0.05

    double lambda_parity = 0.2, lambda_threat = 0.5, conflict_penalty = -1.0;
    double alpha = 1.0, rho = 0.15, delta = 1.2;
    int cooldown = 60;
    double commitment = 50.0;
    int update_interval = 60, coord_window = 5, coord_horizon = 60;
    double zone_radius = 30.0, wait_cap = 60.0, threat_z = 5.0;

    std::map<std::string, CLI::Option*> handles;
};

void add_scenario_flags(CLI::App& cmd, ScenarioOpts& o) {
    auto opt = [&](const std::string& name, auto& target, const std::string& help) {
        CLI::Option* h = cmd.add_option(name, target, help)->capture_default_str();
        o.handles[name] = h;
        return h;
    };
    o.handles["--scenario"] = cmd.add_option(
        "--scenario", o.scenario_file, "Scenario JSON file; grid/demand flags then act as overrides");
    opt("--rows", o.rows, "Grid rows");
    opt("--cols", o.cols, "Grid columns");
    opt("--edge-length", o.edge_length, "Grid edge length, m");
    opt("--speed-limit", o.speed_limit, "Edge speed limit, m/s");
    opt("--through-rate", o.through_rate, "Arrival rate per boundary through-flow, veh/s");
    opt("--rv-rate", o.rv_rate, "RV penetration in [0,1]");
    opt("--horizon", o.horizon, "Episode length, s");
    opt("--dt", o.dt, "Step length, s");
    opt("--window-start", o.window_start, "Measurement window start, s");
    opt("--window-end", o.window_end, "Measurement window end, s");
    o.handles["--routing"] = cmd.add_flag("--routing,!--no-routing", o.routing,
                                          "Enable coverage-aware rerouting (default off)");
    opt("--p-target", o.p_target, "Coverage target; negative tracks rv_rate - 0.05");
    opt("--lambda-parity", o.lambda_parity, "Queue-parity penalty weight");
    opt("--lambda-threat", o.lambda_threat, "Threat penalty weight");
    opt("--conflict-penalty", o.conflict_penalty, "Flat reward penalty on overridden Go");
    opt("--alpha", o.alpha, "Routing incentive strength");
    opt("--rho", o.rho, "Per-broadcast reroute activation probability");
    opt("--delta", o.delta, "Max detour ratio vs the spawn-time route cost");
    opt("--cooldown", o.cooldown, "Min steps between reroutes of one vehicle");
    opt("--commitment", o.commitment, "Route lock-in distance before a junction, m");
    opt("--update-interval", o.update_interval, "Steps between coverage broadcasts");
    opt("--coord-window", o.coord_window, "Coverage history length, samples");
    opt("--coord-horizon", o.coord_horizon, "Coverage prediction horizon, steps");
    opt("--zone-radius", o.zone_radius, "Control zone radius, m");
    opt("--wait-cap", o.wait_cap, "Wait normalization cap, s");
    opt("--threat-z", o.threat_z, "Threat normalizer Z");
}

mixsim::ScenarioConfig build_scenario(const ScenarioOpts& o) {
    mixsim::ScenarioConfig cfg;
    const bool from_file = !o.scenario_file.empty();
    if (from_file) {
        cfg = mixsim::load_scenario(o.scenario_file);
    } else {
        cfg.net = mixsim::build_grid(o.rows, o.cols, o.edge_length, o.speed_limit);
        cfg.demand = mixsim::through_demand(cfg.net, o.rows, o.cols, o.through_rate);
    }
    // With a file as base, only flags the user actually passed override it.
    auto wants = [&](const std::string& k) { return !from_file || o.handles.at(k)->count() > 0; };
    if (wants("--rv-rate")) cfg.rv_rate = o.rv_rate;
    if (wants("--horizon")) cfg.horizon = o.horizon;
    if (wants("--dt")) cfg.dt = o.dt;
    if (wants("--window-start")) cfg.window.t0 = o.window_start;
    if (wants("--window-end")) cfg.window.t1 = o.window_end;
    if (wants("--routing")) cfg.routing_enabled = o.routing;
    if (wants("--p-target") && o.p_target >= 0.0) cfg.p_target = o.p_target;
    if (wants("--lambda-parity")) cfg.rewards.lambda_parity = o.lambda_parity;
    if (wants("--lambda-threat")) cfg.rewards.lambda_threat = o.lambda_threat;
    if (wants("--conflict-penalty")) cfg.rewards.p_c = o.conflict_penalty;
    if (wants("--alpha")) cfg.coord.alpha = o.alpha;
    if (wants("--rho")) cfg.reroute.rho = o.rho;
    if (wants("--delta")) cfg.reroute.delta = o.delta;
    if (wants("--cooldown")) cfg.reroute.cooldown_steps = o.cooldown;
    if (wants("--commitment")) cfg.reroute.commitment = o.commitment;
    if (wants("--update-interval")) cfg.coord.update_interval = o.update_interval;
    if (wants("--coord-window")) cfg.coord.window = o.coord_window;
    if (wants("--coord-horizon")) cfg.coord.horizon_steps = o.coord_horizon;
    if (wants("--zone-radius")) cfg.zone.radius = o.zone_radius;
    if (wants("--wait-cap")) cfg.zone.wait_cap = o.wait_cap;
    if (wants("--threat-z")) cfg.zone.z = o.threat_z;
    cfg.validate();
    return cfg;
}

std::unique_ptr<mixsim::Policy> make_policy(const std::string& spec, double go_threshold) {
    if (spec == "heuristic") return std::make_unique<mixsim::HeuristicPolicy>(go_threshold);
    if (spec == "random") return std::make_unique<mixsim::RandomPolicy>();
    // anything else is a checkpoint path
    return std::make_unique<mixsim::LinearQPolicy>(mixsim::load_checkpoint(spec));
}

std::string resolve_out(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("MIXSIM_OUT")) return env;
    return "";
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw mixsim::ConfigError("cannot write " + path.string());
    return out;
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

void write_control_csv(const mixsim::RunTrace& trace, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "t,junction,vehicle,action,overridden,threat\n";
    for (const auto& row : trace.control_log)
        out << num(row.t) << ',' << row.junction << ',' << row.vehicle << ','
            << mixsim::to_string(row.action) << ',' << row.overridden << ',' << num(row.threat)
            << '\n';
}

void write_routing_csv(const mixsim::RunTrace& trace, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "t,vehicle,eligible,gated,candidate_cost,base_cost,adopted\n";
    for (const auto& row : trace.routing_log)
        out << num(row.t) << ',' << row.vehicle << ',' << row.eligible << ',' << row.gated << ','
            << num(row.candidate_cost) << ',' << num(row.base_cost) << ',' << row.adopted << '\n';
}

void write_trajectories_csv(const mixsim::RunTrace& trace, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "t,vehicle,class,location,pos,speed,accel\n";
    for (const auto& row : trace.trajectories)
        out << num(row.t) << ',' << row.vehicle << ',' << mixsim::to_string(row.klass) << ','
            << row.location << ',' << num(row.pos) << ',' << num(row.speed) << ','
            << num(row.accel) << '\n';
}

void write_costs_csv(const mixsim::Coordinator& coord, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "edge,baseline,cost,shortage\n";
    for (std::size_t e = 0; e < coord.baseline().size(); ++e)
        out << e << ',' << num(coord.baseline()[e]) << ',' << num(coord.cost_map().cost[e]) << ','
            << num(coord.shortages()[e]) << '\n';
}

// --- run ---------------------------------------------------------------

struct RunArgs {
    ScenarioOpts scenario;
    std::uint64_t seed = 1;
    std::string policy = "heuristic";
    double go_threshold = 0.2;
    std::string out_dir;
    bool dump_control = false, dump_routing = false, dump_traj = false, dump_costs = false;
};

void cmd_run(const RunArgs& a) {
    mixsim::ScenarioConfig cfg = build_scenario(a.scenario);
    auto policy = make_policy(a.policy, a.go_threshold);
    mixsim::Engine engine(cfg, a.seed, *policy);
    engine.enable_trajectories(a.dump_traj);
    mixsim::RunResult res = engine.run();

    nlohmann::ordered_json j = mixsim::to_json(res.report);
    j["seed"] = a.seed;
    j["policy"] = policy->name();
    j["routing"] = cfg.routing_enabled;
    std::cout << j.dump(2) << "\n";

    std::string root = resolve_out(a.out_dir);
    if (root.empty()) {
        if (a.dump_control || a.dump_routing || a.dump_traj || a.dump_costs)
            throw mixsim::ConfigError("dump flags need --out (or MIXSIM_OUT)");
        return;
    }
    std::filesystem::path dir(root);
    std::filesystem::create_directories(dir);
    open_out(dir / "metrics.json") << j.dump(2) << "\n";
    if (a.dump_control) write_control_csv(res.trace, dir / "control.csv");
    if (a.dump_routing) write_routing_csv(res.trace, dir / "routing.csv");
    if (a.dump_traj) write_trajectories_csv(res.trace, dir / "trajectories.csv");
    if (a.dump_costs) write_costs_csv(engine.coordinator(), dir / "costs.csv");
}

// --- sweep -------------------------------------------------------------

struct SweepArgs {
    ScenarioOpts scenario;
    std::vector<double> rv_rates = {0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    std::string policy = "heuristic";
    double go_threshold = 0.2;
    unsigned threads = 0;
    std::string out_dir;
};

struct Moments {
    int n = 0;
    double sum = 0.0, sq = 0.0;
    void add(double v) { ++n, sum += v, sq += v * v; }
    void add(const std::optional<double>& v) {
        if (v) add(*v);
    }
    std::string mean() const { return n ? num(sum / n) : ""; }
    std::string stddev() const {
        if (n < 2) return n == 1 ? num(0.0) : "";
        double m = sum / n;
        return num(std::sqrt(std::max(0.0, sq / n - m * m)));
    }
};

void cmd_sweep(const SweepArgs& a) {
    mixsim::ScenarioConfig base = build_scenario(a.scenario);
    unsigned threads = a.threads ? a.threads : std::thread::hardware_concurrency();
    mixsim::SweepTable table =
        mixsim::sweep(base, a.rv_rates, a.seeds,
                      [&] { return make_policy(a.policy, a.go_threshold); }, threads);

    static const char* metric_names[] = {"W_avg", "Theta_int", "Theta_net", "D_avg",
                                         "W_max", "W_p99",     "C_rate",    "F_avg"};
    std::ostringstream csv;
    csv << "rv_rate,runs,failed";
    for (const char* m : metric_names) csv << ',' << m << "_mean," << m << "_std";
    csv << '\n';

    std::size_t i = 0;
    for (double rate : a.rv_rates) {
        int ok = 0, failed = 0;
        Moments mom[8];
        for (std::size_t s = 0; s < a.seeds.size(); ++s, ++i) {
            const mixsim::SweepCell& cell = table.cells[i];
            if (!cell.report) {
                ++failed;
                std::cerr << "sweep: rv_rate=" << rate << " seed=" << cell.seed
                          << " failed: " << cell.error << "\n";
                continue;
            }
            ++ok;
            const mixsim::MetricsReport& r = *cell.report;
            mom[0].add(r.w_avg);
            mom[1].add(r.theta_int);
            mom[2].add(r.theta_net);
            mom[3].add(r.d_avg);
            mom[4].add(r.w_max);
            mom[5].add(r.w_p99);
            mom[6].add(r.c_rate);
            mom[7].add(r.f_avg);
        }
        csv << num(rate) << ',' << ok << ',' << failed;
        for (const Moments& m : mom) csv << ',' << m.mean() << ',' << m.stddev();
        csv << '\n';
    }

    std::cout << csv.str();
    std::string root = resolve_out(a.out_dir);
    if (!root.empty()) {
        std::filesystem::path dir(root);
        std::filesystem::create_directories(dir);
        open_out(dir / "sweep.csv") << csv.str();
    }
}

// --- train -------------------------------------------------------------

struct TrainArgs {
    ScenarioOpts scenario;
    mixsim::TrainConfig cfg;
    std::string checkpoint = "checkpoint.json";
    std::string curve_path;
    std::vector<std::uint64_t> eval_seeds;
};

void cmd_train(const TrainArgs& a) {
    mixsim::ScenarioConfig scenario = build_scenario(a.scenario);
    mixsim::TrainResult result = mixsim::train(scenario, a.cfg);

    nlohmann::ordered_json echo;
    echo["iterations"] = a.cfg.iterations;
    echo["gamma"] = a.cfg.gamma;
    echo["lr"] = a.cfg.lr;
    echo["seed"] = a.cfg.seed;
    mixsim::save_checkpoint(result.policy, a.checkpoint, echo);

    if (!a.curve_path.empty()) {
        auto out = open_out(a.curve_path);
        out << "iteration,episode_return,decisions,epsilon\n";
        for (const auto& row : result.curve)
            out << row.iteration << ',' << num(row.episode_return) << ',' << row.decisions << ','
                << num(row.epsilon) << '\n';
    }

    double tail = 0.0;
    int tail_n = std::min<int>(10, static_cast<int>(result.curve.size()));
    for (int k = 0; k < tail_n; ++k)
        tail += result.curve[result.curve.size() - 1 - k].episode_return;
    std::cout << "trained " << a.cfg.iterations << " iterations (" << result.gradient_steps
              << " gradient steps); last-" << tail_n << " mean return "
              << num(tail_n ? tail / tail_n : 0.0) << "\n";
    std::cout << "checkpoint written to " << a.checkpoint << "\n";

    if (!a.eval_seeds.empty()) {
        auto runs = mixsim::evaluate(scenario, result.policy, a.eval_seeds);
        double ret = 0.0, wait = 0.0;
        int wait_n = 0;
        for (const auto& r : runs) {
            ret += r.episode_return;
            if (r.report.w_avg) wait += *r.report.w_avg, ++wait_n;
        }
        std::cout << "greedy eval over " << runs.size() << " seeds: mean return "
                  << num(ret / runs.size()) << ", mean W_avg "
                  << (wait_n ? num(wait / wait_n) : "n/a") << "\n";
    }
}

// --- report ------------------------------------------------------------

void cmd_report(const std::vector<std::string>& files) {
    static const char* keys[] = {"W_avg", "Theta_int", "Theta_net", "D_avg",
                                 "W_max", "W_p99",     "C_rate",    "F_avg"};
    std::printf("%-28s", "file");
    for (const char* k : keys) std::printf(" %10s", k);
    std::printf("\n");
    for (const std::string& f : files) {
        std::ifstream in(f);
        if (!in) throw mixsim::ConfigError("cannot read " + f);
        nlohmann::json j = nlohmann::json::parse(in);
        std::printf("%-28s", f.c_str());
        for (const char* k : keys) {
            if (j.contains(k) && !j.at(k).is_null())
                std::printf(" %10.4g", j.at(k).get<double>());
            else
                std::printf(" %10s", "-");
        }
        std::printf("\n");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mixed-autonomy intersection simulator"};
    app.require_subcommand(1);

    RunArgs run_args;
    CLI::App* run = app.add_subcommand("run", "Run one seeded episode and print the metric suite");
    add_scenario_flags(*run, run_args.scenario);
    run->add_option("--seed", run_args.seed, "Root seed")->capture_default_str();
    run->add_option("--policy", run_args.policy, "heuristic | random | <checkpoint.json>")
        ->capture_default_str();
    run->add_option("--go-threshold", run_args.go_threshold, "Heuristic go threshold")
        ->capture_default_str();
    run->add_option("--out", run_args.out_dir, "Output directory (default $MIXSIM_OUT)");
    run->add_flag("--dump-control", run_args.dump_control, "Write control.csv decision log");
    run->add_flag("--dump-routing", run_args.dump_routing, "Write routing.csv reroute log");
    run->add_flag("--dump-trajectories", run_args.dump_traj, "Write trajectories.csv");
    run->add_flag("--dump-costs", run_args.dump_costs, "Write costs.csv (final cost map)");

    SweepArgs sweep_args;
    CLI::App* sw = app.add_subcommand("sweep", "Sweep RV penetration over seeds, report mean/std");
    add_scenario_flags(*sw, sweep_args.scenario);
    sw->add_option("--rv-rates", sweep_args.rv_rates, "Penetrations to sweep")
        ->delimiter(',')
        ->capture_default_str();
    sw->add_option("--seeds", sweep_args.seeds, "Seeds per penetration")
        ->delimiter(',')
        ->capture_default_str();
    sw->add_option("--policy", sweep_args.policy, "heuristic | random | <checkpoint.json>")
        ->capture_default_str();
    sw->add_option("--go-threshold", sweep_args.go_threshold, "Heuristic go threshold")
        ->capture_default_str();
    sw->add_option("--threads", sweep_args.threads, "Worker threads (0 = hardware)")
        ->capture_default_str();
    sw->add_option("--out", sweep_args.out_dir, "Output directory (default $MIXSIM_OUT)");

    TrainArgs train_args;
    CLI::App* tr = app.add_subcommand("train", "Train the linear Stop/Go policy");
    add_scenario_flags(*tr, train_args.scenario);
    tr->add_option("--iterations", train_args.cfg.iterations, "Training episodes")
        ->capture_default_str();
    tr->add_option("--gamma", train_args.cfg.gamma, "Discount factor")->capture_default_str();
    tr->add_option("--lr", train_args.cfg.lr, "Learning rate")->capture_default_str();
    tr->add_option("--epsilon-start", train_args.cfg.epsilon_start, "Initial exploration")
        ->capture_default_str();
    tr->add_option("--epsilon-end", train_args.cfg.epsilon_end, "Final exploration")
        ->capture_default_str();
    tr->add_option("--anneal", train_args.cfg.anneal_fraction, "Exploration decay span, fraction")
        ->capture_default_str();
    tr->add_option("--replay", train_args.cfg.replay_capacity, "Replay buffer capacity")
        ->capture_default_str();
    tr->add_option("--batch", train_args.cfg.batch_size, "Mini-batch size")->capture_default_str();
    tr->add_option("--target-sync", train_args.cfg.target_sync, "Steps between target copies")
        ->capture_default_str();
    tr->add_option("--train-seed", train_args.cfg.seed, "Training seed")->capture_default_str();
    tr->add_option("--checkpoint", train_args.checkpoint, "Checkpoint output path")
        ->capture_default_str();
    tr->add_option("--curve", train_args.curve_path, "Learning-curve CSV output path");
    tr->add_option("--eval-seeds", train_args.eval_seeds, "Greedy eval seeds after training")
        ->delimiter(',');

    std::vector<std::string> report_files;
    CLI::App* rep = app.add_subcommand("report", "Tabulate saved metrics.json files");
    rep->add_option("files", report_files, "metrics.json paths")->required();

    try {
        app.parse(argc, argv);
        if (run->parsed()) cmd_run(run_args);
        if (sw->parsed()) cmd_sweep(sweep_args);
        if (tr->parsed()) cmd_train(train_args);
        if (rep->parsed()) cmd_report(report_files);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

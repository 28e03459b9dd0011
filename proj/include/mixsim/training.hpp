#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "mixsim/agent.hpp"
#include "mixsim/engine.hpp"
#include "mixsim/errors.hpp"
#include "mixsim/rng.hpp"

// Episodic TD(0) for the linear Stop/Go value function: collect one episode
// with the current (epsilon-greedy) weights, then replay mini-batches against
// a periodically synced target copy.

namespace mixsim {

struct Transition {
    std::vector<double> x;
    Action a = Action::Stop;
    double r = 0.0;
    std::vector<double> x_next;
    bool done = false;
};

// Fixed-capacity uniform replay; once full, new transitions overwrite the
// oldest ones in arrival order.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
        if (capacity_ == 0) throw ConfigError("replay capacity must be > 0");
    }

    void push(Transition t) {
        if (data_.size() < capacity_)
            data_.push_back(std::move(t));
        else
            data_[next_] = std::move(t);
        next_ = (next_ + 1) % capacity_;
    }

    const Transition& sample(RngStream& rng) const {
        return data_[rng.uniform_int(0, static_cast<int>(data_.size()) - 1)];
    }

    std::size_t size() const { return data_.size(); }

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<Transition> data_;
};

struct TrainConfig {
    int iterations = 150;  // one episode each
    double gamma = 0.99;
    double lr = 5e-4;
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    double anneal_fraction = 0.5;  // share of iterations the decay spans
    std::size_t replay_capacity = 50000;
    int batch_size = 32;
    int target_sync = 250;  // gradient steps between target refreshes
    std::uint64_t seed = 0;

    void validate() const {
        if (iterations < 1) throw ConfigError("need at least one training iteration");
        if (gamma < 0 || gamma > 1) throw ConfigError("gamma must lie in [0,1]");
        if (lr <= 0) throw ConfigError("learning rate must be > 0");
        if (epsilon_start < 0 || epsilon_start > 1 || epsilon_end < 0 || epsilon_end > 1)
            throw ConfigError("epsilon bounds must lie in [0,1]");
        if (anneal_fraction < 0 || anneal_fraction > 1)
            throw ConfigError("anneal fraction must lie in [0,1]");
        if (batch_size < 1 || target_sync < 1) throw ConfigError("bad training cadence");
    }

    double epsilon_at(int iter) const {
        double span = anneal_fraction * iterations;
        if (span <= 0.0) return epsilon_end;
        double f = std::min(1.0, iter / span);
        return epsilon_start + f * (epsilon_end - epsilon_start);
    }
};

struct IterationStats {
    int iteration = 0;
    double episode_return = 0.0;
    int decisions = 0;
    double epsilon = 0.0;
};

struct TrainResult {
    LinearQPolicy policy;
    std::vector<IterationStats> curve;
    long gradient_steps = 0;
};

namespace detail {

inline double target_value(const LinearQPolicy& target, const Transition& t, double gamma) {
    if (t.done) return t.r;
    double next = std::max(target.q_value(t.x_next, Action::Stop),
                           target.q_value(t.x_next, Action::Go));
    return t.r + gamma * next;
}

// One mini-batch step: mean TD-error gradient per action arm.
inline void sgd_step(LinearQPolicy& live, const LinearQPolicy& target, const ReplayBuffer& replay,
                     const TrainConfig& tc, RngStream& rng) {
    int n = static_cast<int>(std::min<std::size_t>(tc.batch_size, replay.size()));
    std::array<std::vector<double>, 2> gw;
    for (auto& g : gw) g.assign(live.width(), 0.0);
    std::array<double, 2> gb{};
    for (int i = 0; i < n; ++i) {
        const Transition& t = replay.sample(rng);
        double err = target_value(target, t, tc.gamma) - live.q_value(t.x, t.a);
        int a = static_cast<int>(t.a);
        for (int k = 0; k < live.width(); ++k) gw[a][k] += err * t.x[k];
        gb[a] += err;
    }
    double scale = tc.lr / n;
    for (int a = 0; a < 2; ++a) {
        for (int k = 0; k < live.width(); ++k) live.weights()[a][k] += scale * gw[a][k];
        live.bias()[a] += scale * gb[a];
    }
}

}  // namespace detail

// Runs tc.iterations episodes on the scenario. Weights are frozen while an
// episode collects transitions; afterwards we take one gradient step per
// fresh transition. Throws TrainingError if the value function diverges.
inline TrainResult train(const ScenarioConfig& scenario, const TrainConfig& tc) {
    tc.validate();
    scenario.validate();
    const int width = feature_width(scenario.zone.c0);
    LinearQPolicy live(width);
    LinearQPolicy target = live;
    ReplayBuffer replay(tc.replay_capacity);
    RngStream batch_rng(tc.seed, "replay");

    TrainResult result{live, {}, 0};
    for (int iter = 0; iter < tc.iterations; ++iter) {
        live.epsilon = tc.epsilon_at(iter);
        Engine engine(scenario, hash_combine(tc.seed, static_cast<std::uint64_t>(iter)), live);
        engine.explore = true;
        int fresh = 0;
        engine.set_transition_sink([&](const std::vector<double>& x, Action a, double r,
                                       const std::vector<double>& xn, bool done) {
            replay.push({x, a, r, xn, done});
            ++fresh;
        });
        RunResult rr = engine.run();
        result.curve.push_back({iter, rr.episode_return, rr.decisions, live.epsilon});

        for (int u = 0; u < fresh && replay.size() > 0; ++u) {
            detail::sgd_step(live, target, replay, tc, batch_rng);
            if (++result.gradient_steps % tc.target_sync == 0) target = live;
        }
        live.check_finite();
    }
    live.epsilon = 0.0;
    result.policy = live;
    return result;
}

// Greedy (no-exploration) rollouts over the given seeds.
inline std::vector<RunResult> evaluate(const ScenarioConfig& scenario, Policy& policy,
                                       const std::vector<std::uint64_t>& seeds) {
    std::vector<RunResult> out;
    out.reserve(seeds.size());
    for (std::uint64_t s : seeds) out.push_back(run_scenario(scenario, s, policy));
    return out;
}

}  // namespace mixsim

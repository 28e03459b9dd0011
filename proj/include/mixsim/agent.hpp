#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "mixsim/control.hpp"
#include "mixsim/errors.hpp"
#include "mixsim/rng.hpp"

namespace mixsim {

// Stop/Go decision maker. Implementations must be pure given (parameters,
// observation, rng state) — all RVs share one policy instance per episode.
class Policy {
public:
    virtual ~Policy() = default;
    virtual Action act(const Observation& obs, bool explore, RngStream& rng) = 0;
    virtual std::string name() const = 0;
};

// Cross when the ego approach looks calm: threat at or below the go
// threshold and nothing conflicting inside the intersection.
class HeuristicPolicy : public Policy {
public:
    explicit HeuristicPolicy(double go_threshold = 0.2) : go_threshold_(go_threshold) {}

    Action act(const Observation& obs, bool, RngStream&) override {
        bool calm = obs.t[obs.ego_approach] <= go_threshold_ &&
                    obs.interior_conflict[obs.ego_approach] == 0.0;
        return calm ? Action::Go : Action::Stop;
    }
    std::string name() const override { return "heuristic"; }

private:
    double go_threshold_;
};

class RandomPolicy : public Policy {
public:
    Action act(const Observation&, bool, RngStream& rng) override {
        return rng.bernoulli(0.5) ? Action::Go : Action::Stop;
    }
    std::string name() const override { return "random"; }
};

// Linear action-value function over the flat observation features. Greedy
// ties break to Stop (the safe default); exploration is epsilon-greedy.
class LinearQPolicy : public Policy {
public:
    explicit LinearQPolicy(int width) : width_(width) {
        for (auto& w : weights_) w.assign(width, 0.0);
    }

    double q_value(const std::vector<double>& x, Action a) const {
        const auto& w = weights_[static_cast<int>(a)];
        double q = bias_[static_cast<int>(a)];
        for (int i = 0; i < width_; ++i) q += w[i] * x[i];
        return q;
    }

    Action greedy(const std::vector<double>& x) const {
        return q_value(x, Action::Go) > q_value(x, Action::Stop) ? Action::Go : Action::Stop;
    }

    Action act(const Observation& obs, bool explore, RngStream& rng) override {
        if (explore && rng.uniform() < epsilon)
            return rng.bernoulli(0.5) ? Action::Go : Action::Stop;
        return greedy(features(obs));
    }

    std::string name() const override { return "linear-q"; }

    void check_finite() const {
        for (const auto& w : weights_)
            for (double v : w)
                if (!std::isfinite(v)) throw TrainingError("value function diverged (non-finite weight)");
        if (!std::isfinite(bias_[0]) || !std::isfinite(bias_[1]))
            throw TrainingError("value function diverged (non-finite bias)");
    }

    int width() const { return width_; }
    std::array<std::vector<double>, 2>& weights() { return weights_; }
    const std::array<std::vector<double>, 2>& weights() const { return weights_; }
    std::array<double, 2>& bias() { return bias_; }
    const std::array<double, 2>& bias() const { return bias_; }

    double epsilon = 0.0;

private:
    int width_;
    std::array<std::vector<double>, 2> weights_;  // [Stop, Go]
    std::array<double, 2> bias_{};
};

inline nlohmann::ordered_json checkpoint_json(const LinearQPolicy& p,
                                              const nlohmann::ordered_json& config_echo = {}) {
    nlohmann::ordered_json j;
    j["feature_width"] = p.width();
    j["weights_stop"] = p.weights()[0];
    j["weights_go"] = p.weights()[1];
    j["bias_stop"] = p.bias()[0];
    j["bias_go"] = p.bias()[1];
    if (!config_echo.is_null()) j["config"] = config_echo;
    return j;
}

inline void save_checkpoint(const LinearQPolicy& p, const std::string& path,
                            const nlohmann::ordered_json& config_echo = {}) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write checkpoint: " + path);
    out << checkpoint_json(p, config_echo).dump(2) << "\n";
}

inline LinearQPolicy load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read checkpoint: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed checkpoint " + path + ": " + e.what());
    }
    LinearQPolicy p(j.at("feature_width").get<int>());
    p.weights()[0] = j.at("weights_stop").get<std::vector<double>>();
    p.weights()[1] = j.at("weights_go").get<std::vector<double>>();
    p.bias()[0] = j.at("bias_stop").get<double>();
    p.bias()[1] = j.at("bias_go").get<double>();
    if (static_cast<int>(p.weights()[0].size()) != p.width() ||
        static_cast<int>(p.weights()[1].size()) != p.width())
        throw ConfigError("checkpoint weight width does not match feature_width");
    p.check_finite();
    return p;
}

}  // namespace mixsim

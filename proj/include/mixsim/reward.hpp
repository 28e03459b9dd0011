#pragma once

#include <array>

#include "mixsim/control.hpp"
#include "mixsim/errors.hpp"

namespace mixsim {

struct RewardWeights {
    double lambda_parity = 0.2;
    double lambda_threat = 0.5;
    double p_c = -1.0;  // flat penalty when the safety layer overrides a Go

    void validate() const {
        if (lambda_parity < 0 || lambda_threat < 0) throw ConfigError("reward lambdas must be >= 0");
        if (p_c >= 0) throw ConfigError("conflict penalty p_c must be negative");
    }
};

struct RewardBreakdown {
    double r_ego = 0.0;
    double r_parity = 0.0;   // variance of normalized queue lengths
    double r_threat = 0.0;
    bool conflict = false;
    double base = 0.0;       // r_ego - lp*r_parity - lt*r_threat
    double total = 0.0;      // base, plus p_c when the override fired
};

// Waiting is rewarded for ending (Go) and penalized for continuing (Stop),
// scaled by how long the ego vehicle has already been stopped.
inline double ego_reward(double w_ego, Action a) {
    return a == Action::Go ? w_ego : -w_ego;
}

// Population variance of the 8 normalized queue lengths: high dispersion
// means some approaches are being starved.
inline double parity_penalty(const std::array<double, kMaxApproaches>& q) {
    double mean = 0.0;
    for (double v : q) mean += v;
    mean /= kMaxApproaches;
    double var = 0.0;
    for (double v : q) var += (v - mean) * (v - mean);
    return var / kMaxApproaches;
}

// Entering a contested intersection is penalized in proportion to the threat
// on the ego approach; holding back costs nothing here.
inline double threat_penalty(Action a, double t_ego) {
    return a == Action::Go ? t_ego : 0.0;
}

inline RewardBreakdown total_reward(double w_ego, const std::array<double, kMaxApproaches>& q,
                                    double t_ego, Action a, bool conflict,
                                    const RewardWeights& wt) {
    RewardBreakdown r;
    r.r_ego = ego_reward(w_ego, a);
    r.r_parity = parity_penalty(q);
    r.r_threat = threat_penalty(a, t_ego);
    r.conflict = conflict;
    r.base = r.r_ego - wt.lambda_parity * r.r_parity - wt.lambda_threat * r.r_threat;
    r.total = conflict ? r.base + wt.p_c : r.base;
    return r;
}

}  // namespace mixsim

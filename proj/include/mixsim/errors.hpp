#pragma once

#include <stdexcept>
#include <string>

namespace mixsim {

// Bad scenario/config input detected before or while setting up a run.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Internal consistency violation (e.g. overlapping vehicles, conflicting
// interior occupancy). Indicates a bug, so the run aborts loudly.
struct SimulationError : std::runtime_error {
    explicit SimulationError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite parameters or similar during learning.
struct TrainingError : std::runtime_error {
    explicit TrainingError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mixsim

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mixsim {

// splitmix64: cheap, well-mixed 64-bit hash. Used both to derive independent
// named streams from one root seed and to make order-free per-entity draws.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) {
    return splitmix64(seed ^ splitmix64(value));
}

inline std::uint64_t hash_str(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// A named stream keeps draws for one purpose (spawning, policy exploration,
// routing) independent of how often the other streams are consumed.
class RngStream {
public:
    RngStream(std::uint64_t root_seed, std::string_view name)
        : engine_(hash_combine(root_seed, hash_str(name))) {}

    explicit RngStream(std::uint64_t raw_seed) : engine_(raw_seed) {}

    double uniform() { return uniform_(engine_); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // [lo, hi] inclusive
    int uniform_int(int lo, int hi) {
        std::uniform_int_distribution<int> d(lo, hi);
        return d(engine_);
    }

    bool bernoulli(double p) { return uniform() < p; }

    double normal(double mean, double stddev) {
        std::normal_distribution<double> d(mean, stddev);
        return d(engine_);
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

// Stateless uniform in [0,1) keyed by (seed, a, b). Every consumer that asks
// for the same key gets the same value, so iteration order can't leak into
// the simulation (used for per-vehicle reroute gating).
inline double hash_uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::uint64_t h = hash_combine(hash_combine(seed, a), b);
    // 53 random mantissa bits -> [0,1)
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace mixsim

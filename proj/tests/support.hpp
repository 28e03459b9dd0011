#pragma once

// Shared helpers for the test suite: small random road networks, a brute-force
// shortest-path oracle, and a one-sided sign-test tail.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "mixsim/net.hpp"
#include "mixsim/rng.hpp"

namespace testsupport {

// Random strongly-sized directed network on distinct lattice positions.
// In-degree stays within the approach-slot budget so finalize() always works.
inline mixsim::RoadNetwork random_network(mixsim::RngStream& rng, int max_junctions = 9) {
    int n = rng.uniform_int(2, max_junctions);
    std::vector<mixsim::Vec2> lattice;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) lattice.push_back({c * 120.0, -r * 120.0});
    std::shuffle(lattice.begin(), lattice.end(), rng.engine());

    mixsim::RoadNetwork net;
    for (int i = 0; i < n; ++i) net.junctions.push_back({i, lattice[i], true, {}, {}, {}, {}});

    std::vector<std::pair<int, int>> pairs;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            if (a != b) pairs.emplace_back(a, b);
    std::shuffle(pairs.begin(), pairs.end(), rng.engine());

    int want = rng.uniform_int(n, std::min<int>(3 * n, static_cast<int>(pairs.size())));
    std::vector<int> indeg(n, 0), outdeg(n, 0);
    for (auto [a, b] : pairs) {
        if (static_cast<int>(net.edges.size()) >= want) break;
        if (indeg[b] >= 8 || outdeg[a] >= 8) continue;
        double len = mixsim::norm(net.junctions[b].pos - net.junctions[a].pos);
        net.edges.push_back({static_cast<int>(net.edges.size()), a, b, len, 13.9});
        ++indeg[b];
        ++outdeg[a];
    }
    net.finalize();
    return net;
}

// Exhaustive minimum over all simple edge paths from `from` to `to`; the
// entry edge's own cost counts, exactly like the router. Positive costs make
// the acc >= best prune safe.
inline std::optional<double> enumerate_min_cost(const mixsim::RoadNetwork& net, int from, int to,
                                                const std::vector<double>& costs) {
    std::optional<double> best;
    std::vector<char> used(net.edges.size(), 0);
    std::function<void(int, double)> dfs = [&](int e, double acc) {
        if (best && acc >= *best) return;
        if (e == to) {
            best = acc;
            return;
        }
        used[e] = 1;
        for (int mid : net.movements_from(e)) {
            int nxt = net.movements[mid].out_edge;
            if (!used[nxt]) dfs(nxt, acc + costs[nxt]);
        }
        used[e] = 0;
    };
    dfs(from, costs[from]);
    return best;
}

// P(X >= wins) for X ~ Binomial(n, 1/2): one-sided sign test.
inline double sign_test_p(int wins, int n) {
    double total = 0.0;
    for (int k = wins; k <= n; ++k) {
        double log_c = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
        total += std::exp(log_c - n * std::log(2.0));
    }
    return total;
}

}  // namespace testsupport

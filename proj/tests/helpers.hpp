#ifndef FLOWNET_TEST_HELPERS_HPP
#define FLOWNET_TEST_HELPERS_HPP

#include <random>
#include <vector>

#include "flownet/network.hpp"

namespace testutil {

// Random transient network: every vertex leaks at least min_leak to the
// sink, out-degree <= 2. Cyclic variants add a few back edges; splits are
// kept unbalanced so cycle weights decay quickly.
inline flownet::DirectedNetwork random_network(std::mt19937_64& rng, int n,
                                               bool allow_cycles,
                                               double min_leak = 0.3) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    flownet::DirectedNetwork net;
    std::vector<double> xs(n), ys(n);
    for (int i = 0; i < n; ++i) {
        xs[i] = 10.0 * unif(rng);
        ys[i] = 10.0 * unif(rng);
        net.vertices.push_back({i, xs[i], ys[i]});
    }
    for (int a = 0; a < n; ++a) {
        int max_fwd = n - 1 - a;
        int degree = max_fwd == 0 && !allow_cycles ? 0 : 1 + (unif(rng) < 0.5);
        std::vector<int> targets;
        for (int d = 0; d < degree; ++d) {
            int b;
            if (allow_cycles && unif(rng) < 0.25) {
                b = static_cast<int>(unif(rng) * n);
                if (b == a) b = (a + 1) % n;
            } else if (max_fwd > 0) {
                b = a + 1 + static_cast<int>(unif(rng) * max_fwd);
            } else {
                continue;
            }
            if (b == a) continue;
            bool dup = false;
            for (int t : targets) dup = dup || t == b;
            if (dup) continue;
            targets.push_back(b);
        }
        double leak = min_leak + (0.9 - min_leak) * unif(rng);
        double mass = 1.0 - leak;
        if (targets.size() == 1) {
            double len = std::hypot(xs[a] - xs[targets[0]], ys[a] - ys[targets[0]]);
            net.edges.push_back({a, targets[0], std::max(len, 0.1), mass});
        } else if (targets.size() == 2) {
            double share = 0.6 + 0.35 * unif(rng);  // unbalanced split
            for (std::size_t t = 0; t < 2; ++t) {
                double p = mass * (t == 0 ? share : 1.0 - share);
                double len = std::hypot(xs[a] - xs[targets[t]],
                                        ys[a] - ys[targets[t]]);
                net.edges.push_back({a, targets[t], std::max(len, 0.1), p});
            }
        }
    }
    net.finalize();
    return net;
}

// Random rooted tree: parent[i] < i for i >= 1. Edge lengths positive.
struct RandomTree {
    int n = 0;
    std::vector<int> parent;           // parent[0] = -1
    std::vector<double> edge_length;   // edge i <-> parent[i], i >= 1
    std::vector<std::vector<int>> children;
};

inline RandomTree random_tree(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    RandomTree t;
    t.n = n;
    t.parent.assign(n, -1);
    t.edge_length.assign(n, 0.0);
    t.children.assign(n, {});
    for (int i = 1; i < n; ++i) {
        t.parent[i] = static_cast<int>(unif(rng) * i);
        t.edge_length[i] = 0.5 + 3.0 * unif(rng);
        t.children[t.parent[i]].push_back(i);
    }
    return t;
}

// Tail-down orientation: flow root -> leaves, each internal vertex splits
// its whole mass among children with random weights nu summing to one;
// leaves absorb (sink_mass = 1).
inline flownet::DirectedNetwork tail_down_network(const RandomTree& t,
                                                  std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.1, 1.0);
    flownet::DirectedNetwork net;
    for (int i = 0; i < t.n; ++i)
        net.vertices.push_back({i, static_cast<double>(i), 0.0});
    for (int a = 0; a < t.n; ++a) {
        if (t.children[a].empty()) continue;
        std::vector<double> w;
        double total = 0.0;
        for (std::size_t c = 0; c < t.children[a].size(); ++c) {
            w.push_back(unif(rng));
            total += w.back();
        }
        for (std::size_t c = 0; c < t.children[a].size(); ++c) {
            int b = t.children[a][c];
            net.edges.push_back({a, b, t.edge_length[b], w[c] / total});
        }
    }
    net.finalize();
    return net;
}

// Tail-up orientation: flow leaves -> root, one outgoing edge per
// non-root vertex with probability one; the root absorbs.
inline flownet::DirectedNetwork tail_up_network(const RandomTree& t) {
    flownet::DirectedNetwork net;
    for (int i = 0; i < t.n; ++i)
        net.vertices.push_back({i, static_cast<double>(i), 0.0});
    for (int i = 1; i < t.n; ++i)
        net.edges.push_back({i, t.parent[i], t.edge_length[i], 1.0});
    net.finalize();
    return net;
}

// One absorbing-chain trajectory; returns the visited vertex sequence
// (start included) until absorption at the sink.
inline std::vector<int> sample_trajectory(const flownet::DirectedNetwork& net,
                                          int start, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<int> visits{start};
    int a = start;
    while (true) {
        double u = unif(rng);
        double acc = 0.0;
        int next = -1;
        for (int e : net.out_edges[a]) {
            acc += net.edges[e].prob;
            if (u < acc) {
                next = net.edges[e].head;
                break;
            }
        }
        if (next < 0) return visits;  // absorbed by the sink
        visits.push_back(next);
        a = next;
    }
}

}  // namespace testutil

#endif

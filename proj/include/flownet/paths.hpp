#ifndef FLOWNET_PATHS_HPP
#define FLOWNET_PATHS_HPP

#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include "flownet/common.hpp"
#include "flownet/markov.hpp"
#include "flownet/network.hpp"

namespace flownet {

// One directed path x -> y with the quantities entering the covariance:
// pi_product = product of edge transition probabilities, beta = (product
// of per-edge influx sums) * U(y), weight = path weight multiplying the
// kernel value at the path length.
struct PathWeight {
    std::vector<int> edge_ids;
    double length = 0.0;
    double pi_product = 1.0;
    double beta = 1.0;
    double weight = 1.0;
};

// Total influx sum_k pi[k,b] per vertex.
inline std::vector<double> influx_sums(const DirectedNetwork& net) {
    std::vector<double> in_sum(net.size(), 0.0);
    for (const auto& e : net.edges) in_sum[e.head] += e.prob;
    return in_sum;
}

// Longest finite shortest-path hop count over all ordered pairs; used to
// size the default enumeration depth.
inline int hop_diameter(const DirectedNetwork& net) {
    const int n = net.size();
    std::vector<std::vector<int>> adj(n);
    for (const auto& e : net.edges)
        if (e.prob > 0) adj[e.tail].push_back(e.head);
    int diam = 0;
    std::vector<int> dist(n);
    for (int s = 0; s < n; ++s) {
        std::fill(dist.begin(), dist.end(), -1);
        dist[s] = 0;
        std::queue<int> q;
        q.push(s);
        while (!q.empty()) {
            int a = q.front();
            q.pop();
            for (int b : adj[a])
                if (dist[b] < 0) {
                    dist[b] = dist[a] + 1;
                    diam = std::max(diam, dist[b]);
                    q.push(b);
                }
        }
    }
    return diam;
}

struct EnumerateOptions {
    int max_hops = 0;             // 0: use 4 * hop diameter
    double weight_floor = 1e-12;  // prune partial products below this
    double decay_rate = 0.0;      // 1/theta_r bound for pruning, 0 = none
    double max_length = std::numeric_limits<double>::infinity();
};

namespace detail {

struct PathEnumerator {
    const DirectedNetwork& net;
    const std::vector<double>& in_sum;
    int origin;
    int target;
    EnumerateOptions opt;
    double terminal_factor;  // U(y,x) / sqrt(U(x) U(y))
    double u_target;         // U(y)

    std::vector<int> current;
    std::vector<PathWeight>* out;

    void dfs(int vertex, double length, double pi_prod, double influx_prod,
             double factor_prod) {
        if (vertex == target) {
            PathWeight pw;
            pw.edge_ids = current;
            pw.length = length;
            pw.pi_product = pi_prod;
            pw.beta = influx_prod * u_target;
            pw.weight = factor_prod * terminal_factor;
            out->push_back(std::move(pw));
            // Paths may keep going and return to y; fall through.
        }
        if (static_cast<int>(current.size()) >= opt.max_hops) return;
        for (int e : net.out_edges[vertex]) {
            const auto& ed = net.edges[e];
            if (ed.prob <= 0.0) continue;
            if (ed.head == origin) continue;  // no cycles at the initial vertex
            double len2 = length + ed.length;
            if (len2 >= opt.max_length) continue;  // kernel support exhausted
            double f = ed.prob / std::sqrt(in_sum[ed.head]);
            double fac2 = factor_prod * f;
            // Per-edge factors lie in (0,1], so this bound only decreases.
            if (fac2 * std::exp(-opt.decay_rate * len2) < opt.weight_floor)
                continue;
            current.push_back(e);
            dfs(ed.head, len2, pi_prod * ed.prob, influx_prod * in_sum[ed.head],
                fac2);
            current.pop_back();
        }
    }
};

}  // namespace detail

// Enumerates the paths x -> y that never revisit x (cycles at intermediate
// vertices allowed), depth-first with pruning on accumulated weight.
// Returns an empty list when y is unreachable from x.
inline std::vector<PathWeight> enumerate_paths(const DirectedNetwork& net,
                                               const MarkovSolution& markov,
                                               int x, int y,
                                               EnumerateOptions opt = {}) {
    if (x == y) throw validation_error("enumerate_paths requires x != y");
    if (opt.max_hops <= 0) opt.max_hops = std::max(1, 4 * hop_diameter(net));
    std::vector<PathWeight> paths;
    if (!markov.reach[x][y]) return paths;

    auto in_sum = influx_sums(net);
    detail::PathEnumerator en{net,
                              in_sum,
                              x,
                              y,
                              opt,
                              markov.u_pair(net, y, x) /
                                  std::sqrt(markov.U(x) * markov.U(y)),
                              markov.U(y),
                              {},
                              &paths};
    en.dfs(x, 0.0, 1.0, 1.0, 1.0);
    return paths;
}

}  // namespace flownet

#endif

#ifndef FLOWNET_NETWORK_HPP
#define FLOWNET_NETWORK_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "flownet/common.hpp"
#include "flownet/grid.hpp"

namespace flownet {

struct Vertex {
    int id = 0;
    double x = 0.0;
    double y = 0.0;
};

struct Edge {
    int tail = 0;
    int head = 0;
    double length = 0.0;  // km
    double prob = 0.0;    // transition probability pi[tail,head]
};

// Directed linear network with the row-stochastic transition structure.
// The absorbing sink S is implicit: sink_mass[a] = pi[a,S].
struct DirectedNetwork {
    std::vector<Vertex> vertices;
    std::vector<Edge> edges;
    std::vector<double> sink_mass;
    std::vector<bool> source_flags;
    std::vector<bool> outlet_flags;

    // edge indices grouped by tail vertex
    std::vector<std::vector<int>> out_edges;

    int size() const { return static_cast<int>(vertices.size()); }

    // Rebuilds adjacency, sink mass and the source/outlet flags from the
    // edge list. sink_mass is defined canonically as 1 - sum of outgoing
    // probabilities, snapped to 0 below 1e-15 so outlet flags stay exact.
    void finalize() {
        const int n = size();
        out_edges.assign(n, {});
        std::vector<int> in_degree(n, 0);
        for (std::size_t e = 0; e < edges.size(); ++e) {
            const auto& ed = edges[e];
            if (ed.tail < 0 || ed.tail >= n || ed.head < 0 || ed.head >= n)
                throw validation_error("edge endpoint out of range");
            out_edges[ed.tail].push_back(static_cast<int>(e));
            ++in_degree[ed.head];
        }
        sink_mass.assign(n, 0.0);
        source_flags.assign(n, false);
        outlet_flags.assign(n, false);
        for (int a = 0; a < n; ++a) {
            double out = 0.0;
            for (int e : out_edges[a]) out += edges[e].prob;
            if (out > 1.0 + 1e-12)
                throw validation_error("outgoing probability mass exceeds 1 at vertex " +
                                       std::to_string(a));
            double s = 1.0 - out;
            if (s < 1e-15) s = 0.0;
            sink_mass[a] = s;
            outlet_flags[a] = s > 0.0;
            source_flags[a] = in_degree[a] == 0;
        }
    }
};

struct VelocitySplit {
    int dir_a = -1;  // index into the 8 neighbor directions
    int dir_b = -1;
    double mag_a = 0.0;
    double mag_b = 0.0;  // 0 when v aligns exactly with dir_a
};

// The 8 grid directions in counter-clockwise order starting east,
// as (dx, dy) index offsets.
inline constexpr std::array<std::array<int, 2>, 8> kNeighborOffsets = {{
    {{1, 0}}, {{1, 1}}, {{0, 1}}, {{-1, 1}},
    {{-1, 0}}, {{-1, -1}}, {{0, -1}}, {{1, -1}},
}};

// Unit vectors of the 8 neighbor directions for a given grid spacing.
inline std::array<std::array<double, 2>, 8> neighbor_directions(double spacing_x,
                                                                double spacing_y) {
    std::array<std::array<double, 2>, 8> dirs{};
    for (int k = 0; k < 8; ++k) {
        double dx = kNeighborOffsets[k][0] * spacing_x;
        double dy = kNeighborOffsets[k][1] * spacing_y;
        double norm = std::hypot(dx, dy);
        dirs[k] = {dx / norm, dy / norm};
    }
    return dirs;
}

// Splits a nonzero velocity vector onto the two grid directions most
// closely aligned with it, so that mag_a*dir_a + mag_b*dir_b = v exactly
// (parallelogram rule). Exact alignment with a single direction returns
// that direction with the full magnitude and mag_b = 0.
inline VelocitySplit decompose_velocity(
    double vx, double vy, const std::array<std::array<double, 2>, 8>& dirs) {
    if (vx == 0.0 && vy == 0.0)
        throw validation_error("cannot decompose a zero velocity vector");
    const double vnorm = std::hypot(vx, vy);

    // Primary direction: maximal cosine similarity, ties broken toward the
    // counter-clockwise neighbor.
    int best = 0;
    double best_cos = -2.0;
    for (int k = 0; k < 8; ++k) {
        double c = (dirs[k][0] * vx + dirs[k][1] * vy) / vnorm;
        if (c > best_cos + 1e-15) {
            best_cos = c;
            best = k;
        } else if (c > best_cos - 1e-15 && k == (best + 1) % 8) {
            best = k;  // tie: prefer the CCW neighbor
        }
    }

    VelocitySplit split;
    split.dir_a = best;

    // Exact alignment: the 2x2 system is singular; the limit assigns the
    // whole magnitude to the aligned direction.
    double cross = dirs[best][0] * vy - dirs[best][1] * vx;
    if (std::abs(cross) <= 1e-14 * vnorm && best_cos > 0.0) {
        split.dir_b = (best + 1) % 8;
        split.mag_a = vnorm;
        split.mag_b = 0.0;
        return split;
    }

    // Second direction: whichever angular neighbor of the primary lies on
    // the same side as v.
    int other = cross > 0.0 ? (best + 1) % 8 : (best + 7) % 8;
    split.dir_b = other;

    const auto& da = dirs[best];
    const auto& db = dirs[other];
    double det = da[0] * db[1] - da[1] * db[0];
    if (std::abs(det) < 1e-14)
        throw numeric_error("degenerate direction pair in velocity decomposition");
    double ma = (vx * db[1] - vy * db[0]) / det;
    double mb = (da[0] * vy - da[1] * vx) / det;
    if (ma < -1e-12 * vnorm || mb < -1e-12 * vnorm)
        throw numeric_error("negative coefficient in velocity decomposition: "
                            "misordered sector selection");
    split.mag_a = std::max(ma, 0.0);
    split.mag_b = std::max(mb, 0.0);
    return split;
}

enum class EdgeMetric { euclidean, time };

// Builds the directed network from the velocity grid. Each water vertex
// splits its velocity onto (at most) two grid neighbors; components whose
// target is water become edges with probability proportional to the
// component magnitude, off-water components feed the sink. Zero-velocity
// water vertices absorb locally (sink_mass = 1).
inline DirectedNetwork build_network(const VelocityGrid& grid,
                                     EdgeMetric metric = EdgeMetric::euclidean) {
    DirectedNetwork net;
    std::vector<int> vertex_of_node(grid.nodes.size(), -1);
    for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
        const auto& node = grid.nodes[i];
        if (!node.is_water) continue;
        vertex_of_node[i] = net.size();
        net.vertices.push_back({net.size(), node.x, node.y});
    }
    if (net.vertices.empty())
        throw validation_error("grid has no water vertices");

    // map (ix,iy) -> vertex id
    auto vertex_at = [&](int ix, int iy) -> int {
        const GridNode* g = grid.at(ix, iy);
        if (g == nullptr || !g->is_water) return -1;
        return vertex_of_node[static_cast<std::size_t>(g - grid.nodes.data())];
    };

    const auto dirs = neighbor_directions(grid.spacing_x, grid.spacing_y);
    bool any_moving = false;
    for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
        const auto& node = grid.nodes[i];
        int a = vertex_of_node[i];
        if (a < 0) continue;
        if (node.u == 0.0 && node.v == 0.0) continue;  // local outlet
        any_moving = true;

        VelocitySplit split = decompose_velocity(node.u, node.v, dirs);
        double total = split.mag_a + split.mag_b;
        const std::array<std::pair<int, double>, 2> comps = {
            {{split.dir_a, split.mag_a}, {split.dir_b, split.mag_b}}};
        for (const auto& [dir, mag] : comps) {
            if (mag <= 0.0) continue;  // zero-mass component: no edge, no sink effect
            double prob = mag / total;
            int tx = node.ix + kNeighborOffsets[dir][0];
            int ty = node.iy + kNeighborOffsets[dir][1];
            int b = vertex_at(tx, ty);
            if (b < 0) continue;  // off-water: mass goes to the sink
            const auto& va = net.vertices[a];
            const auto& vb = net.vertices[b];
            double length = std::hypot(vb.x - va.x, vb.y - va.y);
            if (metric == EdgeMetric::time) {
                // travel time along the edge: length over the velocity
                // projected on the edge direction
                double proj = node.u * dirs[dir][0] + node.v * dirs[dir][1];
                if (proj <= 0)
                    throw numeric_error("non-positive velocity projection on edge");
                length /= proj;
            }
            net.edges.push_back({a, b, length, prob});
        }
    }
    if (!any_moving && net.size() > 1)
        throw validation_error("all velocities are zero: empty transition structure");

    net.finalize();
    return net;
}

struct VertexClasses {
    std::vector<int> sources;
    std::vector<int> outlets;
};

// Sources have no incoming edges; outlets carry positive sink mass.
inline VertexClasses classify_vertices(const DirectedNetwork& net) {
    VertexClasses cls;
    for (int a = 0; a < net.size(); ++a) {
        if (net.source_flags[a]) cls.sources.push_back(a);
        if (net.outlet_flags[a]) cls.outlets.push_back(a);
    }
    return cls;
}

}  // namespace flownet

#endif

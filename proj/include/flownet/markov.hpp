#ifndef FLOWNET_MARKOV_HPP
#define FLOWNET_MARKOV_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <string>
#include <vector>

#include "flownet/common.hpp"
#include "flownet/network.hpp"

namespace flownet {

// V-restricted transition matrix (sink column dropped).
inline Eigen::SparseMatrix<double> transition_matrix(const DirectedNetwork& net) {
    const int n = net.size();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(net.edges.size());
    for (const auto& e : net.edges)
        trip.emplace_back(e.tail, e.head, e.prob);
    Eigen::SparseMatrix<double> pi(n, n);
    pi.setFromTriplets(trip.begin(), trip.end());
    return pi;
}

namespace detail {

// Vertices that cannot reach the sink form recurrent sets; (I - pi_V) is
// singular exactly when such a set exists. Identified by reverse traversal
// from the outlets.
inline std::vector<int> vertices_missing_sink(const DirectedNetwork& net) {
    const int n = net.size();
    std::vector<std::vector<int>> in_adj(n);
    for (const auto& e : net.edges)
        if (e.prob > 0.0) in_adj[e.head].push_back(e.tail);
    std::vector<char> ok(n, 0);
    std::vector<int> stack;
    for (int a = 0; a < n; ++a)
        if (net.sink_mass[a] > 0.0) {
            ok[a] = 1;
            stack.push_back(a);
        }
    while (!stack.empty()) {
        int b = stack.back();
        stack.pop_back();
        for (int a : in_adj[b])
            if (!ok[a]) {
                ok[a] = 1;
                stack.push_back(a);
            }
    }
    std::vector<int> bad;
    for (int a = 0; a < n; ++a)
        if (!ok[a]) bad.push_back(a);
    return bad;
}

}  // namespace detail

// G = (I - pi_V)^{-1}: expected visit counts of the absorbing chain.
// Dense inversion up to moderate sizes, sparse LU column solves beyond.
inline Eigen::MatrixXd fundamental_matrix(const DirectedNetwork& net,
                                          int dense_limit = 2000) {
    const int n = net.size();
    auto bad = detail::vertices_missing_sink(net);
    if (!bad.empty()) {
        std::string ids;
        for (std::size_t i = 0; i < bad.size() && i < 10; ++i)
            ids += (i ? "," : "") + std::to_string(bad[i]);
        if (bad.size() > 10) ids += ",...";
        throw numeric_error(
            "recurrent subnetwork never reaching the sink: vertices {" + ids + "}");
    }

    Eigen::SparseMatrix<double> pi = transition_matrix(net);
    if (n <= dense_limit) {
        Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd(pi);
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
        Eigen::MatrixXd G = lu.solve(Eigen::MatrixXd::Identity(n, n));
        double residual = (A * G - Eigen::MatrixXd::Identity(n, n))
                              .cwiseAbs()
                              .maxCoeff();
        if (residual > 1e-10)
            throw numeric_error("fundamental matrix residual " +
                                std::to_string(residual) + " exceeds 1e-10");
        return G;
    }

    Eigen::SparseMatrix<double> A(n, n);
    A.setIdentity();
    A -= pi;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> solver;
    solver.compute(A);
    if (solver.info() != Eigen::Success)
        throw numeric_error("sparse factorization of (I - pi_V) failed");
    Eigen::MatrixXd G(n, n);
    const int block = 256;
    for (int c0 = 0; c0 < n; c0 += block) {
        int nc = std::min(block, n - c0);
        Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, nc);
        for (int j = 0; j < nc; ++j) rhs(c0 + j, j) = 1.0;
        G.middleCols(c0, nc) = solver.solve(rhs);
    }
    return G;
}

// U(x) = 1 / G[x,x]: probability of never revisiting x after arrival.
inline Eigen::VectorXd nonreturn_single(const Eigen::MatrixXd& G) {
    return G.diagonal().cwiseInverse();
}

// U(x,y): probability, starting from x, of never returning to the set
// {x,y}. First-step decomposition with hitting probabilities of A = {x,y}
// recovered from G; the sink branch never hits A and contributes fully.
inline double nonreturn_pair(const DirectedNetwork& net, const Eigen::MatrixXd& G,
                             int x, int y) {
    if (x == y) throw validation_error("nonreturn_pair requires x != y");
    Eigen::Matrix2d Gaa;
    Gaa << G(x, x), G(x, y), G(y, x), G(y, y);
    double det = Gaa.determinant();
    if (std::abs(det) < 1e-14)
        throw numeric_error("singular 2x2 visit-count block for pair (" +
                            std::to_string(x) + "," + std::to_string(y) + ")");
    Eigen::Vector2d b = Gaa.inverse() * Eigen::Vector2d::Ones();

    double u = net.sink_mass[x];
    for (int e : net.out_edges[x]) {
        const auto& ed = net.edges[e];
        if (ed.head == x || ed.head == y) continue;
        double hit = G(ed.head, x) * b(0) + G(ed.head, y) * b(1);
        u += ed.prob * (1.0 - hit);
    }
    return u;
}

// Transitive closure by traversal (immune to numerical underflow in G).
inline std::vector<std::vector<bool>> reachability(const DirectedNetwork& net) {
    const int n = net.size();
    std::vector<std::vector<int>> adj(n);
    for (const auto& e : net.edges)
        if (e.prob > 0.0) adj[e.tail].push_back(e.head);
    std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
    std::vector<int> stack;
    for (int s = 0; s < n; ++s) {
        reach[s][s] = true;
        stack.clear();
        stack.push_back(s);
        while (!stack.empty()) {
            int a = stack.back();
            stack.pop_back();
            for (int b : adj[a])
                if (!reach[s][b]) {
                    reach[s][b] = true;
                    stack.push_back(b);
                }
        }
    }
    return reach;
}

// Bundle of everything the covariance assembly needs from the chain.
struct MarkovSolution {
    Eigen::MatrixXd G;
    Eigen::VectorXd U;  // single-vertex non-return probabilities
    std::vector<std::vector<bool>> reach;

    static MarkovSolution solve(const DirectedNetwork& net) {
        MarkovSolution s;
        s.G = fundamental_matrix(net);
        s.U = nonreturn_single(s.G);
        s.reach = reachability(net);
        return s;
    }

    double u_pair(const DirectedNetwork& net, int x, int y) const {
        return nonreturn_pair(net, G, x, y);
    }
};

}  // namespace flownet

#endif

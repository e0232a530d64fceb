#include <doctest.h>

#include <random>
#include <vector>

#include "flownet/markov.hpp"
#include "helpers.hpp"

using namespace flownet;

namespace {

DirectedNetwork two_state(double p01, double p10) {
    DirectedNetwork net;
    net.vertices.push_back({0, 0, 0});
    net.vertices.push_back({1, 1, 0});
    if (p01 > 0) net.edges.push_back({0, 1, 1.0, p01});
    if (p10 > 0) net.edges.push_back({1, 0, 1.0, p10});
    net.finalize();
    return net;
}

}  // namespace

TEST_CASE("fundamental matrix of a 2-vertex chain") {
    auto net = two_state(0.5, 0.0);
    auto G = fundamental_matrix(net);
    CHECK(G(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(G(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(G(1, 0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(G(1, 1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fundamental matrix of the leaky 2-cycle") {
    auto net = two_state(0.9, 0.5);
    auto G = fundamental_matrix(net);
    CHECK(G(0, 0) == doctest::Approx(1.0 / 0.55).epsilon(1e-12));
    CHECK(G(0, 1) == doctest::Approx(0.9 / 0.55).epsilon(1e-12));
    CHECK(G(1, 0) == doctest::Approx(0.5 / 0.55).epsilon(1e-12));
    CHECK(G(1, 1) == doctest::Approx(1.0 / 0.55).epsilon(1e-12));

    auto U = nonreturn_single(G);
    CHECK(U(0) == doctest::Approx(0.55).epsilon(1e-12));
    CHECK(U(1) == doctest::Approx(0.55).epsilon(1e-12));

    // never returning to {0,1} from 0 requires the immediate sink branch
    CHECK(nonreturn_pair(net, G, 0, 1) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("all mass to sink gives identity G and U = 1") {
    DirectedNetwork net;
    for (int i = 0; i < 3; ++i)
        net.vertices.push_back({i, static_cast<double>(i), 0.0});
    net.finalize();
    auto G = fundamental_matrix(net);
    CHECK(G.isApprox(Eigen::MatrixXd::Identity(3, 3), 1e-14));
    CHECK(nonreturn_single(G).isApprox(Eigen::VectorXd::Ones(3), 1e-14));
}

TEST_CASE("nonreturn_pair trivial cases") {
    auto chain = two_state(1.0, 0.0);
    auto G = fundamental_matrix(chain);
    // vertex 1 goes straight to the sink
    CHECK(nonreturn_pair(chain, G, 1, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(nonreturn_pair(chain, G, 0, 0), validation_error);
}

TEST_CASE("recurrent subnetwork is diagnosed") {
    auto net = two_state(1.0, 1.0);  // closed 2-cycle, never absorbed
    CHECK_THROWS_AS(fundamental_matrix(net), numeric_error);
}

TEST_CASE("reachability closure") {
    DirectedNetwork net;
    for (int i = 0; i < 4; ++i)
        net.vertices.push_back({i, static_cast<double>(i), 0.0});
    net.edges.push_back({0, 1, 1.0, 0.5});
    net.edges.push_back({1, 2, 1.0, 0.5});
    // vertex 3 disconnected
    net.finalize();
    auto reach = reachability(net);
    CHECK(reach[0][2]);
    CHECK(!reach[2][0]);
    CHECK(reach[3][3]);
    CHECK(!reach[0][3]);
    CHECK(!reach[3][0]);
}

TEST_CASE("reachability equals brute-force DFS on random networks") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        auto net = testutil::random_network(rng, 12, true);
        auto reach = reachability(net);
        const int n = net.size();
        // independent oracle: repeated single-source DFS over adjacency lists
        for (int s = 0; s < n; ++s) {
            std::vector<bool> seen(n, false);
            std::vector<int> stack{s};
            seen[s] = true;
            while (!stack.empty()) {
                int a = stack.back();
                stack.pop_back();
                for (const auto& e : net.edges)
                    if (e.tail == a && e.prob > 0 && !seen[e.head]) {
                        seen[e.head] = true;
                        stack.push_back(e.head);
                    }
            }
            for (int t = 0; t < n; ++t) CHECK(reach[s][t] == seen[t]);
        }
    }
}

TEST_CASE("U(x,y) bounds on random networks") {
    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 10; ++trial) {
        auto net = testutil::random_network(rng, 10, true);
        auto sol = MarkovSolution::solve(net);
        for (int x = 0; x < net.size(); ++x) {
            CHECK(sol.G(x, x) >= 1.0 - 1e-12);
            CHECK(sol.U(x) > 0.0);
            CHECK(sol.U(x) <= 1.0 + 1e-12);
            for (int y = 0; y < net.size(); ++y) {
                if (x == y) continue;
                double u = sol.u_pair(net, x, y);
                CHECK(u >= net.sink_mass[x] - 1e-12);
                CHECK(u <= 1.0 + 1e-12);
            }
        }
    }
}

TEST_CASE("hitting decomposition matches Monte Carlo on a small chain") {
    std::mt19937_64 rng(43);
    auto net = testutil::random_network(rng, 6, true);
    auto sol = MarkovSolution::solve(net);
    const int N = 20000;
    // estimate P(hit {x,y} | start s) for one pair and compare with the
    // G-based formula b = G_AA^{-1} 1, h_s = [G(s,x), G(s,y)] b
    int x = 0, y = net.size() - 1;
    Eigen::Matrix2d Gaa;
    Gaa << sol.G(x, x), sol.G(x, y), sol.G(y, x), sol.G(y, y);
    Eigen::Vector2d b = Gaa.inverse() * Eigen::Vector2d::Ones();
    for (int s = 1; s < net.size() - 1; ++s) {
        double expected = sol.G(s, x) * b(0) + sol.G(s, y) * b(1);
        int hits = 0;
        for (int t = 0; t < N; ++t) {
            auto traj = testutil::sample_trajectory(net, s, rng);
            for (int v : traj)
                if (v == x || v == y) {
                    ++hits;
                    break;
                }
        }
        double est = static_cast<double>(hits) / N;
        double sigma = std::sqrt(std::max(expected * (1 - expected), 1e-6) / N);
        CHECK(std::abs(est - expected) <= 3.0 * sigma + 1e-3);
    }
}

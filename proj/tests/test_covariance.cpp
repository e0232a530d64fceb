#include <doctest.h>

#include <cmath>
#include <random>

#include "flownet/covariance.hpp"
#include "helpers.hpp"

using namespace flownet;

namespace {

DirectedNetwork chain2(double length, double prob = 1.0) {
    DirectedNetwork net;
    net.vertices.push_back({0, 0, 0});
    net.vertices.push_back({1, length, 0});
    net.edges.push_back({0, 1, length, prob});
    net.finalize();
    return net;
}

// v -> {x1, x2}, both absorbing, equal split
DirectedNetwork split3(double length) {
    DirectedNetwork net;
    net.vertices.push_back({0, 0, 0});
    net.vertices.push_back({1, length, 1});
    net.vertices.push_back({2, length, -1});
    net.edges.push_back({0, 1, length, 0.5});
    net.edges.push_back({0, 2, length, 0.5});
    net.finalize();
    return net;
}

}  // namespace

TEST_CASE("kernel families") {
    for (auto kind : {KernelKind::exponential, KernelKind::spherical,
                      KernelKind::linear_sill}) {
        KernelSpec k(kind, 2.5, 7.0);
        CHECK(kernel_cov(k, 0.0) == doctest::Approx(2.5));
    }
    KernelSpec sph(KernelKind::spherical, 1.0, 3.0);
    CHECK(kernel_cov(sph, 3.0) == 0.0);
    CHECK(kernel_cov(sph, 5.0) == 0.0);
    KernelSpec expk(KernelKind::exponential, 1.0, 3.0);
    CHECK(kernel_cov(expk, 3.0) == doctest::Approx(0.367879).epsilon(1e-5));
    KernelSpec lin(KernelKind::linear_sill, 2.0, 4.0);
    CHECK(kernel_cov(lin, 2.0) == doctest::Approx(1.0));
    CHECK(kernel_cov(lin, 4.0) == 0.0);
    CHECK_THROWS_AS(KernelSpec(KernelKind::exponential, -1.0, 1.0),
                    validation_error);
    CHECK_THROWS_AS(kernel_cov(expk, -1.0), validation_error);
}

TEST_CASE("path enumeration on the 2-vertex chain") {
    auto net = chain2(2.0);
    auto sol = MarkovSolution::solve(net);
    auto paths = enumerate_paths(net, sol, 0, 1);
    REQUIRE(paths.size() == 1);
    CHECK(paths[0].length == doctest::Approx(2.0));
    CHECK(paths[0].pi_product == doctest::Approx(1.0));
    CHECK(paths[0].weight == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(enumerate_paths(net, sol, 1, 0).empty());
}

TEST_CASE("path weight on the split network") {
    auto net = split3(1.5);
    auto sol = MarkovSolution::solve(net);
    auto paths = enumerate_paths(net, sol, 0, 1);
    REQUIRE(paths.size() == 1);
    // w = pi / sqrt(influx) = 0.5 / sqrt(0.5)
    CHECK(paths[0].weight == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
    CHECK(paths[0].weight == doctest::Approx(0.70711).epsilon(1e-4));
}

TEST_CASE("cov_pathsum closed values") {
    KernelSpec k(KernelKind::exponential, 1.0, 2.0);
    auto net = chain2(2.0);
    auto sol = MarkovSolution::solve(net);
    CHECK(cov_pathsum(net, sol, k, 0, 1) ==
          doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(cov_pathsum(net, sol, k, 0, 0) == doctest::Approx(1.0));

    auto sp = split3(1.5);
    auto ssol = MarkovSolution::solve(sp);
    KernelSpec k2(KernelKind::exponential, 2.0, 3.0);
    CHECK(cov_pathsum(sp, ssol, k2, 0, 1) ==
          doctest::Approx(2.0 * std::sqrt(0.5) * std::exp(-0.5)).epsilon(1e-12));
    // the two absorbing leaves are mutually unreachable
    CHECK(cov_pathsum(sp, ssol, k2, 1, 2) == 0.0);
}

TEST_CASE("closed form matches hand values") {
    KernelSpec k(KernelKind::exponential, 1.7, 2.0);
    auto net = chain2(2.0);
    auto sol = MarkovSolution::solve(net);
    auto sigma = cov_matrix_exponential(net, sol, k.sill, k.range);
    CHECK(sigma(0, 1) == doctest::Approx(1.7 * std::exp(-1.0)).epsilon(1e-12));
    CHECK(sigma(1, 0) == sigma(0, 1));
    CHECK(sigma(0, 0) == 1.7);
    CHECK(sigma(1, 1) == 1.7);

    auto sp = split3(1.5);
    auto ssol = MarkovSolution::solve(sp);
    auto s2 = cov_matrix_exponential(sp, ssol, 1.0, 3.0);
    CHECK(s2(0, 1) == doctest::Approx(std::sqrt(0.5) * std::exp(-0.5)).epsilon(1e-12));
    CHECK(s2(1, 2) == 0.0);
}

TEST_CASE("closed form vs path-sum oracle on random networks") {
    std::mt19937_64 rng(53);
    for (int trial = 0; trial < 6; ++trial) {
        bool cyclic = trial % 2 == 1;
        auto net = testutil::random_network(rng, 10, cyclic);
        auto sol = MarkovSolution::solve(net);
        KernelSpec k(KernelKind::exponential, 1.0, 4.0);
        auto sigma = cov_matrix_exponential(net, sol, k.sill, k.range);
        EnumerateOptions opt;
        opt.max_hops = cyclic ? 80 : net.size();
        opt.weight_floor = cyclic ? 1e-14 : 0.0;
        double tol = cyclic ? 1e-8 : 1e-10;
        for (int x = 0; x < net.size(); ++x)
            for (int y = 0; y < net.size(); ++y) {
                double oracle = cov_pathsum(net, sol, k, x, y, opt);
                CHECK(std::abs(sigma(x, y) - oracle) <= tol);
            }
    }
}

TEST_CASE("matrix properties on random networks") {
    std::mt19937_64 rng(59);
    for (int trial = 0; trial < 8; ++trial) {
        auto net = testutil::random_network(rng, 14, trial % 2 == 1);
        auto sol = MarkovSolution::solve(net);
        double theta_s = 0.8, theta_r = 3.0;
        auto sigma = cov_matrix_exponential(net, sol, theta_s, theta_r);

        // constant marginal variance, symmetry, zero for disconnected pairs
        for (int x = 0; x < net.size(); ++x) {
            CHECK(sigma(x, x) == theta_s);
            for (int y = 0; y < net.size(); ++y) {
                CHECK(sigma(x, y) == sigma(y, x));
                if (!sol.reach[x][y] && !sol.reach[y][x])
                    CHECK(sigma(x, y) == 0.0);
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma);
        CHECK(eig.eigenvalues().minCoeff() >= -1e-8 * theta_s);
    }
}

TEST_CASE("tail-up and tail-down tree equivalence") {
    std::mt19937_64 rng(61);
    KernelSpec k(KernelKind::exponential, 1.0, 5.0);
    for (int trial = 0; trial < 5; ++trial) {
        auto tree = testutil::random_tree(rng, 12);

        // tail-down: pi = nu along root->leaf edges; per-edge weight sqrt(nu)
        auto down = testutil::tail_down_network(tree, rng);
        auto dsol = MarkovSolution::solve(down);
        auto dsig = cov_matrix_exponential(down, dsol, k.sill, k.range);
        for (int child = 1; child < tree.n; ++child) {
            // walk up to every ancestor accumulating nu and length
            double w = 1.0, len = 0.0;
            int a = child;
            while (tree.parent[a] >= 0) {
                int p = tree.parent[a];
                double nu = 0.0;
                for (const auto& e : down.edges)
                    if (e.tail == p && e.head == a) nu = e.prob;
                w *= std::sqrt(nu);
                len += tree.edge_length[a];
                a = p;
                CHECK(dsig(a, child) ==
                      doctest::Approx(w * kernel_cov(k, len)).epsilon(1e-12));
            }
        }

        // tail-up: pi = 1 along leaf->root edges; influx of b counts its
        // children, so nu = 1/#children per edge
        auto up = testutil::tail_up_network(tree);
        auto usol = MarkovSolution::solve(up);
        auto usig = cov_matrix_exponential(up, usol, k.sill, k.range);
        for (int child = 1; child < tree.n; ++child) {
            double w = 1.0, len = 0.0;
            int a = child;
            while (tree.parent[a] >= 0) {
                int p = tree.parent[a];
                w *= std::sqrt(1.0 / tree.children[p].size());
                len += tree.edge_length[a];
                a = p;
                CHECK(usig(child, a) ==
                      doctest::Approx(w * kernel_cov(k, len)).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("monotone decay along a chain") {
    DirectedNetwork net;
    const int n = 6;
    for (int i = 0; i < n; ++i)
        net.vertices.push_back({i, static_cast<double>(i), 0.0});
    for (int i = 0; i + 1 < n; ++i)
        net.edges.push_back({i, i + 1, 1.0, 0.9});
    net.finalize();
    auto sol = MarkovSolution::solve(net);
    auto sigma = cov_matrix_exponential(net, sol, 1.0, 2.0);
    for (int k = 1; k + 1 < n; ++k) CHECK(sigma(0, k) >= sigma(0, k + 1));
}

TEST_CASE("euclidean covariance baseline") {
    std::vector<std::array<double, 2>> coords = {{0, 0}, {0, 0}, {3, 4}};
    KernelSpec k(KernelKind::exponential, 1.0, 5.0);
    auto sigma = cov_matrix_euclidean(coords, k);
    CHECK(sigma(0, 1) == doctest::Approx(1.0));       // coincident points
    CHECK(sigma(0, 2) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(sigma(2, 2) == 1.0);
}

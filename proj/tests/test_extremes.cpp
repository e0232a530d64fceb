#include <doctest.h>

#include <algorithm>
#include <random>

#include "flownet/extremes.hpp"

using namespace flownet;

namespace {

FieldEnsemble make_ens(const Eigen::MatrixXd& values) {
    FieldEnsemble ens;
    ens.M = static_cast<int>(values.rows());
    ens.values = values;
    ens.mean = Eigen::VectorXd::Zero(values.cols());
    return ens;
}

bool subset(const std::vector<int>& a, const std::vector<int>& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace

TEST_CASE("joint exceedance hand counts") {
    // 2 vertices, 4 realizations: exceedance patterns 11, 10, 00, 01
    Eigen::MatrixXd v(4, 2);
    v << 1, 1, 1, -1, -1, -1, -1, 1;
    auto ens = make_ens(v);
    std::vector<std::array<double, 2>> coords = {{0, 0}, {1, 0}};

    auto res = joint_exceedance(ens, coords, 0.5, 0.0, {2.0}, 0.0);
    REQUIRE(res.size() == 1);
    CHECK(res[0].p_union == doctest::Approx(0.75));
    CHECK(res[0].p_intersection == doctest::Approx(0.25));

    // r = 0 collapses to the marginal at the nearest vertex
    auto r0 = joint_exceedance(ens, coords, 0.1, 0.0, {0.0}, 0.0);
    CHECK(r0[0].p_union == doctest::Approx(0.5));
    CHECK(r0[0].p_intersection == doctest::Approx(0.5));

    // threshold below every value
    auto low = joint_exceedance(ens, coords, 0.5, 0.0, {2.0}, -10.0);
    CHECK(low[0].p_union == 1.0);
    CHECK(low[0].p_intersection == 1.0);

    CHECK_THROWS_AS(joint_exceedance(ens, coords, 0.5, 0.0, {-1.0}, 0.0),
                    validation_error);
}

TEST_CASE("excursion sets at extreme thresholds") {
    Eigen::MatrixXd v(8, 3);
    std::mt19937_64 rng(97);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int m = 0; m < 8; ++m)
        for (int i = 0; i < 3; ++i) v(m, i) = gauss(rng);
    auto ens = make_ens(v);

    auto low = excursion_sets(ens, v.minCoeff() - 1.0, 0.2);
    CHECK(low.inner_set == std::vector<int>{0, 1, 2});
    CHECK(low.outer_set == std::vector<int>{0, 1, 2});

    auto high = excursion_sets(ens, v.maxCoeff() + 1.0, 0.2);
    CHECK(high.inner_set.empty());
    CHECK(high.outer_set.empty());
}

TEST_CASE("excursion sets hand example") {
    // rows (1,1),(1,0),(1,1),(1,1) at alpha = 0.25
    Eigen::MatrixXd v(4, 2);
    v << 1, 1, 1, -1, 1, 1, 1, 1;
    auto ens = make_ens(v);
    auto res = excursion_sets(ens, 0.0, 0.25);
    CHECK(res.inner_set == std::vector<int>{0, 1});
    CHECK(res.outer_set == std::vector<int>{0, 1});
    CHECK(res.inner_containment >= 0.75);
    CHECK(res.outer_containment >= 0.75);
}

TEST_CASE("excursion parameter validation") {
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(4, 2);
    auto ens = make_ens(v);
    CHECK_THROWS_AS(excursion_sets(ens, 0.0, 0.0), validation_error);
    CHECK_THROWS_AS(excursion_sets(ens, 0.0, 1.0), validation_error);
    CHECK_THROWS_AS(excursion_sets(ens, 0.0, 0.1), validation_error);  // M < 1/alpha
}

TEST_CASE("threshold and alpha monotonicity") {
    std::mt19937_64 rng(101);
    std::normal_distribution<double> gauss(27.0, 2.5);
    Eigen::MatrixXd v(200, 12);
    for (int m = 0; m < 200; ++m) {
        double shared = gauss(rng);
        for (int i = 0; i < 12; ++i) v(m, i) = 0.7 * shared + 0.3 * gauss(rng) + 0.1 * i;
    }
    auto ens = make_ens(v);

    std::vector<double> thresholds = {25.0, 27.0, 30.0};
    std::vector<ExcursionResult> results;
    for (double t : thresholds) {
        auto r = excursion_sets(ens, t, 0.1);
        CHECK(r.inner_containment >= 0.9);
        CHECK(r.outer_containment >= 0.9);
        results.push_back(r);
    }
    for (std::size_t i = 0; i + 1 < results.size(); ++i) {
        CHECK(subset(results[i + 1].inner_set, results[i].inner_set));
        CHECK(subset(results[i + 1].outer_set, results[i].outer_set));
    }

    auto wide = excursion_sets(ens, 27.0, 0.4);
    auto tight = excursion_sets(ens, 27.0, 0.05);
    // smaller alpha: inner shrinks, outer grows
    CHECK(subset(tight.inner_set, wide.inner_set));
    CHECK(subset(wide.outer_set, tight.outer_set));
    // inner inside outer at high credibility
    CHECK(subset(tight.inner_set, tight.outer_set));
}

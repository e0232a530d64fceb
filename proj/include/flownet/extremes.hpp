#ifndef FLOWNET_EXTREMES_HPP
#define FLOWNET_EXTREMES_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "flownet/common.hpp"
#include "flownet/fields.hpp"

namespace flownet {

struct JointExceedance {
    double radius = 0.0;
    double p_union = 0.0;
    double p_intersection = 0.0;
};

// Neighborhood membership uses closed balls; radius 0 collapses to the
// vertex nearest the center, where union and intersection coincide with
// the marginal exceedance.
inline std::vector<JointExceedance> joint_exceedance(
    const FieldEnsemble& ens, const std::vector<std::array<double, 2>>& coords,
    double cx, double cy, const std::vector<double>& radii, double threshold) {
    const Eigen::Index n = ens.values.cols();
    if (static_cast<Eigen::Index>(coords.size()) != n)
        throw validation_error("coordinate/ensemble size mismatch");
    std::vector<double> dist(coords.size());
    int nearest = 0;
    for (std::size_t i = 0; i < coords.size(); ++i) {
        dist[i] = std::hypot(coords[i][0] - cx, coords[i][1] - cy);
        if (dist[i] < dist[static_cast<std::size_t>(nearest)]) nearest = static_cast<int>(i);
    }

    std::vector<JointExceedance> out;
    for (double r : radii) {
        if (r < 0) throw validation_error("radii must be nonnegative");
        std::vector<int> hood;
        if (r == 0.0) {
            hood.push_back(nearest);
        } else {
            for (std::size_t i = 0; i < coords.size(); ++i)
                if (dist[i] <= r) hood.push_back(static_cast<int>(i));
        }
        if (hood.empty())
            throw validation_error("empty neighborhood at radius " +
                                   std::to_string(r));
        int any = 0, all = 0;
        for (int m = 0; m < ens.M; ++m) {
            bool u = false, s = true;
            for (int i : hood) {
                bool ex = ens.values(m, i) > threshold;
                u = u || ex;
                s = s && ex;
            }
            any += u;
            all += s;
        }
        out.push_back({r, static_cast<double>(any) / ens.M,
                       static_cast<double>(all) / ens.M});
    }
    return out;
}

struct ExcursionResult {
    double threshold = 0.0;
    double alpha = 0.0;
    std::vector<int> inner_set;
    std::vector<int> outer_set;
    Eigen::VectorXd marginal_probs;
    double inner_containment = 1.0;  // MC freq of {inner subset exceeds}
    double outer_containment = 1.0;  // MC freq of {complement of outer silent}
};

// Greedy credible excursion sets from the Monte Carlo ensemble. Vertices
// are ordered by marginal exceedance frequency; both containment events
// are monotone along these orderings, so the longest admissible prefix is
// well-defined.
inline ExcursionResult excursion_sets(const FieldEnsemble& ens, double threshold,
                                      double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw validation_error("alpha must lie in (0,1)");
    if (ens.M < static_cast<int>(std::ceil(1.0 / alpha)))
        throw validation_error("ensemble too small for the requested alpha");
    const Eigen::Index n = ens.values.cols();
    const double level = 1.0 - alpha;

    ExcursionResult res;
    res.threshold = threshold;
    res.alpha = alpha;

    Eigen::MatrixXi exceed(ens.M, n);
    res.marginal_probs.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        int cnt = 0;
        for (int m = 0; m < ens.M; ++m) {
            exceed(m, i) = ens.values(m, i) > threshold ? 1 : 0;
            cnt += exceed(m, i);
        }
        res.marginal_probs(i) = static_cast<double>(cnt) / ens.M;
    }

    std::vector<int> order(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = static_cast<int>(i);

    // Inner set: descending marginal frequency, longest prefix whose joint
    // exceedance frequency still reaches 1 - alpha.
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (res.marginal_probs(a) != res.marginal_probs(b))
            return res.marginal_probs(a) > res.marginal_probs(b);
        return a < b;
    });
    {
        std::vector<char> all_exceed(static_cast<std::size_t>(ens.M), 1);
        double freq = 1.0;
        for (int v : order) {
            int alive = 0;
            for (int m = 0; m < ens.M; ++m)
                if (all_exceed[static_cast<std::size_t>(m)] && exceed(m, v)) ++alive;
            if (static_cast<double>(alive) / ens.M < level) break;
            for (int m = 0; m < ens.M; ++m)
                all_exceed[static_cast<std::size_t>(m)] =
                    all_exceed[static_cast<std::size_t>(m)] && exceed(m, v);
            freq = static_cast<double>(alive) / ens.M;
            res.inner_set.push_back(v);
        }
        res.inner_containment = freq;
    }

    // Outer set: ascending marginal frequency; drop the longest prefix that
    // stays jointly silent with frequency >= 1 - alpha.
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (res.marginal_probs(a) != res.marginal_probs(b))
            return res.marginal_probs(a) < res.marginal_probs(b);
        return a < b;
    });
    {
        std::vector<char> none_exceed(static_cast<std::size_t>(ens.M), 1);
        std::vector<char> dropped(static_cast<std::size_t>(n), 0);
        double freq = 1.0;
        for (int v : order) {
            int silent = 0;
            for (int m = 0; m < ens.M; ++m) {
                char keep = none_exceed[static_cast<std::size_t>(m)] && !exceed(m, v);
                if (keep) ++silent;
            }
            if (static_cast<double>(silent) / ens.M < level) break;
            for (int m = 0; m < ens.M; ++m)
                none_exceed[static_cast<std::size_t>(m)] =
                    none_exceed[static_cast<std::size_t>(m)] && !exceed(m, v);
            freq = static_cast<double>(silent) / ens.M;
            dropped[static_cast<std::size_t>(v)] = 1;
        }
        res.outer_containment = freq;
        for (Eigen::Index i = 0; i < n; ++i)
            if (!dropped[static_cast<std::size_t>(i)])
                res.outer_set.push_back(static_cast<int>(i));
    }

    std::sort(res.inner_set.begin(), res.inner_set.end());
    return res;
}

}  // namespace flownet

#endif

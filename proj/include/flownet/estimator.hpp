#ifndef FLOWNET_ESTIMATOR_HPP
#define FLOWNET_ESTIMATOR_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "flownet/common.hpp"
#include "flownet/covariance.hpp"
#include "flownet/kernel.hpp"
#include "flownet/markov.hpp"
#include "flownet/network.hpp"
#include "flownet/paths.hpp"

namespace flownet {

// theta_s from pairs with no connecting path in either direction: their
// covariance is zero, so Var(Z_x - Z_y) = 2 theta_s.
inline double estimate_sill(const Eigen::VectorXd& Z,
                            const std::vector<std::pair<int, int>>& h_inf) {
    if (h_inf.empty())
        throw validation_error(
            "no unconnected vertex pairs: the sill is not identifiable from the "
            "data; supply theta_s externally");
    double acc = 0.0;
    for (auto [x, y] : h_inf) {
        double d = Z(x) - Z(y);
        acc += d * d;
    }
    return acc / (2.0 * static_cast<double>(h_inf.size()));
}

// gamma_i = (Z_x - Z_y)^2 / 2 per pair.
inline Eigen::VectorXd empirical_gamma(const Eigen::VectorXd& Z,
                                       const std::vector<std::pair<int, int>>& pairs) {
    Eigen::VectorXd g(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        double d = Z(pairs[i].first) - Z(pairs[i].second);
        g(static_cast<Eigen::Index>(i)) = 0.5 * d * d;
    }
    return g;
}

struct DistanceBin {
    double lo = 0.0;
    double hi = 0.0;
    double h = 0.0;  // representative: mean of member path lengths
};

// Equal-width bins over (0, max length]; representatives are the
// unweighted means of member lengths; empty bins are dropped.
inline std::vector<DistanceBin> build_bins(const std::vector<double>& lengths,
                                           int l) {
    if (l < 1) throw validation_error("bin count must be >= 1");
    std::vector<double> finite;
    for (double d : lengths)
        if (std::isfinite(d) && d > 0) finite.push_back(d);
    if (finite.empty()) throw validation_error("no finite path lengths to bin");

    double hmax = *std::max_element(finite.begin(), finite.end());
    double width = hmax / l;
    std::vector<double> sum(l, 0.0);
    std::vector<int> count(l, 0);
    for (double d : finite) {
        int j = std::min(l - 1, static_cast<int>(std::ceil(d / width)) - 1);
        sum[j] += d;
        ++count[j];
    }
    std::vector<DistanceBin> bins;
    for (int j = 0; j < l; ++j) {
        if (count[j] == 0) continue;
        bins.push_back({j * width, (j + 1) * width, sum[j] / count[j]});
    }
    return bins;
}

inline int bin_index(const std::vector<DistanceBin>& bins, double length) {
    for (std::size_t j = 0; j < bins.size(); ++j)
        if (length > bins[j].lo && length <= bins[j].hi)
            return static_cast<int>(j);
    return -1;
}

// W[i,j] = total path weight of pair i at distance class j.
inline Eigen::MatrixXd build_W(
    const std::vector<std::vector<PathWeight>>& pair_paths,
    const std::vector<DistanceBin>& bins) {
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(
        static_cast<Eigen::Index>(pair_paths.size()),
        static_cast<Eigen::Index>(bins.size()));
    for (std::size_t i = 0; i < pair_paths.size(); ++i)
        for (const auto& p : pair_paths[i]) {
            int j = bin_index(bins, p.length);
            if (j >= 0) W(static_cast<Eigen::Index>(i), j) += p.weight;
        }
    return W;
}

// Minimal admissible ridge penalty guaranteeing ||C_hat||_inf <= theta_s:
// lambda = max(||W^T rhs||_inf / theta_s - min_i delta_i, eps) with
// delta_i the diagonal dominance margin of W^T W.
inline double lambda_rule(const Eigen::MatrixXd& W, const Eigen::VectorXd& rhs,
                          double theta_s_hat, double eps_lambda = 1e-8) {
    if (theta_s_hat <= 0)
        throw validation_error("lambda_rule requires a positive sill estimate");
    Eigen::MatrixXd WtW = W.transpose() * W;
    double min_delta = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < WtW.rows(); ++i) {
        double delta = std::abs(WtW(i, i));
        for (Eigen::Index j = 0; j < WtW.cols(); ++j)
            if (j != i) delta -= std::abs(WtW(i, j));
        min_delta = std::min(min_delta, delta);
    }
    double bound = (W.transpose() * rhs).cwiseAbs().maxCoeff() / theta_s_hat -
                   min_delta;
    return std::max(bound, eps_lambda);
}

// C_hat = (W^T W + lambda I)^{-1} W^T rhs.
inline Eigen::VectorXd ridge_solve(const Eigen::MatrixXd& W,
                                   const Eigen::VectorXd& rhs, double lambda) {
    if (lambda <= 0) throw validation_error("ridge penalty must be positive");
    Eigen::MatrixXd A = W.transpose() * W;
    A.diagonal().array() += lambda;
    return Eigen::LLT<Eigen::MatrixXd>(A).solve(W.transpose() * rhs);
}

namespace detail {

// Golden-section minimization on [lo, hi]; f assumed unimodal there.
inline double golden_section(const std::function<double(double)>& f, double lo,
                             double hi, double rel_tol = 1e-6) {
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while ((b - a) > rel_tol * std::max(1.0, std::abs(a) + std::abs(b))) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace detail

struct RangeFit {
    double theta_r = 0.0;
    bool degenerate = false;  // no decay signal in C_hat
};

// Least-squares range fit of the parametric kernel to the binned
// covariance estimates, by golden-section search.
inline RangeFit fit_range(const Eigen::VectorXd& c_hat,
                          const std::vector<DistanceBin>& bins, KernelKind kind,
                          double theta_s_hat) {
    if (bins.size() < 2 || c_hat.size() != static_cast<Eigen::Index>(bins.size()))
        throw validation_error("fit_range needs >= 2 bins with matching estimates");
    double hmin = bins.front().h, hmax = bins.front().h;
    for (const auto& b : bins) {
        hmin = std::min(hmin, b.h);
        hmax = std::max(hmax, b.h);
    }
    double lo = hmin / 10.0, hi = 10.0 * hmax;
    if (c_hat.maxCoeff() <= 0.0) return {lo, true};

    auto sse = [&](double theta_r) {
        KernelSpec k(kind, theta_s_hat, theta_r);
        double acc = 0.0;
        for (std::size_t j = 0; j < bins.size(); ++j) {
            double d = kernel_cov(k, bins[j].h) - c_hat(static_cast<Eigen::Index>(j));
            acc += d * d;
        }
        return acc;
    };
    return {detail::golden_section(sse, lo, hi), false};
}

// Precomputed, data-independent part of the network estimation pipeline:
// pair classification, path enumeration, bins and the weight matrix. Reuse
// across replicates on a fixed network.
struct EstimationPlan {
    std::vector<std::pair<int, int>> connected_pairs;
    std::vector<std::pair<int, int>> h_inf;  // unconnected pairs
    std::vector<DistanceBin> bins;
    Eigen::MatrixXd W;

    static EstimationPlan build(const DirectedNetwork& net,
                                const MarkovSolution& markov, int l = 15,
                                EnumerateOptions opt = {}) {
        const int n = net.size();
        if (opt.max_hops <= 0) opt.max_hops = std::max(1, 4 * hop_diameter(net));
        EstimationPlan plan;
        std::vector<std::vector<PathWeight>> pair_paths;
        std::vector<double> lengths;
        for (int x = 0; x < n; ++x)
            for (int y = x + 1; y < n; ++y) {
                if (!markov.reach[x][y] && !markov.reach[y][x]) {
                    plan.h_inf.emplace_back(x, y);
                    continue;
                }
                plan.connected_pairs.emplace_back(x, y);
                auto paths = enumerate_paths(net, markov, x, y, opt);
                auto back = enumerate_paths(net, markov, y, x, opt);
                paths.insert(paths.end(), back.begin(), back.end());
                for (const auto& p : paths) lengths.push_back(p.length);
                pair_paths.push_back(std::move(paths));
            }
        if (plan.connected_pairs.empty())
            throw validation_error("network has no connected vertex pairs");
        plan.bins = build_bins(lengths, l);
        plan.W = build_W(pair_paths, plan.bins);
        return plan;
    }
};

struct EmpiricalCovariance {
    std::vector<DistanceBin> bins;
    Eigen::VectorXd c_hat;
    double theta_s_hat = 0.0;
    double lambda = 0.0;
    std::size_t pair_count = 0;
    double theta_r_hat = 0.0;
    bool degenerate = false;
};

// One-shot estimation for a single field replicate.
inline EmpiricalCovariance estimate_covariance(const EstimationPlan& plan,
                                               const Eigen::VectorXd& Z,
                                               KernelKind kind) {
    EmpiricalCovariance est;
    est.bins = plan.bins;
    est.pair_count = plan.connected_pairs.size();
    est.theta_s_hat = estimate_sill(Z, plan.h_inf);
    Eigen::VectorXd gamma = empirical_gamma(Z, plan.connected_pairs);
    Eigen::VectorXd rhs =
        Eigen::VectorXd::Constant(gamma.size(), est.theta_s_hat) - gamma;
    est.lambda = lambda_rule(plan.W, rhs, est.theta_s_hat);
    est.c_hat = ridge_solve(plan.W, rhs, est.lambda);
    RangeFit fit = fit_range(est.c_hat, plan.bins, kind, est.theta_s_hat);
    est.theta_r_hat = fit.theta_r;
    est.degenerate = fit.degenerate;
    return est;
}

// Multi-replicate pipeline: per-replicate sill and binned curves are
// averaged point-wise before the parametric fit.
inline EmpiricalCovariance estimate_covariance_multi(
    const EstimationPlan& plan, const std::vector<Eigen::VectorXd>& fields,
    KernelKind kind) {
    if (fields.empty()) throw validation_error("no field replicates supplied");
    EmpiricalCovariance mean;
    mean.bins = plan.bins;
    mean.pair_count = plan.connected_pairs.size();
    mean.c_hat = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(plan.bins.size()));
    for (const auto& Z : fields) {
        EmpiricalCovariance one = estimate_covariance(plan, Z, kind);
        mean.theta_s_hat += one.theta_s_hat;
        mean.c_hat += one.c_hat;
        mean.lambda += one.lambda;
    }
    double m = static_cast<double>(fields.size());
    mean.theta_s_hat /= m;
    mean.c_hat /= m;
    mean.lambda /= m;
    RangeFit fit = fit_range(mean.c_hat, plan.bins, kind, mean.theta_s_hat);
    mean.theta_r_hat = fit.theta_r;
    mean.degenerate = fit.degenerate;
    return mean;
}

// Classical Euclidean-distance baseline: method-of-moments semivariogram
// over distance bins, then a least-squares parametric fit of sill and
// range for the same kernel family.
struct EuclideanFit {
    double theta_s = 0.0;
    double theta_r = 0.0;
    std::vector<DistanceBin> bins;
    Eigen::VectorXd gamma_hat;
};

inline EuclideanFit euclidean_fit(const Eigen::VectorXd& Z,
                                  const std::vector<std::array<double, 2>>& coords,
                                  int l = 15,
                                  KernelKind kind = KernelKind::exponential) {
    const int n = static_cast<int>(coords.size());
    if (Z.size() != n) throw validation_error("field/coordinate size mismatch");
    std::vector<double> dists;
    std::vector<double> semis;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double h = std::hypot(coords[i][0] - coords[j][0],
                                  coords[i][1] - coords[j][1]);
            if (h <= 0) continue;
            dists.push_back(h);
            double d = Z(i) - Z(j);
            semis.push_back(0.5 * d * d);
        }
    EuclideanFit fit;
    fit.bins = build_bins(dists, l);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(fit.bins.size()));
    Eigen::VectorXd cnt = Eigen::VectorXd::Zero(sum.size());
    for (std::size_t p = 0; p < dists.size(); ++p) {
        int j = bin_index(fit.bins, dists[p]);
        if (j < 0) continue;
        sum(j) += semis[p];
        cnt(j) += 1.0;
    }
    fit.gamma_hat = sum.cwiseQuotient(cnt);

    double hmin = fit.bins.front().h, hmax = fit.bins.front().h;
    for (const auto& b : fit.bins) {
        hmin = std::min(hmin, b.h);
        hmax = std::max(hmax, b.h);
    }
    double lo = hmin / 10.0, hi = 10.0 * hmax;

    // For fixed range the optimal sill is linear least squares on the
    // variogram shape a_j = 1 - C(h_j)/theta_s.
    auto sill_for = [&](double theta_r) {
        KernelSpec unit(kind, 1.0, theta_r);
        double num = 0.0, den = 0.0;
        for (std::size_t j = 0; j < fit.bins.size(); ++j) {
            double a = 1.0 - kernel_cov(unit, fit.bins[j].h);
            num += a * fit.gamma_hat(static_cast<Eigen::Index>(j));
            den += a * a;
        }
        return den > 0 ? std::max(num / den, 0.0) : 0.0;
    };
    auto sse = [&](double theta_r) {
        double ts = sill_for(theta_r);
        KernelSpec unit(kind, 1.0, theta_r);
        double acc = 0.0;
        for (std::size_t j = 0; j < fit.bins.size(); ++j) {
            double model = ts * (1.0 - kernel_cov(unit, fit.bins[j].h));
            double d = model - fit.gamma_hat(static_cast<Eigen::Index>(j));
            acc += d * d;
        }
        return acc;
    };
    fit.theta_r = detail::golden_section(sse, lo, hi);
    fit.theta_s = sill_for(fit.theta_r);
    if (fit.theta_s <= 0) {
        // constant field: no variability at all
        fit.theta_s = 0.0;
        fit.theta_r = lo;
    }
    return fit;
}

}  // namespace flownet

#endif

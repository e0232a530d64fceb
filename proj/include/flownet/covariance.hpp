#ifndef FLOWNET_COVARIANCE_HPP
#define FLOWNET_COVARIANCE_HPP

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <vector>

#include "flownet/common.hpp"
#include "flownet/kernel.hpp"
#include "flownet/markov.hpp"
#include "flownet/network.hpp"
#include "flownet/paths.hpp"

namespace flownet {

// Cov(Z_x, Z_y) by explicit path enumeration over both orientations.
// Exact up to the enumeration truncation; works for every kernel family.
inline double cov_pathsum(const DirectedNetwork& net, const MarkovSolution& markov,
                          const KernelSpec& k, int x, int y,
                          EnumerateOptions opt = {}) {
    if (x == y) return k.sill;
    if (!markov.reach[x][y] && !markov.reach[y][x]) return 0.0;
    if (k.kind == KernelKind::exponential && opt.decay_rate == 0.0)
        opt.decay_rate = 1.0 / k.range;
    opt.max_length = std::min(opt.max_length, k.support_radius());

    double cov = 0.0;
    for (const auto& p : enumerate_paths(net, markov, x, y, opt))
        cov += p.weight * kernel_cov(k, p.length);
    for (const auto& p : enumerate_paths(net, markov, y, x, opt))
        cov += p.weight * kernel_cov(k, p.length);
    return cov;
}

// Network covariance matrix for the exponential kernel in closed form.
// The kernel's semigroup property turns the path sum into a Neumann
// series: with P[a,b] = pi[a,b] / sqrt(influx(b)) and R = P decayed
// edge-wise by exp(-length/theta_r),
//   S  = (I - R)^{-1}                 accumulates all paths,
//   S* = S with rows divided by diag  removes cycles at the origin,
// and the off-diagonal covariance is S*[x,y] * U(y,x) / sqrt(U(x) U(y)),
// symmetrized over both orientations with the diagonal pinned to theta_s.
inline Eigen::MatrixXd cov_matrix_exponential(const DirectedNetwork& net,
                                              const MarkovSolution& markov,
                                              double theta_s, double theta_r) {
    if (theta_s <= 0 || theta_r <= 0)
        throw validation_error("sill and range must be positive");
    const int n = net.size();
    auto in_sum = influx_sums(net);

    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(n, n);
    for (const auto& e : net.edges) {
        if (e.prob <= 0.0) continue;
        R(e.tail, e.head) +=
            e.prob / std::sqrt(in_sum[e.head]) * std::exp(-e.length / theta_r);
    }

    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) - R;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
    Eigen::MatrixXd S = lu.solve(Eigen::MatrixXd::Identity(n, n));
    double residual =
        (A * S - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
    if (residual > 1e-8)
        throw numeric_error("Neumann inversion residual " +
                            std::to_string(residual) +
                            ": recurrent subnetwork suspected");

    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(n, n);
    for (int x = 0; x < n; ++x) {
        for (int y = 0; y < n; ++y) {
            if (x == y) continue;
            if (!markov.reach[x][y]) continue;
            double sstar = S(x, y) / S(x, x);
            double w = markov.u_pair(net, y, x) /
                       std::sqrt(markov.U(x) * markov.U(y));
            double c = theta_s * sstar * w;
            sigma(x, y) += c;
            sigma(y, x) += c;
        }
    }
    sigma.diagonal().setConstant(theta_s);
    return sigma;
}

// Euclidean baseline: isotropic kernel of the straight-line distance.
inline Eigen::MatrixXd cov_matrix_euclidean(
    const std::vector<std::array<double, 2>>& coords, const KernelSpec& k) {
    const int n = static_cast<int>(coords.size());
    Eigen::MatrixXd sigma(n, n);
    for (int i = 0; i < n; ++i) {
        sigma(i, i) = k.sill;
        for (int j = i + 1; j < n; ++j) {
            double h = std::hypot(coords[i][0] - coords[j][0],
                                  coords[i][1] - coords[j][1]);
            sigma(i, j) = sigma(j, i) = kernel_cov(k, h);
        }
    }
    return sigma;
}

inline std::vector<std::array<double, 2>> vertex_coords(const DirectedNetwork& net) {
    std::vector<std::array<double, 2>> coords;
    coords.reserve(net.vertices.size());
    for (const auto& v : net.vertices) coords.push_back({v.x, v.y});
    return coords;
}

}  // namespace flownet

#endif

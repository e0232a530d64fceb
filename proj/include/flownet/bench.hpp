#ifndef FLOWNET_BENCH_HPP
#define FLOWNET_BENCH_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "flownet/common.hpp"
#include "flownet/covariance.hpp"
#include "flownet/estimator.hpp"
#include "flownet/fields.hpp"
#include "flownet/markov.hpp"
#include "flownet/network.hpp"
#include "flownet/rng.hpp"

namespace flownet {

inline double frobenius_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw validation_error("frobenius_diff shape mismatch");
    return (a - b).norm();
}

// KL divergence between zero-mean Gaussians N(0, sigma_true) and
// N(0, sigma_hat).
inline double kl_gaussian(const Eigen::MatrixXd& sigma_true,
                          const Eigen::MatrixXd& sigma_hat) {
    if (sigma_true.rows() != sigma_hat.rows())
        throw validation_error("kl_gaussian shape mismatch");
    const Eigen::Index n = sigma_true.rows();
    Eigen::LLT<Eigen::MatrixXd> llt_hat(sigma_hat);
    if (llt_hat.info() != Eigen::Success)
        throw numeric_error("estimated covariance not positive definite");
    Eigen::LLT<Eigen::MatrixXd> llt_true(sigma_true);
    if (llt_true.info() != Eigen::Success)
        throw numeric_error("true covariance not positive definite");
    auto logdet = [](const Eigen::LLT<Eigen::MatrixXd>& llt) {
        return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    };
    double trace = llt_hat.solve(sigma_true).trace();
    return 0.5 * (trace - static_cast<double>(n) + logdet(llt_hat) - logdet(llt_true));
}

inline double mse(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth) {
    if (pred.size() != truth.size()) throw validation_error("mse size mismatch");
    return (pred - truth).squaredNorm() / static_cast<double>(pred.size());
}

// Desk-scale study domain: `rows` disjoint west-to-east channels packed
// closely in y. Euclidean neighbors across channels carry zero covariance,
// reproducing the topology mismatch the study probes.
inline VelocityGrid make_channel_grid(int cols, int rows, double spacing_x = 10.0,
                                      double spacing_y = 2.0) {
    VelocityGrid grid;
    grid.nx = cols;
    grid.ny = rows;
    grid.spacing_x = spacing_x;
    grid.spacing_y = spacing_y;
    for (int iy = 0; iy < rows; ++iy)
        for (int ix = 0; ix < cols; ++ix) {
            GridNode node;
            node.ix = ix;
            node.iy = iy;
            node.x = ix * spacing_x;
            node.y = iy * spacing_y;
            node.u = 1.0;
            node.v = 0.0;
            node.value = 0.0;
            node.is_water = true;
            grid.nodes.push_back(node);
        }
    grid.rebuild_index();
    return grid;
}

struct StudyRecord {
    double theta_r_true = 0.0;
    int replicate = 0;
    double theta_s_hat = 0.0;
    double theta_r_hat = 0.0;
    double theta_s_euc = 0.0;
    double theta_r_euc = 0.0;
    double frobenius_net = 0.0;
    double frobenius_euc = 0.0;
    double kl_net = 0.0;
    double kl_euc = 0.0;
    double mse_network = 0.0;
    double mse_euclid = 0.0;
    bool degenerate_net = false;
};

struct StudyReport {
    std::vector<StudyRecord> records;

    std::string to_csv() const {
        std::ostringstream out;
        out << "theta_r_true,replicate,theta_s_hat,theta_r_hat,theta_s_euc,"
               "theta_r_euc,frobenius_net,frobenius_euc,kl_net,kl_euc,"
               "mse_network,mse_euclid,degenerate_net\n";
        out.precision(17);
        for (const auto& r : records)
            out << r.theta_r_true << ',' << r.replicate << ',' << r.theta_s_hat
                << ',' << r.theta_r_hat << ',' << r.theta_s_euc << ','
                << r.theta_r_euc << ',' << r.frobenius_net << ','
                << r.frobenius_euc << ',' << r.kl_net << ',' << r.kl_euc << ','
                << r.mse_network << ',' << r.mse_euclid << ','
                << (r.degenerate_net ? 1 : 0) << '\n';
        return out.str();
    }
};

// Scaled replication of the simulation study: simulate from the network
// covariance, hold out a test fraction, estimate with both frameworks,
// rebuild the covariance matrices, and score reconstruction plus simple
// kriging on the hold-out set. Fully determined by the seed.
inline StudyReport run_sim_study(const DirectedNetwork& net,
                                 const std::vector<double>& ranges, double theta_s,
                                 int replicates, double test_fraction,
                                 std::uint64_t seed, int bins = 15) {
    if (replicates < 1) throw validation_error("replicates must be >= 1");
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw validation_error("test fraction must lie in (0,1)");
    const int n = net.size();
    MarkovSolution markov = MarkovSolution::solve(net);
    EstimationPlan plan = EstimationPlan::build(net, markov, bins);
    auto coords = vertex_coords(net);
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(n);

    const int n_test = std::max(1, static_cast<int>(std::lround(test_fraction * n)));

    StudyReport report;
    for (std::size_t ri = 0; ri < ranges.size(); ++ri) {
        double theta_r = ranges[ri];
        Eigen::MatrixXd sigma_true =
            cov_matrix_exponential(net, markov, theta_s, theta_r);
        FieldEnsemble ens = sample_gaussian(mu, sigma_true, replicates,
                                            seed + 1000003ull * (ri + 1));

        for (int rep = 0; rep < replicates; ++rep) {
            Eigen::VectorXd Z = ens.values.row(rep).transpose();

            // deterministic train/test split per (seed, range, replicate)
            std::vector<int> perm(static_cast<std::size_t>(n));
            std::iota(perm.begin(), perm.end(), 0);
            CounterRng rng(seed ^ 0x5b5ull, 7919ull * (ri + 1) + rep);
            for (int i = n - 1; i > 0; --i) {
                int j = static_cast<int>(rng.uniform() * (i + 1));
                std::swap(perm[static_cast<std::size_t>(i)],
                          perm[static_cast<std::size_t>(j)]);
            }
            std::vector<int> test(perm.begin(), perm.begin() + n_test);
            std::vector<int> train(perm.begin() + n_test, perm.end());
            std::sort(test.begin(), test.end());
            std::sort(train.begin(), train.end());
            std::vector<char> is_train(static_cast<std::size_t>(n), 0);
            for (int t : train) is_train[static_cast<std::size_t>(t)] = 1;

            StudyRecord rec;
            rec.theta_r_true = theta_r;
            rec.replicate = rep;

            // network estimate on train-train pairs
            {
                std::vector<std::pair<int, int>> h_inf;
                for (auto [x, y] : plan.h_inf)
                    if (is_train[static_cast<std::size_t>(x)] &&
                        is_train[static_cast<std::size_t>(y)])
                        h_inf.emplace_back(x, y);
                std::vector<int> rows;
                for (std::size_t i = 0; i < plan.connected_pairs.size(); ++i) {
                    auto [x, y] = plan.connected_pairs[i];
                    if (is_train[static_cast<std::size_t>(x)] &&
                        is_train[static_cast<std::size_t>(y)])
                        rows.push_back(static_cast<int>(i));
                }
                Eigen::MatrixXd Wsub(static_cast<Eigen::Index>(rows.size()),
                                     plan.W.cols());
                Eigen::VectorXd gsub(static_cast<Eigen::Index>(rows.size()));
                for (std::size_t i = 0; i < rows.size(); ++i) {
                    auto [x, y] = plan.connected_pairs[static_cast<std::size_t>(rows[i])];
                    Wsub.row(static_cast<Eigen::Index>(i)) = plan.W.row(rows[i]);
                    double d = Z(x) - Z(y);
                    gsub(static_cast<Eigen::Index>(i)) = 0.5 * d * d;
                }
                rec.theta_s_hat = estimate_sill(Z, h_inf);
                Eigen::VectorXd rhs =
                    Eigen::VectorXd::Constant(gsub.size(), rec.theta_s_hat) - gsub;
                double lambda = lambda_rule(Wsub, rhs, rec.theta_s_hat);
                Eigen::VectorXd c_hat = ridge_solve(Wsub, rhs, lambda);
                RangeFit fit = fit_range(c_hat, plan.bins,
                                         KernelKind::exponential, rec.theta_s_hat);
                rec.theta_r_hat = fit.theta_r;
                rec.degenerate_net = fit.degenerate;
            }

            // Euclidean estimate on the train subset
            {
                Eigen::VectorXd Ztr(static_cast<Eigen::Index>(train.size()));
                std::vector<std::array<double, 2>> ctr;
                for (std::size_t i = 0; i < train.size(); ++i) {
                    Ztr(static_cast<Eigen::Index>(i)) = Z(train[i]);
                    ctr.push_back(coords[static_cast<std::size_t>(train[i])]);
                }
                EuclideanFit ef = euclidean_fit(Ztr, ctr, bins);
                rec.theta_s_euc = ef.theta_s;
                rec.theta_r_euc = ef.theta_r;
            }

            // covariance reconstruction error
            Eigen::MatrixXd sigma_net = cov_matrix_exponential(
                net, markov, rec.theta_s_hat, rec.theta_r_hat);
            KernelSpec keuc(KernelKind::exponential,
                            std::max(rec.theta_s_euc, 1e-8 * theta_s),
                            std::max(rec.theta_r_euc, 1e-8));
            Eigen::MatrixXd sigma_euc = cov_matrix_euclidean(coords, keuc);
            rec.frobenius_net = frobenius_diff(sigma_true, sigma_net);
            rec.frobenius_euc = frobenius_diff(sigma_true, sigma_euc);
            rec.kl_net = kl_gaussian(sigma_true, sigma_net);
            rec.kl_euc = kl_gaussian(sigma_true, sigma_euc);

            // simple kriging of the hold-out set
            Eigen::VectorXd obs(static_cast<Eigen::Index>(train.size()));
            for (std::size_t i = 0; i < train.size(); ++i) obs(static_cast<Eigen::Index>(i)) = Z(train[i]);
            KrigingResult kr_net = krige(train, obs, sigma_net, mu, KrigingMode::simple);
            KrigingResult kr_euc = krige(train, obs, sigma_euc, mu, KrigingMode::simple);
            Eigen::VectorXd truth(static_cast<Eigen::Index>(test.size()));
            Eigen::VectorXd pn(truth.size()), pe(truth.size());
            for (std::size_t i = 0; i < test.size(); ++i) {
                truth(static_cast<Eigen::Index>(i)) = Z(test[i]);
                pn(static_cast<Eigen::Index>(i)) = kr_net.predictions(test[i]);
                pe(static_cast<Eigen::Index>(i)) = kr_euc.predictions(test[i]);
            }
            rec.mse_network = mse(pn, truth);
            rec.mse_euclid = mse(pe, truth);
            report.records.push_back(rec);
        }
    }
    return report;
}

}  // namespace flownet

#endif

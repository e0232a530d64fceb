#ifndef FLOWNET_FIELDS_HPP
#define FLOWNET_FIELDS_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "flownet/common.hpp"
#include "flownet/rng.hpp"

namespace flownet {

struct FieldEnsemble {
    int M = 0;
    Eigen::MatrixXd values;  // M x n
    Eigen::VectorXd mean;
    std::uint64_t seed = 0;
};

// Gaussian ensemble from an eigendecomposition square root of sigma.
// Eigenvalues below floor_scale * 1e-10 are clamped to that floor, which
// keeps near-singular matrices factorizable without random jitter. Each
// realization draws from its own counter stream (seed, index).
inline FieldEnsemble sample_gaussian(const Eigen::VectorXd& mu,
                                     const Eigen::MatrixXd& sigma, int M,
                                     std::uint64_t seed,
                                     double floor_scale = -1.0) {
    const Eigen::Index n = sigma.rows();
    if (sigma.cols() != n || mu.size() != n)
        throw validation_error("mean/covariance dimension mismatch");
    if (M < 1) throw validation_error("ensemble size must be >= 1");
    if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-9)
        throw validation_error("covariance matrix is not symmetric");

    if (floor_scale <= 0) floor_scale = sigma.diagonal().maxCoeff();
    double floor = 1e-10 * floor_scale;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma);
    if (eig.info() != Eigen::Success)
        throw numeric_error("eigendecomposition of covariance failed");
    Eigen::VectorXd vals = eig.eigenvalues().cwiseMax(floor);
    Eigen::MatrixXd L = eig.eigenvectors() * vals.cwiseSqrt().asDiagonal();

    FieldEnsemble ens;
    ens.M = M;
    ens.mean = mu;
    ens.seed = seed;
    ens.values.resize(M, n);
    Eigen::VectorXd xi(n);
    for (int m = 0; m < M; ++m) {
        CounterRng rng(seed, static_cast<std::uint64_t>(m));
        for (Eigen::Index i = 0; i < n; ++i) xi(i) = rng.normal();
        ens.values.row(m) = (mu + L * xi).transpose();
    }
    return ens;
}

enum class KrigingMode { simple, ordinary };

struct KrigingResult {
    Eigen::VectorXd predictions;  // over all vertices
    Eigen::VectorXd variances;
};

// Simple kriging is the Gaussian conditional mean; ordinary kriging adds
// the unbiasedness constraint (weights sum to one) via a bordered system.
inline KrigingResult krige(const std::vector<int>& obs_idx,
                           const Eigen::VectorXd& obs_vals,
                           const Eigen::MatrixXd& sigma,
                           const Eigen::VectorXd& mu, KrigingMode mode) {
    const Eigen::Index n = sigma.rows();
    const Eigen::Index k = static_cast<Eigen::Index>(obs_idx.size());
    if (k == 0) throw validation_error("kriging requires observations");
    if (obs_vals.size() != k)
        throw validation_error("observation index/value size mismatch");

    Eigen::MatrixXd S_oo(k, k);
    Eigen::MatrixXd S_ot(k, n);
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < k; ++j)
            S_oo(i, j) = sigma(obs_idx[i], obs_idx[j]);
        for (Eigen::Index t = 0; t < n; ++t) S_ot(i, t) = sigma(obs_idx[i], t);
    }

    KrigingResult res;
    res.predictions.resize(n);
    res.variances.resize(n);

    if (mode == KrigingMode::simple) {
        Eigen::LDLT<Eigen::MatrixXd> ldlt(S_oo);
        if (ldlt.info() != Eigen::Success)
            throw numeric_error("singular observation covariance block");
        Eigen::MatrixXd lambda = ldlt.solve(S_ot);  // k x n weights
        Eigen::VectorXd mu_o(k), z(k);
        for (Eigen::Index i = 0; i < k; ++i) mu_o(i) = mu(obs_idx[i]);
        res.predictions = mu + lambda.transpose() * (obs_vals - mu_o);
        for (Eigen::Index t = 0; t < n; ++t) {
            double var = sigma(t, t) - S_ot.col(t).dot(lambda.col(t));
            res.variances(t) = std::max(var, 0.0);
        }
        return res;
    }

    // ordinary kriging: bordered system per target
    Eigen::MatrixXd B(k + 1, k + 1);
    B.topLeftCorner(k, k) = S_oo;
    B.topRightCorner(k, 1).setOnes();
    B.bottomLeftCorner(1, k).setOnes();
    B(k, k) = 0.0;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    for (Eigen::Index t = 0; t < n; ++t) {
        Eigen::VectorXd rhs(k + 1);
        rhs.head(k) = S_ot.col(t);
        rhs(k) = 1.0;
        Eigen::VectorXd sol = lu.solve(rhs);
        double resid = (B * sol - rhs).cwiseAbs().maxCoeff();
        if (resid > 1e-8)
            throw numeric_error("singular ordinary kriging system");
        Eigen::VectorXd w = sol.head(k);
        double m = sol(k);
        res.predictions(t) = w.dot(obs_vals);
        res.variances(t) =
            std::max(sigma(t, t) - w.dot(S_ot.col(t)) - m, 0.0);
    }
    return res;
}

struct BiasCorrection {
    Eigen::VectorXd bias;       // scalar broadcast or per-vertex
    bool per_vertex = false;
    std::vector<Eigen::VectorXd> residuals;  // per year: corrected - observed
};

// Projection bias over the overlap years. Global mode estimates a single
// scalar offset; per-vertex mode a vector of offsets.
inline BiasCorrection bias_correct(const std::vector<Eigen::VectorXd>& projections,
                                   const std::vector<Eigen::VectorXd>& observations,
                                   bool per_vertex = false) {
    if (projections.empty() || projections.size() != observations.size())
        throw validation_error("bias correction needs matching projection and "
                               "observation years");
    const Eigen::Index n = projections.front().size();
    for (std::size_t y = 0; y < projections.size(); ++y)
        if (projections[y].size() != n || observations[y].size() != n)
            throw validation_error("vertex count mismatch across years");

    BiasCorrection bc;
    bc.per_vertex = per_vertex;
    if (per_vertex) {
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
        for (std::size_t y = 0; y < projections.size(); ++y)
            acc += projections[y] - observations[y];
        bc.bias = acc / static_cast<double>(projections.size());
    } else {
        double acc = 0.0;
        for (std::size_t y = 0; y < projections.size(); ++y)
            acc += (projections[y] - observations[y]).mean();
        bc.bias = Eigen::VectorXd::Constant(
            n, acc / static_cast<double>(projections.size()));
    }
    for (std::size_t y = 0; y < projections.size(); ++y)
        bc.residuals.push_back(projections[y] - bc.bias - observations[y]);
    return bc;
}

// Corrected mean for a projection vector.
inline Eigen::VectorXd apply_bias(const Eigen::VectorXd& projection,
                                  const BiasCorrection& bc) {
    return projection - bc.bias;
}

}  // namespace flownet

#endif

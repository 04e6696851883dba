#pragma once

// Model constructions shared by the unit and acceptance tests.

#include "oracles.hpp"

#include <sgca/models.hpp>

#include <random>

namespace fixture {

using namespace sgca;

/// Three m-dimensional blocks: X1 = y v1 + z1, X2 = y v2 + z2, X3 = z3.
struct TwoLoaded
{
    models::LatentModelSpec spec;
    Matrix truth; // (v1 / 2; v2 / 2; 0)
};

inline TwoLoaded two_loaded_blocks(Index m, std::mt19937_64& gen)
{
    Vector v1 = oracle::random_matrix(m, 1, gen);
    Vector v2 = oracle::random_matrix(m, 1, gen);
    v1.normalize();
    v2.normalize();
    TwoLoaded ex;
    ex.spec.partition = BlockPartition({m, m, m});
    ex.spec.r = 1;
    ex.spec.loadings = {v1, v2, Matrix::Zero(m, 1)};
    ex.spec.noise_covs = {Matrix::Identity(m, m), Matrix::Identity(m, m), Matrix::Identity(m, m)};
    ex.truth = Matrix::Zero(3 * m, 1);
    ex.truth.topRows(m) = v1 / 2.0;
    ex.truth.middleRows(m, m) = v2 / 2.0;
    return ex;
}

/// Sigma_ii = I, Sigma_ij = lambda U_i U_j^T with orthonormal U_i, through
/// loadings sqrt(lambda) U_i and noise I - lambda U_i U_i^T.
inline models::LatentModelSpec equal_corr_blocks(Index k, Index pi, Index r, double lambda,
                                        std::mt19937_64& gen)
{
    models::LatentModelSpec spec;
    spec.partition = BlockPartition(std::vector<Index>(static_cast<std::size_t>(k), pi));
    spec.r = r;
    for (Index b = 0; b < k; ++b) {
        const Matrix u = oracle::random_frame(pi, r, gen);
        spec.loadings.push_back(std::sqrt(lambda) * u);
        spec.noise_covs.push_back(Matrix::Identity(pi, pi) - lambda * u * u.transpose());
    }
    return spec;
}

/// Smallest singular value of Sigma0^{-1/2} U, computed with Eigen.
inline double sigma_r_whitened(const models::LatentModelSpec& spec)
{
    const Index p = spec.partition.total();
    Matrix w = Matrix::Zero(p, spec.r);
    for (Index b = 0; b < spec.partition.count(); ++b) {
        const auto& u = spec.loadings[static_cast<std::size_t>(b)];
        const Matrix sii = u * u.transpose() + spec.noise_covs[static_cast<std::size_t>(b)];
        Eigen::SelfAdjointEigenSolver<Matrix> es(sii);
        const Matrix inv_root = es.operatorInverseSqrt();
        w.middleRows(spec.partition.offset(b), spec.partition.size(b)) = inv_root * u;
    }
    Eigen::JacobiSVD<Matrix> svd(w);
    return svd.singularValues()(spec.r - 1);
}

/// Random latent model satisfying rank(U) = r and sigma_r(Sigma0^{-1/2} U) >= 1
/// (by rejection). Some blocks get rank-deficient or zero loadings.
inline models::LatentModelSpec random_assumption1(std::mt19937_64& gen)
{
    std::uniform_int_distribution<int> kd(2, 4), rd(1, 3), pd(1, 10), kind(0, 5);
    std::uniform_real_distribution<double> scale(1.0, 4.0);
    for (;;) {
        const Index k = kd(gen);
        const Index r = rd(gen);
        std::vector<Index> sizes;
        for (Index b = 0; b < k; ++b) sizes.push_back(pd(gen));
        models::LatentModelSpec spec;
        spec.partition = BlockPartition(sizes);
        spec.r = r;
        if (spec.partition.total() > 40) continue;
        for (Index b = 0; b < k; ++b) {
            const Index pb = sizes[static_cast<std::size_t>(b)];
            Matrix u = scale(gen) * oracle::random_matrix(pb, r, gen);
            const int t = kind(gen);
            if (t == 0) u.setZero();
            else if (t == 1 && r > 1) u.col(r - 1) = u.col(0); // rank drop
            spec.loadings.push_back(u);
            const Matrix g = oracle::random_matrix(pb, pb, gen);
            spec.noise_covs.push_back(0.2 * g * g.transpose() / static_cast<double>(pb) +
                                      0.3 * Matrix::Identity(pb, pb));
        }
        Matrix stacked(spec.partition.total(), r);
        for (Index b = 0; b < k; ++b)
            stacked.middleRows(spec.partition.offset(b), sizes[static_cast<std::size_t>(b)]) =
                spec.loadings[static_cast<std::size_t>(b)];
        if (oracle::rank(stacked) != r) continue;
        if (sigma_r_whitened(spec) < 1.0) continue;
        return spec;
    }
}

/// p - sum rank(U_i) + r - rank(U - U Y^T U), Y = [U_1^+, ..., U_k^+]^T.
inline Index unit_multiplicity_formula(const models::LatentModelSpec& spec)
{
    const Index p = spec.partition.total();
    Matrix u(p, spec.r), y(p, spec.r);
    Index rank_sum = 0;
    for (Index b = 0; b < spec.partition.count(); ++b) {
        const auto& ub = spec.loadings[static_cast<std::size_t>(b)];
        const Index o = spec.partition.offset(b), s = spec.partition.size(b);
        u.middleRows(o, s) = ub;
        y.middleRows(o, s) = oracle::pinv(ub).transpose();
        rank_sum += oracle::rank(ub);
    }
    return p - rank_sum + spec.r - oracle::rank(u - u * y.transpose() * u);
}

} // namespace fixture

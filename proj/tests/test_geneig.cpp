#include "fixtures.hpp"
#include "oracles.hpp"

#include <sgca/geneig.hpp>
#include <sgca/models.hpp>

#include <gtest/gtest.h>

using namespace sgca;
using linalg::SymMatrix;

namespace {

CovariancePair random_pair(Index p, const std::vector<Index>& sizes, std::mt19937_64& gen)
{
    return CovariancePair(SymMatrix::symmetrized(oracle::random_spd(p, gen)), BlockPartition(sizes));
}

// Largest principal angle between the column spaces of a and b.
double max_principal_angle(const Matrix& a, const Matrix& b)
{
    const Matrix qa = Eigen::HouseholderQR<Matrix>(a).householderQ() * Matrix::Identity(a.rows(), oracle::rank(a));
    const Matrix qb = Eigen::HouseholderQR<Matrix>(b).householderQ() * Matrix::Identity(b.rows(), oracle::rank(b));
    Eigen::JacobiSVD<Matrix> svd(qa.transpose() * qb);
    const double smallest = svd.singularValues().minCoeff();
    return std::acos(std::min(1.0, smallest));
}

} // namespace

TEST(GenEig, InvariantsOnRandomPairs)
{
    std::mt19937_64 gen(1);
    for (int trial = 0; trial < 10; ++trial) {
        const CovariancePair cov = random_pair(12, {4, 5, 3}, gen);
        const Index r = 1 + trial % 4;
        const auto d = geneig::gen_eig(cov, r);
        const Matrix& s0 = cov.sigma0().mat();
        const Matrix& a = d.leading.entries;
        const Matrix& b = d.trailing;
        EXPECT_LT((a.transpose() * s0 * a - Matrix::Identity(r, r)).norm(), 1e-8);
        EXPECT_LT((b.transpose() * s0 * b - Matrix::Identity(12 - r, 12 - r)).norm(), 1e-8);
        EXPECT_LT((a.transpose() * s0 * b).norm(), 1e-8);
        const Matrix recon = s0 * a * d.values.head(r).asDiagonal() * a.transpose() * s0 +
                             s0 * b * d.values.tail(12 - r).asDiagonal() * b.transpose() * s0;
        EXPECT_LT((recon - cov.sigma().mat()).norm() / cov.sigma().mat().norm(), 1e-7);
        EXPECT_NEAR((a.transpose() * cov.sigma().mat() * a).trace(), d.values.head(r).sum(), 1e-8);

        const auto [vals, vecs] = oracle::gen_eig(cov.sigma().mat(), s0);
        EXPECT_LT((vals - d.values).norm(), 1e-9);
        EXPECT_LT(geneig::mat_dist(a, vecs.leftCols(r)), 1e-7);
        ASSERT_TRUE(d.leading.partition);
        EXPECT_EQ(*d.leading.partition, cov.partition());
    }
}

TEST(GenEig, SigmaEqualsSigma0)
{
    std::mt19937_64 gen(2);
    const Matrix m = oracle::random_spd(6, gen);
    Matrix bd = Matrix::Zero(6, 6);
    bd.topLeftCorner(3, 3) = m.topLeftCorner(3, 3);
    bd.bottomRightCorner(3, 3) = m.bottomRightCorner(3, 3);
    const CovariancePair cov(SymMatrix::symmetrized(bd), BlockPartition({3, 3}));
    const auto d = geneig::gen_eig(cov, 2);
    for (Index j = 0; j < 6; ++j) EXPECT_NEAR(d.values(j), 1.0, 1e-12);
    const Matrix& a = d.leading.entries;
    EXPECT_LT((a.transpose() * bd * a - Matrix::Identity(2, 2)).norm(), 1e-10);
}

TEST(GenEig, TwoLoadedBlocksClosedForm)
{
    std::mt19937_64 gen(3);
    const auto ex = fixture::two_loaded_blocks(10, gen);
    const auto d = geneig::gen_eig(models::latent_cov(ex.spec), 1);
    EXPECT_LT(geneig::mat_dist(d.leading.entries, ex.truth), 1e-8);
    EXPECT_NEAR(d.values(0), 1.5, 1e-12);
    EXPECT_LT(d.leading.block(2).norm(), 1e-12);
}

TEST(GenEig, DesignGap)
{
    const auto g = models::gca_design_5_1(1, 4);
    EXPECT_NEAR(g.spectrum(0), 3.0, 1e-8);
    EXPECT_NEAR(g.spectrum(1), 1.0, 1e-8);
}

TEST(GenEig, Errors)
{
    std::mt19937_64 gen(4);
    const CovariancePair cov = random_pair(5, {2, 3}, gen);
    EXPECT_THROW(geneig::gen_eig(cov, 6), parameter_error);
    Matrix sing = Matrix::Identity(4, 4);
    sing(3, 3) = 0.0;
    EXPECT_THROW(geneig::gen_eig(CovariancePair(SymMatrix(sing), BlockPartition({2, 2})), 1), singular_error);
}

TEST(GenEig, BlockColumnSpaces)
{
    // Col(A_i) lies in Col(Sigma_ii^{-1} U_i) on exact population input
    std::mt19937_64 gen(5);
    for (int trial = 0; trial < 20; ++trial) {
        const auto spec = fixture::random_assumption1(gen);
        const CovariancePair cov = models::latent_cov(spec);
        const auto d = geneig::gen_eig(cov, spec.r);
        for (Index i = 0; i < spec.partition.count(); ++i) {
            const Matrix& u = spec.loadings[static_cast<std::size_t>(i)];
            const Matrix ai = d.leading.block(i);
            if (oracle::rank(ai) == 0) continue;
            const Matrix target = cov.block(i).llt().solve(u);
            // every column of A_i is in the target span
            Eigen::JacobiSVD<Matrix> svd(target, Eigen::ComputeThinU);
            const Index k = oracle::rank(target);
            const Matrix basis = svd.matrixU().leftCols(k);
            EXPECT_LT((ai - basis * (basis.transpose() * ai)).norm(), 1e-6 * ai.norm());
            if (oracle::rank(ai) == k) EXPECT_LT(max_principal_angle(ai, target), 1e-6);
        }
    }
}

TEST(GenEig, CorrelationPcaSpecialCase)
{
    // all blocks of size one: Sigma0^{1/2} A spans the top eigenvectors of
    // the correlation matrix
    std::mt19937_64 gen(6);
    const Matrix m = oracle::random_spd(8, gen);
    const CovariancePair cov(SymMatrix::symmetrized(m), BlockPartition::singletons(8));
    const auto d = geneig::gen_eig(cov, 3);
    const Vector sd = m.diagonal().cwiseSqrt();
    const Matrix corr = sd.cwiseInverse().asDiagonal() * m * sd.cwiseInverse().asDiagonal();
    const auto [vals, vecs] = oracle::jacobi_eig(corr);
    EXPECT_LT(geneig::mat_dist(sd.asDiagonal() * d.leading.entries, vecs.leftCols(3)), 1e-8);
}

TEST(RestrictedGenEig, MatchesDenseSubmatrixSolve)
{
    std::mt19937_64 gen(7);
    for (int trial = 0; trial < 50; ++trial) {
        const CovariancePair cov = random_pair(6, {2, 2, 2}, gen);
        std::vector<Index> support{0, 2, 3, 5};
        if (trial % 2) support = {1, 2, 4};
        const Index r = 1 + trial % 2;
        const auto d = geneig::restricted_gen_eig(cov, support, r);
        const Matrix sub = cov.sigma().mat()(support, support);
        const Matrix sub0 = cov.sigma0().mat()(support, support);
        const auto [vals, vecs] = oracle::gen_eig(sub, sub0);
        EXPECT_LT((vals - d.values).norm(), 1e-10);
        Matrix padded = Matrix::Zero(6, r);
        for (std::size_t i = 0; i < support.size(); ++i) padded.row(support[i]) = vecs.row(static_cast<Index>(i)).head(r);
        EXPECT_LT(geneig::mat_dist(d.leading.entries, padded), 1e-10);
        for (Index row = 0; row < 6; ++row) {
            if (std::find(support.begin(), support.end(), row) == support.end()) {
                EXPECT_EQ(d.leading.entries.row(row).norm(), 0.0);
            }
        }
    }
}

TEST(RestrictedGenEig, FullSupportAndExactRecovery)
{
    std::mt19937_64 gen(8);
    const CovariancePair cov = random_pair(7, {3, 4}, gen);
    std::vector<Index> all(7);
    std::iota(all.begin(), all.end(), Index{0});
    const auto full = geneig::gen_eig(cov, 2);
    const auto restricted = geneig::restricted_gen_eig(cov, all, 2);
    EXPECT_LT((full.values - restricted.values).norm(), 1e-12);
    EXPECT_LT(geneig::mat_dist(full.leading.entries, restricted.leading.entries), 1e-10);

    // noiseless population input with a 5-row-per-block support
    const auto g = models::gca_design_5_1(2, 31);
    std::vector<Index> s;
    for (Index i = 0; i < g.cov.dim(); ++i)
        if (g.a_true.entries.row(i).norm() > 1e-12) s.push_back(i);
    ASSERT_EQ(s.size(), 15u);
    const auto d = geneig::restricted_gen_eig(g.cov, s, 2);
    EXPECT_LT(geneig::mat_dist(d.leading.entries, g.a_true.entries), 1e-8);

    EXPECT_THROW(geneig::restricted_gen_eig(cov, {1}, 2), parameter_error);
    EXPECT_THROW(geneig::restricted_gen_eig(cov, {1, 9}, 1), parameter_error);
}

TEST(MatDist, Examples)
{
    std::mt19937_64 gen(9);
    const Matrix u = oracle::random_matrix(7, 3, gen);
    EXPECT_LT(geneig::mat_dist(u, u), 1e-12);
    EXPECT_LT(geneig::mat_dist(u, u * oracle::random_frame(3, 3, gen)), 1e-12);
    Matrix e1 = Matrix::Zero(2, 1), e2 = Matrix::Zero(2, 1);
    e1(0, 0) = 1;
    e2(1, 0) = 1;
    EXPECT_NEAR(geneig::mat_dist(e1, e2), std::sqrt(2.0), 1e-15);
    EXPECT_THROW(geneig::mat_dist(e1, u), parameter_error);
}

TEST(MatDist, MetricProperties)
{
    std::mt19937_64 gen(10);
    for (int trial = 0; trial < 300; ++trial) {
        const Index r = 1 + trial % 3;
        const Matrix u = oracle::random_matrix(6, r, gen);
        const Matrix v = oracle::random_matrix(6, r, gen);
        const Matrix w = oracle::random_matrix(6, r, gen);
        const double uv = geneig::mat_dist(u, v);
        EXPECT_NEAR(uv, geneig::mat_dist(v, u), 1e-12);
        EXPECT_LE(geneig::mat_dist(u, w), uv + geneig::mat_dist(v, w) + 1e-12);
        // nuclear-norm formula
        Eigen::JacobiSVD<Matrix> svd(u.transpose() * v);
        const double formula = u.squaredNorm() + v.squaredNorm() - 2.0 * svd.singularValues().sum();
        EXPECT_NEAR(uv * uv, std::max(0.0, formula), 1e-10);
        // dist^2 <= ||UU^T - VV^T||^2 / (2 (sqrt 2 - 1) sigma_r(V)^2)
        Eigen::JacobiSVD<Matrix> sv(v);
        const double sr = sv.singularValues()(r - 1);
        const double bound = (u * u.transpose() - v * v.transpose()).squaredNorm() /
                             (2.0 * (std::sqrt(2.0) - 1.0) * sr * sr);
        EXPECT_LE(uv * uv, bound * (1 + 1e-12));
        if (r == 1) EXPECT_NEAR(uv, oracle::dist_r1(u.col(0), v.col(0)), 1e-12);
    }
}

TEST(PredictionLoss, Examples)
{
    std::mt19937_64 gen(11);
    const Matrix v = oracle::random_matrix(5, 2, gen);
    const SymMatrix sx = SymMatrix::symmetrized(oracle::random_spd(5, gen));
    EXPECT_LT(geneig::prediction_loss(v, v, sx), 1e-20);
    const Matrix w = oracle::random_matrix(5, 2, gen);
    EXPECT_NEAR(geneig::prediction_loss(v, w, SymMatrix::identity(5)),
                std::pow(geneig::mat_dist(w, v), 2), 1e-12);

    // 2 x 1, Sigma_x = diag(4, 1): min over signs of 4 (a1 -+ b1)^2 + (a2 -+ b2)^2
    Matrix t(2, 1), h(2, 1);
    t << 1, 2;
    h << -0.5, -1;
    Vector d(2);
    d << 4, 1;
    const double plus = 4 * std::pow(-0.5 - 1, 2) + std::pow(-1 - 2.0, 2);
    const double minus = 4 * std::pow(0.5 - 1, 2) + std::pow(1 - 2.0, 2);
    EXPECT_NEAR(geneig::prediction_loss(t, h, SymMatrix::diagonal(d)), std::min(plus, minus), 1e-13);
    EXPECT_THROW(geneig::prediction_loss(t, h, SymMatrix::identity(3)), parameter_error);
}

TEST(CorrPcaLoss, Examples)
{
    Vector d(3);
    d << 0.25, 4.0, 1.0;
    Matrix e(3, 1);
    e << 0.6, 0.0, -0.8;
    const Matrix a = d.cwiseSqrt().cwiseInverse().asDiagonal() * e;
    EXPECT_LT(geneig::corr_pca_loss(e, a, SymMatrix::diagonal(d)), 1e-24);
    Matrix b(3, 1);
    b << 0.1, 0.2, 0.3;
    EXPECT_NEAR(geneig::corr_pca_loss(e, b, SymMatrix::identity(3)), std::pow(oracle::dist_r1(b, e), 2), 1e-14);
    // small diagonal case by sign brute force
    const Vector scaled = d.cwiseSqrt().asDiagonal() * b;
    EXPECT_NEAR(geneig::corr_pca_loss(e, b, SymMatrix::diagonal(d)), std::pow(oracle::dist_r1(scaled, e), 2), 1e-14);

    EXPECT_THROW(geneig::corr_pca_loss(e, b, SymMatrix(Matrix::Ones(3, 3))), parameter_error);
    Vector neg(3);
    neg << 1, -1, 1;
    EXPECT_THROW(geneig::corr_pca_loss(e, b, SymMatrix::diagonal(neg)), not_psd_error);
}

TEST(LoadingMatrix, SupportAndBlocks)
{
    Matrix m = Matrix::Zero(5, 2);
    m(1, 0) = 1;
    m(4, 1) = -2;
    LoadingMatrix l(m, BlockPartition({2, 3}));
    EXPECT_EQ(l.row_support(), (std::vector<Index>{1, 4}));
    EXPECT_EQ(l.block(1).rows(), 3);
    EXPECT_THROW(LoadingMatrix(m).block(0), parameter_error);
    m(0, 0) = std::nan("");
    EXPECT_THROW(LoadingMatrix{m}, numerical_error);
}

#include "oracles.hpp"

#include <sgca/linalg.hpp>

#include <gtest/gtest.h>

using namespace sgca;
using linalg::SymMatrix;

namespace {

double rel_err(const Matrix& a, const Matrix& b)
{
    return (a - b).norm() / std::max(1.0, b.norm());
}

Matrix mat2(double a, double b, double c, double d)
{
    Matrix m(2, 2);
    m << a, b, c, d;
    return m;
}

} // namespace

TEST(SymMatrix, StorageIsExactlySymmetric)
{
    std::mt19937_64 gen(3);
    Matrix m = oracle::random_matrix(7, 7, gen);
    m = 0.5 * (m + m.transpose()).eval();
    m(2, 5) += 1e-13;
    const SymMatrix s(m);
    EXPECT_TRUE(s.mat() == s.mat().transpose());
}

TEST(SymMatrix, RejectsBadInput)
{
    EXPECT_THROW(SymMatrix(Matrix::Zero(2, 3)), parameter_error);
    EXPECT_THROW(SymMatrix(mat2(1, 2, 0, 1)), parameter_error);
    Matrix nan = Matrix::Identity(2, 2);
    nan(0, 0) = std::nan("");
    EXPECT_THROW(SymMatrix{nan}, parameter_error);
}

TEST(SymEig, DiagonalInput)
{
    Vector d(3);
    d << 3, 1, 2;
    const auto e = linalg::sym_eig(SymMatrix::diagonal(d));
    EXPECT_NEAR(e.values(0), 3, 1e-14);
    EXPECT_NEAR(e.values(1), 2, 1e-14);
    EXPECT_NEAR(e.values(2), 1, 1e-14);
    // signed permutation of the identity
    EXPECT_TRUE(e.vectors.cwiseAbs().isApprox(Matrix((Matrix(3, 3) << 1, 0, 0, 0, 0, 1, 0, 1, 0).finished()), 1e-14));
}

TEST(SymEig, Identity)
{
    const auto e = linalg::sym_eig(SymMatrix::identity(4));
    for (Index i = 0; i < 4; ++i) EXPECT_NEAR(e.values(i), 1.0, 1e-14);
}

TEST(SymEig, TwoByTwo)
{
    const auto e = linalg::sym_eig(SymMatrix(mat2(2, 1, 1, 2)));
    EXPECT_NEAR(e.values(0), 3, 1e-14);
    EXPECT_NEAR(e.values(1), 1, 1e-14);
    const double h = 1.0 / std::sqrt(2.0);
    // first nonzero component positive
    EXPECT_NEAR(e.vectors(0, 0), h, 1e-14);
    EXPECT_NEAR(e.vectors(1, 0), h, 1e-14);
    EXPECT_NEAR(e.vectors(0, 1), h, 1e-14);
    EXPECT_NEAR(e.vectors(1, 1), -h, 1e-14);
}

TEST(SymEig, RoundTripAgainstJacobi)
{
    std::mt19937_64 gen(11);
    for (Index n : {1, 2, 5, 17, 60, 200}) {
        Matrix m = oracle::random_matrix(n, n, gen);
        m = (m + m.transpose()).eval();
        const auto e = linalg::sym_eig(SymMatrix(m));
        for (Index i = 1; i < n; ++i) EXPECT_GE(e.values(i - 1), e.values(i));
        EXPECT_LT(rel_err(e.vectors * e.values.asDiagonal() * e.vectors.transpose(), m), 1e-9) << n;
        EXPECT_LT((e.vectors.transpose() * e.vectors - Matrix::Identity(n, n)).norm(), 1e-10 * n);
        if (n <= 60) {
            const auto [vals, vecs] = oracle::jacobi_eig(m);
            EXPECT_LT((vals - e.values).norm(), 1e-9 * std::max(1.0, vals.norm())) << n;
        }
        const Vector only = linalg::sym_eigvals(SymMatrix(m));
        EXPECT_LT((only - e.values).norm(), 1e-9 * std::max(1.0, only.norm()));
    }
}

TEST(SymEig, TopPairsMatchFullSolve)
{
    std::mt19937_64 gen(5);
    const Matrix m = oracle::random_spd(40, gen);
    const auto full = linalg::sym_eig(SymMatrix(m));
    const auto top = linalg::sym_eig_top(SymMatrix(m), 6);
    ASSERT_EQ(top.values.size(), 6);
    EXPECT_LT((top.values - full.values.head(6)).norm(), 1e-10);
    for (Index j = 0; j < 6; ++j) {
        EXPECT_NEAR(std::abs(top.vectors.col(j).dot(full.vectors.col(j))), 1.0, 1e-8);
    }
    EXPECT_EQ(linalg::sym_eig_top(SymMatrix(m), 0).values.size(), 0);
    EXPECT_THROW(linalg::sym_eig_top(SymMatrix(m), 41), parameter_error);
}

TEST(SymEig, DiagnosticNamesDimension)
{
    const std::string msg = linalg::detail::dim_message("sym_eig", 37, 5);
    EXPECT_NE(msg.find("37x37"), std::string::npos);
}

TEST(SymEig, SignConvention)
{
    std::mt19937_64 gen(8);
    Matrix m = oracle::random_matrix(9, 9, gen);
    m = (m + m.transpose()).eval();
    const auto e = linalg::sym_eig(SymMatrix(m));
    for (Index j = 0; j < 9; ++j) {
        for (Index i = 0; i < 9; ++i) {
            if (std::abs(e.vectors(i, j)) > 1e-10) {
                EXPECT_GT(e.vectors(i, j), 0.0);
                break;
            }
        }
    }
    const auto again = linalg::sym_eig(SymMatrix(m));
    EXPECT_TRUE(again.vectors == e.vectors);
}

TEST(PrincipalSqrt, Examples)
{
    EXPECT_LT((linalg::principal_sqrt(SymMatrix::identity(5)).mat() - Matrix::Identity(5, 5)).norm(), 1e-14);
    Vector d(2);
    d << 4, 9;
    EXPECT_LT((linalg::principal_sqrt(SymMatrix::diagonal(d)).mat() - mat2(2, 0, 0, 3)).norm(), 1e-14);
    const double r3 = std::sqrt(3.0);
    const Matrix expect = 0.5 * mat2(r3 + 1, r3 - 1, r3 - 1, r3 + 1);
    EXPECT_LT((linalg::principal_sqrt(SymMatrix(mat2(2, 1, 1, 2))).mat() - expect).norm(), 1e-14);
}

TEST(PrincipalSqrt, RandomPsdReconstructs)
{
    std::mt19937_64 gen(21);
    for (Index n : {3, 10, 50}) {
        const Matrix g = oracle::random_matrix(n, n / 2 + 1, gen);
        const Matrix m = g * g.transpose(); // rank deficient for n > 3
        const Matrix root = linalg::principal_sqrt(SymMatrix::symmetrized(m)).mat();
        EXPECT_LT(rel_err(root * root, m), 1e-8);
        EXPECT_GT(oracle::jacobi_eig(root).first.minCoeff(), -1e-10);
    }
}

TEST(PrincipalSqrt, ClampsTinyNegativeRejectsLarger)
{
    Vector d(2);
    d << 1.0, -5e-11;
    const Matrix root = linalg::principal_sqrt(SymMatrix::diagonal(d)).mat();
    EXPECT_EQ(root(1, 1), 0.0);
    d(1) = -1e-6;
    try {
        linalg::principal_sqrt(SymMatrix::diagonal(d));
        FAIL() << "expected not_psd_error";
    } catch (const not_psd_error& e) {
        EXPECT_NEAR(e.eigenvalue(), -1e-6, 1e-18);
    }
}

TEST(InvPrincipalSqrt, Examples)
{
    EXPECT_LT((linalg::inv_principal_sqrt(SymMatrix::identity(3)).mat() - Matrix::Identity(3, 3)).norm(), 1e-14);
    Vector d(2);
    d << 4, 0.25;
    EXPECT_LT((linalg::inv_principal_sqrt(SymMatrix::diagonal(d)).mat() - mat2(0.5, 0, 0, 2)).norm(), 1e-14);
    const double r3 = std::sqrt(3.0);
    const Matrix root = 0.5 * mat2(r3 + 1, r3 - 1, r3 - 1, r3 + 1);
    const Matrix inv = linalg::inv_principal_sqrt(SymMatrix(mat2(2, 1, 1, 2))).mat();
    EXPECT_LT((inv - root.inverse()).norm(), 1e-13);
}

TEST(InvPrincipalSqrt, WhitensRandomSpd)
{
    std::mt19937_64 gen(4);
    const Matrix m = oracle::random_spd(30, gen);
    const Matrix w = linalg::inv_principal_sqrt(SymMatrix::symmetrized(m)).mat();
    EXPECT_LT((w * m * w - Matrix::Identity(30, 30)).norm(), 1e-8 * 30);
}

TEST(InvPrincipalSqrt, SingularCarriesEigenvalue)
{
    Vector d(3);
    d << 1, 1, 1e-14;
    try {
        linalg::inv_principal_sqrt(SymMatrix::diagonal(d));
        FAIL() << "expected singular_error";
    } catch (const singular_error& e) {
        EXPECT_NEAR(e.min_eigenvalue(), 1e-14, 1e-20);
    }
}

TEST(Procrustes, Examples)
{
    std::mt19937_64 gen(2);
    const Matrix u = oracle::random_matrix(6, 3, gen);
    const auto same = linalg::procrustes_align(u, u);
    EXPECT_LT((same.rotation - Matrix::Identity(3, 3)).norm(), 1e-12);
    EXPECT_LT((same.aligned - u).norm(), 1e-12);

    const Vector v = oracle::random_matrix(5, 1, gen);
    const auto flip = linalg::procrustes_align(-v, v);
    EXPECT_NEAR(flip.rotation(0, 0), -1.0, 1e-14);
    EXPECT_LT((flip.aligned - v).norm(), 1e-12);

    Matrix e1 = Matrix::Zero(2, 1), e2 = Matrix::Zero(2, 1);
    e1(0, 0) = 1;
    e2(1, 0) = 1;
    const auto orth = linalg::procrustes_align(e1, e2);
    EXPECT_NEAR(std::abs(orth.rotation(0, 0)), 1.0, 1e-14);
    EXPECT_NEAR((orth.aligned - e2).norm(), std::sqrt(2.0), 1e-14);
    EXPECT_THROW(linalg::procrustes_align(e1, Matrix::Zero(3, 1)), parameter_error);
}

TEST(Procrustes, ResidualProperties)
{
    std::mt19937_64 gen(9);
    for (int trial = 0; trial < 200; ++trial) {
        const Index r = 1 + trial % 4;
        const Matrix u = oracle::random_matrix(8, r, gen);
        const Matrix v = oracle::random_matrix(8, r, gen);
        const auto res = linalg::procrustes_align(u, v);
        EXPECT_LT((res.rotation.transpose() * res.rotation - Matrix::Identity(r, r)).norm(), 1e-12);
        EXPECT_LT((res.aligned - u * res.rotation).norm(), 1e-12);
        const double resid = (res.aligned - v).norm();
        EXPECT_LE(resid, (u - v).norm() + 1e-12);
        // no random rotation does better
        const Matrix q = oracle::random_frame(r, r, gen);
        EXPECT_LE(resid, (u * q - v).norm() + 1e-12);
        if (r == 1) EXPECT_NEAR(resid, oracle::dist_r1(u.col(0), v.col(0)), 1e-12);
    }
}

TEST(Procrustes, RankDeficientCrossProduct)
{
    // u^T v = 0: every rotation is optimal, the residual is still fixed
    Matrix u = Matrix::Zero(4, 2), v = Matrix::Zero(4, 2);
    u(0, 0) = 1;
    u(1, 1) = 2;
    v(2, 0) = 3;
    v(3, 1) = 1;
    const auto res = linalg::procrustes_align(u, v);
    EXPECT_NEAR((res.aligned - v).norm(), std::sqrt(15.0), 1e-12);
    EXPECT_LT((res.rotation.transpose() * res.rotation - Matrix::Identity(2, 2)).norm(), 1e-12);
}

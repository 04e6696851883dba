#pragma once

#include <sgca/types.hpp>

#include <algorithm>
#include <vector>

namespace sgca::geneig {

/// Solution of |Sigma - lambda Sigma0| = 0: all generalized eigenvalues
/// (descending), the leading r loadings A and the trailing p - r loadings
/// B, normalized so that [A B]^T Sigma0 [A B] = I.
struct GenEigDecomp
{
    Vector values;
    LoadingMatrix leading;
    Matrix trailing;
};

/// Block-diagonal Sigma0^{-1/2}, computed one block at a time.
inline Matrix block_inv_sqrt(const SymMatrix& sigma0, const BlockPartition& part)
{
    Matrix out = Matrix::Zero(sigma0.dim(), sigma0.dim());
    for (Index b = 0; b < part.count(); ++b) {
        const Index o = part.offset(b), s = part.size(b);
        out.block(o, o, s, s) = linalg::inv_principal_sqrt(
            SymMatrix::symmetrized(sigma0.mat().block(o, o, s, s))).mat();
    }
    return out;
}

/// Block-diagonal Sigma0^{1/2}.
inline Matrix block_sqrt(const SymMatrix& sigma0, const BlockPartition& part)
{
    Matrix out = Matrix::Zero(sigma0.dim(), sigma0.dim());
    for (Index b = 0; b < part.count(); ++b) {
        const Index o = part.offset(b), s = part.size(b);
        out.block(o, o, s, s) = linalg::principal_sqrt(
            SymMatrix::symmetrized(sigma0.mat().block(o, o, s, s))).mat();
    }
    return out;
}

namespace detail {

inline GenEigDecomp whitened_solve(const SymMatrix& sigma, const Matrix& whitener,
                                   Index r)
{
    const SymMatrix whitened =
        SymMatrix::symmetrized(whitener * sigma.mat() * whitener);
    linalg::EigenPairs e = linalg::sym_eig(whitened);
    const Matrix loadings = whitener * e.vectors;
    const Index p = sigma.dim();
    GenEigDecomp out;
    out.values = std::move(e.values);
    out.leading = LoadingMatrix(loadings.leftCols(r));
    out.trailing = loadings.rightCols(p - r);
    return out;
}

} // namespace detail

/// Generalized eigendecomposition of (Sigma, Sigma0) by whitening:
/// eigendecompose Sigma0^{-1/2} Sigma Sigma0^{-1/2} and map back.
inline GenEigDecomp gen_eig(const CovariancePair& cov, Index r)
{
    if (r < 0 || r > cov.dim()) {
        throw parameter_error("gen_eig: r must lie in [0, p]");
    }
    GenEigDecomp out = detail::whitened_solve(
        cov.sigma(), block_inv_sqrt(cov.sigma0(), cov.partition()), r);
    out.leading.partition = cov.partition();
    return out;
}

/// Generalized eigenproblem restricted to the principal submatrices
/// indexed by `support`, zero-padded back to p rows. `values` holds the
/// |support| restricted eigenvalues.
inline GenEigDecomp restricted_gen_eig(const CovariancePair& cov_hat,
                                       std::vector<Index> support, Index r)
{
    std::sort(support.begin(), support.end());
    support.erase(std::unique(support.begin(), support.end()), support.end());
    const auto m = static_cast<Index>(support.size());
    if (m < r) {
        throw parameter_error("restricted_gen_eig: support smaller than r");
    }
    if (m > 0 && (support.front() < 0 || support.back() >= cov_hat.dim())) {
        throw parameter_error("restricted_gen_eig: support index out of range");
    }
    const SymMatrix sub = cov_hat.sigma().principal_submatrix(support);
    const SymMatrix sub0 = cov_hat.sigma0().principal_submatrix(support);
    GenEigDecomp small = detail::whitened_solve(
        sub, linalg::inv_principal_sqrt(sub0).mat(), r);

    const Index p = cov_hat.dim();
    Matrix lead = Matrix::Zero(p, r);
    Matrix trail = Matrix::Zero(p, m - r);
    for (Index i = 0; i < m; ++i) {
        lead.row(support[i]) = small.leading.entries.row(i);
        trail.row(support[i]) = small.trailing.row(i);
    }
    GenEigDecomp out;
    out.values = std::move(small.values);
    out.leading = LoadingMatrix(std::move(lead), cov_hat.partition());
    out.trailing = std::move(trail);
    return out;
}

/// min over orthogonal P of ||u P - v||_F. Evaluated as the residual of
/// the Procrustes alignment, which avoids the cancellation in
/// ||u||^2 + ||v||^2 - 2 ||u^T v||_*.
inline double mat_dist(const Matrix& u, const Matrix& v)
{
    if (u.rows() != v.rows() || u.cols() != v.cols()) {
        throw parameter_error("mat_dist: shape mismatch");
    }
    return (linalg::procrustes_align(u, v).aligned - v).norm();
}

inline double mat_dist_squared(const Matrix& u, const Matrix& v)
{
    const double d = mat_dist(u, v);
    return d * d;
}

/// inf over O of ||Sigma_x^{1/2} (v_hat O - v_true)||_F^2.
inline double prediction_loss(const Matrix& v_true, const Matrix& v_hat,
                              const SymMatrix& sigma_x)
{
    if (v_true.rows() != sigma_x.dim()) {
        throw parameter_error("prediction_loss: sigma_x dimension mismatch");
    }
    const Matrix root = linalg::principal_sqrt(sigma_x).mat();
    return mat_dist_squared(root * v_hat, root * v_true);
}

/// min over O of ||Sigma0_hat^{1/2} a_hat O - e_r||_F^2 for diagonal
/// Sigma0_hat.
inline double corr_pca_loss(const Matrix& e_r, const Matrix& a_hat,
                            const SymMatrix& sigma0_hat_diag)
{
    const Matrix& d = sigma0_hat_diag.mat();
    if (d.rows() != a_hat.rows()) {
        throw parameter_error("corr_pca_loss: dimension mismatch");
    }
    if (!d.isDiagonal(0.0)) {
        throw parameter_error("corr_pca_loss: sigma0_hat must be diagonal");
    }
    const Vector diag = d.diagonal();
    if (diag.minCoeff() < 0.0) {
        throw not_psd_error("corr_pca_loss: negative variance", diag.minCoeff());
    }
    const Matrix scaled = diag.cwiseSqrt().asDiagonal() * a_hat;
    return mat_dist_squared(scaled, e_r);
}

} // namespace sgca::geneig

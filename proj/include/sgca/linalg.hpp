#pragma once

#include <sgca/error.hpp>

#include <Eigen/Dense>
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

namespace sgca {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace linalg {

/// Dense symmetric matrix. Storage is exactly symmetric and finite.
class SymMatrix
{
public:
    SymMatrix() = default;

    /// Accepts `m` if it is square, finite and symmetric up to a relative
    /// tolerance of 1e-10; the stored copy is the exact symmetrization.
    explicit SymMatrix(const Matrix& m)
    {
        check_square_finite(m);
        const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
        const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
        if (asym > 1e-10 * scale) {
            std::ostringstream ss;
            ss << "SymMatrix: input of dimension " << m.rows()
               << " is not symmetric (max asymmetry " << asym << ")";
            throw parameter_error(ss.str());
        }
        data_ = symmetrize_raw(m);
    }

    /// Symmetrizes without a tolerance check; use for matrices that are
    /// symmetric up to floating-point rounding by construction.
    static SymMatrix symmetrized(const Matrix& m)
    {
        check_square_finite(m);
        SymMatrix s;
        s.data_ = symmetrize_raw(m);
        return s;
    }

    static SymMatrix identity(Index dim)
    {
        SymMatrix s;
        s.data_ = Matrix::Identity(dim, dim);
        return s;
    }

    static SymMatrix diagonal(const Vector& d)
    {
        SymMatrix s;
        s.data_ = d.asDiagonal();
        check_square_finite(s.data_);
        return s;
    }

    Index dim() const noexcept { return data_.rows(); }
    const Matrix& mat() const noexcept { return data_; }
    double operator()(Index i, Index j) const { return data_(i, j); }

    SymMatrix principal_submatrix(const std::vector<Index>& idx) const
    {
        SymMatrix s;
        s.data_ = data_(idx, idx);
        return s;
    }

private:
    static Matrix symmetrize_raw(const Matrix& m)
    {
        // (a + b) / 2 is commutative in IEEE arithmetic, so the result is
        // exactly symmetric.
        return 0.5 * (m + m.transpose());
    }

    static void check_square_finite(const Matrix& m)
    {
        if (m.rows() != m.cols()) {
            throw parameter_error("SymMatrix: matrix is not square");
        }
        if (!m.allFinite()) {
            throw parameter_error("SymMatrix: matrix has non-finite entries");
        }
    }

    Matrix data_;
};

/// Eigenvalues sorted non-increasing with matching orthonormal columns.
struct EigenPairs
{
    Vector values;
    Matrix vectors;
};

namespace detail {

// Flip each column so that its first entry with |x| > 1e-10 is positive.
inline void canonicalize_signs(Matrix& vectors)
{
    for (Index j = 0; j < vectors.cols(); ++j) {
        for (Index i = 0; i < vectors.rows(); ++i) {
            const double x = vectors(i, j);
            if (std::abs(x) > 1e-10) {
                if (x < 0) vectors.col(j) *= -1.0;
                break;
            }
        }
    }
}

// LAPACK returns ascending order; reverse to descending.
inline void reverse_order(Vector& values, Matrix& vectors)
{
    values.reverseInPlace();
    vectors.rowwise().reverseInPlace();
}

inline std::string dim_message(const char* what, Index dim, lapack_int info)
{
    std::ostringstream ss;
    ss << what << ": symmetric eigensolver failed on a " << dim << "x" << dim
       << " matrix (LAPACK info " << info << ")";
    return ss.str();
}

} // namespace detail

/// Full symmetric eigendecomposition (LAPACK dsyevd).
inline EigenPairs sym_eig(const SymMatrix& m)
{
    const auto n = static_cast<lapack_int>(m.dim());
    EigenPairs out;
    out.vectors = m.mat();
    out.values.resize(n);
    if (n == 0) return out;
    const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n,
                                           out.vectors.data(), n,
                                           out.values.data());
    if (info != 0) {
        throw convergence_error(detail::dim_message("sym_eig", n, info));
    }
    detail::reverse_order(out.values, out.vectors);
    detail::canonicalize_signs(out.vectors);
    return out;
}

/// Eigenvalues only, descending.
inline Vector sym_eigvals(const SymMatrix& m)
{
    const auto n = static_cast<lapack_int>(m.dim());
    Matrix work = m.mat();
    Vector values(n);
    if (n == 0) return values;
    const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'N', 'L', n,
                                           work.data(), n, values.data());
    if (info != 0) {
        throw convergence_error(detail::dim_message("sym_eigvals", n, info));
    }
    values.reverseInPlace();
    return values;
}

/// Leading `k` eigenpairs (LAPACK dsyevr with an index range). Only the
/// tridiagonal reduction is O(n^3); the selected vectors cost O(n^2 k).
inline EigenPairs sym_eig_top(const SymMatrix& m, Index k)
{
    const auto n = static_cast<lapack_int>(m.dim());
    if (k < 0 || k > n) {
        throw parameter_error("sym_eig_top: k must lie in [0, dim]");
    }
    EigenPairs out;
    out.values.resize(k);
    out.vectors.resize(n, k);
    if (k == 0) return out;
    Matrix work = m.mat();
    std::vector<lapack_int> isuppz(2 * static_cast<std::size_t>(k));
    lapack_int found = 0;
    Vector w(n);
    const lapack_int info = LAPACKE_dsyevr(
        LAPACK_COL_MAJOR, 'V', 'I', 'L', n, work.data(), n, 0.0, 0.0,
        n - static_cast<lapack_int>(k) + 1, n, 0.0, &found, w.data(),
        out.vectors.data(), n, isuppz.data());
    if (info != 0 || found != k) {
        throw convergence_error(detail::dim_message("sym_eig_top", n, info));
    }
    out.values = w.head(k);
    detail::reverse_order(out.values, out.vectors);
    detail::canonicalize_signs(out.vectors);
    return out;
}

inline SymMatrix reassemble(const Matrix& vectors, const Vector& values)
{
    return SymMatrix::symmetrized(vectors * values.asDiagonal() *
                                  vectors.transpose());
}

inline constexpr double psd_clamp_threshold = 1e-10;
inline constexpr double pd_threshold = 1e-12;

/// Positive semidefinite square root. Eigenvalues in [-1e-10, 0) are
/// clamped to zero; anything more negative is rejected.
inline SymMatrix principal_sqrt(const SymMatrix& m)
{
    EigenPairs e = sym_eig(m);
    if (e.values.size() == 0) return m;
    const double min_ev = e.values.minCoeff();
    if (min_ev < -psd_clamp_threshold) {
        std::ostringstream ss;
        ss << "principal_sqrt: matrix is not psd (eigenvalue " << min_ev
           << ")";
        throw not_psd_error(ss.str(), min_ev);
    }
    const Vector roots = e.values.cwiseMax(0.0).cwiseSqrt();
    return reassemble(e.vectors, roots);
}

/// Inverse of the principal square root of a positive definite matrix.
inline SymMatrix inv_principal_sqrt(const SymMatrix& m)
{
    EigenPairs e = sym_eig(m);
    if (e.values.size() == 0) return m;
    const double min_ev = e.values.minCoeff();
    if (!(min_ev > pd_threshold)) {
        std::ostringstream ss;
        ss << "inv_principal_sqrt: matrix is singular or indefinite "
           << "(min eigenvalue " << min_ev << ")";
        throw singular_error(ss.str(), min_ev);
    }
    const Vector inv_roots = e.values.cwiseSqrt().cwiseInverse();
    return reassemble(e.vectors, inv_roots);
}

struct ProcrustesResult
{
    Matrix rotation; // r x r orthogonal
    Matrix aligned;  // u * rotation
};

/// Orthogonal Procrustes: the P in O(r) minimizing ||u P - v||_F is
/// A B^T where u^T v = A S B^T.
inline ProcrustesResult procrustes_align(const Matrix& u, const Matrix& v)
{
    if (u.rows() != v.rows() || u.cols() != v.cols()) {
        throw parameter_error("procrustes_align: shape mismatch");
    }
    const Matrix cross = u.transpose() * v;
    Eigen::JacobiSVD<Matrix> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
    ProcrustesResult out;
    out.rotation = svd.matrixU() * svd.matrixV().transpose();
    out.aligned = u * out.rotation;
    return out;
}

} // namespace linalg
} // namespace sgca

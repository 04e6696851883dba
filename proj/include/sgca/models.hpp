#pragma once

#include <sgca/geneig.hpp>
#include <sgca/rng.hpp>

#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace sgca::models {

/// Population covariance together with the solution A of the
/// generalized eigenproblem and the full generalized spectrum.
struct GroundTruth
{
    CovariancePair cov;
    LoadingMatrix a_true;
    Vector spectrum;
};

/// Latent variable model X_i = U_i z + e_i with e_i ~ N(0, Psi_ii).
struct LatentModelSpec
{
    BlockPartition partition;
    Index r = 0;
    std::vector<Matrix> loadings;   // U_i, p_i x r
    std::vector<Matrix> noise_covs; // Psi_ii, p_i x p_i
};

enum class CovKind { identity, toeplitz, sparse_inv };

inline std::string to_string(CovKind k)
{
    switch (k) {
    case CovKind::identity: return "identity";
    case CovKind::toeplitz: return "toeplitz";
    case CovKind::sparse_inv: return "sparse_inv";
    }
    return "?";
}

inline CovKind cov_kind_from_string(const std::string& s)
{
    if (s == "identity") return CovKind::identity;
    if (s == "toeplitz") return CovKind::toeplitz;
    if (s == "sparse_inv" || s == "sparseinv") return CovKind::sparse_inv;
    throw parameter_error("unknown covariance kind '" + s + "'");
}

inline constexpr int max_redraws = 100;

/// (T)_ij = a^{|i-j|}.
inline SymMatrix toeplitz_cov(Index dim, double a)
{
    if (!(std::abs(a) < 1.0)) {
        throw parameter_error("toeplitz_cov: |a| must be < 1");
    }
    if (dim < 1) throw parameter_error("toeplitz_cov: dim must be >= 1");
    Matrix t(dim, dim);
    for (Index i = 0; i < dim; ++i) {
        for (Index j = 0; j < dim; ++j) {
            t(i, j) = std::pow(a, static_cast<double>(std::abs(i - j)));
        }
    }
    return SymMatrix(t);
}

/// Correlation-normalized inverse of the banded precision matrix with
/// omega_ii = 1, omega_{i,i+-1} = 0.5, omega_{i,i+-2} = 0.4.
inline SymMatrix sparse_inv_cov(Index dim)
{
    if (dim < 3) throw parameter_error("sparse_inv_cov: dim must be >= 3");
    Matrix omega = Matrix::Zero(dim, dim);
    for (Index i = 0; i < dim; ++i) {
        omega(i, i) = 1.0;
        if (i + 1 < dim) omega(i, i + 1) = omega(i + 1, i) = 0.5;
        if (i + 2 < dim) omega(i, i + 2) = omega(i + 2, i) = 0.4;
    }
    Eigen::LLT<Matrix> llt(omega);
    if (llt.info() != Eigen::Success) {
        const double min_ev = linalg::sym_eigvals(SymMatrix(omega)).minCoeff();
        throw singular_error("sparse_inv_cov: banded precision matrix is not "
                             "positive definite", min_ev);
    }
    const Matrix inv = llt.solve(Matrix::Identity(dim, dim));
    const Vector scale = inv.diagonal().cwiseSqrt().cwiseInverse();
    Matrix m = scale.asDiagonal() * inv * scale.asDiagonal();
    m.diagonal().setOnes();
    return SymMatrix::symmetrized(m);
}

/// Gram-Schmidt of the columns of `u` in the inner product <x, y> = x^T m y
/// (two passes). Returns nullopt if a column is numerically dependent.
inline std::optional<Matrix> orthonormalize_in_metric(Matrix u, const Matrix& m)
{
    for (Index j = 0; j < u.cols(); ++j) {
        const double initial = std::sqrt(u.col(j).dot(m * u.col(j)));
        for (int pass = 0; pass < 2; ++pass) {
            for (Index i = 0; i < j; ++i) {
                const double c = u.col(i).dot(m * u.col(j));
                u.col(j) -= c * u.col(i);
            }
        }
        const double norm = std::sqrt(std::max(0.0, u.col(j).dot(m * u.col(j))));
        if (!(norm > 1e-8 * std::max(initial, 1e-300)) || !(norm > 1e-300)) {
            return std::nullopt;
        }
        u.col(j) /= norm;
    }
    return u;
}

namespace detail {

// Sigma_ii = diag_blocks[i], Sigma_ij = factors[i] factors[j]^T.
inline SymMatrix assemble(const BlockPartition& part,
                          const std::vector<Matrix>& diag_blocks,
                          const std::vector<Matrix>& factors)
{
    const Index p = part.total();
    Index width = factors.empty() ? 0 : factors.front().cols();
    Matrix stacked(p, width);
    for (Index b = 0; b < part.count(); ++b) {
        stacked.middleRows(part.offset(b), part.size(b)) = factors[static_cast<std::size_t>(b)];
    }
    Matrix sigma = stacked * stacked.transpose();
    for (Index b = 0; b < part.count(); ++b) {
        const Index o = part.offset(b), s = part.size(b);
        sigma.block(o, o, s, s) = diag_blocks[static_cast<std::size_t>(b)];
    }
    return SymMatrix::symmetrized(sigma);
}

inline double min_eigenvalue(const SymMatrix& m)
{
    return linalg::sym_eigvals(m).minCoeff();
}

inline GroundTruth solve_truth(CovariancePair cov, Index r)
{
    geneig::GenEigDecomp d = geneig::gen_eig(cov, r);
    GroundTruth g;
    g.a_true = std::move(d.leading);
    g.spectrum = std::move(d.values);
    g.cov = std::move(cov);
    return g;
}

} // namespace detail

/// Sigma_ii = U_i U_i^T + Psi_ii, Sigma_ij = U_i U_j^T.
inline CovariancePair latent_cov(const LatentModelSpec& spec)
{
    const auto k = static_cast<std::size_t>(spec.partition.count());
    if (spec.loadings.size() != k || spec.noise_covs.size() != k) {
        throw parameter_error("latent_cov: need one loading and one noise "
                              "covariance per block");
    }
    Matrix stacked(spec.partition.total(), spec.r);
    std::vector<Matrix> diag(k);
    for (std::size_t b = 0; b < k; ++b) {
        const Matrix& u = spec.loadings[b];
        const Matrix& psi = spec.noise_covs[b];
        const Index pb = spec.partition.size(static_cast<Index>(b));
        if (u.rows() != pb || u.cols() != spec.r || psi.rows() != pb || psi.cols() != pb) {
            throw parameter_error("latent_cov: block shape mismatch");
        }
        const double min_psi = detail::min_eigenvalue(SymMatrix(psi));
        if (!(min_psi > 0.0)) {
            throw singular_error("latent_cov: noise covariance not positive definite",
                                 min_psi);
        }
        stacked.middleRows(spec.partition.offset(static_cast<Index>(b)), pb) = u;
        diag[b] = u * u.transpose() + psi;
    }
    Eigen::JacobiSVD<Matrix> svd(stacked);
    svd.setThreshold(1e-10);
    if (svd.rank() != spec.r) {
        throw parameter_error("latent_cov: stacked loading matrix must have rank r");
    }
    SymMatrix sigma = detail::assemble(spec.partition, diag, spec.loadings);
    const double min_ev = detail::min_eigenvalue(sigma);
    if (!(min_ev > 0.0)) {
        std::ostringstream ss;
        ss << "latent_cov: joint covariance not positive definite (min eigenvalue "
           << min_ev << ")";
        throw singular_error(ss.str(), min_ev);
    }
    return CovariancePair(std::move(sigma), spec.partition);
}

/// Multi-block design with Toeplitz diagonal blocks T_i, random s-row
/// sparse loadings U_i normalized so that U_i^T T_i U_i = I, and
/// Sigma_ij = T_i U_i Theta U_j^T T_j, Sigma_ii = diag_scale * T_i.
struct GcaDesignParams
{
    std::vector<Index> sizes{500, 200, 200};
    std::vector<double> toeplitz{0.5, 0.7, 0.9};
    Index support_size = 5;
    Index r = 1;
};

inline GroundTruth gca_design(const GcaDesignParams& prm, std::uint64_t seed)
{
    if (prm.r < 1 || prm.r > prm.support_size) {
        throw parameter_error("gca_design: need 1 <= r <= support size");
    }
    if (prm.sizes.size() != prm.toeplitz.size()) {
        throw parameter_error("gca_design: one Toeplitz parameter per block");
    }
    BlockPartition part(prm.sizes);
    Rng rng(seed);
    std::vector<Matrix> diag, factors;
    for (Index b = 0; b < part.count(); ++b) {
        const Index pb = part.size(b);
        if (prm.support_size > pb) throw parameter_error("gca_design: support exceeds block");
        const Matrix t = toeplitz_cov(pb, prm.toeplitz[static_cast<std::size_t>(b)]).mat();
        std::optional<Matrix> u;
        for (int attempt = 0; attempt < max_redraws && !u; ++attempt) {
            Matrix raw = Matrix::Zero(pb, prm.r);
            for (long row : rng.sample_without_replacement(pb, prm.support_size)) {
                for (Index c = 0; c < prm.r; ++c) raw(row, c) = rng.normal();
            }
            u = orthonormalize_in_metric(std::move(raw), t);
        }
        if (!u) throw numerical_error("gca_design: degenerate loadings after redraws");
        factors.push_back(t * *u);
        diag.push_back(t);
    }
    CovariancePair cov(detail::assemble(part, diag, factors), part);
    return detail::solve_truth(std::move(cov), prm.r);
}

/// Three-block sparse GCA design with p = (500, 200, 200), s_i = 5.
inline GroundTruth gca_design_5_1(Index r, std::uint64_t seed)
{
    if (r < 1 || r > 5) throw parameter_error("gca_design_5_1: r must lie in [1, 5]");
    GcaDesignParams prm;
    prm.r = r;
    return gca_design(prm, seed);
}

inline SymMatrix cca_block_cov(CovKind kind, Index dim)
{
    switch (kind) {
    case CovKind::identity: return SymMatrix::identity(dim);
    case CovKind::toeplitz: return toeplitz_cov(dim, 0.3);
    case CovKind::sparse_inv: return sparse_inv_cov(dim);
    }
    throw parameter_error("cca_block_cov: unknown kind");
}

struct CcaDims
{
    Index n = 300;
    Index p1 = 300;
    Index p2 = 200;
};

/// Canonical-pair model Sigma_xy = M_x V Theta W^T M_y with V, W
/// supported on rows {1, 6, 11, 16, 21} (1-based) and entries drawn from
/// {-2, ..., 2} before M-orthonormalization. The ground truth exposes the
/// leading `r_truth` columns of A = [V; W] / sqrt(2).
inline GroundTruth cca_design(Index p1, Index p2, CovKind kind,
                              const std::vector<double>& theta, Index r_truth,
                              std::uint64_t seed)
{
    const std::vector<Index> support{0, 5, 10, 15, 20};
    const auto r = static_cast<Index>(theta.size());
    if (r < 1 || r_truth < 1 || r_truth > r) {
        throw parameter_error("cca_design: invalid number of canonical pairs");
    }
    if (p1 <= support.back() || p2 <= support.back()) {
        throw parameter_error("cca_design: blocks must have at least 21 rows");
    }
    BlockPartition part({p1, p2});
    const Matrix mx = cca_block_cov(kind, p1).mat();
    const Matrix my = cca_block_cov(kind, p2).mat();
    Rng rng(seed);
    auto draw = [&](Index dim, const Matrix& m) {
        for (int attempt = 0; attempt < max_redraws; ++attempt) {
            Matrix raw = Matrix::Zero(dim, r);
            for (Index row : support) {
                for (Index c = 0; c < r; ++c) {
                    raw(row, c) = static_cast<double>(rng.uniform_index(5)) - 2.0;
                }
            }
            if (auto u = orthonormalize_in_metric(std::move(raw), m)) return *u;
        }
        throw numerical_error("cca_design: degenerate loadings after redraws");
    };
    const Matrix v = draw(p1, mx);
    const Matrix w = draw(p2, my);
    Vector root_theta(r);
    for (Index i = 0; i < r; ++i) {
        if (!(theta[static_cast<std::size_t>(i)] >= 0.0 && theta[static_cast<std::size_t>(i)] < 1.0)) {
            throw parameter_error("cca_design: canonical correlations must lie in [0, 1)");
        }
        root_theta(i) = std::sqrt(theta[static_cast<std::size_t>(i)]);
    }
    std::vector<Matrix> factors{mx * v * root_theta.asDiagonal(),
                                my * w * root_theta.asDiagonal()};
    CovariancePair cov(detail::assemble(part, {mx, my}, factors), part);

    GroundTruth g;
    g.spectrum = geneig::gen_eig(cov, r_truth).values;
    Matrix a(p1 + p2, r_truth);
    a.topRows(p1) = v.leftCols(r_truth) / std::sqrt(2.0);
    a.bottomRows(p2) = w.leftCols(r_truth) / std::sqrt(2.0);
    g.a_true = LoadingMatrix(std::move(a), part);
    g.cov = std::move(cov);
    return g;
}

inline GroundTruth cca_design_5_3(const CcaDims& dims, CovKind kind,
                                  std::vector<double> theta, std::uint64_t seed)
{
    const auto r = static_cast<Index>(theta.size());
    return cca_design(dims.p1, dims.p2, kind, theta, r, seed);
}

/// Three canonical pairs (0.9, 0.8, 0.3) while only the leading two are
/// estimated; (p1, p2) = (300, 500).
inline GroundTruth misspec_design_5_4(CovKind kind, std::uint64_t seed,
                                      Index p1 = 300, Index p2 = 500)
{
    return cca_design(p1, p2, kind, {0.9, 0.8, 0.3}, 2, seed);
}

/// s x s correlation block with prescribed leading eigenvalues and s-sparse
/// eigenvectors built from stacked Hadamard columns, padded by identity.
struct SparseCorrelation
{
    SymMatrix r;
    Matrix leading_vectors; // p x r
    Vector theta;           // spike strengths
    double floor = 0.0;     // 1 - sum(theta) / s
};

inline Matrix hadamard(Index order)
{
    Matrix h = Matrix::Ones(1, 1);
    while (h.rows() < order) {
        const Index n = h.rows();
        Matrix next(2 * n, 2 * n);
        next << h, h, h, -h;
        h = std::move(next);
    }
    return h;
}

inline SparseCorrelation sparse_corr_appendix_c(Index p, Index s, const Vector& lambdas)
{
    const Index r = lambdas.size();
    if (r < 1) throw parameter_error("sparse_corr_appendix_c: need at least one eigenvalue");
    for (Index i = 0; i < r; ++i) {
        if (!(lambdas(i) > 1.0)) throw parameter_error("sparse_corr_appendix_c: eigenvalues must exceed 1");
        if (i > 0 && lambdas(i) > lambdas(i - 1)) throw parameter_error("sparse_corr_appendix_c: eigenvalues must be descending");
    }
    if (s < r) throw parameter_error("sparse_corr_appendix_c: s must be >= r");
    if (!(s < p - 1)) throw parameter_error("sparse_corr_appendix_c: s must be < p - 1");
    const double total = lambdas.sum();
    if (total > static_cast<double>(s)) {
        throw parameter_error("sparse_corr_appendix_c: sum of eigenvalues exceeds s");
    }
    // Smallest 2^l >= r that divides s.
    Index order = 1;
    while (order < r) order *= 2;
    if (s % order != 0) {
        throw parameter_error("sparse_corr_appendix_c: s must be a multiple of 2^l >= r");
    }
    const Matrix t0 = hadamard(order).leftCols(r);
    const Index copies = s / order;
    Matrix ts(s, r);
    for (Index c = 0; c < copies; ++c) ts.middleRows(c * order, order) = t0;
    ts /= std::sqrt(static_cast<double>(s));

    // Eigenvalue on column i is theta_i + c with c = 1 - sum(theta) / s;
    // solving the linear system gives c = (s - sum(lambda)) / (s - r).
    const double sd = static_cast<double>(s);
    const double floor = (s == r) ? 0.0 : (sd - total) / (sd - static_cast<double>(r));
    if (s == r && std::abs(total - sd) > 1e-12 * sd) {
        throw parameter_error("sparse_corr_appendix_c: with s == r the eigenvalues must sum to s");
    }
    const Vector theta = lambdas.array() - floor;

    Matrix full = Matrix::Identity(p, p);
    full.topLeftCorner(s, s) = ts * theta.asDiagonal() * ts.transpose() +
                               floor * Matrix::Identity(s, s);
    full.diagonal().setOnes();
    SparseCorrelation out;
    out.r = SymMatrix::symmetrized(full);
    out.leading_vectors = Matrix::Zero(p, r);
    out.leading_vectors.topRows(s) = ts;
    out.theta = theta;
    out.floor = floor;
    return out;
}

/// Correlation-PCA design: Sigma = D^{1/2} R D^{1/2} with D diagonal,
/// entries uniform on [0.1, 1]; every coordinate is its own block.
inline GroundTruth corr_pca_design_5_5(const Vector& lambdas, std::uint64_t seed,
                                       Index p = 500, Index s = 20)
{
    SparseCorrelation sc = sparse_corr_appendix_c(p, s, lambdas);
    Rng rng(seed);
    Vector d(p);
    for (Index i = 0; i < p; ++i) d(i) = rng.uniform(0.1, 1.0);
    const Vector root = d.cwiseSqrt();
    const Matrix sigma = root.asDiagonal() * sc.r.mat() * root.asDiagonal();
    GroundTruth g;
    g.cov = CovariancePair(SymMatrix::symmetrized(sigma), BlockPartition::singletons(p));
    g.a_true = LoadingMatrix(root.cwiseInverse().asDiagonal() * sc.leading_vectors,
                             g.cov.partition());
    g.spectrum = linalg::sym_eigvals(sc.r);
    return g;
}

/// Full-rank off-diagonal design: Sigma_ij = T_i U_i Theta U_j^T T_j,
/// Sigma_ii = 2 T_i, Theta_ii = 2 / i, with U_i = [U_i(1), U_i(2)] where
/// U_i(1) has s_i-sparse rows and U_i(2) completes it T_i-orthogonally.
struct GeneralCovParams
{
    std::vector<Index> sizes{500, 200, 200};
    std::vector<double> toeplitz{0.5, 0.7, 0.9};
    Index sparse_cols = 5;
    Index r = 1;
};

inline GroundTruth general_cov_design(const GeneralCovParams& prm, std::uint64_t seed)
{
    BlockPartition part(prm.sizes);
    const Index width = *std::min_element(prm.sizes.begin(), prm.sizes.end());
    const Index s = prm.sparse_cols;
    if (s > width || prm.r < 1 || prm.r > width) {
        throw parameter_error("general_cov_design: invalid column counts");
    }
    Rng rng(seed);
    Vector root_theta(width);
    for (Index i = 0; i < width; ++i) root_theta(i) = std::sqrt(2.0 / static_cast<double>(i + 1));

    std::vector<Matrix> diag, factors;
    for (Index b = 0; b < part.count(); ++b) {
        const Index pb = part.size(b);
        const SymMatrix t = toeplitz_cov(pb, prm.toeplitz[static_cast<std::size_t>(b)]);
        std::optional<Matrix> u1;
        for (int attempt = 0; attempt < max_redraws && !u1; ++attempt) {
            Matrix raw = Matrix::Zero(pb, s);
            for (long row : rng.sample_without_replacement(pb, s)) {
                for (Index c = 0; c < s; ++c) raw(row, c) = rng.normal();
            }
            u1 = orthonormalize_in_metric(std::move(raw), t.mat());
        }
        if (!u1) throw numerical_error("general_cov_design: degenerate loadings after redraws");
        const Matrix t_root = linalg::principal_sqrt(t).mat();
        const Matrix t_inv_root = linalg::inv_principal_sqrt(t).mat();
        Eigen::JacobiSVD<Matrix> svd(u1->transpose() * t_root, Eigen::ComputeFullV);
        const Matrix complement = svd.matrixV().middleCols(s, width - s);
        Matrix u(pb, width);
        u.leftCols(s) = *u1;
        u.rightCols(width - s) = t_inv_root * complement;
        factors.push_back(t.mat() * u * root_theta.asDiagonal());
        diag.push_back(2.0 * t.mat());
    }
    CovariancePair cov(detail::assemble(part, diag, factors), part);
    return detail::solve_truth(std::move(cov), prm.r);
}

inline GroundTruth general_cov_design_5_6(Index r, std::uint64_t seed)
{
    GeneralCovParams prm;
    prm.r = r;
    return general_cov_design(prm, seed);
}

/// Draws rows x = Sigma^{1/2} g with g standard normal. The root is
/// computed once per sampler.
class GaussianSampler
{
public:
    explicit GaussianSampler(const SymMatrix& sigma)
        : root_(linalg::principal_sqrt(sigma).mat()) {}

    Matrix draw(Index n, std::uint64_t seed) const
    {
        if (n < 2) throw parameter_error("sample_gaussian: n must be >= 2");
        Rng rng(seed);
        const Index p = root_.rows();
        Matrix g(n, p);
        for (Index i = 0; i < n; ++i) {
            for (Index j = 0; j < p; ++j) g(i, j) = rng.normal();
        }
        return g * root_;
    }

private:
    Matrix root_;
};

inline Matrix sample_gaussian(const CovariancePair& cov, Index n, std::uint64_t seed)
{
    return GaussianSampler(cov.sigma()).draw(n, seed);
}

/// Centered covariance with 1/n normalization.
inline SymMatrix sample_cov(const Matrix& data)
{
    const Index n = data.rows();
    if (n < 2) throw parameter_error("sample_cov: need at least two rows");
    const Matrix centered = data.rowwise() - data.colwise().mean();
    return SymMatrix::symmetrized(centered.transpose() * centered / static_cast<double>(n));
}

inline CovariancePair sample_pair(const Matrix& data, const BlockPartition& part)
{
    if (data.cols() != part.total()) {
        throw parameter_error("sample_pair: partition does not match data width");
    }
    return CovariancePair(sample_cov(data), part);
}

} // namespace sgca::models

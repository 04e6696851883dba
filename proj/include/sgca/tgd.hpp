#pragma once

#include <sgca/geneig.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>
#include <vector>

namespace sgca::tgd {

/// Row indices of the min(k, p) rows with the largest l2 norms, in
/// selection order; ties go to the smaller index.
inline std::vector<Index> top_rows(const Matrix& u, Index k)
{
    const Index p = u.rows();
    k = std::clamp<Index>(k, 0, p);
    const Vector norms = u.rowwise().squaredNorm();
    std::vector<Index> idx(static_cast<std::size_t>(p));
    std::iota(idx.begin(), idx.end(), Index{0});
    std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](Index a, Index b) {
        return norms(a) > norms(b) || (norms(a) == norms(b) && a < b);
    });
    idx.resize(static_cast<std::size_t>(k));
    return idx;
}

/// HT(u, k): keep the k rows with the largest l2 norms, zero the rest.
inline Matrix hard_threshold(const Matrix& u, Index k)
{
    if (k < 0) throw parameter_error("hard_threshold: k must be >= 0");
    if (k >= u.rows()) return u;
    Matrix out = Matrix::Zero(u.rows(), u.cols());
    for (Index i : top_rows(u, k)) out.row(i) = u.row(i);
    return out;
}

/// f(L) = -<Sigma, L L^T> + (lambda / 2) ||L^T Sigma0 L - I_r||_F^2.
inline double objective(const Matrix& l, const CovariancePair& cov, double lambda_pen)
{
    const Index r = l.cols();
    const Matrix gram = l.transpose() * cov.sigma0().mat() * l;
    const double fit = (l.transpose() * cov.sigma().mat() * l).trace();
    return -fit + 0.5 * lambda_pen * (gram - Matrix::Identity(r, r)).squaredNorm();
}

/// grad f(L) = 2 (-Sigma L + lambda Sigma0 L (L^T Sigma0 L - I_r)).
inline Matrix gradient(const Matrix& l, const CovariancePair& cov, double lambda_pen)
{
    const Index r = l.cols();
    const Matrix s0l = cov.sigma0().mat() * l;
    const Matrix gram = l.transpose() * s0l;
    return 2.0 * (-(cov.sigma().mat() * l) +
                  lambda_pen * s0l * (gram - Matrix::Identity(r, r)));
}

/// V (V^T Sigma0 V)^{-1/2}.
inline LoadingMatrix renormalize(const LoadingMatrix& v_bar, const SymMatrix& sigma0_hat)
{
    const SymMatrix gram = SymMatrix::symmetrized(
        v_bar.entries.transpose() * sigma0_hat.mat() * v_bar.entries);
    return LoadingMatrix(v_bar.entries * linalg::inv_principal_sqrt(gram).mat(),
                         v_bar.partition);
}

struct TgdConfig
{
    double eta = 0.001;
    double lambda_pen = 0.01;
    Index s_prime = 20;
    Index t_max = 15000;
    bool record_trace = false;
    Index trace_stride = 1;
    std::optional<Matrix> reference_v; // for dist(V, V_bar_t)
    std::optional<Matrix> reference_a; // for dist(A, A_hat_t)
    /// Stop when ||V_{t+1} - V_t||_F < early_stop_tol ||V_t||_F; 0 disables.
    double early_stop_tol = 0.0;

    void validate(Index p, Index r) const
    {
        if (!(eta > 0.0) || !(lambda_pen > 0.0)) {
            throw parameter_error("TgdConfig: eta and lambda must be positive");
        }
        if (s_prime < r || s_prime > p) {
            throw parameter_error("TgdConfig: s_prime must lie in [r, p]");
        }
        if (t_max < 1) throw parameter_error("TgdConfig: t_max must be >= 1");
        if (trace_stride < 1) throw parameter_error("TgdConfig: trace_stride must be >= 1");
    }
};

struct TracePoint
{
    Index iteration; // gradient steps completed
    double dist_v;   // NaN when no reference supplied
    double dist_a;
    double objective;
};

struct TgdResult
{
    LoadingMatrix a_hat;
    LoadingMatrix v_bar_final;
    Index iterations = 0;
    std::vector<TracePoint> trace;
};

/// V = A (I + Lambda_r / lambda)^{1/2}: the stationary point of f that
/// corresponds to the normalized loadings A.
inline Matrix stationary_scaling(const Matrix& a, const Vector& leading_values,
                                 double lambda_pen)
{
    const Vector scale = (1.0 + leading_values.array() / lambda_pen).sqrt();
    return a * scale.asDiagonal();
}

namespace detail {

// M * V using only the nonzero rows of V.
inline Matrix sparse_product(const Matrix& m, const Matrix& v,
                             const std::vector<Index>& rows)
{
    if (static_cast<Index>(rows.size()) * 2 > v.rows()) return m * v;
    return m(Eigen::all, rows) * v(rows, Eigen::all);
}

inline std::vector<Index> nonzero_rows(const Matrix& v)
{
    std::vector<Index> rows;
    for (Index i = 0; i < v.rows(); ++i) {
        if (v.row(i).squaredNorm() > 0.0) rows.push_back(i);
    }
    return rows;
}

inline Matrix inv_sqrt_gram(const Matrix& v, const Matrix& sigma0, const std::vector<Index>& rows)
{
    const Matrix s0v = sparse_product(sigma0, v, rows);
    return linalg::inv_principal_sqrt(SymMatrix::symmetrized(v.transpose() * s0v)).mat();
}

} // namespace detail

/// Thresholded gradient descent. Runs t_max gradient-plus-truncation steps
/// from the renormalized initializer and returns the renormalized last
/// iterate.
inline TgdResult run_tgd(const CovariancePair& cov_hat, const LoadingMatrix& init,
                         const TgdConfig& cfg)
{
    const Matrix& sigma = cov_hat.sigma().mat();
    const Matrix& sigma0 = cov_hat.sigma0().mat();
    const Index p = cov_hat.dim();
    const Index r = init.cols();
    if (init.rows() != p || r < 1) throw parameter_error("run_tgd: initializer shape mismatch");
    cfg.validate(p, r);
    if (init.entries.squaredNorm() == 0.0) {
        throw numerical_error("run_tgd: degenerate initializer (all zero)");
    }

    // Lines 1-2: normalize, then scale onto the stationary manifold.
    std::vector<Index> rows = detail::nonzero_rows(init.entries);
    Matrix a_bar;
    try {
        a_bar = init.entries * detail::inv_sqrt_gram(init.entries, sigma0, rows);
    } catch (const singular_error& e) {
        throw singular_error(std::string("run_tgd: degenerate initializer: ") + e.what(),
                             e.min_eigenvalue());
    }
    const Matrix fit = a_bar.transpose() * detail::sparse_product(sigma, a_bar, rows);
    const SymMatrix lift = SymMatrix::symmetrized(
        Matrix::Identity(r, r) + fit / cfg.lambda_pen);
    Matrix v = a_bar * linalg::principal_sqrt(lift).mat();

    TgdResult out;
    auto record = [&](Index t) {
        if (!cfg.record_trace) return;
        if (t % cfg.trace_stride != 0 && t != cfg.t_max) return;
        TracePoint tp{t, std::nan(""), std::nan(""), std::nan("")};
        if (cfg.reference_v) tp.dist_v = geneig::mat_dist(*cfg.reference_v, v);
        if (cfg.reference_a) {
            const Matrix a_t = v * detail::inv_sqrt_gram(v, sigma0, rows);
            tp.dist_a = geneig::mat_dist(*cfg.reference_a, a_t);
        }
        const Matrix s0v = detail::sparse_product(sigma0, v, rows);
        const Matrix sv = detail::sparse_product(sigma, v, rows);
        tp.objective = -(v.transpose() * sv).trace() +
                       0.5 * cfg.lambda_pen *
                           (v.transpose() * s0v - Matrix::Identity(r, r)).squaredNorm();
        out.trace.push_back(tp);
    };
    record(0);

    const Matrix eye = Matrix::Identity(r, r);
    Index t = 0;
    for (t = 1; t <= cfg.t_max; ++t) {
        const Matrix sv = detail::sparse_product(sigma, v, rows);
        const Matrix s0v = detail::sparse_product(sigma0, v, rows);
        const Matrix grad = 2.0 * (-sv + cfg.lambda_pen * s0v * (v.transpose() * s0v - eye));
        Matrix next = hard_threshold(v - cfg.eta * grad, cfg.s_prime);
        if (!next.allFinite()) {
            std::ostringstream ss;
            ss << "run_tgd: non-finite iterate at iteration " << t
               << " (step size too large?)";
            throw divergence_error(ss.str(), static_cast<long>(t));
        }
        const double change = (next - v).norm();
        const double scale = v.norm();
        v = std::move(next);
        rows = detail::nonzero_rows(v);
        record(t);
        if (cfg.early_stop_tol > 0.0 && change < cfg.early_stop_tol * scale) break;
    }
    out.iterations = std::min(t, cfg.t_max);

    out.v_bar_final = LoadingMatrix(v, cov_hat.partition());
    try {
        out.a_hat = LoadingMatrix(v * detail::inv_sqrt_gram(v, sigma0, rows), cov_hat.partition());
    } catch (const singular_error& e) {
        throw singular_error(std::string("run_tgd: final iterate has singular Gram matrix: ") +
                                 e.what(), e.min_eigenvalue());
    }
    return out;
}

/// Truncated Rayleigh flow for the leading sparse generalized eigenvector:
/// x <- normalize(HT(x + eta (Sigma - rho_t Sigma0) x, s')), rho_t the
/// generalized Rayleigh quotient. Returns the Sigma0-normalized iterate.
inline Vector run_rifle(const CovariancePair& cov_hat, const Vector& init, double eta,
                        Index s_prime, Index t_max)
{
    const Matrix& sigma = cov_hat.sigma().mat();
    const Matrix& sigma0 = cov_hat.sigma0().mat();
    const Index p = cov_hat.dim();
    if (init.size() != p) throw parameter_error("run_rifle: initializer shape mismatch");
    if (!(eta > 0.0) || s_prime < 1 || s_prime > p || t_max < 0) {
        throw parameter_error("run_rifle: invalid tuning parameters");
    }
    if (!(init.norm() > 0.0)) throw numerical_error("run_rifle: initializer is zero");

    Matrix x = init / init.norm();
    std::vector<Index> rows = detail::nonzero_rows(x);
    for (Index t = 1; t <= t_max; ++t) {
        const Matrix sx = detail::sparse_product(sigma, x, rows);
        const Matrix s0x = detail::sparse_product(sigma0, x, rows);
        const double denom = x.col(0).dot(s0x.col(0));
        const double rho = x.col(0).dot(sx.col(0)) / denom;
        Matrix next = hard_threshold(x + eta * (sx - rho * s0x), s_prime);
        const double norm = next.norm();
        if (!std::isfinite(rho) || !std::isfinite(norm) || norm == 0.0) {
            std::ostringstream ss;
            ss << "run_rifle: non-finite iterate at iteration " << t;
            throw divergence_error(ss.str(), static_cast<long>(t));
        }
        x = next / norm;
        rows = detail::nonzero_rows(x);
    }
    const Matrix s0x = detail::sparse_product(sigma0, x, rows);
    const double q = x.col(0).dot(s0x.col(0));
    if (!(q > 0.0)) throw singular_error("run_rifle: final iterate has zero Sigma0-norm", q);
    return x.col(0) / std::sqrt(q);
}

/// Generalized Rayleigh quotient x^T Sigma x / x^T Sigma0 x.
inline double rayleigh_quotient(const CovariancePair& cov, const Vector& x)
{
    return x.dot(cov.sigma().mat() * x) / x.dot(cov.sigma0().mat() * x);
}

} // namespace sgca::tgd

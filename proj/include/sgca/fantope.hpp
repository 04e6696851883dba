#pragma once

#include <sgca/tgd.hpp>

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace sgca::fantope {

/// Water level theta with sum_i clamp(values_i - theta, 0, 1) = r, found
/// by bisection. `values` must be sorted descending and the sum must be
/// attainable (r <= values.size()).
inline double water_level(const Vector& values, Index r)
{
    const Index m = values.size();
    if (r < 1 || r > m) throw parameter_error("water_level: r must lie in [1, size]");
    auto filled = [&](double theta) {
        double s = 0.0;
        for (Index i = 0; i < m; ++i) s += std::clamp(values(i) - theta, 0.0, 1.0);
        return s;
    };
    // filled(lo) >= r (top r terms saturate), filled(hi) = 0 < r.
    double lo = values(r - 1) - 1.0;
    double hi = values(0);
    while (hi - lo > 1e-12 * std::max(1.0, std::abs(lo) + std::abs(hi))) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        (filled(mid) > static_cast<double>(r) ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// Euclidean projection onto {X : 0 <= X <= I, tr X = r}. Computes only the
/// eigenpairs whose clamped values are nonzero; `hint` remembers how many
/// were needed last time.
class FantopeProjector
{
public:
    explicit FantopeProjector(Index r) : r_(r), hint_(r + 4) {}

    SymMatrix operator()(const SymMatrix& m)
    {
        const Index p = m.dim();
        if (r_ < 1 || r_ > p) throw parameter_error("fantope_project: r must lie in [1, p]");
        Index k = std::clamp<Index>(hint_, r_, p);
        for (;;) {
            linalg::EigenPairs e = (k == p) ? linalg::sym_eig(m) : linalg::sym_eig_top(m, k);
            const double theta = water_level(e.values, r_);
            // Eigenvalues below the computed ones are <= values(k-1); the
            // level is exact once that value contributes nothing.
            if (k == p || e.values(k - 1) <= theta) {
                Index used = 0;
                Vector clamped(k);
                for (Index i = 0; i < k; ++i) {
                    clamped(i) = std::clamp(e.values(i) - theta, 0.0, 1.0);
                    if (clamped(i) > 0.0) used = i + 1;
                }
                hint_ = std::min(p, used + 4);
                const Matrix vecs = e.vectors.leftCols(used);
                return linalg::reassemble(vecs, clamped.head(used));
            }
            k = std::min(p, 2 * k);
        }
    }

private:
    Index r_;
    Index hint_;
};

inline SymMatrix fantope_project(const SymMatrix& m, Index r)
{
    if (r < 1 || r > m.dim()) throw parameter_error("fantope_project: r must lie in [1, p]");
    return FantopeProjector(r)(m);
}

enum class AdmmVariant {
    /// Two-block ADMM: F against (Z, H) with Z = F carrying the l1 term and
    /// H = Sigma0^{1/2} F Sigma0^{1/2} carrying the Fantope constraint. The
    /// F-step is solved exactly in the eigenbasis of Sigma0.
    split,
    /// Single split H = Sigma0^{1/2} F Sigma0^{1/2}; the F-step majorizes
    /// the coupling with modulus mu and reduces to soft-thresholding.
    linearized,
};

inline std::string to_string(AdmmVariant v)
{
    return v == AdmmVariant::split ? "split" : "linearized";
}

inline AdmmVariant admm_variant_from_string(const std::string& s)
{
    if (s == "split") return AdmmVariant::split;
    if (s == "linearized") return AdmmVariant::linearized;
    throw parameter_error("unknown ADMM variant '" + s + "'");
}

struct FantopeConfig
{
    double rho = 0.0;          // l1 penalty
    Index r = 1;
    double admm_step = 3.0;    // tau
    double linearization = 0.0; // mu; 0 selects 1.01 tau lambda_max(Sigma0)^2
    Index max_iter = 2000;
    double tol_primal = 1e-3;
    double tol_dual = 1e-3;
    AdmmVariant variant = AdmmVariant::split;

    /// rho = gamma sqrt(log p / n).
    static double default_rho(Index p, Index n, double gamma = 0.5)
    {
        return gamma * std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(n));
    }
};

struct FantopeSolution
{
    SymMatrix f_hat;
    Index iterations_used = 0;
    double primal_residual = 0.0; // scaled
    double dual_residual = 0.0;   // scaled
    bool converged = false;
    std::string warning;
    double objective = 0.0;         // -<S, F> + rho ||F||_1 at f_hat
    double best_objective = 0.0;    // best value seen over the iterates
    double initial_objective = 0.0; // at F = 0
    double mu = 0.0;                // linearization modulus actually used
};

namespace detail {

// Orthogonal basis of a block-diagonal matrix stored block by block;
// rotations cost sum_b p_b^2 p instead of p^3.
class BlockBasis
{
public:
    BlockBasis(const SymMatrix& sigma0, const BlockPartition& part) : part_(part)
    {
        values_.resize(sigma0.dim());
        for (Index b = 0; b < part.count(); ++b) {
            const Index o = part.offset(b), s = part.size(b);
            linalg::EigenPairs e =
                linalg::sym_eig(SymMatrix::symmetrized(sigma0.mat().block(o, o, s, s)));
            values_.segment(o, s) = e.values;
            q_.push_back(std::move(e.vectors));
        }
    }

    const Vector& values() const noexcept { return values_; }

    /// Q^T x Q
    Matrix to_basis(const Matrix& x) const { return rotate(x, true); }
    /// Q x Q^T
    Matrix from_basis(const Matrix& x) const { return rotate(x, false); }

private:
    Matrix rotate(const Matrix& x, bool transpose) const
    {
        const Index p = x.rows();
        Matrix y(p, p), z(p, p);
        for (Index b = 0; b < part_.count(); ++b) {
            const Index o = part_.offset(b), s = part_.size(b);
            const Matrix& q = q_[static_cast<std::size_t>(b)];
            if (transpose) y.middleRows(o, s).noalias() = q.transpose() * x.middleRows(o, s);
            else y.middleRows(o, s).noalias() = q * x.middleRows(o, s);
        }
        for (Index b = 0; b < part_.count(); ++b) {
            const Index o = part_.offset(b), s = part_.size(b);
            const Matrix& q = q_[static_cast<std::size_t>(b)];
            if (transpose) z.middleCols(o, s).noalias() = y.middleCols(o, s) * q;
            else z.middleCols(o, s).noalias() = y.middleCols(o, s) * q.transpose();
        }
        return z;
    }

    BlockPartition part_;
    std::vector<Matrix> q_;
    Vector values_;
};

inline Matrix soft_threshold(const Matrix& x, double t)
{
    return x.unaryExpr([t](double v) {
        return v > t ? v - t : (v < -t ? v + t : 0.0);
    });
}

// x_ij * d_i * d_j
inline Matrix scale_both(const Matrix& x, const Vector& d)
{
    return d.asDiagonal() * x * d.asDiagonal();
}

inline double l1_objective(const Matrix& s, const Matrix& f, double rho)
{
    return -(s.cwiseProduct(f)).sum() + rho * f.cwiseAbs().sum();
}

} // namespace detail

/// Approximately minimizes -<S, F> + rho ||F||_1 subject to
/// Sigma0^{1/2} F Sigma0^{1/2} in the Fantope F_r by ADMM.
inline FantopeSolution fantope_init(const CovariancePair& cov_hat, const FantopeConfig& cfg)
{
    const Index p = cov_hat.dim();
    if (cfg.r < 1 || cfg.r > p) throw parameter_error("fantope_init: r must lie in [1, p]");
    if (!(cfg.rho >= 0.0) || !(cfg.admm_step > 0.0) || cfg.max_iter < 1 ||
        !(cfg.tol_primal > 0.0) || !(cfg.tol_dual > 0.0)) {
        throw parameter_error("fantope_init: invalid configuration");
    }
    const detail::BlockBasis basis(cov_hat.sigma0(), cov_hat.partition());
    const double min_ev = basis.values().minCoeff();
    if (min_ev < -linalg::psd_clamp_threshold) {
        throw not_psd_error("fantope_init: block-diagonal covariance is not psd", min_ev);
    }
    const Vector lam = basis.values().cwiseMax(0.0);
    const Vector root = lam.cwiseSqrt();
    const double lam_max = lam.maxCoeff();
    if (!(lam_max > linalg::pd_threshold)) {
        throw singular_error("fantope_init: block-diagonal covariance is zero", lam_max);
    }

    const Matrix& s = cov_hat.sigma().mat();
    const double tau = cfg.admm_step;
    const double rho = cfg.rho;
    fantope::FantopeProjector project(cfg.r);

    FantopeSolution out;
    out.initial_objective = 0.0;
    out.best_objective = 0.0;

    Matrix h = Matrix::Zero(p, p); // Q basis
    Matrix w = Matrix::Zero(p, p); // Q basis, scaled dual
    auto scaled = [](double res, double ref) { return res / std::max(1.0, ref); };

    if (cfg.variant == AdmmVariant::split) {
        const Matrix s_basis = basis.to_basis(s) / tau;
        Matrix denom(p, p);
        for (Index j = 0; j < p; ++j)
            for (Index i = 0; i < p; ++i) denom(i, j) = 1.0 + lam(i) * lam(j);
        Matrix z = Matrix::Zero(p, p);
        Matrix u = Matrix::Zero(p, p);
        Matrix f = Matrix::Zero(p, p);
        for (Index it = 1; it <= cfg.max_iter; ++it) {
            Matrix rhs = basis.to_basis(z - u) + s_basis + detail::scale_both(h - w, root);
            const Matrix f_basis = rhs.cwiseQuotient(denom);
            f = basis.from_basis(f_basis);
            const Matrix z_prev = z;
            z = detail::soft_threshold(f + u, rho / tau);
            const Matrix g = detail::scale_both(f_basis, root);
            const Matrix h_prev = h;
            h = project(SymMatrix::symmetrized(g + w)).mat();
            u += f - z;
            w += g - h;

            const double primal = std::sqrt((f - z).squaredNorm() + (g - h).squaredNorm());
            const double dual = tau * std::sqrt((z - z_prev).squaredNorm() +
                                                detail::scale_both(h - h_prev, root).squaredNorm());
            const double x_norm = std::sqrt(f.squaredNorm() + g.squaredNorm());
            const double z_norm = std::sqrt(z.squaredNorm() + h.squaredNorm());
            const double y_norm = tau * std::sqrt(u.squaredNorm() +
                                                  detail::scale_both(w, root).squaredNorm());
            out.primal_residual = scaled(primal, std::max(x_norm, z_norm));
            out.dual_residual = scaled(dual, y_norm);
            out.iterations_used = it;
            out.objective = detail::l1_objective(s, z, rho);
            out.best_objective = std::min(out.best_objective, out.objective);
            if (!z.allFinite()) throw divergence_error("fantope_init: non-finite iterate", static_cast<long>(it));
            if (out.primal_residual < cfg.tol_primal && out.dual_residual < cfg.tol_dual) {
                out.converged = true;
                break;
            }
        }
        out.f_hat = SymMatrix::symmetrized(z);
    } else {
        const double mu = cfg.linearization > 0.0 ? cfg.linearization
                                                  : 1.01 * tau * lam_max * lam_max;
        if (mu < tau * lam_max * lam_max) {
            throw parameter_error("fantope_init: linearization modulus below "
                                  "tau * lambda_max(Sigma0)^2");
        }
        out.mu = mu;
        Matrix f = Matrix::Zero(p, p);
        Matrix g = Matrix::Zero(p, p);
        for (Index it = 1; it <= cfg.max_iter; ++it) {
            // Gradient of (tau/2)||D F D - H + W||^2 at the current F.
            const Matrix coupling =
                basis.from_basis(tau * detail::scale_both(g - h + w, root));
            f = detail::soft_threshold(f - (coupling - s) / mu, rho / mu);
            g = detail::scale_both(basis.to_basis(f), root);
            const Matrix h_prev = h;
            h = project(SymMatrix::symmetrized(g + w)).mat();
            w += g - h;

            const double primal = (g - h).norm();
            const double dual = tau * detail::scale_both(h - h_prev, root).norm();
            out.primal_residual = scaled(primal, std::max(g.norm(), h.norm()));
            out.dual_residual = scaled(dual, tau * detail::scale_both(w, root).norm());
            out.iterations_used = it;
            out.objective = detail::l1_objective(s, f, rho);
            out.best_objective = std::min(out.best_objective, out.objective);
            if (!f.allFinite()) throw divergence_error("fantope_init: non-finite iterate", static_cast<long>(it));
            if (out.primal_residual < cfg.tol_primal && out.dual_residual < cfg.tol_dual) {
                out.converged = true;
                break;
            }
        }
        out.f_hat = SymMatrix::symmetrized(f);
    }

    if (!out.converged &&
        (out.primal_residual > 10.0 * cfg.tol_primal || out.dual_residual > 10.0 * cfg.tol_dual)) {
        std::ostringstream ss;
        ss << "fantope_init: stopped at max_iter=" << cfg.max_iter
           << " with scaled residuals (" << out.primal_residual << ", "
           << out.dual_residual << ")";
        out.warning = ss.str();
    }
    return out;
}

/// Top-r eigenpairs (U, D) of F_hat, A_0 = U D^{1/2}, then HT(A_0, s').
inline LoadingMatrix extract_init_loading(const FantopeSolution& sol,
                                          const CovariancePair& cov_hat, Index r,
                                          Index s_prime)
{
    const Index p = sol.f_hat.dim();
    if (r < 1 || r > p) throw parameter_error("extract_init_loading: r must lie in [1, p]");
    if (s_prime < r) throw parameter_error("extract_init_loading: s_prime must be >= r");
    linalg::EigenPairs e = linalg::sym_eig_top(sol.f_hat, r);
    const double top = std::max(e.values(0), 0.0);
    Index positive = 0;
    for (Index i = 0; i < r; ++i) {
        if (e.values(i) > 1e-12 * std::max(1.0, top)) ++positive;
    }
    if (positive < r) {
        std::ostringstream ss;
        ss << "extract_init_loading: F_hat has effective rank " << positive
           << " < r = " << r;
        throw numerical_error(ss.str());
    }
    const Matrix a0 = e.vectors * e.values.cwiseMax(0.0).cwiseSqrt().asDiagonal();
    return LoadingMatrix(tgd::hard_threshold(a0, s_prime), cov_hat.partition());
}

} // namespace sgca::fantope

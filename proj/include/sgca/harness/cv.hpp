#pragma once

#include <sgca/fantope.hpp>
#include <sgca/harness/stats.hpp>
#include <sgca/models.hpp>
#include <sgca/rng.hpp>

#include <vector>

namespace sgca::harness {

/// Random split of 0..n-1 into `folds` disjoint sets whose sizes differ by
/// at most one (equal when folds divides n). Each fold is sorted.
inline std::vector<std::vector<Index>> fold_split(Index n, Index folds, std::uint64_t seed)
{
    if (folds < 2) throw parameter_error("fold_split: need at least two folds");
    if (n < 2 * folds) throw parameter_error("fold_split: need at least two samples per fold");
    Rng rng(seed);
    const std::vector<Index> perm = rng.permutation(n);
    std::vector<std::vector<Index>> out(static_cast<std::size_t>(folds));
    for (Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i % folds)].push_back(perm[static_cast<std::size_t>(i)]);
    for (auto& f : out) std::sort(f.begin(), f.end());
    return out;
}

inline Matrix select_rows(const Matrix& data, const std::vector<Index>& rows)
{
    return data(rows, Eigen::all);
}

struct CvResult
{
    std::vector<Index> grid;
    std::vector<double> mean_score;          // per grid value
    std::vector<double> sd_score;            // across folds
    std::vector<std::vector<double>> scores; // [grid][fold]
    Index selected = 0;
    Index admm_iterations = 0; // summed over folds
};

/// Test score Tr(A^T S_test A).
inline double gca_score(const Matrix& a_hat, const SymMatrix& sigma_test)
{
    return (a_hat.transpose() * sigma_test.mat() * a_hat).trace();
}

/// K-fold selection of the sparsity level s'. The initializer is solved
/// once per fold; each grid value then truncates it and runs the gradient
/// iterations. Ties in the mean score go to the smallest s'.
inline CvResult cross_validate_sparsity(const Matrix& data, const BlockPartition& part,
                                        std::vector<Index> grid, Index folds, Index r,
                                        const tgd::TgdConfig& tgd_cfg,
                                        const fantope::FantopeConfig& fantope_cfg,
                                        std::uint64_t seed)
{
    if (grid.empty()) throw parameter_error("cross_validate_sparsity: empty grid");
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    if (grid.front() < r || grid.back() > part.total()) {
        throw parameter_error("cross_validate_sparsity: grid values must lie in [r, p]");
    }
    const auto split = fold_split(data.rows(), folds, seed);

    CvResult out;
    out.grid = grid;
    out.scores.assign(grid.size(), std::vector<double>{});
    for (Index l = 0; l < folds; ++l) {
        std::vector<Index> train;
        for (Index m = 0; m < folds; ++m) {
            if (m == l) continue;
            const auto& f = split[static_cast<std::size_t>(m)];
            train.insert(train.end(), f.begin(), f.end());
        }
        std::sort(train.begin(), train.end());
        const CovariancePair cov_train = models::sample_pair(select_rows(data, train), part);
        const SymMatrix sigma_test =
            models::sample_cov(select_rows(data, split[static_cast<std::size_t>(l)]));

        fantope::FantopeConfig fc = fantope_cfg;
        fc.r = r;
        const fantope::FantopeSolution sol = fantope::fantope_init(cov_train, fc);
        out.admm_iterations += sol.iterations_used;
        for (std::size_t g = 0; g < grid.size(); ++g) {
            tgd::TgdConfig tc = tgd_cfg;
            tc.s_prime = grid[g];
            tc.record_trace = false;
            const LoadingMatrix a0 = fantope::extract_init_loading(sol, cov_train, r, grid[g]);
            const tgd::TgdResult res = tgd::run_tgd(cov_train, a0, tc);
            out.scores[g].push_back(gca_score(res.a_hat.entries, sigma_test));
        }
    }
    double best = -HUGE_VAL;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        out.mean_score.push_back(mean(out.scores[g]));
        out.sd_score.push_back(stddev(out.scores[g]));
        if (out.mean_score.back() > best) {
            best = out.mean_score.back();
            out.selected = grid[g];
        }
    }
    return out;
}

/// {5, 10, ..., 100}
inline std::vector<Index> default_sparsity_grid()
{
    std::vector<Index> g;
    for (Index i = 1; i <= 20; ++i) g.push_back(5 * i);
    return g;
}

} // namespace sgca::harness

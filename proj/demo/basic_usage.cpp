// Fit two sparse loading vectors on a simulated three-block design and
// compare them with the truth.

#include <sgca/sgca.hpp>

#include <iostream>

int main(int, char** argv)
{
    using namespace sgca;
    if (!backend::ensure_working_lapack(argv)) return 4;

    const Index r = 2;
    models::GroundTruth truth = models::gca_design_5_1(r, 42);
    const Matrix x = models::sample_gaussian(truth.cov, 500, 43);
    const CovariancePair cov_hat = models::sample_pair(x, truth.cov.partition());

    fantope::FantopeConfig fc;
    fc.r = r;
    fc.rho = fantope::FantopeConfig::default_rho(cov_hat.dim(), x.rows());
    const fantope::FantopeSolution init = fantope::fantope_init(cov_hat, fc);
    const LoadingMatrix a0 = fantope::extract_init_loading(init, cov_hat, r, 20);

    tgd::TgdConfig tc; // eta 0.001, lambda 0.01, s' 20, T 15000
    const tgd::TgdResult fit = tgd::run_tgd(cov_hat, a0, tc);

    const Matrix& a = truth.a_true.entries;
    std::cout << "ADMM iterations:  " << init.iterations_used << '\n'
              << "initial dist^2:   "
              << geneig::mat_dist_squared(tgd::renormalize(a0, cov_hat.sigma0()).entries, a) << '\n'
              << "final dist^2:     " << geneig::mat_dist_squared(fit.a_hat.entries, a) << '\n'
              << "rows kept:        " << fit.a_hat.row_support().size() << '\n';
}

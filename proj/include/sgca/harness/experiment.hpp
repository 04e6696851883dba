#pragma once

#include <sgca/fantope.hpp>
#include <sgca/harness/cv.hpp>
#include <sgca/harness/stats.hpp>
#include <sgca/models.hpp>
#include <sgca/rng.hpp>
#include <sgca/tgd.hpp>

#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace sgca::harness {

enum class Scenario {
    gca,         // three Toeplitz blocks, latent model
    rifle,       // same design, r = 1, against the truncated Rayleigh flow
    cv_sparsity, // K-fold choice of s'
    cv_lambda,   // final error across penalty values
    cca,         // two blocks, canonical pair model
    misspec,     // three canonical pairs, two estimated
    corr_pca,    // singleton blocks, sparse correlation matrix
    general_cov, // full-rank off-diagonal blocks
};

inline const std::vector<std::pair<Scenario, std::vector<std::string>>>& scenario_names()
{
    static const std::vector<std::pair<Scenario, std::vector<std::string>>> names{
        {Scenario::gca, {"gca", "gca_5_1"}},
        {Scenario::rifle, {"rifle", "rifle_compare"}},
        {Scenario::cv_sparsity, {"cv_sparsity"}},
        {Scenario::cv_lambda, {"cv_lambda"}},
        {Scenario::cca, {"cca", "cca_5_3"}},
        {Scenario::misspec, {"misspec", "misspec_5_4"}},
        {Scenario::corr_pca, {"corr_pca", "corr_pca_5_5"}},
        {Scenario::general_cov, {"general_cov", "general_cov_5_6"}},
    };
    return names;
}

inline std::string to_string(Scenario s)
{
    for (const auto& [sc, names] : scenario_names())
        if (sc == s) return names.front();
    return "?";
}

inline Scenario scenario_from_string(const std::string& s)
{
    for (const auto& [sc, names] : scenario_names())
        for (const auto& n : names)
            if (n == s) return sc;
    throw parameter_error("unknown scenario '" + s + "'");
}

struct ExperimentSpec
{
    Scenario scenario = Scenario::gca;
    std::string label; // free text, copied to outputs

    // model
    Index n = 500;
    Index r = 1;
    Index support_size = 5;                      // gca, cv: rows per block
    models::CovKind cov_kind = models::CovKind::identity; // cca, misspec
    Index p1 = 300;
    Index p2 = 200;
    std::string corr_case = "I"; // corr_pca: I = (5,5,5), II = (7,5,3)

    // estimators
    tgd::TgdConfig tgd;
    fantope::FantopeConfig fantope;
    double rho_gamma = 0.5; // rho = gamma sqrt(log p / n)
    double rifle_eta = 0.01;
    Index rifle_t_max = 15000;

    // cross-validation
    Index cv_folds = 5;
    std::vector<Index> cv_grid = default_sparsity_grid();
    std::vector<double> lambda_grid{0.0001, 0.001, 0.01, 0.1, 1.0};

    // runner
    Index reps = 10;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    bool freeze_population = false;

    void validate() const
    {
        if (reps < 1) throw parameter_error("ExperimentSpec: reps must be >= 1");
        if (n < 2) throw parameter_error("ExperimentSpec: n must be >= 2");
        if (r < 1) throw parameter_error("ExperimentSpec: r must be >= 1");
        if (threads < 1) throw parameter_error("ExperimentSpec: threads must be >= 1");
        if (!(rho_gamma >= 0.0)) throw parameter_error("ExperimentSpec: rho gamma must be >= 0");
        if (scenario == Scenario::rifle && r != 1) {
            throw parameter_error("ExperimentSpec: the rifle comparison needs r = 1");
        }
        if (scenario == Scenario::misspec && r > 3) {
            throw parameter_error("ExperimentSpec: misspec has three canonical pairs");
        }
        if (scenario == Scenario::cca && r > 2) {
            throw parameter_error("ExperimentSpec: cca has two canonical pairs");
        }
        if (scenario == Scenario::corr_pca && corr_case != "I" && corr_case != "II") {
            throw parameter_error("ExperimentSpec: corr_case must be I or II");
        }
        if (scenario == Scenario::cv_lambda && lambda_grid.empty()) {
            throw parameter_error("ExperimentSpec: empty lambda grid");
        }
        if (tgd.trace_stride < 1) throw parameter_error("ExperimentSpec: trace stride must be >= 1");
    }
};

/// Defaults for a scenario: the tuning used in the corresponding study.
inline ExperimentSpec scenario_defaults(Scenario s)
{
    ExperimentSpec spec;
    spec.scenario = s;
    spec.tgd.eta = 0.001;
    spec.tgd.lambda_pen = 0.01;
    spec.tgd.s_prime = 20;
    spec.tgd.t_max = 15000;
    switch (s) {
    case Scenario::gca:
    case Scenario::general_cov:
        break;
    case Scenario::rifle:
        spec.tgd.eta = 0.01;
        break;
    case Scenario::cv_sparsity:
    case Scenario::cv_lambda:
        spec.r = 3;
        spec.reps = 1;
        break;
    case Scenario::cca:
        spec.n = 300;
        spec.r = 2;
        spec.tgd.t_max = 10000;
        break;
    case Scenario::misspec:
        spec.n = 300;
        spec.r = 2;
        spec.p2 = 500;
        spec.tgd.t_max = 10000;
        break;
    case Scenario::corr_pca:
        spec.r = 3;
        spec.tgd.s_prime = 40;
        spec.tgd.t_max = 20000;
        break;
    }
    return spec;
}

struct RepRecord
{
    Index rep = 0;
    std::uint64_t seed = 0;
    std::vector<double> metrics; // aligned with ExperimentResult::metric_names
    Index admm_iterations = 0;
    Index tgd_iterations = 0;
    double runtime_seconds = 0.0;
    std::vector<tgd::TracePoint> trace;
    std::string warning;
};

struct ExperimentResult
{
    ExperimentSpec spec;
    std::vector<std::string> metric_names;
    std::vector<RepRecord> reps;
    std::vector<double> median; // per metric
    std::vector<double> mad;
    double wall_seconds = 0.0;

    std::optional<std::size_t> metric_index(const std::string& name) const
    {
        for (std::size_t i = 0; i < metric_names.size(); ++i)
            if (metric_names[i] == name) return i;
        return std::nullopt;
    }

    double median_of(const std::string& name) const
    {
        const auto i = metric_index(name);
        if (!i) throw parameter_error("no metric '" + name + "'");
        return median[*i];
    }
};

inline std::string lambda_metric(double lambda)
{
    char buf[48];
    std::snprintf(buf, sizeof buf, "final_error_lambda_%g", lambda);
    return buf;
}

inline std::vector<std::string> metric_names(const ExperimentSpec& spec)
{
    switch (spec.scenario) {
    case Scenario::gca:
    case Scenario::corr_pca:
        return {"init_error", "final_error"};
    case Scenario::general_cov:
        return {"init_error", "final_error", "a_norm_sq"};
    case Scenario::rifle:
        return {"tgd_init_error", "tgd_final_error", "rifle_init_error", "rifle_final_error"};
    case Scenario::cca:
    case Scenario::misspec:
        return {"v_init", "w_init", "v_final", "w_final"};
    case Scenario::cv_sparsity: {
        std::vector<std::string> out{"selected_s_prime"};
        for (Index g : spec.cv_grid) out.push_back("cv_mean_" + std::to_string(g));
        for (Index g : spec.cv_grid) out.push_back("cv_sd_" + std::to_string(g));
        return out;
    }
    case Scenario::cv_lambda: {
        std::vector<std::string> out{"init_error"};
        for (double l : spec.lambda_grid) out.push_back(lambda_metric(l));
        return out;
    }
    }
    return {};
}

namespace detail {

inline Vector corr_case_lambdas(const std::string& c)
{
    Vector l(3);
    if (c == "I") l << 5, 5, 5;
    else if (c == "II") l << 7, 5, 3;
    else throw parameter_error("unknown correlation case '" + c + "'");
    return l;
}

inline models::GroundTruth draw_population(const ExperimentSpec& spec, std::uint64_t seed)
{
    switch (spec.scenario) {
    case Scenario::gca:
    case Scenario::rifle:
    case Scenario::cv_sparsity:
    case Scenario::cv_lambda: {
        models::GcaDesignParams prm;
        prm.r = spec.r;
        prm.support_size = spec.support_size;
        return models::gca_design(prm, seed);
    }
    case Scenario::cca: {
        std::vector<double> theta{0.9, 0.8};
        theta.resize(static_cast<std::size_t>(spec.r));
        return models::cca_design(spec.p1, spec.p2, spec.cov_kind, theta, spec.r, seed);
    }
    case Scenario::misspec:
        return models::cca_design(spec.p1, spec.p2, spec.cov_kind, {0.9, 0.8, 0.3}, spec.r, seed);
    case Scenario::corr_pca:
        return models::corr_pca_design_5_5(corr_case_lambdas(spec.corr_case), seed);
    case Scenario::general_cov:
        return models::general_cov_design_5_6(spec.r, seed);
    }
    throw parameter_error("draw_population: unknown scenario");
}

// B (B^T S B)^{-1/2} on one block, used to turn a joint estimate into
// separately normalized canonical loadings.
inline Matrix normalize_block(const Matrix& b, const Matrix& s)
{
    return b * linalg::inv_principal_sqrt(SymMatrix::symmetrized(b.transpose() * s * b)).mat();
}

struct Fit
{
    fantope::FantopeSolution init;
    LoadingMatrix a0;
    tgd::TgdResult tgd;
};

inline fantope::FantopeConfig fantope_for(const ExperimentSpec& spec, Index p, Index n)
{
    fantope::FantopeConfig fc = spec.fantope;
    fc.r = spec.r;
    fc.rho = fantope::FantopeConfig::default_rho(p, n, spec.rho_gamma);
    return fc;
}

inline RepRecord run_repetition(const ExperimentSpec& spec, Index rep,
                                const std::optional<models::GroundTruth>& frozen)
{
    RepRecord rec;
    rec.rep = rep;
    rec.seed = derive_seed(spec.seed, {static_cast<std::uint64_t>(rep)});
    const auto t0 = std::chrono::steady_clock::now();

    const models::GroundTruth truth =
        frozen ? *frozen : draw_population(spec, derive_seed(rec.seed, {1}));
    const Matrix data = models::sample_gaussian(truth.cov, spec.n, derive_seed(rec.seed, {2}));
    const CovariancePair cov_hat = models::sample_pair(data, truth.cov.partition());
    const Index p = cov_hat.dim();
    const Matrix& a = truth.a_true.entries;

    if (spec.scenario == Scenario::cv_sparsity) {
        const CvResult cv = cross_validate_sparsity(data, cov_hat.partition(), spec.cv_grid,
                                                    spec.cv_folds, spec.r, spec.tgd,
                                                    fantope_for(spec, p, spec.n * (spec.cv_folds - 1) / spec.cv_folds),
                                                    derive_seed(rec.seed, {3}));
        rec.metrics.push_back(static_cast<double>(cv.selected));
        for (double m : cv.mean_score) rec.metrics.push_back(m);
        for (double s : cv.sd_score) rec.metrics.push_back(s);
        rec.admm_iterations = cv.admm_iterations;
        rec.tgd_iterations = spec.tgd.t_max;
        rec.runtime_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return rec;
    }

    const fantope::FantopeSolution init = fantope::fantope_init(cov_hat, fantope_for(spec, p, spec.n));
    rec.admm_iterations = init.iterations_used;
    rec.warning = init.warning;
    const LoadingMatrix a0 =
        fantope::extract_init_loading(init, cov_hat, spec.r, spec.tgd.s_prime);
    const Matrix a0_norm = tgd::renormalize(a0, cov_hat.sigma0()).entries;

    tgd::TgdConfig tc = spec.tgd;
    if (tc.record_trace) {
        tc.reference_a = a;
        tc.reference_v = tgd::stationary_scaling(a, truth.spectrum.head(spec.r), tc.lambda_pen);
    }

    auto finish = [&]() {
        rec.runtime_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return rec;
    };

    switch (spec.scenario) {
    case Scenario::gca:
    case Scenario::general_cov: {
        tgd::TgdResult res = tgd::run_tgd(cov_hat, a0, tc);
        rec.metrics = {geneig::mat_dist_squared(a0_norm, a),
                       geneig::mat_dist_squared(res.a_hat.entries, a)};
        if (spec.scenario == Scenario::general_cov) rec.metrics.push_back(a.squaredNorm());
        rec.tgd_iterations = res.iterations;
        rec.trace = std::move(res.trace);
        return finish();
    }
    case Scenario::corr_pca: {
        tgd::TgdResult res = tgd::run_tgd(cov_hat, a0, tc);
        const Vector sd = truth.cov.sigma0().mat().diagonal().cwiseSqrt();
        const Matrix e_r = sd.asDiagonal() * a;
        rec.metrics = {geneig::corr_pca_loss(e_r, a0_norm, cov_hat.sigma0()),
                       geneig::corr_pca_loss(e_r, res.a_hat.entries, cov_hat.sigma0())};
        rec.tgd_iterations = res.iterations;
        rec.trace = std::move(res.trace);
        return finish();
    }
    case Scenario::rifle: {
        tgd::TgdResult res = tgd::run_tgd(cov_hat, a0, tc);
        const Vector x = tgd::run_rifle(cov_hat, a0.entries.col(0), spec.rifle_eta,
                                        spec.tgd.s_prime, spec.rifle_t_max);
        const double init_err = geneig::mat_dist_squared(a0_norm, a);
        rec.metrics = {init_err, geneig::mat_dist_squared(res.a_hat.entries, a), init_err,
                       geneig::mat_dist_squared(x, a)};
        rec.tgd_iterations = res.iterations;
        rec.trace = std::move(res.trace);
        return finish();
    }
    case Scenario::cca:
    case Scenario::misspec: {
        tgd::TgdResult res = tgd::run_tgd(cov_hat, a0, tc);
        const Index p1 = truth.cov.partition().size(0);
        const Index p2 = truth.cov.partition().size(1);
        const Matrix v = std::sqrt(2.0) * a.topRows(p1);
        const Matrix w = std::sqrt(2.0) * a.bottomRows(p2);
        const SymMatrix sx = SymMatrix::symmetrized(truth.cov.block(0));
        const SymMatrix sy = SymMatrix::symmetrized(truth.cov.block(1));
        const Matrix sx_hat = cov_hat.block(0);
        const Matrix sy_hat = cov_hat.block(1);
        auto losses = [&](const Matrix& est) {
            const Matrix v_hat = normalize_block(est.topRows(p1), sx_hat);
            const Matrix w_hat = normalize_block(est.bottomRows(p2), sy_hat);
            return std::pair{geneig::prediction_loss(v, v_hat, sx),
                             geneig::prediction_loss(w, w_hat, sy)};
        };
        const auto [vi, wi] = losses(a0.entries);
        const auto [vf, wf] = losses(res.a_hat.entries);
        rec.metrics = {vi, wi, vf, wf};
        rec.tgd_iterations = res.iterations;
        rec.trace = std::move(res.trace);
        return finish();
    }
    case Scenario::cv_lambda: {
        rec.metrics = {geneig::mat_dist_squared(a0_norm, a)};
        for (double l : spec.lambda_grid) {
            tgd::TgdConfig lc = spec.tgd;
            lc.lambda_pen = l;
            lc.record_trace = false;
            const tgd::TgdResult res = tgd::run_tgd(cov_hat, a0, lc);
            rec.metrics.push_back(geneig::mat_dist_squared(res.a_hat.entries, a));
            rec.tgd_iterations += res.iterations;
        }
        return finish();
    }
    case Scenario::cv_sparsity:
        break;
    }
    throw parameter_error("run_repetition: unknown scenario");
}

} // namespace detail

/// Runs spec.reps independent repetitions on spec.threads workers. Each
/// repetition's seed depends only on (spec.seed, rep), so the result does
/// not depend on the worker count. A failing repetition is reported with
/// its index and seed.
inline ExperimentResult run_experiment(const ExperimentSpec& spec)
{
    spec.validate();
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentResult out;
    out.spec = spec;
    out.metric_names = metric_names(spec);
    out.reps.resize(static_cast<std::size_t>(spec.reps));

    std::optional<models::GroundTruth> frozen;
    if (spec.freeze_population) {
        frozen = detail::draw_population(spec, derive_seed(spec.seed, {~std::uint64_t{0}}));
    }

    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(spec.reps));
    std::atomic<Index> next{0};
    auto worker = [&]() {
        for (Index i = next++; i < spec.reps; i = next++) {
            try {
                out.reps[static_cast<std::size_t>(i)] = detail::run_repetition(spec, i, frozen);
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
    };
    const unsigned nthreads =
        std::min<unsigned>(spec.threads, static_cast<unsigned>(spec.reps));
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (Index i = 0; i < spec.reps; ++i) {
        if (!errors[static_cast<std::size_t>(i)]) continue;
        const std::uint64_t seed = derive_seed(spec.seed, {static_cast<std::uint64_t>(i)});
        std::string msg = "repetition " + std::to_string(i) + " (seed " +
                          std::to_string(seed) + ") failed: ";
        try {
            std::rethrow_exception(errors[static_cast<std::size_t>(i)]);
        } catch (const std::exception& e) {
            throw numerical_error(msg + e.what());
        }
    }

    for (std::size_t m = 0; m < out.metric_names.size(); ++m) {
        std::vector<double> col;
        for (const auto& rec : out.reps) col.push_back(rec.metrics.at(m));
        out.median.push_back(median(col));
        out.mad.push_back(mad(col));
    }
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

} // namespace sgca::harness

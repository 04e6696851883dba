// Command-line front end: simulate, reproduce, cv, estimate.

#include <sgca/sgca.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace sgca;
using namespace sgca::harness;

namespace {

struct Flags
{
    std::optional<std::string> scenario;
    std::optional<Index> reps;
    std::optional<std::uint64_t> seed;
    std::optional<Index> n;
    std::optional<Index> r;
    std::optional<Index> s_prime;
    std::optional<double> eta;
    std::optional<double> lambda;
    std::optional<double> rho_gamma;
    std::optional<Index> t_max;
    std::optional<std::string> out_dir;
    std::optional<unsigned> threads;
    bool freeze_population = false;
    std::optional<std::string> config;

    std::optional<std::string> cov_kind;
    std::optional<Index> p1;
    std::optional<Index> p2;
    std::optional<std::string> corr_case;
    std::optional<Index> support_size;
    bool trace = false;
    std::optional<Index> trace_stride;
    std::optional<std::string> admm_variant;
    std::optional<double> admm_tol;
    std::optional<Index> admm_max_iter;
};

void add_tuning_flags(CLI::App* app, Flags& f)
{
    app->add_option("--seed", f.seed, "Base seed");
    app->add_option("--reps", f.reps, "Number of repetitions")->check(CLI::PositiveNumber);
    app->add_option("--s-prime", f.s_prime, "Hard-thresholding level s'")->check(CLI::PositiveNumber);
    app->add_option("--eta", f.eta, "Gradient step size")->check(CLI::PositiveNumber);
    app->add_option("--lambda", f.lambda, "Penalty lambda")->check(CLI::PositiveNumber);
    app->add_option("--rho-gamma", f.rho_gamma, "rho = gamma sqrt(log p / n)")->check(CLI::NonNegativeNumber);
    app->add_option("--t-max", f.t_max, "Gradient iterations T")->check(CLI::PositiveNumber);
    app->add_option("--out-dir", f.out_dir, "Output directory");
    app->add_option("--threads", f.threads, "Worker threads across repetitions")->check(CLI::PositiveNumber);
    app->add_flag("--freeze-population", f.freeze_population,
                  "Draw population parameters once instead of per repetition");
    app->add_option("--admm-variant", f.admm_variant, "split or linearized");
    app->add_option("--admm-tol", f.admm_tol, "Scaled residual tolerance")->check(CLI::PositiveNumber);
    app->add_option("--admm-max-iter", f.admm_max_iter, "ADMM iteration cap")->check(CLI::PositiveNumber);
    app->add_option("--trace-stride", f.trace_stride, "Record every k-th iterate")->check(CLI::PositiveNumber);
}

void add_model_flags(CLI::App* app, Flags& f)
{
    app->add_option("--config", f.config, "YAML config file")->check(CLI::ExistingFile);
    app->add_option("--n", f.n, "Sample size")->check(CLI::PositiveNumber);
    app->add_option("--r", f.r, "Number of loading vectors")->check(CLI::PositiveNumber);
    app->add_option("--cov-kind", f.cov_kind, "identity, toeplitz or sparse_inv");
    app->add_option("--p1", f.p1, "First block size (cca, misspec)")->check(CLI::PositiveNumber);
    app->add_option("--p2", f.p2, "Second block size (cca, misspec)")->check(CLI::PositiveNumber);
    app->add_option("--support-size", f.support_size, "Nonzero rows per block")->check(CLI::PositiveNumber);
    app->add_flag("--trace", f.trace, "Write per-iteration distances to trace.csv");
}

// Tuning overrides shared by every subcommand.
void apply_tuning(ExperimentSpec& s, const Flags& f)
{
    if (f.seed) s.seed = *f.seed;
    if (f.reps) s.reps = *f.reps;
    if (f.s_prime) s.tgd.s_prime = *f.s_prime;
    if (f.eta) s.tgd.eta = *f.eta;
    if (f.lambda) s.tgd.lambda_pen = *f.lambda;
    if (f.rho_gamma) s.rho_gamma = *f.rho_gamma;
    if (f.t_max) s.tgd.t_max = *f.t_max;
    if (f.threads) s.threads = *f.threads;
    if (f.freeze_population) s.freeze_population = true;
    if (f.admm_variant) s.fantope.variant = fantope::admm_variant_from_string(*f.admm_variant);
    if (f.admm_tol) s.fantope.tol_primal = s.fantope.tol_dual = *f.admm_tol;
    if (f.admm_max_iter) s.fantope.max_iter = *f.admm_max_iter;
    if (f.trace_stride) s.tgd.trace_stride = *f.trace_stride;
}

void apply_model(ExperimentSpec& s, const Flags& f)
{
    if (f.n) s.n = *f.n;
    if (f.r) s.r = *f.r;
    if (f.cov_kind) s.cov_kind = models::cov_kind_from_string(*f.cov_kind);
    if (f.p1) s.p1 = *f.p1;
    if (f.p2) s.p2 = *f.p2;
    if (f.corr_case) s.corr_case = *f.corr_case;
    if (f.support_size) s.support_size = *f.support_size;
    if (f.trace) s.tgd.record_trace = true;
}

// Scenario defaults, then the config file, then flags.
ExperimentSpec resolve_spec(const Flags& f, Scenario fallback)
{
    YAML::Node cfg;
    if (f.config) cfg = load_config_file(*f.config);
    Scenario sc = fallback;
    if (auto c = config_scenario(cfg)) sc = *c;
    if (f.scenario) sc = scenario_from_string(*f.scenario);
    ExperimentSpec spec = scenario_defaults(sc);
    apply_config(spec, cfg);
    spec.scenario = sc;
    apply_model(spec, f);
    apply_tuning(spec, f);
    spec.validate();
    return spec;
}

std::vector<Index> parse_sizes(const std::string& text)
{
    std::vector<Index> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            const long v = std::stol(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            throw parameter_error("bad block size '" + item + "' in --partition");
        }
    }
    return out;
}

struct DataFile
{
    std::vector<std::string> names;
    Matrix values;
};

DataFile read_data(const std::string& path)
{
    const Table t = read_csv(path);
    DataFile d;
    d.names = t.header;
    d.values.resize(static_cast<Index>(t.rows.size()), static_cast<Index>(t.header.size()));
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        for (std::size_t j = 0; j < t.header.size(); ++j) {
            try {
                d.values(static_cast<Index>(i), static_cast<Index>(j)) = parse_double(t.rows[i][j]);
            } catch (const parameter_error&) {
                throw parameter_error(path + ": row " + std::to_string(i + 2) + ", column '" +
                                      t.header[j] + "' is not numeric");
            }
        }
    }
    if (!d.values.allFinite()) throw parameter_error(path + ": non-finite values");
    return d;
}

int cmd_simulate(const Flags& f)
{
    const ExperimentSpec spec = resolve_spec(f, Scenario::gca);
    const ExperimentResult res = run_experiment(spec);
    const fs::path dir = f.out_dir.value_or("sgca_out/" + to_string(spec.scenario));
    write_run_dir(res, dir);
    std::cout << summary_text(res) << "\nwrote " << dir.string() << '\n';
    return 0;
}

int cmd_reproduce(const std::string& id, const Flags& f)
{
    if (f.n || f.r || f.scenario || f.cov_kind || f.p1 || f.p2 || f.support_size || f.config) {
        throw parameter_error("reproduce: presets fix the model; only tuning flags may be given");
    }
    std::vector<PresetCell> cells = preset_cells(id, f.seed.value_or(1), f.reps.value_or(0));
    const fs::path dir = f.out_dir.value_or("sgca_out/" + id);
    fs::create_directories(dir);
    std::vector<ExperimentResult> results;
    std::ostringstream summary;
    summary << id << ": " << preset_description(id) << "\n\n";
    for (auto& cell : cells) {
        Flags tuning = f;
        tuning.seed.reset();
        tuning.reps.reset();
        apply_tuning(cell.spec, tuning);
        if (f.trace) cell.spec.tgd.record_trace = true;
        std::cerr << "[" << id << "] " << cell.name << " (" << cell.spec.reps << " reps)\n";
        results.push_back(run_experiment(cell.spec));
        write_run_dir(results.back(), dir / cell.name);
        summary << "== " << cell.name << " ==\n" << summary_text(results.back()) << '\n';
    }
    write_csv((dir / "table.csv").string(), preset_table(cells, results));
    write_text(dir / "summary.txt", summary.str());
    std::cout << summary.str() << "wrote " << dir.string() << '\n';
    return 0;
}

int cmd_cv(const Flags& f, const std::optional<std::string>& data_path,
           const std::optional<std::string>& partition, const std::string& target)
{
    if (!data_path) {
        Flags g = f;
        if (!g.scenario) g.scenario = target == "lambda" ? "cv_lambda" : "cv_sparsity";
        const ExperimentSpec probe = resolve_spec(g, Scenario::cv_sparsity);
        if (probe.scenario != Scenario::cv_sparsity && probe.scenario != Scenario::cv_lambda) {
            throw parameter_error("cv: scenario must be cv_sparsity or cv_lambda");
        }
        ExperimentSpec spec = probe;
        if (f.corr_case && !f.support_size) {
            const std::string& c = *f.corr_case;
            spec.support_size = c == "I" ? 5 : c == "II" ? 15 : c == "III" ? 20 : -1;
            if (spec.support_size < 0) throw parameter_error("cv: --case must be I, II or III");
            spec.corr_case = "I";
        }
        const ExperimentResult res = run_experiment(spec);
        const fs::path dir = f.out_dir.value_or("sgca_out/" + to_string(spec.scenario));
        write_run_dir(res, dir);
        std::cout << summary_text(res) << "\nwrote " << dir.string() << '\n';
        return 0;
    }

    if (!partition) throw parameter_error("cv: --data needs --partition");
    const DataFile d = read_data(*data_path);
    const BlockPartition part(parse_sizes(*partition));
    if (part.total() != d.values.cols()) {
        throw parameter_error("cv: partition sizes sum to " + std::to_string(part.total()) +
                              " but the data has " + std::to_string(d.values.cols()) + " columns");
    }
    ExperimentSpec spec = resolve_spec(f, Scenario::cv_sparsity);
    std::vector<Index> grid;
    for (Index g : spec.cv_grid)
        if (g >= spec.r && g <= part.total()) grid.push_back(g);
    const Index n = d.values.rows();
    fantope::FantopeConfig fc = spec.fantope;
    fc.rho = fantope::FantopeConfig::default_rho(part.total(), n * (spec.cv_folds - 1) / spec.cv_folds,
                                                 spec.rho_gamma);
    const CvResult cv = cross_validate_sparsity(d.values, part, grid, spec.cv_folds, spec.r,
                                                spec.tgd, fc, spec.seed);
    Table t;
    t.header = {"s_prime", "cv_mean", "cv_sd"};
    for (Index l = 0; l < spec.cv_folds; ++l) t.header.push_back("fold_" + std::to_string(l + 1));
    for (std::size_t g = 0; g < cv.grid.size(); ++g) {
        std::vector<std::string> row{std::to_string(cv.grid[g]), format_double(cv.mean_score[g]),
                                     format_double(cv.sd_score[g])};
        for (double s : cv.scores[g]) row.push_back(format_double(s));
        t.rows.push_back(std::move(row));
    }
    const fs::path dir = f.out_dir.value_or("sgca_out/cv");
    fs::create_directories(dir);
    write_csv((dir / "result.csv").string(), t);
    write_text(dir / "resolved_config.yaml", to_yaml_string(spec));
    std::ostringstream ss;
    ss << "cross-validation on " << *data_path << " (n = " << n << ", p = " << part.total()
       << ", r = " << spec.r << ", " << spec.cv_folds << " folds)\nselected s' = " << cv.selected
       << '\n';
    write_text(dir / "summary.txt", ss.str());
    std::cout << ss.str() << "wrote " << dir.string() << '\n';
    return 0;
}

int cmd_estimate(const Flags& f, const std::string& data_path, const std::string& partition)
{
    const DataFile d = read_data(data_path);
    const BlockPartition part(parse_sizes(partition));
    if (part.total() != d.values.cols()) {
        throw parameter_error("estimate: partition sizes sum to " + std::to_string(part.total()) +
                              " but the data has " + std::to_string(d.values.cols()) + " columns");
    }
    ExperimentSpec spec = resolve_spec(f, Scenario::gca);
    spec.n = d.values.rows();
    spec.reps = 1;
    const CovariancePair cov_hat = models::sample_pair(d.values, part);
    fantope::FantopeConfig fc = spec.fantope;
    fc.r = spec.r;
    fc.rho = fantope::FantopeConfig::default_rho(part.total(), spec.n, spec.rho_gamma);
    const fantope::FantopeSolution init = fantope::fantope_init(cov_hat, fc);
    const LoadingMatrix a0 = fantope::extract_init_loading(init, cov_hat, spec.r, spec.tgd.s_prime);
    tgd::TgdConfig tc = spec.tgd;
    tc.record_trace = false;
    const tgd::TgdResult res = tgd::run_tgd(cov_hat, a0, tc);

    Table t;
    t.header = {"row", "name", "block"};
    for (Index c = 0; c < spec.r; ++c) t.header.push_back("a_" + std::to_string(c + 1));
    for (Index i = 0; i < res.a_hat.rows(); ++i) {
        std::vector<std::string> row{std::to_string(i), d.names[static_cast<std::size_t>(i)],
                                     std::to_string(part.block_of(i))};
        for (Index c = 0; c < spec.r; ++c) row.push_back(format_double(res.a_hat.entries(i, c)));
        t.rows.push_back(std::move(row));
    }
    const fs::path dir = f.out_dir.value_or("sgca_out/estimate");
    fs::create_directories(dir);
    write_csv((dir / "result.csv").string(), t);
    write_text(dir / "resolved_config.yaml", to_yaml_string(spec));

    const Matrix gram = res.a_hat.entries.transpose() * cov_hat.sigma0().mat() * res.a_hat.entries;
    std::ostringstream ss;
    ss << "estimate on " << data_path << " (n = " << spec.n << ", p = " << part.total()
       << ", blocks = " << part.count() << ", r = " << spec.r << ")\n"
       << "initializer: " << init.iterations_used << " ADMM iterations, "
       << (init.converged ? "converged" : "not converged") << '\n';
    if (!init.warning.empty()) ss << "warning: " << init.warning << '\n';
    ss << "gradient iterations: " << res.iterations << '\n'
       << "row support size: " << res.a_hat.row_support().size() << '\n'
       << "generalized Rayleigh trace tr(A^T S A): "
       << (res.a_hat.entries.transpose() * cov_hat.sigma().mat() * res.a_hat.entries).trace() << '\n'
       << "normalization error ||A^T S0 A - I||_F: "
       << (gram - Matrix::Identity(spec.r, spec.r)).norm() << '\n';
    write_text(dir / "summary.txt", ss.str());
    std::cout << ss.str() << "wrote " << dir.string() << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    if (!backend::ensure_working_lapack(argv)) {
        std::cerr << "error: the LAPACK backend fails its self-check on this machine\n";
        return 4;
    }

    CLI::App app{"Sparse generalized correlation analysis"};
    app.require_subcommand(1);
    Flags f;

    auto* sim = app.add_subcommand("simulate", "Run one simulation scenario");
    sim->add_option("--scenario", f.scenario,
                    "gca, rifle, cv_sparsity, cv_lambda, cca, misspec, corr_pca, general_cov");
    sim->add_option("--case", f.corr_case, "corr_pca case: I or II");
    add_model_flags(sim, f);
    add_tuning_flags(sim, f);

    std::string table_id;
    auto* rep = app.add_subcommand("reproduce", "Run the preset cells of one table or figure");
    rep->add_option("table-id", table_id, "table1..table7, lambda, misspec, figure1, figure2")
        ->required();
    rep->add_flag("--trace", f.trace, "Write per-iteration distances to trace.csv");
    add_tuning_flags(rep, f);

    std::optional<std::string> data_path, partition;
    std::string target = "sparsity";
    auto* cv = app.add_subcommand("cv", "Cross-validation for s' or the lambda study");
    cv->add_option("--target", target, "sparsity or lambda")
        ->check(CLI::IsMember({"sparsity", "lambda"}));
    cv->add_option("--case", f.corr_case, "I, II or III: 5, 15 or 20 rows per block");
    cv->add_option("--data", data_path, "CSV with a header row; one sample per row")
        ->check(CLI::ExistingFile);
    cv->add_option("--partition", partition, "Comma-separated block sizes");
    cv->add_option("--scenario", f.scenario, "cv_sparsity or cv_lambda");
    add_model_flags(cv, f);
    add_tuning_flags(cv, f);

    std::string est_data, est_partition;
    auto* est = app.add_subcommand("estimate", "Fit the initializer and gradient iterations to data");
    est->add_option("--data", est_data, "CSV with a header row; one sample per row")
        ->required()
        ->check(CLI::ExistingFile);
    est->add_option("--partition", est_partition, "Comma-separated block sizes")->required();
    est->add_option("--config", f.config, "YAML config file")->check(CLI::ExistingFile);
    est->add_option("--r", f.r, "Number of loading vectors")->check(CLI::PositiveNumber);
    add_tuning_flags(est, f);

    CLI11_PARSE(app, argc, argv);
    try {
        if (*sim) return cmd_simulate(f);
        if (*rep) return cmd_reproduce(table_id, f);
        if (*cv) return cmd_cv(f, data_path, partition, target);
        if (*est) return cmd_estimate(f, est_data, est_partition);
    } catch (const parameter_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const numerical_error& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

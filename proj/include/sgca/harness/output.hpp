#pragma once

#include <sgca/harness/config.hpp>
#include <sgca/harness/csv.hpp>
#include <sgca/harness/experiment.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

namespace sgca::harness {

/// rep, seed, <metrics...>, admm_iterations, tgd_iterations; then two
/// footer rows with the median and the MAD of every numeric column.
/// Runtimes are left out so equal specs give equal bytes.
inline Table result_table(const ExperimentResult& res)
{
    Table t;
    t.header = {"rep", "seed"};
    t.header.insert(t.header.end(), res.metric_names.begin(), res.metric_names.end());
    t.header.push_back("admm_iterations");
    t.header.push_back("tgd_iterations");
    std::vector<double> admm, iters;
    for (const auto& rec : res.reps) {
        std::vector<std::string> row{std::to_string(rec.rep), std::to_string(rec.seed)};
        for (double m : rec.metrics) row.push_back(format_double(m));
        row.push_back(std::to_string(rec.admm_iterations));
        row.push_back(std::to_string(rec.tgd_iterations));
        t.rows.push_back(std::move(row));
        admm.push_back(static_cast<double>(rec.admm_iterations));
        iters.push_back(static_cast<double>(rec.tgd_iterations));
    }
    auto footer = [&](const char* name, const std::vector<double>& stats, double a, double b) {
        std::vector<std::string> row{name, ""};
        for (double s : stats) row.push_back(format_double(s));
        row.push_back(format_double(a));
        row.push_back(format_double(b));
        t.rows.push_back(std::move(row));
    };
    footer("median", res.median, median(admm), median(iters));
    footer("mad", res.mad, mad(admm), mad(iters));
    return t;
}

/// rep, t, dist_v, dist_a, log_dist_v, log_dist_a, objective.
inline Table trace_table(const ExperimentResult& res)
{
    Table t;
    t.header = {"rep", "t", "dist_v", "dist_a", "log_dist_v", "log_dist_a", "objective"};
    for (const auto& rec : res.reps) {
        for (const auto& tp : rec.trace) {
            t.rows.push_back({std::to_string(rec.rep), std::to_string(tp.iteration),
                              format_double(tp.dist_v), format_double(tp.dist_a),
                              format_double(std::log(tp.dist_v)),
                              format_double(std::log(tp.dist_a)),
                              format_double(tp.objective)});
        }
    }
    return t;
}

inline std::string summary_text(const ExperimentResult& res)
{
    std::ostringstream ss;
    ss << "scenario: " << to_string(res.spec.scenario) << '\n';
    if (!res.spec.label.empty()) ss << "label: " << res.spec.label << '\n';
    ss << "repetitions: " << res.reps.size() << "  base seed: " << res.spec.seed
       << "  threads: " << res.spec.threads << '\n';
    ss << "n = " << res.spec.n << ", r = " << res.spec.r << ", s' = " << res.spec.tgd.s_prime
       << ", eta = " << res.spec.tgd.eta << ", lambda = " << res.spec.tgd.lambda_pen
       << ", T = " << res.spec.tgd.t_max << ", rho gamma = " << res.spec.rho_gamma << "\n\n";
    std::size_t width = 6;
    for (const auto& n : res.metric_names) width = std::max(width, n.size());
    ss << std::left << std::setw(static_cast<int>(width) + 2) << "metric" << "median (MAD)\n";
    for (std::size_t i = 0; i < res.metric_names.size(); ++i) {
        ss << std::left << std::setw(static_cast<int>(width) + 2) << res.metric_names[i]
           << std::setprecision(4) << std::fixed << res.median[i] << " (" << res.mad[i] << ")\n";
        ss.unsetf(std::ios::fixed);
    }
    double total = 0.0;
    Index warned = 0;
    for (const auto& rec : res.reps) {
        total += rec.runtime_seconds;
        if (!rec.warning.empty()) ++warned;
    }
    ss << std::setprecision(3) << "\nwall time: " << res.wall_seconds << " s, mean per repetition: "
       << total / static_cast<double>(res.reps.size()) << " s\n";
    if (warned) {
        ss << warned << " repetition(s) stopped the ADMM at max_iter before reaching tolerance\n";
    }
    return ss.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::system_error(errno, std::generic_category(), "cannot open " + path.string());
    os << text;
    if (!os) throw std::system_error(errno, std::generic_category(), "write failed: " + path.string());
}

/// result.csv, trace.csv (when traces were recorded), resolved_config.yaml
/// and summary.txt under `dir`.
inline void write_run_dir(const ExperimentResult& res, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    write_csv((dir / "result.csv").string(), result_table(res));
    bool traced = false;
    for (const auto& rec : res.reps) traced = traced || !rec.trace.empty();
    if (traced) write_csv((dir / "trace.csv").string(), trace_table(res));
    write_text(dir / "resolved_config.yaml", to_yaml_string(res.spec));
    write_text(dir / "summary.txt", summary_text(res));
}

} // namespace sgca::harness

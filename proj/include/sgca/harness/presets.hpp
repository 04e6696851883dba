#pragma once

#include <sgca/harness/experiment.hpp>
#include <sgca/harness/output.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace sgca::harness {

struct PresetCell
{
    std::string name; // directory name, e.g. "r=3" or "n=500_case=I"
    ExperimentSpec spec;
};

inline const std::vector<std::string>& preset_ids()
{
    static const std::vector<std::string> ids{"table1", "table2", "table3", "table4",
                                              "table5", "table6", "table7", "lambda",
                                              "misspec", "figure1", "figure2"};
    return ids;
}

inline std::string preset_description(const std::string& id)
{
    if (id == "table1") return "sparse GCA, r = 1..5: initial and final squared distance";
    if (id == "table2") return "r = 1, TGD against the truncated Rayleigh flow, n = 500 and 1000";
    if (id == "table3") return "sparse CCA, Toeplitz covariance: prediction losses";
    if (id == "table4") return "sparse CCA, identity covariance: prediction losses";
    if (id == "table5") return "sparse CCA, sparse-inverse covariance: prediction losses";
    if (id == "table6") return "sparse PCA of correlation matrices, cases I and II";
    if (id == "table7") return "general covariance structure, r = 1..3";
    if (id == "lambda") return "final error across penalties lambda, r = 3 and 4";
    if (id == "misspec") return "three canonical pairs, two estimated";
    if (id == "figure1") return "per-iteration distance traces, r = 1..5";
    if (id == "figure2") return "cross-validation curves for s', s_i = 5, 15, 20";
    throw parameter_error("unknown preset '" + id + "'");
}

/// Cells of a preset. `reps` of 0 keeps the study's repetition count.
inline std::vector<PresetCell> preset_cells(const std::string& id, std::uint64_t seed,
                                            Index reps = 0)
{
    std::vector<PresetCell> cells;
    auto add = [&](std::string name, ExperimentSpec spec, Index default_reps) {
        spec.reps = reps > 0 ? reps : default_reps;
        spec.seed = derive_seed(seed, {static_cast<std::uint64_t>(cells.size())});
        spec.label = id + "/" + name;
        cells.push_back({std::move(name), std::move(spec)});
    };
    auto cca_cells = [&](models::CovKind kind) {
        const Index dims[4][3] = {{300, 300, 200}, {600, 600, 200}, {300, 300, 500}, {600, 600, 500}};
        for (const auto& d : dims) {
            ExperimentSpec s = scenario_defaults(Scenario::cca);
            s.cov_kind = kind;
            s.n = d[0];
            s.p1 = d[1];
            s.p2 = d[2];
            add("n=" + std::to_string(d[0]) + "_p1=" + std::to_string(d[1]) + "_p2=" +
                    std::to_string(d[2]),
                s, 50);
        }
    };

    if (id == "table1" || id == "figure1") {
        for (Index r = 1; r <= 5; ++r) {
            ExperimentSpec s = scenario_defaults(Scenario::gca);
            s.r = r;
            if (id == "figure1") s.tgd.record_trace = true;
            add("r=" + std::to_string(r), s, id == "figure1" ? 1 : 50);
        }
    } else if (id == "table2") {
        for (Index n : {500, 1000}) {
            ExperimentSpec s = scenario_defaults(Scenario::rifle);
            s.n = n;
            add("n=" + std::to_string(n), s, 50);
        }
    } else if (id == "table3") {
        cca_cells(models::CovKind::toeplitz);
    } else if (id == "table4") {
        cca_cells(models::CovKind::identity);
    } else if (id == "table5") {
        cca_cells(models::CovKind::sparse_inv);
    } else if (id == "table6") {
        for (Index n : {500, 2000}) {
            for (const char* c : {"I", "II"}) {
                ExperimentSpec s = scenario_defaults(Scenario::corr_pca);
                s.n = n;
                s.corr_case = c;
                add("n=" + std::to_string(n) + "_case=" + c, s, 50);
            }
        }
    } else if (id == "table7") {
        for (Index n : {500, 2000}) {
            for (Index r = 1; r <= 3; ++r) {
                ExperimentSpec s = scenario_defaults(Scenario::general_cov);
                s.n = n;
                s.r = r;
                add("n=" + std::to_string(n) + "_r=" + std::to_string(r), s, 50);
            }
        }
    } else if (id == "lambda") {
        for (Index r : {3, 4}) {
            ExperimentSpec s = scenario_defaults(Scenario::cv_lambda);
            s.r = r;
            add("r=" + std::to_string(r), s, 50);
        }
    } else if (id == "misspec") {
        for (auto kind : {models::CovKind::toeplitz, models::CovKind::identity,
                          models::CovKind::sparse_inv}) {
            ExperimentSpec s = scenario_defaults(Scenario::misspec);
            s.cov_kind = kind;
            add(models::to_string(kind), s, 100);
        }
    } else if (id == "figure2") {
        for (Index sz : {5, 15, 20}) {
            ExperimentSpec s = scenario_defaults(Scenario::cv_sparsity);
            s.support_size = sz;
            add("s_i=" + std::to_string(sz), s, 1);
        }
    } else {
        throw parameter_error("unknown preset '" + id + "'");
    }
    return cells;
}

/// One row per cell: cell, then median and MAD of each metric.
inline Table preset_table(const std::vector<PresetCell>& cells,
                          const std::vector<ExperimentResult>& results)
{
    Table t;
    t.header = {"cell", "reps"};
    const auto& names = results.front().metric_names;
    for (const auto& n : names) {
        t.header.push_back(n + "_median");
        t.header.push_back(n + "_mad");
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
        std::vector<std::string> row{cells[c].name, std::to_string(results[c].reps.size())};
        for (std::size_t m = 0; m < names.size(); ++m) {
            row.push_back(format_double(results[c].median[m]));
            row.push_back(format_double(results[c].mad[m]));
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

} // namespace sgca::harness

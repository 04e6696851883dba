#pragma once

#include <sgca/harness/csv.hpp>
#include <sgca/harness/experiment.hpp>

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cmath>
#include <string>
#include <vector>

namespace sgca::harness {

// Config files are YAML mappings with the sections below; every key is
// optional and falls back to the scenario defaults.
//
//   experiment: {scenario, label, reps, seed, threads, freeze_population}
//   model:      {n, r, support_size, cov_kind, p1, p2, corr_case}
//   tgd:        {eta, lambda, s_prime, t_max, record_trace, trace_stride}
//   fantope:    {rho_gamma, admm_step, linearization, max_iter,
//                tol_primal, tol_dual, variant}
//   rifle:      {eta, t_max}
//   cv:         {folds, grid, lambda_grid}

namespace detail {

template <class T>
void read_key(const YAML::Node& section, const char* key, T& dst)
{
    if (!section) return;
    const YAML::Node v = section[key];
    if (!v) return;
    try {
        dst = v.as<T>();
    } catch (const YAML::Exception& e) {
        throw parameter_error(std::string("config: bad value for '") + key + "': " + e.what());
    }
}

inline void check_keys(const YAML::Node& section, const char* name,
                       const std::vector<std::string>& allowed)
{
    if (!section) return;
    if (!section.IsMap()) throw parameter_error(std::string("config: section '") + name + "' must be a mapping");
    for (const auto& kv : section) {
        const auto key = kv.first.as<std::string>();
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw parameter_error("config: unknown key '" + key + "' in section '" + name + "'");
        }
    }
}

} // namespace detail

/// Scenario named in a config node, if any.
inline std::optional<Scenario> config_scenario(const YAML::Node& root)
{
    if (root && root["experiment"] && root["experiment"]["scenario"]) {
        return scenario_from_string(root["experiment"]["scenario"].as<std::string>());
    }
    return std::nullopt;
}

/// Overlays the keys present in `root` on `spec`.
inline void apply_config(ExperimentSpec& spec, const YAML::Node& root)
{
    if (!root || root.IsNull()) return;
    if (!root.IsMap()) throw parameter_error("config: top level must be a mapping");
    for (const auto& kv : root) {
        const auto key = kv.first.as<std::string>();
        static const std::vector<std::string> sections{"experiment", "model", "tgd",
                                                       "fantope", "rifle", "cv"};
        if (std::find(sections.begin(), sections.end(), key) == sections.end()) {
            throw parameter_error("config: unknown section '" + key + "'");
        }
    }
    using detail::read_key;
    const YAML::Node ex = root["experiment"];
    detail::check_keys(ex, "experiment", {"scenario", "label", "reps", "seed", "threads", "freeze_population"});
    if (auto s = config_scenario(root)) spec.scenario = *s;
    read_key(ex, "label", spec.label);
    read_key(ex, "reps", spec.reps);
    read_key(ex, "seed", spec.seed);
    read_key(ex, "threads", spec.threads);
    read_key(ex, "freeze_population", spec.freeze_population);

    const YAML::Node mo = root["model"];
    detail::check_keys(mo, "model", {"n", "r", "support_size", "cov_kind", "p1", "p2", "corr_case"});
    read_key(mo, "n", spec.n);
    read_key(mo, "r", spec.r);
    read_key(mo, "support_size", spec.support_size);
    if (mo && mo["cov_kind"]) spec.cov_kind = models::cov_kind_from_string(mo["cov_kind"].as<std::string>());
    read_key(mo, "p1", spec.p1);
    read_key(mo, "p2", spec.p2);
    read_key(mo, "corr_case", spec.corr_case);

    const YAML::Node tg = root["tgd"];
    detail::check_keys(tg, "tgd", {"eta", "lambda", "s_prime", "t_max", "record_trace", "trace_stride"});
    read_key(tg, "eta", spec.tgd.eta);
    read_key(tg, "lambda", spec.tgd.lambda_pen);
    read_key(tg, "s_prime", spec.tgd.s_prime);
    read_key(tg, "t_max", spec.tgd.t_max);
    read_key(tg, "record_trace", spec.tgd.record_trace);
    read_key(tg, "trace_stride", spec.tgd.trace_stride);

    const YAML::Node fa = root["fantope"];
    detail::check_keys(fa, "fantope", {"rho_gamma", "admm_step", "linearization", "max_iter",
                                       "tol_primal", "tol_dual", "variant"});
    read_key(fa, "rho_gamma", spec.rho_gamma);
    read_key(fa, "admm_step", spec.fantope.admm_step);
    read_key(fa, "linearization", spec.fantope.linearization);
    read_key(fa, "max_iter", spec.fantope.max_iter);
    read_key(fa, "tol_primal", spec.fantope.tol_primal);
    read_key(fa, "tol_dual", spec.fantope.tol_dual);
    if (fa && fa["variant"]) spec.fantope.variant = fantope::admm_variant_from_string(fa["variant"].as<std::string>());

    const YAML::Node ri = root["rifle"];
    detail::check_keys(ri, "rifle", {"eta", "t_max"});
    read_key(ri, "eta", spec.rifle_eta);
    read_key(ri, "t_max", spec.rifle_t_max);

    const YAML::Node cv = root["cv"];
    detail::check_keys(cv, "cv", {"folds", "grid", "lambda_grid"});
    read_key(cv, "folds", spec.cv_folds);
    read_key(cv, "grid", spec.cv_grid);
    read_key(cv, "lambda_grid", spec.lambda_grid);
}

inline YAML::Node load_config_file(const std::string& path)
{
    try {
        return YAML::LoadFile(path);
    } catch (const YAML::Exception& e) {
        throw parameter_error("config: cannot read " + path + ": " + e.what());
    }
}

namespace detail {

// Shortest decimal that reloads to the same double.
inline std::string shortest(double x)
{
    if (!std::isfinite(x)) return format_double(x);
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline YAML::Node num(double x)
{
    return YAML::Node(shortest(x));
}

} // namespace detail

/// Every field of the spec, in the config-file layout.
inline YAML::Node to_yaml(const ExperimentSpec& spec)
{
    using detail::num;
    YAML::Node root;
    YAML::Node ex = root["experiment"];
    ex["scenario"] = to_string(spec.scenario);
    ex["label"] = spec.label;
    ex["reps"] = spec.reps;
    ex["seed"] = spec.seed;
    ex["threads"] = spec.threads;
    ex["freeze_population"] = spec.freeze_population;

    YAML::Node mo = root["model"];
    mo["n"] = spec.n;
    mo["r"] = spec.r;
    mo["support_size"] = spec.support_size;
    mo["cov_kind"] = models::to_string(spec.cov_kind);
    mo["p1"] = spec.p1;
    mo["p2"] = spec.p2;
    mo["corr_case"] = spec.corr_case;

    YAML::Node tg = root["tgd"];
    tg["eta"] = num(spec.tgd.eta);
    tg["lambda"] = num(spec.tgd.lambda_pen);
    tg["s_prime"] = spec.tgd.s_prime;
    tg["t_max"] = spec.tgd.t_max;
    tg["record_trace"] = spec.tgd.record_trace;
    tg["trace_stride"] = spec.tgd.trace_stride;

    YAML::Node fa = root["fantope"];
    fa["rho_gamma"] = num(spec.rho_gamma);
    fa["admm_step"] = num(spec.fantope.admm_step);
    fa["linearization"] = num(spec.fantope.linearization);
    fa["max_iter"] = spec.fantope.max_iter;
    fa["tol_primal"] = num(spec.fantope.tol_primal);
    fa["tol_dual"] = num(spec.fantope.tol_dual);
    fa["variant"] = fantope::to_string(spec.fantope.variant);

    YAML::Node ri = root["rifle"];
    ri["eta"] = num(spec.rifle_eta);
    ri["t_max"] = spec.rifle_t_max;

    YAML::Node cv = root["cv"];
    cv["folds"] = spec.cv_folds;
    YAML::Node grid(YAML::NodeType::Sequence);
    for (Index g : spec.cv_grid) grid.push_back(g);
    grid.SetStyle(YAML::EmitterStyle::Flow);
    cv["grid"] = grid;
    YAML::Node lg(YAML::NodeType::Sequence);
    for (double l : spec.lambda_grid) lg.push_back(detail::shortest(l));
    lg.SetStyle(YAML::EmitterStyle::Flow);
    cv["lambda_grid"] = lg;
    return root;
}

inline std::string to_yaml_string(const ExperimentSpec& spec)
{
    YAML::Emitter em;
    em << to_yaml(spec);
    return std::string(em.c_str()) + "\n";
}

} // namespace sgca::harness

#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "resilience/dynamics.hpp"
#include "resilience/envelope.hpp"
#include "resilience/errors.hpp"
#include "resilience/resilience.hpp"
#include "resilience/stl.hpp"

namespace resilience {

struct LinearSystemConfig {
    Matrix a;
};

struct NonlinearSystemConfig {
    std::vector<std::string> f;
    Vector equilibrium;
    Box region;
    std::optional<double> hessian_bound;
};

struct AnalysisConfig {
    std::optional<LinearSystemConfig> linear;
    std::optional<NonlinearSystemConfig> nonlinear;
    Vector x0;
    std::optional<Matrix> input_map;
    std::string spec_text;
    double t_end = 0.0;
    double dt = 0.0;
    ScenarioConfig scenario;
    std::size_t validate_trials = 1000;
    std::uint64_t validate_seed = 1;
    std::vector<std::string> notes;  // free-form modeling assumptions, carried to artifacts

    std::size_t state_dim() const { return x0.size(); }
    bool is_linear() const { return linear.has_value(); }
    TimeGrid grid() const { return make_grid(t_end, dt); }
};

namespace detail {

inline Matrix matrix_from_json(const nlohmann::json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) throw ConfigError("expected a non-empty 2-D array", path);
    const std::size_t rows = j.size();
    const std::size_t cols = j.front().is_array() ? j.front().size() : 0;
    if (cols == 0) throw ConfigError("expected a non-empty 2-D array", path);
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        if (!j[i].is_array() || j[i].size() != cols) throw ConfigError("ragged matrix", path);
        for (std::size_t k = 0; k < cols; ++k) {
            if (!j[i][k].is_number()) throw ConfigError("matrix entries must be numbers", path);
            m(i, k) = j[i][k].get<double>();
        }
    }
    return m;
}

inline nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

template <typename T>
T require(const nlohmann::json& j, const std::string& key, const std::string& path) {
    if (!j.contains(key)) throw ConfigError("missing required field", path + "." + key);
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("field has the wrong type", path + "." + key);
    }
}

}  // namespace detail

inline AnalysisConfig config_from_json(const nlohmann::json& j) {
    AnalysisConfig cfg;
    if (!j.contains("system")) throw ConfigError("missing required field", "system");
    const auto& system = j.at("system");
    if (system.contains("linear") && system.contains("nonlinear")) {
        throw ConfigError("system must be either linear or nonlinear, not both", "system");
    }
    if (system.contains("linear")) {
        LinearSystemConfig lin;
        lin.a = detail::matrix_from_json(system.at("linear").at("A"), "system.linear.A");
        if (!lin.a.square()) throw ConfigError("A must be square", "system.linear.A");
        cfg.linear = std::move(lin);
    } else if (system.contains("nonlinear")) {
        const auto& nl = system.at("nonlinear");
        NonlinearSystemConfig nls;
        nls.f = detail::require<std::vector<std::string>>(nl, "f", "system.nonlinear");
        nls.equilibrium = detail::require<Vector>(nl, "equilibrium", "system.nonlinear");
        const auto region =
            detail::require<std::vector<std::vector<double>>>(nl, "region", "system.nonlinear");
        for (const auto& iv : region) {
            if (iv.size() != 2) {
                throw ConfigError("region intervals are [lo, hi] pairs", "system.nonlinear.region");
            }
            nls.region.emplace_back(iv[0], iv[1]);
        }
        if (nl.contains("hessian_bound")) nls.hessian_bound = nl.at("hessian_bound").get<double>();
        cfg.nonlinear = std::move(nls);
    } else {
        throw ConfigError("system must be 'linear' or 'nonlinear'", "system");
    }

    cfg.x0 = detail::require<Vector>(j, "x0", "");
    if (cfg.x0.empty()) throw ConfigError("x0 must be non-empty", "x0");
    if (j.contains("input_map")) {
        cfg.input_map = detail::matrix_from_json(j.at("input_map"), "input_map");
    }
    if (!j.contains("spec")) throw ConfigError("missing required field", "spec");
    if (j.at("spec").is_string()) {
        cfg.spec_text = j.at("spec").get<std::string>();
    } else {
        // JSON AST form; normalize to the text grammar
        cfg.spec_text = to_string(formula_from_json(j.at("spec")));
    }

    if (!j.contains("horizon")) throw ConfigError("missing required field", "horizon");
    cfg.t_end = detail::require<double>(j.at("horizon"), "t_end", "horizon");
    cfg.dt = detail::require<double>(j.at("horizon"), "dt", "horizon");
    if (cfg.dt <= 0.0) throw ConfigError("dt must be positive", "horizon.dt");
    if (cfg.t_end < cfg.dt) throw ConfigError("t_end must cover at least one step", "horizon.t_end");

    if (!j.contains("scenario")) throw ConfigError("missing required field", "scenario");
    const auto& sc = j.at("scenario");
    cfg.scenario.eps_hi = detail::require<double>(sc, "eps_hi", "scenario");
    if (sc.contains("delta")) cfg.scenario.delta = sc.at("delta").get<double>();
    if (sc.contains("eps_tol")) cfg.scenario.eps_tol = sc.at("eps_tol").get<double>();
    if (sc.contains("max_samples")) cfg.scenario.max_samples = sc.at("max_samples").get<std::size_t>();
    cfg.scenario.validate();

    if (j.contains("validate")) {
        const auto& va = j.at("validate");
        if (va.contains("trials")) cfg.validate_trials = va.at("trials").get<std::size_t>();
        if (va.contains("seed")) cfg.validate_seed = va.at("seed").get<std::uint64_t>();
    }
    if (j.contains("notes")) cfg.notes = j.at("notes").get<std::vector<std::string>>();

    // cross-field dimension checks
    const std::size_t n = cfg.state_dim();
    if (cfg.linear && cfg.linear->a.rows() != n) {
        throw ConfigError("A and x0 dimensions differ", "system.linear.A");
    }
    if (cfg.nonlinear) {
        if (cfg.nonlinear->f.size() != n) {
            throw ConfigError("one expression per state coordinate required", "system.nonlinear.f");
        }
        if (cfg.nonlinear->equilibrium.size() != n) {
            throw ConfigError("equilibrium and x0 dimensions differ", "system.nonlinear.equilibrium");
        }
        if (cfg.nonlinear->region.size() != n) {
            throw ConfigError("region and x0 dimensions differ", "system.nonlinear.region");
        }
    }
    if (cfg.input_map && cfg.input_map->rows() != n) {
        throw ConfigError("input_map rows must match the state dimension", "input_map");
    }
    if (cfg.input_map && cfg.nonlinear) {
        // the linearized certificate path has no disturbance channel; refuse
        // rather than certify one system and simulate another
        throw ConfigError("input_map is only supported for linear systems", "input_map");
    }

    StlPtr phi = parse(cfg.spec_text, n);  // may throw SyntaxError / IndexError
    if (phi->horizon() > cfg.t_end + 1e-9) {
        throw ConfigError("formula horizon exceeds t_end", "horizon.t_end");
    }
    return cfg;
}

inline nlohmann::json config_to_json(const AnalysisConfig& cfg) {
    nlohmann::json j;
    if (cfg.linear) {
        j["system"] = {{"linear", {{"A", detail::matrix_to_json(cfg.linear->a)}}}};
    } else {
        nlohmann::json region = nlohmann::json::array();
        for (const auto& [lo, hi] : cfg.nonlinear->region) region.push_back({lo, hi});
        nlohmann::json nl = {{"f", cfg.nonlinear->f},
                             {"equilibrium", cfg.nonlinear->equilibrium},
                             {"region", std::move(region)}};
        if (cfg.nonlinear->hessian_bound) nl["hessian_bound"] = *cfg.nonlinear->hessian_bound;
        j["system"] = {{"nonlinear", std::move(nl)}};
    }
    j["x0"] = cfg.x0;
    if (cfg.input_map) j["input_map"] = detail::matrix_to_json(*cfg.input_map);
    j["spec"] = cfg.spec_text;
    j["horizon"] = {{"t_end", cfg.t_end}, {"dt", cfg.dt}};
    j["scenario"] = {{"delta", cfg.scenario.delta},
                     {"eps_hi", cfg.scenario.eps_hi},
                     {"eps_tol", cfg.scenario.eps_tol},
                     {"max_samples", cfg.scenario.max_samples}};
    j["validate"] = {{"trials", cfg.validate_trials}, {"seed", cfg.validate_seed}};
    if (!cfg.notes.empty()) j["notes"] = cfg.notes;
    return j;
}

inline AnalysisConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'", "");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what(), "");
    }
    return config_from_json(j);
}

// ---- orchestration shared by the CLI and the test suites ----

struct AnalysisArtifacts {
    ResilienceCertificate certificate;
    Matrix a;                 ///< system (or linearized) matrix
    Vector nominal_offset;    ///< added to e^{At}(x0 - offset); zero for linear systems
    StlPtr phi;
};

/// The vector field of the configured system, used for validation runs.
inline VectorField system_field(const AnalysisConfig& cfg) {
    if (cfg.is_linear()) return linear_field(cfg.linear->a);
    DynamicsExpr f = parse_dynamics(cfg.nonlinear->f, cfg.state_dim());
    return expr_field(f);
}

/// Disturbance-to-state channel |B_w| used when validating against the box.
inline Matrix channel_matrix(const AnalysisConfig& cfg) {
    if (cfg.input_map) return *cfg.input_map;
    return Matrix::identity(cfg.state_dim());
}

inline AnalysisArtifacts run_analysis(const AnalysisConfig& cfg, GainKind method) {
    AnalysisArtifacts art;
    art.phi = parse(cfg.spec_text, cfg.state_dim());
    const TimeGrid grid = cfg.grid();

    if (cfg.is_linear()) {
        const Matrix input = channel_matrix(cfg);
        art.certificate =
            resilience_lower_bound(art.phi, cfg.linear->a, cfg.x0, input, grid, cfg.scenario, method);
        art.a = cfg.linear->a;
        art.nominal_offset = Vector(cfg.state_dim(), 0.0);
    } else {
        const DynamicsExpr f = parse_dynamics(cfg.nonlinear->f, cfg.state_dim());
        NonlinearCorrection corr;
        corr.equilibrium = cfg.nonlinear->equilibrium;
        corr.region = cfg.nonlinear->region;
        corr.hessian_bound = cfg.nonlinear->hessian_bound.value_or(-1.0);
        art.certificate =
            nonlinear_lower_bound(art.phi, f, corr, cfg.x0, grid, cfg.scenario, method);
        art.a = detail::numeric_jacobian(f, corr.equilibrium);
        art.nominal_offset = corr.equilibrium;
    }
    for (const std::string& note : cfg.notes) art.certificate.warnings.push_back(note);
    return art;
}

/// Monte-Carlo validation of the configured system at disturbance level eps.
inline ViolationReport run_validation(const AnalysisConfig& cfg, double eps, std::size_t trials,
                                      std::uint64_t seed) {
    const StlPtr phi = parse(cfg.spec_text, cfg.state_dim());
    const TimeGrid grid = cfg.grid();
    const VectorField base = system_field(cfg);
    const Matrix* channel = cfg.input_map ? &*cfg.input_map : nullptr;
    return monte_carlo_validate(base, cfg.state_dim(), phi, cfg.x0, eps, trials, seed, grid,
                                channel);
}

}  // namespace resilience

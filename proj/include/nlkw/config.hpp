#pragma once

#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlkw/errors.hpp"

namespace nlkw {

/**
 * One experiment's worth of knobs. Defaults reproduce the worked example at
 * desk scale; every field is validated against module preconditions before
 * any computation runs.
 */
struct ExperimentConfig {
    double horizon = 1.0; // key "T"
    std::uint32_t n_steps = 512;
    std::uint64_t n_paths = 100000;
    double rho = 0.5;
    std::uint64_t master_seed = 1;
    std::string family = "exp";
    std::string payoff = "example";
    std::vector<std::string> basis = {"w1"};
    double tol_root = 1e-10;
    double tol_stat = 1e-8;
    std::vector<double> eps_ladder = {0.1, 0.05, 0.025};
    std::vector<std::uint32_t> ladder = {64, 256, 1024};
    std::uint64_t ladder_paths = 20000;
    std::uint64_t dd_paths = 20000;
    std::string out_dir = "out";
    bool use_as_printed_family = false;
    double hold_out_fraction = 0.5;
    std::string strategy = "pointwise"; // or "parametric"
    double x_max = 50.0;
    double rep_x = 1.0;
    std::vector<double> rho_sweep = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};

    /// Family name after applying the as-printed flag.
    std::string effective_family() const {
        if (use_as_printed_family && family == "exp") return "exp-as-printed";
        return family;
    }

    bool operator==(const ExperimentConfig&) const = default;
};

namespace detail {

[[noreturn]] inline void config_fail(const std::string& key, const std::string& why) {
    throw ConfigError(key + ": " + why);
}

template <class T>
T get_number(const nlohmann::json& j, const std::string& key) {
    if (!j.is_number()) config_fail(key, "expected a number");
    return j.get<T>();
}

} // namespace detail

inline void validate_config(const ExperimentConfig& c) {
    if (!(c.horizon > 0.0) || !std::isfinite(c.horizon))
        detail::config_fail("T", "must be a positive finite horizon");
    if (c.n_steps < 1) detail::config_fail("n_steps", "must be at least 1");
    if (c.n_paths < 100) detail::config_fail("n_paths", "n_paths below minimum 100");
    if (!(c.rho >= 0.0 && c.rho <= 1.0)) detail::config_fail("rho", "must be in [0, 1]");
    if (c.family != "linear" && c.family != "exp" && c.family != "exp-as-printed")
        detail::config_fail("family", "must be one of linear | exp | exp-as-printed");
    if (c.payoff != "example") detail::config_fail("payoff", "unknown payoff name");
    if (c.basis.empty()) detail::config_fail("basis", "must name at least one feature");
    if (!(c.tol_root > 0.0)) detail::config_fail("tol_root", "must be positive");
    if (!(c.tol_stat > 0.0)) detail::config_fail("tol_stat", "must be positive");
    if (c.eps_ladder.empty()) detail::config_fail("eps_ladder", "must not be empty");
    for (double e : c.eps_ladder)
        if (!(e > 0.0)) detail::config_fail("eps_ladder", "entries must be positive");
    if (c.ladder.empty()) detail::config_fail("ladder", "must not be empty");
    for (std::uint32_t n : c.ladder)
        if (n < 1) detail::config_fail("ladder", "entries must be positive step counts");
    if (c.ladder_paths < 100) detail::config_fail("ladder_paths", "below minimum 100");
    if (c.dd_paths < 100) detail::config_fail("dd_paths", "below minimum 100");
    if (!(c.hold_out_fraction > 0.0 && c.hold_out_fraction < 1.0))
        detail::config_fail("hold_out_fraction", "must be in (0, 1)");
    if (c.strategy != "pointwise" && c.strategy != "parametric")
        detail::config_fail("strategy", "must be pointwise | parametric");
    if (!(c.x_max > 0.0)) detail::config_fail("x_max", "must be positive");
    if (!std::isfinite(c.rep_x)) detail::config_fail("rep_x", "must be finite");
    if (c.rho_sweep.empty()) detail::config_fail("rho_sweep", "must not be empty");
    for (double r : c.rho_sweep)
        if (!(r >= 0.0 && r <= 1.0)) detail::config_fail("rho_sweep", "entries must be in [0, 1]");
}

/// Parse a config from JSON, applying defaults for absent keys and
/// rejecting unknown ones. Errors name the offending key.
inline ExperimentConfig parse_config_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");

    static const std::set<std::string> known = {
        "T", "n_steps", "n_paths", "rho", "master_seed", "family", "payoff", "basis",
        "tol_root", "tol_stat", "eps_ladder", "ladder", "ladder_paths", "dd_paths",
        "out_dir", "use_as_printed_family", "hold_out_fraction", "strategy", "x_max",
        "rep_x", "rho_sweep"};
    for (const auto& item : j.items())
        if (!known.count(item.key()))
            detail::config_fail(item.key(), "unknown configuration key");

    ExperimentConfig c;
    try {
        if (j.contains("T")) c.horizon = detail::get_number<double>(j["T"], "T");
        if (j.contains("n_steps"))
            c.n_steps = detail::get_number<std::uint32_t>(j["n_steps"], "n_steps");
        if (j.contains("n_paths"))
            c.n_paths = detail::get_number<std::uint64_t>(j["n_paths"], "n_paths");
        if (j.contains("rho")) c.rho = detail::get_number<double>(j["rho"], "rho");
        if (j.contains("master_seed"))
            c.master_seed = detail::get_number<std::uint64_t>(j["master_seed"], "master_seed");
        if (j.contains("family")) c.family = j["family"].get<std::string>();
        if (j.contains("payoff")) c.payoff = j["payoff"].get<std::string>();
        if (j.contains("basis")) c.basis = j["basis"].get<std::vector<std::string>>();
        if (j.contains("tol_root")) c.tol_root = detail::get_number<double>(j["tol_root"], "tol_root");
        if (j.contains("tol_stat")) c.tol_stat = detail::get_number<double>(j["tol_stat"], "tol_stat");
        if (j.contains("eps_ladder")) c.eps_ladder = j["eps_ladder"].get<std::vector<double>>();
        if (j.contains("ladder")) c.ladder = j["ladder"].get<std::vector<std::uint32_t>>();
        if (j.contains("ladder_paths"))
            c.ladder_paths = detail::get_number<std::uint64_t>(j["ladder_paths"], "ladder_paths");
        if (j.contains("dd_paths"))
            c.dd_paths = detail::get_number<std::uint64_t>(j["dd_paths"], "dd_paths");
        if (j.contains("out_dir")) c.out_dir = j["out_dir"].get<std::string>();
        if (j.contains("use_as_printed_family")) {
            if (!j["use_as_printed_family"].is_boolean())
                detail::config_fail("use_as_printed_family", "expected a boolean");
            c.use_as_printed_family = j["use_as_printed_family"].get<bool>();
        }
        if (j.contains("hold_out_fraction"))
            c.hold_out_fraction =
                detail::get_number<double>(j["hold_out_fraction"], "hold_out_fraction");
        if (j.contains("strategy")) c.strategy = j["strategy"].get<std::string>();
        if (j.contains("x_max")) c.x_max = detail::get_number<double>(j["x_max"], "x_max");
        if (j.contains("rep_x")) c.rep_x = detail::get_number<double>(j["rep_x"], "rep_x");
        if (j.contains("rho_sweep")) c.rho_sweep = j["rho_sweep"].get<std::vector<double>>();
    } catch (const ConfigError&) {
        throw;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: type mismatch (") + e.what() + ")");
    }

    validate_config(c);
    return c;
}

inline ExperimentConfig parse_config(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON (") + e.what() + ")");
    }
    return parse_config_json(j);
}

inline nlohmann::json serialize_config(const ExperimentConfig& c) {
    nlohmann::json j;
    j["T"] = c.horizon;
    j["n_steps"] = c.n_steps;
    j["n_paths"] = c.n_paths;
    j["rho"] = c.rho;
    j["master_seed"] = c.master_seed;
    j["family"] = c.family;
    j["payoff"] = c.payoff;
    j["basis"] = c.basis;
    j["tol_root"] = c.tol_root;
    j["tol_stat"] = c.tol_stat;
    j["eps_ladder"] = c.eps_ladder;
    j["ladder"] = c.ladder;
    j["ladder_paths"] = c.ladder_paths;
    j["dd_paths"] = c.dd_paths;
    j["out_dir"] = c.out_dir;
    j["use_as_printed_family"] = c.use_as_printed_family;
    j["hold_out_fraction"] = c.hold_out_fraction;
    j["strategy"] = c.strategy;
    j["x_max"] = c.x_max;
    j["rep_x"] = c.rep_x;
    j["rho_sweep"] = c.rho_sweep;
    return j;
}

} // namespace nlkw

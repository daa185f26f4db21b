#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlkw/config.hpp"
#include "nlkw/estimate.hpp"
#include "nlkw/family_checks.hpp"
#include "nlkw/objective.hpp"
#include "nlkw/pointwise.hpp"
#include "nlkw/svg.hpp"

namespace nlkw {

inline const char* version_string() { return "0.1.0"; }

/// Per-node row of the pointwise solve on the reference path (path 0).
struct NodeRow {
    double t = 0.0;
    double h = 0.0;
    double theta = 0.0;
    SolveMode mode = SolveMode::root;
    double gap = 0.0;
};

/// Everything one pipeline run reports. Reproducible from (config, version):
/// serializing twice with the same inputs is byte-identical except for the
/// wall-clock field.
struct RunSummary {
    ExperimentConfig config;
    MCEstimate lambda_sq; // analytic decomposition floor

    std::vector<std::string> reg_features;
    std::vector<double> reg_beta;
    std::vector<double> reg_beta_se;
    MCEstimate reg_lambda_sq;
    MCEstimate reg_in_sample;

    MCEstimate objective;
    MCEstimate orthogonality;
    MCEstimate excess;
    bool has_excess = false;
    std::uint64_t root_nodes = 0;
    std::uint64_t stationary_nodes = 0;

    MCEstimate dd_analytic;
    std::vector<DirectionalRow> directional;

    std::vector<LadderRung> representation;
    std::vector<LadderRung> representation_dx;

    std::vector<NodeRow> nodes; // reference path

    bool parametric = false;
    std::vector<double> parametric_beta;
    bool parametric_converged = false;

    double wall_clock_ms = 0.0;
    std::string version = version_string();
};

namespace detail {

inline nlohmann::json estimate_json(const MCEstimate& e) {
    return {{"mean", e.mean}, {"se", e.se}, {"n", e.n}};
}

} // namespace detail

inline nlohmann::json summary_json(const RunSummary& s) {
    nlohmann::json j;
    j["config"] = serialize_config(s.config);
    j["lambda_sq"] = detail::estimate_json(s.lambda_sq);
    j["regression"] = {{"features", s.reg_features},
                       {"beta", s.reg_beta},
                       {"beta_se", s.reg_beta_se},
                       {"lambda_sq", detail::estimate_json(s.reg_lambda_sq)},
                       {"in_sample_residual", detail::estimate_json(s.reg_in_sample)}};
    j["objective"] = detail::estimate_json(s.objective);
    j["orthogonality"] = detail::estimate_json(s.orthogonality);
    if (s.has_excess) j["excess"] = detail::estimate_json(s.excess);
    const std::uint64_t total_nodes = s.root_nodes + s.stationary_nodes;
    j["modes"] = {{"root", s.root_nodes},
                  {"stationary", s.stationary_nodes},
                  {"root_fraction", total_nodes == 0
                                        ? 0.0
                                        : static_cast<double>(s.root_nodes) /
                                              static_cast<double>(total_nodes)}};
    j["directional"] = nlohmann::json::array();
    for (const DirectionalRow& row : s.directional)
        j["directional"].push_back({{"eps", row.eps},
                                    {"fd", detail::estimate_json(row.fd)},
                                    {"diff", detail::estimate_json(row.diff)}});
    j["dd_analytic"] = detail::estimate_json(s.dd_analytic);
    j["representation"] = nlohmann::json::array();
    for (const LadderRung& r : s.representation)
        j["representation"].push_back({{"n_steps", r.n_steps}, {"rmse", r.rmse}});
    j["representation_dx"] = nlohmann::json::array();
    for (const LadderRung& r : s.representation_dx)
        j["representation_dx"].push_back({{"n_steps", r.n_steps}, {"rmse", r.rmse}});
    if (s.parametric) {
        j["parametric"] = {{"beta", s.parametric_beta}, {"converged", s.parametric_converged}};
    }
    j["wall_clock_ms"] = s.wall_clock_ms;
    j["versions"] = {{"nlkw", s.version}};
    return j;
}

/// Write summary.json, nodes.csv, ladder.csv and ladder.svg into `dir`.
inline void emit_outputs(const RunSummary& s, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("emit_outputs: cannot create " + dir.string());

    {
        std::ofstream out(dir / "summary.json");
        if (!out) throw IoError("emit_outputs: cannot open " + (dir / "summary.json").string());
        out << summary_json(s).dump(2) << "\n";
        if (!out) throw IoError("emit_outputs: write failed for summary.json");
    }
    {
        std::ofstream out(dir / "nodes.csv");
        if (!out) throw IoError("emit_outputs: cannot open " + (dir / "nodes.csv").string());
        out << "t,h,theta,mode,gap\n";
        out.precision(17);
        for (const NodeRow& n : s.nodes)
            out << n.t << ',' << n.h << ',' << n.theta << ',' << to_string(n.mode) << ','
                << n.gap << '\n';
        if (!out) throw IoError("emit_outputs: write failed for nodes.csv");
    }
    {
        std::ofstream out(dir / "ladder.csv");
        if (!out) throw IoError("emit_outputs: cannot open " + (dir / "ladder.csv").string());
        out << "N,rmse\n";
        out.precision(17);
        for (const LadderRung& r : s.representation) out << r.n_steps << ',' << r.rmse << '\n';
        if (!out) throw IoError("emit_outputs: write failed for ladder.csv");
    }
    if (!s.representation.empty()) {
        std::vector<svg::Series> series;
        svg::Series value_series{"representation rmse", {}};
        for (const LadderRung& r : s.representation)
            value_series.points.emplace_back(static_cast<double>(r.n_steps), r.rmse);
        series.push_back(std::move(value_series));
        if (!s.representation_dx.empty()) {
            svg::Series dx_series{"derivative rmse", {}};
            for (const LadderRung& r : s.representation_dx)
                dx_series.points.emplace_back(static_cast<double>(r.n_steps), r.rmse);
            series.push_back(std::move(dx_series));
        }
        svg::write_line_plot(dir / "ladder.svg", "Euler-sum RMSE vs grid refinement", "N",
                             "rmse", series, true, true);
    }
}

} // namespace nlkw

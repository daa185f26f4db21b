#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "nlkw/config.hpp"
#include "nlkw/family.hpp"
#include "nlkw/family_checks.hpp"
#include "nlkw/kw.hpp"
#include "nlkw/objective.hpp"
#include "nlkw/parametric.hpp"
#include "nlkw/path.hpp"
#include "nlkw/pointwise.hpp"
#include "nlkw/report.hpp"
#include "nlkw/svg.hpp"

namespace nlkw {

namespace detail {

inline SolveOptions solve_options(const ExperimentConfig& cfg) {
    SolveOptions opts;
    opts.x_max = cfg.x_max;
    opts.tol_root_scale = cfg.tol_root;
    opts.tol_stat = cfg.tol_stat;
    return opts;
}

} // namespace detail

/**
 * The full experiment: simulate -> decompose -> solve/optimize -> verify.
 * Stages: analytic + regression Kunita-Watanabe decompositions, the
 * pointwise strategy (or a parametric policy when configured), the objective
 * and orthogonality estimates, the directional-derivative ladder, and the
 * representation refinement ladders.
 */
inline RunSummary run_pipeline(const ExperimentConfig& cfg) {
    validate_config(cfg);
    const auto start = std::chrono::steady_clock::now();

    RunSummary s;
    s.config = cfg;

    const MartingaleFamily family = family_by_name(cfg.effective_family());
    const Payoff payoff = payoff_by_name(cfg.payoff);
    const PathBatch batch(TimeGrid::uniform(cfg.horizon, cfg.n_steps), cfg.n_paths, cfg.rho,
                          cfg.master_seed);

    // Decomposition floor: analytic for the example payoff, plus the
    // regression projection on the configured basis.
    const KWDecomposition analytic = analytic_kw_example(cfg.rho, batch);
    s.lambda_sq = analytic.lambda_sq;

    const KWDecomposition regression =
        regression_kw(payoff, cfg.basis, batch, cfg.hold_out_fraction);
    s.reg_features = regression.feature_names;
    s.reg_beta = regression.beta;
    s.reg_beta_se = regression.beta_se;
    s.reg_lambda_sq = regression.lambda_sq;
    s.reg_in_sample = regression.in_sample_residual;

    // Strategy source: pointwise solve against the analytic target process,
    // or a Nelder-Mead-fitted policy on the same basis.
    StrategySource source;
    const SolveOptions opts = detail::solve_options(cfg);
    if (cfg.strategy == "pointwise") {
        source = pointwise_source(family, analytic.h, opts);
    } else {
        const ParametricPolicy policy = make_policy(cfg.basis);
        const std::size_t fit_paths = std::min<std::size_t>(cfg.n_paths, 2000);
        const PathBatch fit_batch(TimeGrid::uniform(cfg.horizon, cfg.n_steps), fit_paths,
                                  cfg.rho, cfg.master_seed);
        const OptimizeResult fit =
            optimize_parametric(family, policy, payoff, fit_batch, 200 * (policy.features.size() + 1));
        s.parametric = true;
        s.parametric_beta = fit.beta;
        s.parametric_converged = fit.converged;
        source = plain_source(policy_strategy(policy, fit.beta));
    }

    const ObjectiveReport objective = objective_mc(family, source, payoff, batch, s.lambda_sq);
    s.objective = objective.objective;
    s.orthogonality = objective.orthogonality;
    if (objective.excess) {
        s.excess = *objective.excess;
        s.has_excess = true;
    }
    s.root_nodes = objective.modes.root;
    s.stationary_nodes = objective.modes.stationary;

    // Directional-derivative ladder on a capped batch (common random numbers).
    const PathBatch dd_batch(TimeGrid::uniform(cfg.horizon, cfg.n_steps),
                             std::min<std::size_t>(cfg.n_paths, cfg.dd_paths), cfg.rho,
                             cfg.master_seed);
    const DirectionalReport dd =
        directional_derivative_check(family, source, payoff, dd_batch, cfg.eps_ladder);
    s.dd_analytic = dd.analytic;
    s.directional = dd.rows;

    // Representation refinement ladders at the configured x.
    const PathBatch ladder_proto(TimeGrid::uniform(cfg.horizon, 2), // grid ignored per rung
                                 std::min<std::size_t>(cfg.n_paths, cfg.ladder_paths), cfg.rho,
                                 cfg.master_seed);
    std::vector<std::size_t> ladder(cfg.ladder.begin(), cfg.ladder.end());
    s.representation =
        representation_check(family, cfg.rep_x, ladder_proto, ladder, RepresentationRoute::value)
            .rungs;
    s.representation_dx = representation_check(family, cfg.rep_x, ladder_proto, ladder,
                                               RepresentationRoute::derivative)
                              .rungs;

    // Per-node table on the reference path.
    {
        const PathBundle p0 = batch.path(0);
        const BuiltStrategy built = source(p0);
        s.nodes.reserve(built.nodes.size());
        for (std::size_t k = 0; k < built.theta.values.size(); ++k) {
            NodeRow row;
            row.t = p0.grid->node(k);
            row.h = analytic.h(k, PathPrefix(p0, k + 1));
            row.theta = built.theta.values[k];
            if (k < built.nodes.size()) {
                row.mode = built.nodes[k].mode;
                row.gap = built.nodes[k].gap;
            } else {
                row.gap = std::abs(row.h - family.integrand(k, row.theta, p0));
            }
            s.nodes.push_back(row);
        }
    }

    s.wall_clock_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - start)
                          .count();
    return s;
}

/// One rho point of a sweep: decomposition floor, pointwise objective and
/// excess, all on a batch with the same master seed (common random numbers
/// across rho).
struct SweepRow {
    double rho = 0.0;
    MCEstimate lambda_sq;
    MCEstimate objective;
    MCEstimate excess;
};

struct SweepResult {
    std::vector<SweepRow> rows;
};

inline SweepResult sweep_rho(const ExperimentConfig& cfg) {
    validate_config(cfg);
    const MartingaleFamily family = family_by_name(cfg.effective_family());
    const Payoff payoff = payoff_by_name(cfg.payoff);
    const SolveOptions opts = detail::solve_options(cfg);
    const std::size_t n_paths = std::min<std::size_t>(cfg.n_paths, cfg.dd_paths);

    SweepResult result;
    for (double rho : cfg.rho_sweep) {
        const PathBatch batch(TimeGrid::uniform(cfg.horizon, cfg.n_steps), n_paths, rho,
                              cfg.master_seed);
        const KWDecomposition kw = analytic_kw_example(rho, batch);
        const ObjectiveReport obj =
            objective_mc(family, pointwise_source(family, kw.h, opts), payoff, batch,
                         kw.lambda_sq);
        SweepRow row;
        row.rho = rho;
        row.lambda_sq = kw.lambda_sq;
        row.objective = obj.objective;
        if (obj.excess) row.excess = *obj.excess;
        result.rows.push_back(row);
    }
    return result;
}

/// residual.svg (objective and floor vs rho) plus sweep.csv.
inline void emit_sweep_outputs(const SweepResult& sweep, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("emit_sweep_outputs: cannot create " + dir.string());

    {
        std::ofstream out(dir / "sweep.csv");
        if (!out) throw IoError("emit_sweep_outputs: cannot open " + (dir / "sweep.csv").string());
        out << "rho,lambda_sq,objective,excess\n";
        out.precision(17);
        for (const SweepRow& r : sweep.rows)
            out << r.rho << ',' << r.lambda_sq.mean << ',' << r.objective.mean << ','
                << r.excess.mean << '\n';
        if (!out) throw IoError("emit_sweep_outputs: write failed for sweep.csv");
    }

    svg::Series objective{"objective", {}}, floor{"lambda_sq floor", {}};
    for (const SweepRow& r : sweep.rows) {
        objective.points.emplace_back(r.rho, r.objective.mean);
        floor.points.emplace_back(r.rho, r.lambda_sq.mean);
    }
    svg::write_line_plot(dir / "residual.svg", "Objective and decomposition floor vs rho", "rho",
                         "value", {objective, floor});
}

} // namespace nlkw

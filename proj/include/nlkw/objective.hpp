#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "nlkw/errors.hpp"
#include "nlkw/estimate.hpp"
#include "nlkw/family.hpp"
#include "nlkw/integrators.hpp"
#include "nlkw/kw.hpp"
#include "nlkw/parallel.hpp"
#include "nlkw/path.hpp"
#include "nlkw/pointwise.hpp"
#include "nlkw/strategy.hpp"

namespace nlkw {

/// Produces the strategy to evaluate on a given path. Pointwise builders
/// attach per-node solve reports; plain policies leave `nodes` empty.
using StrategySource = std::function<BuiltStrategy(const PathBundle&)>;

/// Source that applies pointwise_solve at every node with targets from h.
/// The family is captured by value so the source owns everything it needs.
inline StrategySource pointwise_source(MartingaleFamily family, StrategyFn target_h,
                                       SolveOptions opts = {}) {
    return [family = std::move(family), target_h = std::move(target_h),
            opts](const PathBundle& path) {
        return build_pointwise_strategy(family, target_h, path, opts);
    };
}

/// Source wrapping an ordinary strategy callback (no solve reports).
inline StrategySource plain_source(StrategyFn fn) {
    return [fn = std::move(fn)](const PathBundle& path) {
        BuiltStrategy b;
        b.theta = evaluate_strategy(fn, path);
        return b;
    };
}

inline StrategySource constant_source(double value) {
    return plain_source([value](std::size_t, const PathPrefix&) { return value; });
}

struct ModeCounts {
    std::uint64_t root = 0;
    std::uint64_t stationary = 0;
    double root_fraction() const {
        const std::uint64_t total = root + stationary;
        return total == 0 ? 0.0 : static_cast<double>(root) / static_cast<double>(total);
    }
};

/**
 * Monte Carlo estimates of the approximation objective and its first-order
 * condition at a strategy:
 *   objective     = E[(H - int M(ds, theta))^2]
 *   orthogonality = E[(H - int M(ds, theta)) * int d_x M(ds, theta)]
 * Both integrals are footnote-style telescoping sums along each path.
 * `lambda_floor` is the Kunita-Watanabe residual E[(lambda_T)^2] the
 * objective can never beat; `excess` aggregates the pointwise gap term when
 * the strategy source reports per-node solves. Note that the orthogonality
 * condition alone marks a critical point, not necessarily a global minimum.
 */
struct ObjectiveReport {
    MCEstimate objective;
    MCEstimate orthogonality;
    std::optional<MCEstimate> lambda_floor;
    std::optional<MCEstimate> excess;
    ModeCounts modes;
};

inline ObjectiveReport objective_mc(const MartingaleFamily& family, const StrategySource& source,
                                    const Payoff& payoff, const PathBatch& batch,
                                    std::optional<MCEstimate> lambda_floor = {}) {
    if (batch.size() < 100)
        throw ParameterError("objective_mc: need at least 100 paths for a meaningful s.e.");

    // samples: [L^2, L*IdM, excess, root nodes, stationary nodes]
    const Accumulator acc = par::reduce(batch.size(), 5, [&](std::size_t i, std::span<double> out) {
        const PathBundle p = batch.path(i);
        const BuiltStrategy built = source(p);
        const double im = nonlinear_integral(family, built.theta, p).terminal();
        const double idm = nonlinear_dx_integral(family, built.theta, p).terminal();
        const double l = payoff.terminal(p) - im;
        out[0] = l * l;
        out[1] = l * idm;
        out[2] = built.excess;
        double roots = 0.0, stats = 0.0;
        for (const PointwiseSolveReport& n : built.nodes)
            (n.mode == SolveMode::root ? roots : stats) += 1.0;
        out[3] = roots;
        out[4] = stats;
    });

    ObjectiveReport r;
    r.objective = acc.estimate(0);
    r.orthogonality = acc.estimate(1);
    r.lambda_floor = lambda_floor;
    r.modes.root = static_cast<std::uint64_t>(acc.sum(3));
    r.modes.stationary = static_cast<std::uint64_t>(acc.sum(4));
    if (r.modes.root + r.modes.stationary > 0) r.excess = acc.estimate(2);
    return r;
}

/// One rung of the directional-derivative ladder: the central finite
/// difference of F(eps) = E[(H - int M(ds, theta + eps))^2] and its pathwise
/// difference from the analytic slope -2 E[L * int d_x M(ds, theta)].
struct DirectionalRow {
    double eps = 0.0;
    MCEstimate fd;
    MCEstimate diff; // fd sample minus analytic sample, common random numbers
};

struct DirectionalReport {
    MCEstimate analytic;    // -2 E[L * IdM]
    MCEstimate orthogonality; // E[L * IdM], same pass
    std::vector<DirectionalRow> rows;
};

/**
 * Check the directional-derivative identity with common random numbers: for
 * each eps in the ladder, compare [F(eps) - F(-eps)] / (2 eps) against the
 * analytic slope on the same paths. The strategy is built once per path and
 * shifted by a constant, so every estimate shares one noise realization.
 */
inline DirectionalReport directional_derivative_check(const MartingaleFamily& family,
                                                      const StrategySource& source,
                                                      const Payoff& payoff,
                                                      const PathBatch& batch,
                                                      const std::vector<double>& eps_ladder) {
    if (batch.size() < 100)
        throw ParameterError("directional_derivative_check: need at least 100 paths");
    if (eps_ladder.empty())
        throw ParameterError("directional_derivative_check: empty eps ladder");
    for (double e : eps_ladder)
        if (!(e > 0.0)) throw ParameterError("directional_derivative_check: eps must be positive");

    const std::size_t n_eps = eps_ladder.size();
    // samples: [L*IdM, then per eps: fd sample, fd sample - analytic sample]
    const Accumulator acc =
        par::reduce(batch.size(), 1 + 2 * n_eps, [&](std::size_t i, std::span<double> out) {
            const PathBundle p = batch.path(i);
            const BuiltStrategy built = source(p);
            const double h = payoff.terminal(p);
            const double im = nonlinear_integral(family, built.theta, p).terminal();
            const double idm = nonlinear_dx_integral(family, built.theta, p).terminal();
            const double l = h - im;
            out[0] = l * idm;

            StrategyPath shifted = built.theta;
            for (std::size_t e = 0; e < n_eps; ++e) {
                const double eps = eps_ladder[e];
                for (std::size_t k = 0; k < shifted.values.size(); ++k)
                    shifted.values[k] = built.theta.values[k] + eps;
                const double l_up = h - nonlinear_integral(family, shifted, p).terminal();
                for (std::size_t k = 0; k < shifted.values.size(); ++k)
                    shifted.values[k] = built.theta.values[k] - eps;
                const double l_dn = h - nonlinear_integral(family, shifted, p).terminal();
                const double fd = (l_up * l_up - l_dn * l_dn) / (2.0 * eps);
                out[1 + 2 * e] = fd;
                out[2 + 2 * e] = fd - (-2.0 * l * idm);
            }
        });

    DirectionalReport r;
    r.orthogonality = acc.estimate(0);
    r.analytic = r.orthogonality;
    r.analytic.mean *= -2.0;
    r.analytic.se *= 2.0;
    for (std::size_t e = 0; e < n_eps; ++e) {
        DirectionalRow row;
        row.eps = eps_ladder[e];
        row.fd = acc.estimate(1 + 2 * e);
        row.diff = acc.estimate(2 + 2 * e);
        r.rows.push_back(row);
    }
    return r;
}

} // namespace nlkw

#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "nlkw/errors.hpp"
#include "nlkw/estimate.hpp"
#include "nlkw/family.hpp"
#include "nlkw/integrators.hpp"
#include "nlkw/kw.hpp"
#include "nlkw/nelder_mead.hpp"
#include "nlkw/objective.hpp"
#include "nlkw/parallel.hpp"
#include "nlkw/strategy.hpp"

namespace nlkw {

/// Linear-in-features policy theta_k = sum_i beta_i phi_i(k, prefix).
/// Predictable by construction: features only ever see the prefix.
struct ParametricPolicy {
    std::vector<std::string> feature_names;
    std::vector<StrategyFn> features;
    std::vector<double> beta0; // starting point for the optimizer
};

inline ParametricPolicy make_policy(const std::vector<std::string>& feature_names,
                                    std::vector<double> beta0 = {}) {
    ParametricPolicy p;
    p.feature_names = feature_names;
    for (const std::string& name : feature_names) p.features.push_back(parse_feature(name));
    if (beta0.empty()) beta0.assign(feature_names.size(), 0.0);
    if (beta0.size() != feature_names.size())
        throw ParameterError("make_policy: beta0 length does not match features");
    p.beta0 = std::move(beta0);
    return p;
}

inline StrategyFn policy_strategy(const ParametricPolicy& policy, std::vector<double> beta) {
    if (beta.size() != policy.features.size())
        throw ParameterError("policy_strategy: beta length does not match features");
    return [features = policy.features, beta = std::move(beta)](std::size_t k,
                                                                const PathPrefix& prefix) {
        double v = 0.0;
        for (std::size_t i = 0; i < features.size(); ++i) v += beta[i] * features[i](k, prefix);
        return v;
    };
}

struct OptimizeResult {
    std::vector<double> beta;
    double in_sample_objective = 0.0;
    ObjectiveReport out_of_sample;
    bool converged = false;
    std::size_t evals = 0;
};

namespace detail {

/// Objective over a fixed batch; deterministic in beta (common random
/// numbers). Evaluations that overflow are scored +inf so the simplex backs
/// away instead of aborting.
inline double parametric_objective(const MartingaleFamily& family, const ParametricPolicy& policy,
                                   const Payoff& payoff, const PathBatch& batch,
                                   const std::vector<double>& beta) {
    try {
        const StrategyFn theta = policy_strategy(policy, beta);
        const Accumulator acc =
            par::reduce(batch.size(), 1, [&](std::size_t i, std::span<double> out) {
                const PathBundle p = batch.path(i);
                const StrategyPath s = evaluate_strategy(theta, p);
                const double l = payoff.terminal(p) - nonlinear_integral(family, s, p).terminal();
                out[0] = l * l;
            });
        return acc.mean(0);
    } catch (const NumericError&) {
        return std::numeric_limits<double>::infinity();
    }
}

} // namespace detail

/**
 * Derivative-free minimization of the approximation objective over the
 * policy coefficients: Nelder-Mead on a fixed batch (common random numbers,
 * so the objective is a deterministic function of beta), with one restart
 * around the incumbent at a tenth of the step. The returned report is
 * evaluated out of sample on a fresh batch derived from master_seed + 1.
 * If the budget runs out first, the best point so far is returned with
 * converged = false.
 */
inline OptimizeResult optimize_parametric(const MartingaleFamily& family,
                                          const ParametricPolicy& policy, const Payoff& payoff,
                                          const PathBatch& batch, std::size_t budget) {
    if (budget < 1) throw ParameterError("optimize_parametric: budget must be positive");

    OptimizeResult result;
    const PathBatch fresh(TimeGrid(batch.grid()), batch.size(), batch.rho(),
                          batch.master_seed() + 1);

    if (policy.features.empty()) {
        // Nothing to optimize: theta == 0.
        result.converged = true;
        result.in_sample_objective =
            detail::parametric_objective(family, policy, payoff, batch, {});
        result.out_of_sample =
            objective_mc(family, constant_source(0.0), payoff, fresh);
        return result;
    }

    auto objective = [&](const std::vector<double>& beta) {
        return detail::parametric_objective(family, policy, payoff, batch, beta);
    };

    SimplexResult first = nelder_mead(objective, policy.beta0, 0.5, budget);
    result.evals = first.evals;
    std::vector<double> best = first.x;
    double best_f = first.f;
    bool converged = first.converged;

    if (first.converged && budget > first.evals + policy.features.size() + 1) {
        SimplexResult second =
            nelder_mead(objective, first.x, 0.05, budget - first.evals);
        result.evals += second.evals;
        if (second.f < best_f) {
            best = second.x;
            best_f = second.f;
        }
        converged = second.converged;
    }

    result.beta = best;
    result.in_sample_objective = best_f;
    result.converged = converged;
    result.out_of_sample =
        objective_mc(family, plain_source(policy_strategy(policy, best)), payoff, fresh);
    return result;
}

} // namespace nlkw

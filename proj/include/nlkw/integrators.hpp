#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "nlkw/errors.hpp"
#include "nlkw/estimate.hpp"
#include "nlkw/family.hpp"
#include "nlkw/parallel.hpp"
#include "nlkw/path.hpp"
#include "nlkw/strategy.hpp"
#include "nlkw/time_grid.hpp"

namespace nlkw {

/// A discrete stochastic integral along one path: the running martingale
/// values at every grid node (running[0] = 0) and the terminal value.
struct IntegralResult {
    std::vector<double> running;
    double terminal() const { return running.back(); }
};

/// Classical left-point Ito sum: running[k] = sum_{j<k} h_j (B_{j+1} - B_j).
inline IntegralResult ito_integral(const StrategyPath& h, std::span<const double> driver,
                                   const TimeGrid& grid) {
    const std::size_t n = grid.steps();
    if (h.values.size() != n)
        throw ShapeError("ito_integral: strategy length does not match grid");
    if (driver.size() != n + 1)
        throw ShapeError("ito_integral: driver length does not match grid");
    IntegralResult r;
    r.running.resize(n + 1);
    r.running[0] = 0.0;
    for (std::size_t k = 0; k < n; ++k)
        r.running[k + 1] = r.running[k] + h.values[k] * (driver[k + 1] - driver[k]);
    return r;
}

namespace detail {

/// Telescoping sum of footnote-style increments of `eval` at the strategy's
/// parameter: sum_k [ F(t_{k+1}, theta_k) - F(t_k, theta_k) ].
inline IntegralResult family_increment_sum(const FamilyEval& eval, const StrategyPath& theta,
                                           const PathBundle& path) {
    const std::size_t n = path.grid->steps();
    if (theta.values.size() != n)
        throw ShapeError("nonlinear_integral: strategy length does not match path grid");
    IntegralResult r;
    r.running.resize(n + 1);
    r.running[0] = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double x = theta.values[k];
        const double inc = eval(k + 1, x, path) - eval(k, x, path);
        r.running[k + 1] = r.running[k] + inc;
    }
    return r;
}

} // namespace detail

/// Nonlinear stochastic integral of theta against the family:
/// running[k] = sum_{j<k} [ M(t_{j+1}, theta_j) - M(t_j, theta_j) ],
/// evaluated along the given path. For constant theta the sum telescopes to
/// M(T, theta) exactly.
inline IntegralResult nonlinear_integral(const MartingaleFamily& family,
                                         const StrategyPath& theta, const PathBundle& path) {
    return detail::family_increment_sum(family.value, theta, path);
}

/// Same footnote sum applied to the derivative family d_x M; used for the
/// orthogonality inner product. Requires an analytic d_value.
inline IntegralResult nonlinear_dx_integral(const MartingaleFamily& family,
                                            const StrategyPath& theta, const PathBundle& path) {
    if (!family.d_value)
        throw CapabilityError("nonlinear_dx_integral: family has no analytic d_x M");
    return detail::family_increment_sum(family.d_value, theta, path);
}

/// Which Brownian component of a bundle an integral is taken against.
enum class Driver { w1, w2, w };

inline const std::vector<double>& driver_values(const PathBundle& p, Driver d) {
    switch (d) {
        case Driver::w1: return p.w1;
        case Driver::w2: return p.w2;
        default: return p.w;
    }
}

/// Monte Carlo estimate of the discrete Ito isometry defect
///   E[(sum h dB)^2] - E[sum h^2 dt]
/// for a predictable strategy ensemble. Zero in expectation; the estimate
/// should sit within a few standard errors of 0.
inline MCEstimate isometry_gap(const StrategyFn& h, Driver driver, const PathBatch& batch) {
    const Accumulator acc = par::reduce(batch.size(), 1, [&](std::size_t i, std::span<double> out) {
        const PathBundle p = batch.path(i);
        const StrategyPath s = evaluate_strategy(h, p);
        const std::vector<double>& b = driver_values(p, driver);
        double integral = 0.0, qv = 0.0;
        for (std::size_t k = 0; k < s.values.size(); ++k) {
            integral += s.values[k] * (b[k + 1] - b[k]);
            qv += s.values[k] * s.values[k] * p.grid->dt(k);
        }
        out[0] = integral * integral - qv;
    });
    return acc.estimate(0);
}

} // namespace nlkw

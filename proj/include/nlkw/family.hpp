#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "nlkw/errors.hpp"
#include "nlkw/path.hpp"

namespace nlkw {

/// Evaluator signature shared by all family members: the value at grid node
/// `node` (time t = grid.node(node)) with spatial parameter x, along `path`.
using FamilyEval = std::function<double(std::size_t node, double x, const PathBundle& path)>;

/**
 * A parametrized martingale family {M(x)} evaluated path-wise on a grid.
 *
 * `value` is always present. The analytic representation integrand mu
 * (M(x) = int mu(s,x) dW) and the spatial derivatives d_integrand = d_x mu,
 * d_value = d_x M are optional; operations that need them raise a
 * CapabilityError when absent.
 *
 * `stationary_points` enumerates the zeros of d_integrand in x at a node,
 * when known in closed form. `monotone_between_stationary` asserts that the
 * integrand is monotone in x between consecutive stationary points (true
 * when d_integrand really is the x-derivative of integrand), which lets the
 * pointwise solver bracket roots from segment endpoints alone.
 */
struct MartingaleFamily {
    std::string name;
    FamilyEval value;
    FamilyEval integrand;
    FamilyEval d_integrand;
    FamilyEval d_value;
    std::function<std::vector<double>(std::size_t node, const PathBundle& path)> stationary_points;
    bool monotone_between_stationary = false;
};

/// M(t, x) along the path, with the family's own overflow guard applied.
inline double eval_family(const MartingaleFamily& family, std::size_t node, double x,
                          const PathBundle& path) {
    return family.value(node, x, path);
}

namespace detail {

[[noreturn]] inline void throw_overflow(const char* what, double t, double x) {
    std::ostringstream msg;
    msg << what << ": exponent overflow at t=" << t << ", x=" << x;
    throw NumericError(msg.str());
}

/// exp(x*w - t*x^2/2) with an overflow guard: exponents above +700 would
/// round to infinity and abort the evaluation instead. Large negative
/// exponents underflow to 0, which is benign.
inline double guarded_exp_factor(double t, double x, double w) {
    const double e = x * w - 0.5 * x * x * t;
    if (e > 700.0) throw_overflow("exponential family", t, x);
    return std::exp(e);
}

inline double check_finite(double v, double t, double x) {
    if (!std::isfinite(v)) throw_overflow("exponential family", t, x);
    return v;
}

} // namespace detail

/// M(t,x) = x * W_t: the classical linear case. mu(t,x) = x, d_x mu = 1,
/// d_x M = W_t. No stationary points in x.
inline MartingaleFamily linear_family() {
    MartingaleFamily f;
    f.name = "linear";
    f.value = [](std::size_t node, double x, const PathBundle& p) {
        return x * p.w[node];
    };
    f.integrand = [](std::size_t, double x, const PathBundle&) { return x; };
    f.d_integrand = [](std::size_t, double, const PathBundle&) { return 1.0; };
    f.d_value = [](std::size_t node, double, const PathBundle& p) { return p.w[node]; };
    f.stationary_points = [](std::size_t, const PathBundle&) {
        return std::vector<double>{};
    };
    f.monotone_between_stationary = true;
    return f;
}

/**
 * M(t,x) = exp(x*W_t - t*x^2/2) - 1, the exponential martingale family.
 *
 * Ito's formula gives dM(t,x) = x * exp(x*W_t - t*x^2/2) dW_t, so
 *   mu(t,x)    = x * (M(t,x) + 1)
 *   d_x mu     = (1 + x*W_t - x^2 t) * (M(t,x) + 1)
 *   d_x M      = (W_t - x t) * (M(t,x) + 1).
 * Stationary points of mu in x solve t*x^2 - W_t*x - 1 = 0.
 */
inline MartingaleFamily exponential_family() {
    MartingaleFamily f;
    f.name = "exp";
    f.value = [](std::size_t node, double x, const PathBundle& p) {
        const double t = p.grid->node(node);
        return detail::guarded_exp_factor(t, x, p.w[node]) - 1.0;
    };
    f.integrand = [](std::size_t node, double x, const PathBundle& p) {
        const double t = p.grid->node(node);
        const double v = x * detail::guarded_exp_factor(t, x, p.w[node]);
        return detail::check_finite(v, t, x);
    };
    f.d_integrand = [](std::size_t node, double x, const PathBundle& p) {
        const double t = p.grid->node(node);
        const double w = p.w[node];
        const double v = (1.0 + x * w - x * x * t) * detail::guarded_exp_factor(t, x, w);
        return detail::check_finite(v, t, x);
    };
    f.d_value = [](std::size_t node, double x, const PathBundle& p) {
        const double t = p.grid->node(node);
        const double w = p.w[node];
        const double v = (w - x * t) * detail::guarded_exp_factor(t, x, w);
        return detail::check_finite(v, t, x);
    };
    f.stationary_points = [](std::size_t node, const PathBundle& p) {
        const double t = p.grid->node(node);
        const double w = p.w[node];
        std::vector<double> zs;
        if (t == 0.0) {
            // mu(0, x) = x: no stationary points unless W != 0 (never on a
            // simulated path, where W_0 = 0).
            if (w != 0.0) zs.push_back(-1.0 / w);
        } else {
            const double root = std::sqrt(w * w + 4.0 * t);
            zs.push_back((w - root) / (2.0 * t));
            zs.push_back((w + root) / (2.0 * t));
        }
        return zs;
    };
    f.monotone_between_stationary = true;
    return f;
}

/**
 * The same exponential M, but with the integrand and its derivative kept in
 * the as-printed form mu(t,x) = x * M(t,x), d_x mu = M(t,x)*(x*W_t - x^2 t + 1).
 * Self-inconsistent on purpose (its Euler sums do not converge to M); kept
 * behind a name/flag for comparison experiments.
 */
inline MartingaleFamily as_printed_exponential_family() {
    MartingaleFamily f;
    f.name = "exp-as-printed";
    f.value = exponential_family().value;
    f.integrand = [](std::size_t node, double x, const PathBundle& p) {
        const double t = p.grid->node(node);
        const double v = x * (detail::guarded_exp_factor(t, x, p.w[node]) - 1.0);
        return detail::check_finite(v, t, x);
    };
    f.d_integrand = [](std::size_t node, double x, const PathBundle& p) {
        const double t = p.grid->node(node);
        const double w = p.w[node];
        const double m = detail::guarded_exp_factor(t, x, w) - 1.0;
        return detail::check_finite(m * (x * w - x * x * t + 1.0), t, x);
    };
    f.d_value = [](std::size_t node, double x, const PathBundle& p) {
        const double t = p.grid->node(node);
        const double w = p.w[node];
        const double m = detail::guarded_exp_factor(t, x, w) - 1.0;
        return detail::check_finite(m * (w - x * t), t, x);
    };
    f.stationary_points = [](std::size_t node, const PathBundle& p) {
        const double t = p.grid->node(node);
        const double w = p.w[node];
        std::vector<double> zs;
        if (t == 0.0) {
            // M(0, x) = 0 makes the printed d_x mu vanish identically; report
            // the canonical representative x = 0.
            zs.push_back(0.0);
            return zs;
        }
        zs.push_back(0.0);           // M(t, 0) = 0
        zs.push_back(2.0 * w / t);   // M(t, 2W/t) = 0
        const double root = std::sqrt(w * w + 4.0 * t);
        zs.push_back((w - root) / (2.0 * t));
        zs.push_back((w + root) / (2.0 * t));
        std::sort(zs.begin(), zs.end());
        return zs;
    };
    // The printed derivative is not the derivative of the printed integrand,
    // so monotone bracketing from its zeros would be unsound.
    f.monotone_between_stationary = false;
    return f;
}

inline MartingaleFamily family_by_name(std::string_view name) {
    if (name == "linear") return linear_family();
    if (name == "exp") return exponential_family();
    if (name == "exp-as-printed") return as_printed_exponential_family();
    throw ParameterError("unknown family: " + std::string(name));
}

} // namespace nlkw

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "nlkw/errors.hpp"
#include "nlkw/family.hpp"
#include "nlkw/path.hpp"
#include "nlkw/strategy.hpp"

namespace nlkw {

enum class SolveMode : std::uint8_t { root, stationary };

inline const char* to_string(SolveMode m) {
    return m == SolveMode::root ? "root" : "stationary";
}

struct SolveOptions {
    double x_max = 50.0;        // initial symmetric bracket [-x_max, x_max]
    double x_max_limit = 800.0; // adaptive expansion cap
    double tol_root_scale = 1e-10; // tol_root = scale * (1 + |target|)
    double tol_stat = 1e-8;
    int scan_per_segment = 8;   // subdivision when monotone bracketing is unsound
};

/// Outcome of one pointwise solve: the minimizer of (target - mu(s, x))^2
/// over the bracket, either by matching the target (root) or by sitting at a
/// stationary point of mu in x (stationary).
struct PointwiseSolveReport {
    double theta = 0.0;
    double gap = 0.0; // |target - mu(s, theta)|
    SolveMode mode = SolveMode::root;
    int root_count = 0;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
};

namespace detail {

/// Bracketed root refinement (Illinois variant of regula falsi).
/// Pre: fa and fb have opposite signs (or one is within tol already).
template <class F>
double illinois(F&& f, double a, double fa, double b, double fb, double tol_f) {
    double best_x = std::abs(fa) < std::abs(fb) ? a : b;
    double best_f = std::min(std::abs(fa), std::abs(fb));
    for (int it = 0; it < 200; ++it) {
        if (best_f <= tol_f) return best_x;
        double x = b - fb * (b - a) / (fb - fa);
        const double lo = std::min(a, b), hi = std::max(a, b);
        if (!(x > lo && x < hi)) x = 0.5 * (a + b);
        const double fx = f(x);
        if (std::abs(fx) < best_f) {
            best_f = std::abs(fx);
            best_x = x;
        }
        if (std::abs(b - a) <= 8.0 * std::numeric_limits<double>::epsilon() *
                                   std::max(1.0, std::abs(x)))
            return best_x;
        if ((fx < 0.0) != (fb < 0.0)) {
            a = b;
            fa = fb;
        } else {
            fa *= 0.5;
        }
        b = x;
        fb = fx;
    }
    return best_x;
}

/// Golden-section minimization of a unimodal-enough g on [a, b].
template <class G>
double golden_section(G&& g, double a, double b, int iters = 120) {
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - phi * (b - a);
    double x2 = a + phi * (b - a);
    double g1 = g(x1), g2 = g(x2);
    for (int it = 0; it < iters && (b - a) > 1e-13 * std::max(1.0, std::abs(a) + std::abs(b));
         ++it) {
        if (g1 <= g2) {
            b = x2;
            x2 = x1;
            g2 = g1;
            x1 = b - phi * (b - a);
            g1 = g(x1);
        } else {
            a = x1;
            x1 = x2;
            g1 = g2;
            x2 = a + phi * (b - a);
            g2 = g(x2);
        }
    }
    return g1 <= g2 ? x1 : x2;
}

} // namespace detail

/**
 * Solve the Corollary-style product condition at one grid node: find the x
 * in the bracket minimizing (target - mu(s, x))^2. If mu(s, .) = target has
 * a root in the bracket, the root of smallest |x| is returned (mode=root);
 * otherwise the interior stationary point of mu closest to the target
 * (mode=stationary). The bracket [-x_max, x_max] expands by factors of two
 * up to x_max_limit while the gap is still decreasing at the boundary.
 */
inline PointwiseSolveReport pointwise_solve(const MartingaleFamily& family, double target,
                                            std::size_t node, const PathBundle& path,
                                            const SolveOptions& opts = {}) {
    if (!family.integrand || !family.d_integrand)
        throw CapabilityError("pointwise_solve: family lacks analytic mu or d_x mu");
    if (!(opts.x_max > 0.0) || !std::isfinite(opts.x_max))
        throw ParameterError("pointwise_solve: empty or non-finite bracket");
    if (!std::isfinite(target))
        throw ParameterError("pointwise_solve: non-finite target");

    const double tol_root = opts.tol_root_scale * (1.0 + std::abs(target));
    auto f = [&](double x) { return family.integrand(node, x, path) - target; };
    auto dmu = [&](double x) { return family.d_integrand(node, x, path); };

    double half_width = opts.x_max;
    for (;;) {
        const double lo = -half_width, hi = half_width;

        // Breakpoints: bracket ends plus the known zeros of d_x mu. Between
        // consecutive stationary points a consistent integrand is monotone,
        // so segment endpoints alone bracket every root; otherwise each
        // segment is scanned at scan_per_segment subdivisions.
        std::vector<double> pts{lo};
        std::vector<double> interior_stationary;
        if (family.stationary_points) {
            for (double z : family.stationary_points(node, path)) {
                if (z > lo && z < hi) {
                    pts.push_back(z);
                    interior_stationary.push_back(z);
                }
            }
        }
        pts.push_back(hi);
        std::sort(pts.begin(), pts.end());
        std::sort(interior_stationary.begin(), interior_stationary.end());

        const int subdiv = family.monotone_between_stationary
                               ? 1
                               : std::max(1, opts.scan_per_segment);

        std::vector<double> roots;
        double prev_x = pts.front();
        double prev_f = f(prev_x);
        if (std::abs(prev_f) <= tol_root) roots.push_back(prev_x);
        for (std::size_t seg = 0; seg + 1 < pts.size(); ++seg) {
            const double a = pts[seg], b = pts[seg + 1];
            for (int i = 1; i <= subdiv; ++i) {
                const double x = (i == subdiv)
                                     ? b
                                     : a + (b - a) * static_cast<double>(i) /
                                               static_cast<double>(subdiv);
                if (x <= prev_x) continue;
                const double fx = f(x);
                if (std::abs(fx) <= tol_root) {
                    roots.push_back(x);
                } else if ((prev_f < 0.0) != (fx < 0.0) && std::abs(prev_f) > tol_root) {
                    roots.push_back(detail::illinois(f, prev_x, prev_f, x, fx, tol_root));
                }
                prev_x = x;
                prev_f = fx;
            }
        }

        if (!roots.empty()) {
            // smallest |x|; exact ties go to the positive root
            double theta = roots.front();
            for (double r : roots)
                if (std::abs(r) < std::abs(theta) ||
                    (std::abs(r) == std::abs(theta) && r > theta))
                    theta = r;
            PointwiseSolveReport rep;
            rep.theta = theta;
            rep.gap = std::abs(f(theta));
            rep.mode = SolveMode::root;
            rep.root_count = static_cast<int>(roots.size());
            rep.bracket_lo = lo;
            rep.bracket_hi = hi;
            return rep;
        }

        // No root: look at stationary points of mu inside the bracket.
        std::vector<double> candidates = interior_stationary;
        if (candidates.empty() && !family.stationary_points) {
            // No analytic zero set: locate the best gap minimizer by a scan
            // plus golden-section refinement.
            const int grid_n = std::max(64, 8 * opts.scan_per_segment);
            double best_x = lo, best_g = std::abs(f(lo));
            for (int i = 1; i <= grid_n; ++i) {
                const double x = lo + (hi - lo) * static_cast<double>(i) / grid_n;
                const double g = std::abs(f(x));
                if (g < best_g) {
                    best_g = g;
                    best_x = x;
                }
            }
            const double h = (hi - lo) / grid_n;
            const double refined = detail::golden_section(
                [&](double x) { return std::abs(f(x)); }, std::max(lo, best_x - h),
                std::min(hi, best_x + h));
            if (refined > lo && refined < hi && std::abs(dmu(refined)) <= opts.tol_stat)
                candidates.push_back(refined);
        }

        double best_theta = 0.0;
        double best_gap = std::numeric_limits<double>::infinity();
        for (double z : candidates) {
            const double g = std::abs(f(z));
            if (g < best_gap || (g == best_gap && std::abs(z) < std::abs(best_theta))) {
                best_gap = g;
                best_theta = z;
            }
        }

        // Expansion test: is the gap at a boundary still decreasing outward
        // and better than anything found inside?
        const double boundary_gap = std::min(std::abs(f(lo)), std::abs(f(hi)));
        bool trending_down = false;
        {
            const double step = 0.01 * half_width;
            if (std::abs(f(hi)) < std::abs(f(hi - step))) trending_down = true;
            if (std::abs(f(lo)) < std::abs(f(lo + step))) trending_down = true;
        }
        if (half_width < opts.x_max_limit && trending_down && boundary_gap < best_gap) {
            half_width = std::min(2.0 * half_width, opts.x_max_limit);
            continue;
        }

        if (candidates.empty())
            throw NumericError("pointwise_solve: no root or stationary point in bracket");

        PointwiseSolveReport rep;
        rep.theta = best_theta;
        rep.gap = best_gap;
        // Tangency: a stationary point that meets the target within root
        // tolerance counts as a root.
        rep.mode = best_gap <= tol_root ? SolveMode::root : SolveMode::stationary;
        rep.root_count = rep.mode == SolveMode::root ? 1 : 0;
        rep.bracket_lo = lo;
        rep.bracket_hi = hi;
        return rep;
    }
}

/// A pointwise-solved strategy along one path: the strategy values, the
/// per-node solve reports, and the accumulated excess
/// sum_k gap_k^2 * dt_k (the unreachable part of the pointwise objective).
struct BuiltStrategy {
    StrategyPath theta;
    std::vector<PointwiseSolveReport> nodes;
    double excess = 0.0;
};

/// Apply pointwise_solve at every grid node with the target process h.
inline BuiltStrategy build_pointwise_strategy(const MartingaleFamily& family,
                                              const StrategyFn& target_h,
                                              const PathBundle& path,
                                              const SolveOptions& opts = {}) {
    const std::size_t n = path.grid->steps();
    BuiltStrategy built;
    built.theta.grid = path.grid;
    built.theta.values.resize(n);
    built.nodes.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double target = target_h(k, PathPrefix(path, k + 1));
        built.nodes[k] = pointwise_solve(family, target, k, path, opts);
        built.theta.values[k] = built.nodes[k].theta;
        const double gap = built.nodes[k].gap;
        built.excess += gap * gap * path.grid->dt(k);
    }
    return built;
}

} // namespace nlkw

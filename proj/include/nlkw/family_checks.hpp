#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "nlkw/errors.hpp"
#include "nlkw/estimate.hpp"
#include "nlkw/family.hpp"
#include "nlkw/parallel.hpp"
#include "nlkw/path.hpp"
#include "nlkw/time_grid.hpp"

namespace nlkw {

/// Which representation identity a refinement check targets:
/// value:      sum mu(t_j, x) dW  ->  M(T, x)
/// derivative: sum d_x mu(t_j, x) dW  ->  d_x M(T, x)
enum class RepresentationRoute { value, derivative };

struct LadderRung {
    std::size_t n_steps = 0;
    double rmse = 0.0;
};

struct RepresentationReport {
    RepresentationRoute route = RepresentationRoute::value;
    double x = 0.0;
    std::vector<LadderRung> rungs;

    /// rmse(N_i) / rmse(N_{i+1}) for consecutive rungs.
    std::vector<double> ratios() const {
        std::vector<double> r;
        for (std::size_t i = 0; i + 1 < rungs.size(); ++i)
            r.push_back(rungs[i].rmse / rungs[i + 1].rmse);
        return r;
    }
};

/**
 * Refinement check of the martingale representation: for each step count N
 * in the ladder, simulate a batch with the prototype's (T, rho, seed) at
 * resolution N and measure the RMSE over paths of the left-point Euler sum
 * against the terminal family value. A self-consistent integrand shows
 * strong-order-1/2 decay (RMSE ratio ~ sqrt(refinement factor)); an
 * inconsistent one plateaus at a positive constant.
 */
inline RepresentationReport representation_check(const MartingaleFamily& family, double x,
                                                 const PathBatch& proto,
                                                 const std::vector<std::size_t>& ladder,
                                                 RepresentationRoute route = RepresentationRoute::value) {
    const FamilyEval& sum_eval =
        route == RepresentationRoute::value ? family.integrand : family.d_integrand;
    const FamilyEval& target_eval =
        route == RepresentationRoute::value ? family.value : family.d_value;
    if (!sum_eval || !target_eval)
        throw CapabilityError("representation_check: family lacks the analytic forms for this route");
    if (ladder.empty())
        throw ParameterError("representation_check: empty refinement ladder");

    RepresentationReport report;
    report.route = route;
    report.x = x;
    for (std::size_t n_steps : ladder) {
        const PathBatch batch(TimeGrid::uniform(proto.grid().horizon(), n_steps), proto.size(),
                              proto.rho(), proto.master_seed());
        const Accumulator acc =
            par::reduce(batch.size(), 1, [&](std::size_t i, std::span<double> out) {
                const PathBundle p = batch.path(i);
                double euler = 0.0;
                for (std::size_t k = 0; k < n_steps; ++k)
                    euler += sum_eval(k, x, p) * (p.w[k + 1] - p.w[k]);
                const double err = euler - target_eval(n_steps, x, p);
                out[0] = err * err;
            });
        report.rungs.push_back({n_steps, std::sqrt(acc.estimate(0).mean)});
    }
    return report;
}

/// Analytic spatial derivatives vs central finite differences at one
/// (node, x, path) point. The relative error is floored at unit scale,
/// |a - f| / max(1, |a|, |f|), so points near a zero of the derivative stay
/// comparable.
struct DerivativeCheck {
    double analytic_d_value = 0.0;
    double fd_d_value = 0.0;
    double rel_err_d_value = 0.0;
    double analytic_d_integrand = 0.0;
    double fd_d_integrand = 0.0;
    double rel_err_d_integrand = 0.0;
};

inline DerivativeCheck derivative_check(const MartingaleFamily& family, std::size_t node,
                                        double x, const PathBundle& path, double bump) {
    if (!(bump > 0.0)) throw ParameterError("derivative_check: bump must be positive");
    if (!family.d_value || !family.d_integrand || !family.integrand)
        throw CapabilityError("derivative_check: family lacks analytic derivatives");

    auto rel = [](double a, double f) {
        return std::abs(a - f) / std::max({1.0, std::abs(a), std::abs(f)});
    };
    DerivativeCheck c;
    c.analytic_d_value = family.d_value(node, x, path);
    c.fd_d_value =
        (family.value(node, x + bump, path) - family.value(node, x - bump, path)) / (2.0 * bump);
    c.rel_err_d_value = rel(c.analytic_d_value, c.fd_d_value);

    c.analytic_d_integrand = family.d_integrand(node, x, path);
    c.fd_d_integrand =
        (family.integrand(node, x + bump, path) - family.integrand(node, x - bump, path)) /
        (2.0 * bump);
    c.rel_err_d_integrand = rel(c.analytic_d_integrand, c.fd_d_integrand);
    return c;
}

/**
 * Empirical Holder diagnostics for x -> d_x M(T, x): per path, a log-log
 * regression of |d_x M(T,x) - d_x M(T,y)| on |x - y| over pairs from x_grid.
 * Reports the sample means of the per-path exponent and constant. Purely
 * diagnostic; when the derivative does not vary with x (linear family) the
 * data constrain nothing and the report says so.
 */
struct HolderReport {
    double delta_hat = 0.0;             // mean per-path Holder exponent
    double k_hat = 0.0;                 // mean per-path Holder constant
    std::vector<double> path_deltas;    // per-path exponents (non-degenerate paths)
    std::size_t n_constant_paths = 0;   // paths with derivative constant in x
    bool derivative_constant = false;   // true when every path was degenerate
    std::string note;
};

inline HolderReport holder_estimate(const MartingaleFamily& family, const PathBatch& batch,
                                    const std::vector<double>& x_grid) {
    if (x_grid.size() < 3)
        throw ParameterError("holder_estimate: x_grid needs at least 3 points");
    for (std::size_t i = 0; i + 1 < x_grid.size(); ++i)
        if (!(x_grid[i] < x_grid[i + 1]))
            throw ParameterError("holder_estimate: x_grid must be strictly increasing");
    if (!family.d_value)
        throw CapabilityError("holder_estimate: family has no analytic d_x M");

    HolderReport report;
    const std::size_t terminal = batch.grid().steps();
    double sum_delta = 0.0, sum_k = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const PathBundle p = batch.path(i);
        std::vector<double> d(x_grid.size());
        for (std::size_t j = 0; j < x_grid.size(); ++j)
            d[j] = family.d_value(terminal, x_grid[j], p);

        double scale = 0.0;
        for (double v : d) scale = std::max(scale, std::abs(v));

        // log-log regression over all pairs with a nonzero increment
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        std::size_t m = 0;
        for (std::size_t a = 0; a < d.size(); ++a) {
            for (std::size_t b = a + 1; b < d.size(); ++b) {
                const double dy = std::abs(d[a] - d[b]);
                if (dy <= 1e-14 * std::max(1.0, scale)) continue;
                const double lx = std::log(std::abs(x_grid[a] - x_grid[b]));
                const double ly = std::log(dy);
                sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
                ++m;
            }
        }
        if (m < 2) {
            ++report.n_constant_paths;
            continue;
        }
        const double denom = m * sxx - sx * sx;
        if (std::abs(denom) < 1e-30) {
            ++report.n_constant_paths;
            continue;
        }
        const double slope = (m * sxy - sx * sy) / denom;
        const double intercept = (sy - slope * sx) / m;
        report.path_deltas.push_back(slope);
        sum_delta += slope;
        sum_k += std::exp(intercept);
    }

    if (report.path_deltas.empty()) {
        report.derivative_constant = true;
        report.note = "derivative constant in x";
        return report;
    }
    report.delta_hat = sum_delta / static_cast<double>(report.path_deltas.size());
    report.k_hat = sum_k / static_cast<double>(report.path_deltas.size());
    return report;
}

} // namespace nlkw

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "nlkw/errors.hpp"

namespace nlkw {

struct SimplexResult {
    std::vector<double> x;
    double f = 0.0;
    std::size_t evals = 0;
    bool converged = false;
};

/**
 * Nelder-Mead downhill simplex with standard coefficients (reflection 1,
 * expansion 2, contraction 1/2, shrink 1/2). Minimizes fn over R^p from x0,
 * stopping when the simplex function spread falls below ftol or the
 * evaluation budget runs out. Deterministic given a deterministic fn.
 */
inline SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& fn,
                                 std::vector<double> x0, double step, std::size_t budget,
                                 double ftol = 1e-10) {
    const std::size_t p = x0.size();
    if (p == 0) throw ParameterError("nelder_mead: empty parameter vector");

    SimplexResult out;
    struct Vertex {
        std::vector<double> x;
        double f;
    };
    std::vector<Vertex> simplex;
    simplex.reserve(p + 1);

    auto eval = [&](const std::vector<double>& x) {
        ++out.evals;
        return fn(x);
    };

    simplex.push_back({x0, eval(x0)});
    for (std::size_t i = 0; i < p && out.evals < budget; ++i) {
        std::vector<double> v = x0;
        v[i] += step;
        simplex.push_back({v, eval(v)});
    }
    if (simplex.size() < p + 1) {
        out.x = simplex.front().x;
        out.f = simplex.front().f;
        return out; // budget exhausted during initialization
    }

    auto by_f = [](const Vertex& a, const Vertex& b) { return a.f < b.f; };
    std::sort(simplex.begin(), simplex.end(), by_f);

    while (out.evals < budget) {
        const Vertex& best = simplex.front();
        Vertex& worst = simplex.back();
        const Vertex& second_worst = simplex[p - 1];

        if (std::abs(worst.f - best.f) <= ftol * (1.0 + std::abs(best.f))) {
            out.converged = true;
            break;
        }

        std::vector<double> centroid(p, 0.0);
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t c = 0; c < p; ++c) centroid[c] += simplex[i].x[c];
        for (double& c : centroid) c /= static_cast<double>(p);

        auto along = [&](double factor) {
            std::vector<double> x(p);
            for (std::size_t c = 0; c < p; ++c)
                x[c] = centroid[c] + factor * (worst.x[c] - centroid[c]);
            return x;
        };

        const std::vector<double> xr = along(-1.0);
        const double fr = eval(xr);
        if (fr < best.f && out.evals < budget) {
            const std::vector<double> xe = along(-2.0);
            const double fe = eval(xe);
            if (fe < fr) worst = {xe, fe};
            else worst = {xr, fr};
        } else if (fr < second_worst.f) {
            worst = {xr, fr};
        } else {
            const bool outside = fr < worst.f;
            const std::vector<double> xc = along(outside ? -0.5 : 0.5);
            const double fc = eval(xc);
            if (fc < std::min(fr, worst.f)) {
                worst = {xc, fc};
            } else {
                // shrink toward the best vertex
                for (std::size_t i = 1; i <= p && out.evals < budget; ++i) {
                    for (std::size_t c = 0; c < p; ++c)
                        simplex[i].x[c] = best.x[c] + 0.5 * (simplex[i].x[c] - best.x[c]);
                    simplex[i].f = eval(simplex[i].x);
                }
            }
        }
        std::sort(simplex.begin(), simplex.end(), by_f);
    }

    out.x = simplex.front().x;
    out.f = simplex.front().f;
    return out;
}

} // namespace nlkw

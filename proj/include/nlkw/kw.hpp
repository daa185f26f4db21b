#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "nlkw/errors.hpp"
#include "nlkw/estimate.hpp"
#include "nlkw/parallel.hpp"
#include "nlkw/path.hpp"
#include "nlkw/strategy.hpp"

namespace nlkw {

/// A centered square-integrable payoff: terminal functional of a path.
struct Payoff {
    std::string name;
    std::function<double(const PathBundle&)> terminal;
};

/// H = (W1_T)^2 - T = 2 int W1 dW1; the worked example payoff.
inline Payoff example_payoff() {
    Payoff p;
    p.name = "example";
    p.terminal = [](const PathBundle& path) {
        const double w1_t = path.w1.back();
        return w1_t * w1_t - path.grid->horizon();
    };
    return p;
}

inline Payoff payoff_by_name(std::string_view name) {
    if (name == "example") return example_payoff();
    throw ParameterError("unknown payoff: " + std::string(name));
}

/**
 * Named predictable basis features for the regression projection. A feature
 * evaluates on the path prefix at the left node of each interval. Grammar:
 * one of {const, w1, w, w1_sq, t} or '*'-joined products of those.
 */
inline StrategyFn parse_feature(std::string_view name) {
    std::vector<std::string> factors;
    std::size_t start = 0;
    while (start <= name.size()) {
        const std::size_t sep = name.find('*', start);
        const std::string_view tok =
            name.substr(start, sep == std::string_view::npos ? sep : sep - start);
        factors.emplace_back(tok);
        if (sep == std::string_view::npos) break;
        start = sep + 1;
    }
    for (const std::string& f : factors)
        if (f != "const" && f != "w1" && f != "w" && f != "w1_sq" && f != "t")
            throw ParameterError("unknown basis feature: " + std::string(name));

    return [factors](std::size_t k, const PathPrefix& prefix) {
        double v = 1.0;
        for (const std::string& f : factors) {
            if (f == "w1") v *= prefix.w1(k);
            else if (f == "w") v *= prefix.w(k);
            else if (f == "w1_sq") v *= prefix.w1(k) * prefix.w1(k);
            else if (f == "t") v *= prefix.t(k);
            // "const" contributes 1
        }
        return v;
    };
}

/**
 * Kunita-Watanabe decomposition H = int h dW + lambda of a payoff with
 * respect to the mixture Brownian W. `h` is the projection integrand as a
 * strategy callback; for the regression route the fitted coefficients and
 * their (robust) standard errors are kept alongside.
 */
struct KWDecomposition {
    StrategyFn h;
    std::vector<std::string> feature_names; // empty for the analytic route
    std::vector<double> beta;
    std::vector<double> beta_se;
    MCEstimate lambda_sq;          // E[(H - int h dW)^2]; held-out for regression
    MCEstimate in_sample_residual; // regression only
};

/// Closed-form decomposition of the example payoff: h_s = 2 rho W1_s, with
/// the residual second moment estimated over the batch.
inline KWDecomposition analytic_kw_example(double rho, const PathBatch& batch) {
    if (rho != batch.rho())
        throw ParameterError("analytic_kw_example: rho does not match the batch");
    KWDecomposition kw;
    kw.h = [rho](std::size_t k, const PathPrefix& prefix) { return 2.0 * rho * prefix.w1(k); };

    const Payoff payoff = example_payoff();
    const Accumulator acc = par::reduce(batch.size(), 1, [&](std::size_t i, std::span<double> out) {
        const PathBundle p = batch.path(i);
        double integral = 0.0;
        for (std::size_t k = 0; k + 1 < p.w.size(); ++k)
            integral += 2.0 * rho * p.w1[k] * (p.w[k + 1] - p.w[k]);
        const double resid = payoff.terminal(p) - integral;
        out[0] = resid * resid;
    });
    kw.lambda_sq = acc.estimate(0);
    return kw;
}

namespace detail {

/// Solve (A + ridge*I) x = b in place for a small symmetric positive matrix
/// stored row-major. Throws NumericError when the factorization breaks down.
inline std::vector<double> cholesky_solve(std::vector<double> a, std::vector<double> b,
                                          std::size_t p, double ridge) {
    for (std::size_t i = 0; i < p; ++i) a[i * p + i] += ridge;
    // Cholesky factorization A = L L^T
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a[i * p + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * p + k] * a[j * p + k];
            if (i == j) {
                if (!(s > 0.0))
                    throw NumericError("regression_kw: design matrix is rank-deficient");
                a[i * p + i] = std::sqrt(s);
            } else {
                a[i * p + j] = s / a[j * p + j];
            }
        }
    }
    // forward/back substitution
    for (std::size_t i = 0; i < p; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= a[i * p + k] * b[k];
        b[i] = s / a[i * p + i];
    }
    for (std::size_t ii = p; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t k = ii + 1; k < p; ++k) s -= a[k * p + ii] * b[k];
        b[ii] = s / a[ii * p + ii];
    }
    return b;
}

/// Ito integrals of each feature against W along one path.
inline void feature_integrals(const std::vector<StrategyFn>& features, const PathBundle& p,
                              std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    const std::size_t n = p.grid->steps();
    for (std::size_t k = 0; k < n; ++k) {
        const PathPrefix prefix(p, k + 1);
        const double dw = p.w[k + 1] - p.w[k];
        for (std::size_t j = 0; j < features.size(); ++j)
            out[j] += features[j](k, prefix) * dw;
    }
}

} // namespace detail

/**
 * Numerical Kunita-Watanabe projection: least-squares fit of H on the
 * feature integrals { int phi_j dW }, i.e. the orthogonal projection onto
 * the span of those integrals. Coefficients are fitted on the first part of
 * the batch; the residual second moment is reported on the held-out tail to
 * avoid optimistic bias. The normal equations carry a trace-scaled ridge;
 * designs that are degenerate beyond that rescue raise a NumericError.
 */
inline KWDecomposition regression_kw(const Payoff& payoff,
                                     const std::vector<std::string>& feature_names,
                                     std::vector<StrategyFn> features,
                                     const PathBatch& batch,
                                     double hold_out_fraction = 0.5,
                                     double ridge_scale = 1e-10) {
    const std::size_t p = features.size();
    if (p == 0) throw ParameterError("regression_kw: empty basis");
    if (feature_names.size() != p)
        throw ParameterError("regression_kw: feature name count mismatch");
    if (!(hold_out_fraction > 0.0 && hold_out_fraction < 1.0))
        throw ParameterError("regression_kw: hold_out_fraction must be in (0, 1)");
    if (batch.size() < 10 * p)
        throw ParameterError("regression_kw: batch size must be at least 10x basis dimension");
    const std::vector<std::string>& basis = feature_names;

    const std::size_t n_hold = std::max<std::size_t>(1, static_cast<std::size_t>(
                                   static_cast<double>(batch.size()) * hold_out_fraction));
    const std::size_t n_fit = batch.size() - n_hold;
    if (n_fit < p) throw ParameterError("regression_kw: not enough fit paths for the basis");

    // Pass 1 over the fit set: accumulate the normal equations
    // A = E[I I^T] (upper triangle), b = E[H I].
    const std::size_t tri = p * (p + 1) / 2;
    const Accumulator gram =
        par::reduce(n_fit, tri + p, [&](std::size_t i, std::span<double> out) {
            const PathBundle path = batch.path(i);
            std::vector<double> I(p);
            detail::feature_integrals(features, path, I);
            const double h = payoff.terminal(path);
            std::size_t idx = 0;
            for (std::size_t a = 0; a < p; ++a)
                for (std::size_t b = a; b < p; ++b) out[idx++] = I[a] * I[b];
            for (std::size_t a = 0; a < p; ++a) out[tri + a] = h * I[a];
        });

    std::vector<double> a(p * p, 0.0), b(p, 0.0);
    {
        std::size_t idx = 0;
        for (std::size_t r = 0; r < p; ++r)
            for (std::size_t c = r; c < p; ++c) {
                const double v = gram.mean(idx++);
                a[r * p + c] = v;
                a[c * p + r] = v;
            }
        for (std::size_t r = 0; r < p; ++r) b[r] = gram.mean(tri + r);
    }

    double trace = 0.0;
    for (std::size_t r = 0; r < p; ++r) trace += a[r * p + r];
    for (std::size_t r = 0; r < p; ++r)
        if (a[r * p + r] == 0.0)
            throw NumericError("regression_kw: feature '" + basis[r] +
                               "' has identically zero integral (rank-deficient)");
    if (!(trace > 0.0))
        throw NumericError("regression_kw: design matrix is identically zero");

    const double ridge = ridge_scale * trace / static_cast<double>(p);
    const std::vector<double> beta = detail::cholesky_solve(a, b, p, ridge);

    // Pass 2: in-sample residual + sandwich meat S = E[r^2 I I^T] for
    // coefficient standard errors, held-out residual second moment.
    const Accumulator fit_stats =
        par::reduce(n_fit, 1 + tri, [&](std::size_t i, std::span<double> out) {
            const PathBundle path = batch.path(i);
            std::vector<double> I(p);
            detail::feature_integrals(features, path, I);
            double r = payoff.terminal(path);
            for (std::size_t j = 0; j < p; ++j) r -= beta[j] * I[j];
            out[0] = r * r;
            std::size_t idx = 1;
            for (std::size_t x = 0; x < p; ++x)
                for (std::size_t y = x; y < p; ++y) out[idx++] = r * r * I[x] * I[y];
        });

    const Accumulator hold_stats =
        par::reduce(n_hold, 1, [&](std::size_t i, std::span<double> out) {
            const PathBundle path = batch.path(n_fit + i);
            std::vector<double> I(p);
            detail::feature_integrals(features, path, I);
            double r = payoff.terminal(path);
            for (std::size_t j = 0; j < p; ++j) r -= beta[j] * I[j];
            out[0] = r * r;
        });

    // sandwich covariance (A+ridge)^{-1} S (A+ridge)^{-1} / n_fit
    std::vector<double> s(p * p, 0.0);
    {
        std::size_t idx = 1;
        for (std::size_t x = 0; x < p; ++x)
            for (std::size_t y = x; y < p; ++y) {
                const double v = fit_stats.mean(idx++);
                s[x * p + y] = v;
                s[y * p + x] = v;
            }
    }
    // diag of A^{-1} S A^{-1} / n: with u = A^{-1} e_c the entry is u' S u.
    std::vector<double> beta_se(p, 0.0);
    for (std::size_t c = 0; c < p; ++c) {
        std::vector<double> unit(p, 0.0);
        unit[c] = 1.0;
        const std::vector<double> u = detail::cholesky_solve(a, std::move(unit), p, ridge);
        double quad = 0.0;
        for (std::size_t x = 0; x < p; ++x)
            for (std::size_t y = 0; y < p; ++y) quad += u[x] * s[x * p + y] * u[y];
        beta_se[c] = std::sqrt(std::max(0.0, quad / static_cast<double>(n_fit)));
    }

    KWDecomposition kw;
    kw.feature_names = basis;
    kw.beta = beta;
    kw.beta_se = beta_se;
    kw.in_sample_residual = fit_stats.estimate(0);
    kw.lambda_sq = hold_stats.estimate(0);
    kw.h = [features, beta](std::size_t k, const PathPrefix& prefix) {
        double v = 0.0;
        for (std::size_t j = 0; j < features.size(); ++j)
            v += beta[j] * features[j](k, prefix);
        return v;
    };
    return kw;
}

/// Name-based overload: features are parsed from the config grammar.
inline KWDecomposition regression_kw(const Payoff& payoff,
                                     const std::vector<std::string>& basis,
                                     const PathBatch& batch,
                                     double hold_out_fraction = 0.5,
                                     double ridge_scale = 1e-10) {
    std::vector<StrategyFn> features;
    features.reserve(basis.size());
    for (const std::string& name : basis) features.push_back(parse_feature(name));
    return regression_kw(payoff, basis, std::move(features), batch, hold_out_fraction,
                         ridge_scale);
}

} // namespace nlkw

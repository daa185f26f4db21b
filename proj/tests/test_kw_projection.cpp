#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "nlkw/estimate.hpp"
#include "nlkw/kw.hpp"
#include "nlkw/parallel.hpp"
#include "nlkw/path.hpp"

#include "helpers.hpp"

using namespace nlkw;

namespace {

/// Ito integral of a feature against W along one path (test-side re-derivation).
double feature_integral(const StrategyFn& f, const PathBundle& p) {
    double v = 0.0;
    for (std::size_t k = 0; k + 1 < p.w.size(); ++k)
        v += f(k, PathPrefix(p, k + 1)) * (p.w[k + 1] - p.w[k]);
    return v;
}

} // namespace

TEST_CASE("example payoff is centered") {
    const std::size_t n = 100000;
    const PathBatch batch = simulate_batch(build_grid(1.0, 8), n, 0.5, 51);
    const Payoff payoff = example_payoff();
    const Accumulator acc = par::reduce(n, 1, [&](std::size_t i, std::span<double> out) {
        out[0] = payoff.terminal(batch.path(i));
    });
    const MCEstimate e = acc.estimate(0);
    CHECK(std::abs(e.mean) <= 3.0 * e.se);
}

TEST_CASE("analytic decomposition residual matches the closed form") {
    // E[(lambda_T)^2] = 2 (1 - rho^2) T^2
    const double rho = 0.5;
    const PathBatch batch = simulate_batch(build_grid(1.0, 512), 20000, rho, 52);
    const KWDecomposition kw = analytic_kw_example(rho, batch);
    const double target = 2.0 * (1.0 - rho * rho);
    CHECK(std::abs(kw.lambda_sq.mean - target) <= 3.0 * kw.lambda_sq.se);

    // the integrand callback is h_k = 2 rho W1 at the left node
    const PathBundle p = batch.path(0);
    CHECK(kw.h(3, PathPrefix(p, 4)) == 2.0 * rho * p.w1[3]);

    CHECK_THROWS_AS(analytic_kw_example(0.4, batch), ParameterError);
}

TEST_CASE("analytic residual in the rho -> 1 limit") {
    // at rho = 0.999 the floor collapses to 2 (1 - rho^2) T^2 ~ 0.004 T^2;
    // the fine grid keeps the left-point discretization bias (2 rho^2 T^2 / N)
    // well inside the band
    const double rho = 0.999;
    const PathBatch batch = simulate_batch(build_grid(1.0, 16384), 2000, rho, 53);
    const KWDecomposition kw = analytic_kw_example(rho, batch);
    const double target = 2.0 * (1.0 - rho * rho);
    CHECK(std::abs(kw.lambda_sq.mean - target) <= 3.0 * kw.lambda_sq.se);
}

TEST_CASE("payoff second moment without the projection") {
    // E[H^2] = Var((W1_T)^2) = 2 T^2
    const std::size_t n = 20000;
    const PathBatch batch = simulate_batch(build_grid(1.0, 8), n, 0.5, 54);
    const Payoff payoff = example_payoff();
    const Accumulator acc = par::reduce(n, 1, [&](std::size_t i, std::span<double> out) {
        const double h = payoff.terminal(batch.path(i));
        out[0] = h * h;
    });
    const MCEstimate e = acc.estimate(0);
    CHECK(std::abs(e.mean - 2.0) <= 3.0 * e.se);
}

TEST_CASE("regression recovers the example integrand coefficient") {
    const double rho = 0.5;
    const PathBatch batch = simulate_batch(build_grid(1.0, 128), 20000, rho, 55);
    const KWDecomposition kw = regression_kw(example_payoff(), {"w1"}, batch);
    REQUIRE(kw.beta.size() == 1);
    CHECK(std::abs(kw.beta[0] - 2.0 * rho) <= 3.0 * kw.beta_se[0]);
    // held-out residual agrees with the analytic floor within joint error
    const KWDecomposition analytic = analytic_kw_example(rho, batch);
    CHECK(std::abs(kw.lambda_sq.mean - analytic.lambda_sq.mean) <=
          3.0 * joint_se(kw.lambda_sq, analytic.lambda_sq));
}

TEST_CASE("regression on a payoff already inside the span") {
    // H = W_T = int 1 dW: coefficient 1, residual 0
    Payoff w_terminal;
    w_terminal.name = "w_terminal";
    w_terminal.terminal = [](const PathBundle& p) { return p.w.back(); };
    const PathBatch batch = simulate_batch(build_grid(1.0, 64), 5000, 0.5, 56);
    const KWDecomposition kw = regression_kw(w_terminal, {"const"}, batch);
    // the trace-scaled ridge shrinks the coefficient by ~1e-10
    CHECK(std::abs(kw.beta[0] - 1.0) <= std::max(3.0 * kw.beta_se[0], 1e-9));
    CHECK(kw.lambda_sq.mean <= 1e-12);
}

TEST_CASE("rank-deficient designs raise numeric errors") {
    const PathBatch batch = simulate_batch(build_grid(1.0, 32), 1000, 0.5, 57);
    const StrategyFn zero = [](std::size_t, const PathPrefix&) { return 0.0; };
    CHECK_THROWS_AS(
        regression_kw(example_payoff(), {"zero"}, {zero}, batch), NumericError);
    CHECK_THROWS_AS(regression_kw(example_payoff(), {"bogus"}, batch), ParameterError);
    CHECK_THROWS_AS(regression_kw(example_payoff(), {}, batch), ParameterError);
    // batch too small for the basis dimension
    const PathBatch tiny = simulate_batch(build_grid(1.0, 32), 19, 0.5, 57);
    CHECK_THROWS_AS(regression_kw(example_payoff(), {"w1", "w"}, tiny), ParameterError);
}

TEST_CASE("duplicated features resolve via the ridge to a finite split") {
    const PathBatch batch = simulate_batch(build_grid(1.0, 64), 2000, 0.5, 58);
    const KWDecomposition kw = regression_kw(example_payoff(), {"w1", "w1"}, batch);
    REQUIRE(kw.beta.size() == 2);
    CHECK(std::isfinite(kw.beta[0]));
    CHECK(std::isfinite(kw.beta[1]));
    // the two copies share the load; their sum carries the signal
    CHECK(std::abs(kw.beta[0] + kw.beta[1] - 1.0) <= 0.2);
}

TEST_CASE("fitted residuals are orthogonal to every basis integral") {
    const PathBatch batch = simulate_batch(build_grid(1.0, 64), 4000, 0.5, 59);
    const std::vector<std::string> basis = {"w1", "w", "t*w1"};
    const KWDecomposition kw = regression_kw(example_payoff(), basis, batch);
    const Payoff payoff = example_payoff();

    const std::size_t n_fit = batch.size() / 2;
    std::vector<StrategyFn> features;
    for (const std::string& name : basis) features.push_back(parse_feature(name));

    for (std::size_t j = 0; j < features.size(); ++j) {
        Accumulator acc(1);
        for (std::size_t i = 0; i < n_fit; ++i) {
            const PathBundle p = batch.path(i);
            double resid = payoff.terminal(p);
            for (std::size_t m = 0; m < features.size(); ++m)
                resid -= kw.beta[m] * feature_integral(features[m], p);
            const double sample[] = {resid * feature_integral(features[j], p)};
            acc.add(sample);
        }
        const MCEstimate e = acc.estimate(0);
        // normal equations force this to ~0 in sample (up to the ridge)
        CHECK(std::abs(e.mean) <= std::max(3.0 * e.se, 1e-9));
    }
}

TEST_CASE("adding features never hurts the in-sample residual") {
    const PathBatch batch = simulate_batch(build_grid(1.0, 64), 4000, 0.5, 60);
    const Payoff payoff = example_payoff();
    const KWDecomposition small = regression_kw(payoff, {"w1"}, batch);
    const KWDecomposition medium = regression_kw(payoff, {"w1", "w"}, batch);
    const KWDecomposition large = regression_kw(payoff, {"w1", "w", "w1_sq", "t*w"}, batch);
    const double slack = 1e-9;
    CHECK(medium.in_sample_residual.mean <= small.in_sample_residual.mean * (1.0 + slack));
    CHECK(large.in_sample_residual.mean <= medium.in_sample_residual.mean * (1.0 + slack));
}

TEST_CASE("feature grammar") {
    const PathBundle p = simulate_batch(build_grid(1.0, 8), 1, 0.5, 61).path(0);
    const PathPrefix prefix(p, 5);
    CHECK(parse_feature("const")(4, prefix) == 1.0);
    CHECK(parse_feature("w1")(4, prefix) == p.w1[4]);
    CHECK(parse_feature("w")(4, prefix) == p.w[4]);
    CHECK(parse_feature("w1_sq")(4, prefix) == p.w1[4] * p.w1[4]);
    CHECK(parse_feature("t")(4, prefix) == p.grid->node(4));
    CHECK(parse_feature("t*w1")(4, prefix) == p.grid->node(4) * p.w1[4]);
    CHECK_THROWS_AS(parse_feature("w3"), ParameterError);
    CHECK_THROWS_AS(parse_feature("w1*"), ParameterError);
    CHECK_THROWS_AS(parse_feature(""), ParameterError);
}

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "nlkw/family.hpp"
#include "nlkw/integrators.hpp"
#include "nlkw/parallel.hpp"
#include "nlkw/path.hpp"
#include "nlkw/strategy.hpp"

#include "helpers.hpp"

using namespace nlkw;

namespace {

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

} // namespace

TEST_CASE("ito integral telescopes for h == 1") {
    const PathBatch batch = simulate_batch(build_grid(1.0, 64), 200, 0.5, 3);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const PathBundle p = batch.path(i);
        const IntegralResult r = ito_integral(constant_strategy(p.grid, 1.0), p.w, *p.grid);
        REQUIRE(r.running[0] == 0.0);
        const double scale = std::max(1.0, max_abs(p.w));
        CHECK(testutil::ulps_of_scale(r.terminal(), p.w.back() - p.w.front(), scale) <= 8.0);
    }
}

TEST_CASE("ito integral of zero integrand is zero") {
    const PathBundle p = simulate_batch(build_grid(1.0, 32), 1, 0.5, 4).path(0);
    const IntegralResult r = ito_integral(constant_strategy(p.grid, 0.0), p.w, *p.grid);
    for (double v : r.running) CHECK(v == 0.0);
}

TEST_CASE("ito integral shape errors") {
    const PathBundle p = simulate_batch(build_grid(1.0, 32), 1, 0.5, 4).path(0);
    const StrategyPath wrong = constant_strategy(
        std::make_shared<const TimeGrid>(TimeGrid::uniform(1.0, 16)), 1.0);
    CHECK_THROWS_AS(ito_integral(wrong, p.w, *p.grid), ShapeError);
    std::vector<double> short_driver(p.w.begin(), p.w.end() - 1);
    const StrategyPath ok = constant_strategy(p.grid, 1.0);
    CHECK_THROWS_AS(ito_integral(ok, short_driver, *p.grid), ShapeError);
}

TEST_CASE("ito isometry for h = 2 rho W1 against W") {
    // E[(int 2 rho W1 dW)^2] = 4 rho^2 int_0^T s ds = 2 rho^2 T^2
    const double rho = 0.5;
    const std::size_t n = 20000;
    const PathBatch batch = simulate_batch(build_grid(1.0, 128), n, rho, 17);
    const Accumulator acc = par::reduce(n, 1, [&](std::size_t i, std::span<double> out) {
        const PathBundle p = batch.path(i);
        double integral = 0.0;
        for (std::size_t k = 0; k + 1 < p.w.size(); ++k)
            integral += 2.0 * rho * p.w1[k] * (p.w[k + 1] - p.w[k]);
        out[0] = integral * integral;
    });
    const MCEstimate e = acc.estimate(0);
    CHECK(std::abs(e.mean - 2.0 * rho * rho) <= 3.0 * e.se);
}

TEST_CASE("nonlinear integral telescopes exactly for constant theta") {
    const MartingaleFamily fam = exponential_family();
    const PathBatch batch = simulate_batch(build_grid(1.0, 64), 500, 0.5, 21);
    for (double c : {-1.0, 0.7, 2.0}) {
        for (std::size_t i = 0; i < batch.size(); ++i) {
            const PathBundle p = batch.path(i);
            const IntegralResult r = nonlinear_integral(fam, constant_strategy(p.grid, c), p);
            double scale = 1.0;
            for (std::size_t k = 0; k < p.w.size(); ++k)
                scale = std::max(scale, std::abs(fam.value(k, c, p)));
            CHECK(testutil::ulps_of_scale(r.terminal(), fam.value(p.grid->steps(), c, p), scale) <=
                  8.0);
        }
    }
}

TEST_CASE("nonlinear integral reduces to the ito integral for the linear family") {
    const MartingaleFamily fam = linear_family();
    const PathBatch batch = simulate_batch(build_grid(1.0, 512), 300, 0.5, 22);
    const StrategyFn h = [](std::size_t k, const PathPrefix& pre) { return pre.w1(k); };
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const PathBundle p = batch.path(i);
        const StrategyPath theta = evaluate_strategy(h, p);
        const IntegralResult nl = nonlinear_integral(fam, theta, p);
        const IntegralResult it = ito_integral(theta, p.w, *p.grid);
        // guaranteed forward-error budget: eps times the accumulated term
        // magnitude dominates both summation orderings
        double mag = 1.0;
        for (std::size_t k = 0; k + 1 < p.w.size(); ++k)
            mag += std::abs(theta.values[k]) *
                   std::max(std::abs(p.w[k]), std::abs(p.w[k + 1]));
        constexpr double eps = std::numeric_limits<double>::epsilon();
        CHECK(std::abs(nl.terminal() - it.terminal()) <= 8.0 * eps * mag);
        for (std::size_t k = 0; k < nl.running.size(); k += 64)
            CHECK(std::abs(nl.running[k] - it.running[k]) <= 8.0 * eps * mag);
    }
}

TEST_CASE("nonlinear integral of the exponential family is centered") {
    // martingale property of the footnote sum for a bounded strategy
    const MartingaleFamily fam = exponential_family();
    const std::size_t n = 100000;
    const PathBatch batch = simulate_batch(build_grid(1.0, 64), n, 0.5, 31);
    const StrategyFn bounded = [](std::size_t k, const PathPrefix& pre) {
        return std::clamp(pre.w(k), -1.0, 1.0);
    };
    const Accumulator acc = par::reduce(n, 1, [&](std::size_t i, std::span<double> out) {
        const PathBundle p = batch.path(i);
        out[0] = nonlinear_integral(fam, evaluate_strategy(bounded, p), p).terminal();
    });
    const MCEstimate e = acc.estimate(0);
    CHECK(std::abs(e.mean) <= 3.0 * e.se);
}

TEST_CASE("strategies cannot read beyond their prefix") {
    const PathBundle p = simulate_batch(build_grid(1.0, 16), 1, 0.5, 8).path(0);
    const StrategyFn peeking = [](std::size_t k, const PathPrefix& pre) {
        return pre.w1(k + 1); // one node into the future
    };
    CHECK_THROWS_AS(evaluate_strategy(peeking, p), ShapeError);
}

TEST_CASE("running values are unchanged by permuting future path values") {
    const MartingaleFamily fam = exponential_family();
    const std::size_t n_steps = 32;
    const PathBatch batch = simulate_batch(build_grid(1.0, n_steps), 2, 0.5, 9);
    const PathBundle a = batch.path(0);
    const PathBundle other = batch.path(1);

    const std::size_t cut = 20;
    std::vector<double> w1 = a.w1, w2 = a.w2;
    for (std::size_t k = cut + 1; k <= n_steps; ++k) {
        w1[k] = other.w1[k];
        w2[k] = other.w2[k];
    }
    const PathBundle b = make_bundle(a.grid, w1, w2, a.rho);

    const StrategyFn h = [](std::size_t k, const PathPrefix& pre) {
        return std::sin(pre.w(k)) + 0.25 * pre.w1(k);
    };
    const IntegralResult ra = nonlinear_integral(fam, evaluate_strategy(h, a), a);
    const IntegralResult rb = nonlinear_integral(fam, evaluate_strategy(h, b), b);
    for (std::size_t k = 0; k <= cut; ++k) CHECK(ra.running[k] == rb.running[k]);
    CHECK(ra.running[n_steps] != rb.running[n_steps]);
}

TEST_CASE("isometry gap sits at zero for predictable integrands") {
    const std::size_t n = 20000;
    const PathBatch batch = simulate_batch(build_grid(1.0, 64), n, 0.5, 13);

    const MCEstimate flat = isometry_gap(
        [](std::size_t, const PathPrefix&) { return 1.0; }, Driver::w, batch);
    CHECK(std::abs(flat.mean) <= 3.0 * flat.se);

    // h = W1 at the left node: both sides approach T^2/2
    const MCEstimate growing = isometry_gap(
        [](std::size_t k, const PathPrefix& pre) { return pre.w1(k); }, Driver::w, batch);
    CHECK(std::abs(growing.mean) <= 3.0 * growing.se);

    const MCEstimate sign_h = isometry_gap(
        [](std::size_t k, const PathPrefix& pre) { return pre.w(k) >= 0.0 ? 1.0 : -1.0; },
        Driver::w, batch);
    CHECK(std::abs(sign_h.mean) <= 3.0 * sign_h.se);
}

TEST_CASE("numeric errors from family evaluation carry context") {
    const MartingaleFamily fam = exponential_family();
    const PathBundle p = testutil::path_with_terminal_w(1.0, 1000.0);
    const StrategyPath theta = constant_strategy(p.grid, 800.0);
    CHECK_THROWS_AS(nonlinear_integral(fam, theta, p), NumericError);
    try {
        nonlinear_integral(fam, theta, p);
    } catch (const NumericError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("t=") != std::string::npos);
        CHECK(msg.find("x=") != std::string::npos);
    }
}

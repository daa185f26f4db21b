#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "nlkw/parallel.hpp"
#include "nlkw/path.hpp"
#include "nlkw/time_grid.hpp"

#include "helpers.hpp"

using namespace nlkw;

TEST_CASE("uniform grid nodes") {
    const TimeGrid g1 = build_grid(1.0, 1);
    REQUIRE(g1.steps() == 1);
    CHECK(g1.node(0) == 0.0);
    CHECK(g1.node(1) == 1.0);

    const TimeGrid g4 = build_grid(1.0, 4);
    const double expected[] = {0.0, 0.25, 0.5, 0.75, 1.0};
    for (std::size_t k = 0; k <= 4; ++k) CHECK(g4.node(k) == expected[k]);

    // t_N pinned to the horizon even when k*T/N rounds
    const TimeGrid g7 = build_grid(0.3, 7);
    CHECK(g7.horizon() == 0.3);
    CHECK(g7.node(7) == 0.3);
}

TEST_CASE("grid parameter errors") {
    CHECK_THROWS_AS(build_grid(0.0, 4), ParameterError);
    CHECK_THROWS_AS(build_grid(-1.0, 4), ParameterError);
    CHECK_THROWS_AS(build_grid(1.0, 0), ParameterError);
    CHECK_THROWS_AS(TimeGrid({0.0, 0.5, 0.5, 1.0}), ParameterError);
    CHECK_THROWS_AS(TimeGrid({0.1, 0.5, 1.0}), ParameterError);
}

TEST_CASE("batch parameter errors") {
    const TimeGrid g = build_grid(1.0, 4);
    CHECK_THROWS_AS(simulate_batch(g, 10, 1.5, 1), ParameterError);
    CHECK_THROWS_AS(simulate_batch(g, 10, -0.1, 1), ParameterError);
    CHECK_THROWS_AS(simulate_batch(g, 0, 0.5, 1), ParameterError);
}

TEST_CASE("rho = 1 collapses w onto w1") {
    const PathBatch batch = simulate_batch(build_grid(1.0, 32), 50, 1.0, 42);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const PathBundle p = batch.path(i);
        for (std::size_t k = 0; k < p.w.size(); ++k) CHECK(p.w[k] == p.w1[k]);
    }
}

TEST_CASE("mixture identity holds to a few ulps") {
    const PathBatch batch = simulate_batch(build_grid(2.0, 64), 100, 0.37, 7);
    const double s = std::sqrt(1.0 - 0.37 * 0.37);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const PathBundle p = batch.path(i);
        for (std::size_t k = 0; k < p.w.size(); ++k) {
            const double mix = 0.37 * p.w1[k] + s * p.w2[k];
            CHECK(testutil::ulps_of_scale(p.w[k], mix, std::max(1.0, std::abs(mix))) <= 4.0);
        }
    }
}

TEST_CASE("paths start at zero and have independent N(0, dt) increments") {
    // moment checks at fixed seed: mean of w1_T within 4 sqrt(T/n) of 0,
    // variance of w_T within 5% of T
    const std::size_t n = 100000;
    const PathBatch batch = simulate_batch(build_grid(1.0, 8), n, 0.5, 20260809);
    const Accumulator acc = par::reduce(n, 3, [&](std::size_t i, std::span<double> out) {
        const PathBundle p = batch.path(i);
        REQUIRE(p.w1[0] == 0.0);
        REQUIRE(p.w2[0] == 0.0);
        REQUIRE(p.w[0] == 0.0);
        out[0] = p.w1.back();
        out[1] = p.w.back() * p.w.back();
        out[2] = p.w.back();
    });
    const double mean_w1 = acc.estimate(0).mean;
    CHECK(std::abs(mean_w1) <= 4.0 * std::sqrt(1.0 / static_cast<double>(n)));
    const double var_w = acc.estimate(1).mean - acc.estimate(2).mean * acc.estimate(2).mean;
    CHECK(var_w == Catch::Approx(1.0).margin(0.05));
}

TEST_CASE("terminal covariance matches rho T") {
    // E[W_T W1_T] = rho T by bilinearity of the covariation; MC oracle
    const double rho = 0.5;
    const std::size_t n = 100000;
    const PathBatch batch = simulate_batch(build_grid(1.0, 8), n, rho, 99);
    const Accumulator acc = par::reduce(n, 3, [&](std::size_t i, std::span<double> out) {
        const PathBundle p = batch.path(i);
        out[0] = p.w.back();
        out[1] = p.w1.back();
        out[2] = p.w.back() * p.w1.back();
    });
    const double mx = acc.estimate(0).mean;
    const double my = acc.estimate(1).mean;
    const double cov = acc.estimate(2).mean - mx * my;

    // s.e. of the covariance from centered product samples
    Accumulator centered(1);
    for (std::size_t i = 0; i < n; ++i) {
        const PathBundle p = batch.path(i);
        const double z = (p.w.back() - mx) * (p.w1.back() - my);
        const double sample[] = {z};
        centered.add(sample);
    }
    const double se = centered.estimate(0).se;
    CHECK(std::abs(cov - rho * 1.0) <= 3.0 * se);
}

TEST_CASE("identical seeds reproduce batches bit for bit") {
    const PathBatch a = simulate_batch(build_grid(1.0, 16), 64, 0.3, 1234);
    const PathBatch b = simulate_batch(build_grid(1.0, 16), 64, 0.3, 1234);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const PathBundle pa = a.path(i);
        const PathBundle pb = b.path(i);
        CHECK(pa.w1 == pb.w1);
        CHECK(pa.w2 == pb.w2);
        CHECK(pa.w == pb.w);
    }
    // different seed differs
    const PathBundle pc = simulate_batch(build_grid(1.0, 16), 64, 0.3, 1235).path(0);
    CHECK(pc.w1 != a.path(0).w1);
}

TEST_CASE("path generation is independent of access order") {
    const PathBatch batch = simulate_batch(build_grid(1.0, 16), 8, 0.6, 5);
    const PathBundle late = batch.path(7);
    const PathBundle early = batch.path(0);
    const PathBundle late_again = batch.path(7);
    CHECK(late.w1 == late_again.w1);
    CHECK(late.w2 == late_again.w2);
    CHECK(early.w1 == batch.path(0).w1);
}

TEST_CASE("batch dump round-trips") {
    const auto file = std::filesystem::temp_directory_path() / "nlkw_test_batch.bin";
    const PathBatch batch = simulate_batch(build_grid(0.7, 5), 7, 0.25, 77);
    dump_batch(batch, file);
    const PathBatch loaded = load_batch(file);

    REQUIRE(loaded.size() == batch.size());
    CHECK(loaded.rho() == batch.rho());
    CHECK(loaded.master_seed() == batch.master_seed());
    CHECK(loaded.grid() == batch.grid());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const PathBundle a = batch.path(i);
        const PathBundle b = loaded.path(i);
        CHECK(a.w1 == b.w1);
        CHECK(a.w2 == b.w2);
        CHECK(a.w == b.w); // w recomputed on load from the same w1/w2
    }
    std::filesystem::remove(file);

    CHECK_THROWS_AS(load_batch("/nonexistent/nlkw.bin"), IoError);
}

TEST_CASE("reduce is invariant to the worker count") {
    const PathBatch batch = simulate_batch(build_grid(1.0, 32), 5000, 0.5, 11);
    auto run = [&] {
        return par::reduce(batch.size(), 2, [&](std::size_t i, std::span<double> out) {
            const PathBundle p = batch.path(i);
            out[0] = p.w.back();
            out[1] = p.w1.back() * p.w1.back();
        });
    };
    testutil::ScopedEnv one("NLKW_THREADS", "1");
    const Accumulator a = run();
    double a0, a1;
    {
        testutil::ScopedEnv eight("NLKW_THREADS", "8");
        const Accumulator b = run();
        a0 = b.estimate(0).mean;
        a1 = b.estimate(1).mean;
    }
    CHECK(a.estimate(0).mean == a0);
    CHECK(a.estimate(1).mean == a1);
}

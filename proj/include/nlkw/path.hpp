#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "nlkw/errors.hpp"
#include "nlkw/rng.hpp"
#include "nlkw/time_grid.hpp"

namespace nlkw {

/**
 * One simulated path of the correlated Brownian triple on a grid:
 * two independent Brownian motions w1, w2 and the mixture
 * w = rho*w1 + sqrt(1-rho^2)*w2, all sampled at the grid nodes.
 */
struct PathBundle {
    std::shared_ptr<const TimeGrid> grid;
    std::vector<double> w1;
    std::vector<double> w2;
    std::vector<double> w;
    double rho = 0.0;
    std::uint64_t path_id = 0;
    std::uint64_t master_seed = 0;
};

/// Assemble a bundle from explicit w1/w2 values (w is derived). Test helper
/// and load-path constructor; simulation uses simulate_path below.
inline PathBundle make_bundle(std::shared_ptr<const TimeGrid> grid,
                              std::vector<double> w1,
                              std::vector<double> w2,
                              double rho,
                              std::uint64_t path_id = 0,
                              std::uint64_t master_seed = 0) {
    if (!grid) throw ParameterError("make_bundle: null grid");
    const std::size_t n = grid->steps() + 1;
    if (w1.size() != n || w2.size() != n)
        throw ShapeError("make_bundle: node count mismatch with grid");
    PathBundle p;
    p.grid = std::move(grid);
    p.w1 = std::move(w1);
    p.w2 = std::move(w2);
    p.rho = rho;
    p.path_id = path_id;
    p.master_seed = master_seed;
    const double s = std::sqrt(1.0 - rho * rho);
    p.w.resize(n);
    for (std::size_t k = 0; k < n; ++k) p.w[k] = rho * p.w1[k] + s * p.w2[k];
    return p;
}

/// Generate path `path_id` of the batch identified by (grid, rho, master_seed).
/// Pure function of its arguments: increments come from the stream derived
/// from (master_seed, path_id) only.
inline PathBundle simulate_path(const std::shared_ptr<const TimeGrid>& grid,
                                double rho,
                                std::uint64_t master_seed,
                                std::uint64_t path_id) {
    const std::size_t n_steps = grid->steps();
    PathBundle p;
    p.grid = grid;
    p.rho = rho;
    p.path_id = path_id;
    p.master_seed = master_seed;
    p.w1.resize(n_steps + 1);
    p.w2.resize(n_steps + 1);
    p.w.resize(n_steps + 1);
    p.w1[0] = p.w2[0] = p.w[0] = 0.0;

    Rng rng(master_seed, path_id);
    const double s = std::sqrt(1.0 - rho * rho);
    for (std::size_t k = 1; k <= n_steps; ++k) {
        const double sd = std::sqrt(grid->dt(k - 1));
        const auto [z1, z2] = rng.next_gaussian_pair();
        p.w1[k] = p.w1[k - 1] + sd * z1;
        p.w2[k] = p.w2[k - 1] + sd * z2;
        p.w[k] = rho * p.w1[k] + s * p.w2[k];
    }
    return p;
}

/**
 * A reproducible batch of paths. Paths are generated on demand from
 * (master_seed, path_id), so the batch itself stores no path data unless it
 * was materialized (e.g. read back from a dump). Identical parameters
 * reproduce identical batches bit for bit.
 */
class PathBatch {
public:
    PathBatch(TimeGrid grid, std::size_t n_paths, double rho, std::uint64_t master_seed)
        : grid_(std::make_shared<const TimeGrid>(std::move(grid))),
          n_paths_(n_paths),
          rho_(rho),
          master_seed_(master_seed) {
        if (n_paths_ < 1) throw ParameterError("PathBatch: n_paths must be >= 1");
        if (!(rho_ >= 0.0 && rho_ <= 1.0))
            throw ParameterError("PathBatch: rho must be in [0, 1]");
    }

    std::size_t size() const { return n_paths_; }
    const TimeGrid& grid() const { return *grid_; }
    std::shared_ptr<const TimeGrid> grid_ptr() const { return grid_; }
    double rho() const { return rho_; }
    std::uint64_t master_seed() const { return master_seed_; }

    PathBundle path(std::size_t id) const {
        if (id >= n_paths_) throw ParameterError("PathBatch: path id out of range");
        if (store_) return (*store_)[id];
        return simulate_path(grid_, rho_, master_seed_, id);
    }

    /// Batch backed by explicit storage (used by load_batch).
    static PathBatch from_paths(TimeGrid grid, double rho, std::uint64_t master_seed,
                                std::vector<PathBundle> paths) {
        PathBatch b(std::move(grid), paths.size(), rho, master_seed);
        b.store_ = std::make_shared<const std::vector<PathBundle>>(std::move(paths));
        return b;
    }

private:
    std::shared_ptr<const TimeGrid> grid_;
    std::size_t n_paths_;
    double rho_;
    std::uint64_t master_seed_;
    std::shared_ptr<const std::vector<PathBundle>> store_;
};

/// Simulate a reproducible batch of correlated Brownian paths.
inline PathBatch simulate_batch(const TimeGrid& grid, std::size_t n_paths, double rho,
                                std::uint64_t master_seed) {
    return PathBatch(grid, n_paths, rho, master_seed);
}

namespace detail {

inline void write_raw(std::ofstream& out, const void* p, std::size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

inline void read_raw(std::ifstream& in, void* p, std::size_t n) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
}

} // namespace detail

/**
 * Binary batch dump. Layout (little-endian):
 *   magic "NLKW" | version u32 | n_paths u64 | n_steps u64 |
 *   T f64 | rho f64 | master_seed u64 |
 *   w1[n_paths][n_steps+1] f64 | w2[n_paths][n_steps+1] f64
 * w is recomputed on load. Uniform grids only.
 */
inline void dump_batch(const PathBatch& batch, const std::filesystem::path& file) {
    const TimeGrid& g = batch.grid();
    const TimeGrid uniform = TimeGrid::uniform(g.horizon(), g.steps());
    if (!(uniform == g))
        throw ParameterError("dump_batch: only uniform grids are dumpable");

    std::ofstream out(file, std::ios::binary);
    if (!out) throw IoError("dump_batch: cannot open " + file.string());

    const char magic[4] = {'N', 'L', 'K', 'W'};
    const std::uint32_t version = 1;
    const std::uint64_t n_paths = batch.size();
    const std::uint64_t n_steps = g.steps();
    const double horizon = g.horizon();
    const double rho = batch.rho();
    const std::uint64_t seed = batch.master_seed();
    detail::write_raw(out, magic, 4);
    detail::write_raw(out, &version, sizeof version);
    detail::write_raw(out, &n_paths, sizeof n_paths);
    detail::write_raw(out, &n_steps, sizeof n_steps);
    detail::write_raw(out, &horizon, sizeof horizon);
    detail::write_raw(out, &rho, sizeof rho);
    detail::write_raw(out, &seed, sizeof seed);
    for (std::size_t i = 0; i < n_paths; ++i) {
        const PathBundle p = batch.path(i);
        detail::write_raw(out, p.w1.data(), p.w1.size() * sizeof(double));
    }
    for (std::size_t i = 0; i < n_paths; ++i) {
        const PathBundle p = batch.path(i);
        detail::write_raw(out, p.w2.data(), p.w2.size() * sizeof(double));
    }
    if (!out) throw IoError("dump_batch: write failed for " + file.string());
}

inline PathBatch load_batch(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("load_batch: cannot open " + file.string());

    char magic[4];
    std::uint32_t version = 0;
    std::uint64_t n_paths = 0, n_steps = 0, seed = 0;
    double horizon = 0, rho = 0;
    detail::read_raw(in, magic, 4);
    if (!in || std::memcmp(magic, "NLKW", 4) != 0)
        throw IoError("load_batch: bad magic in " + file.string());
    detail::read_raw(in, &version, sizeof version);
    if (version != 1) throw IoError("load_batch: unsupported version in " + file.string());
    detail::read_raw(in, &n_paths, sizeof n_paths);
    detail::read_raw(in, &n_steps, sizeof n_steps);
    detail::read_raw(in, &horizon, sizeof horizon);
    detail::read_raw(in, &rho, sizeof rho);
    detail::read_raw(in, &seed, sizeof seed);
    if (!in) throw IoError("load_batch: truncated header in " + file.string());

    auto grid = std::make_shared<const TimeGrid>(TimeGrid::uniform(horizon, n_steps));
    const std::size_t nodes = n_steps + 1;
    std::vector<std::vector<double>> w1(n_paths), w2(n_paths);
    for (std::size_t i = 0; i < n_paths; ++i) {
        w1[i].resize(nodes);
        detail::read_raw(in, w1[i].data(), nodes * sizeof(double));
    }
    for (std::size_t i = 0; i < n_paths; ++i) {
        w2[i].resize(nodes);
        detail::read_raw(in, w2[i].data(), nodes * sizeof(double));
    }
    if (!in) throw IoError("load_batch: truncated data in " + file.string());

    std::vector<PathBundle> paths;
    paths.reserve(n_paths);
    for (std::size_t i = 0; i < n_paths; ++i)
        paths.push_back(make_bundle(grid, std::move(w1[i]), std::move(w2[i]), rho, i, seed));
    return PathBatch::from_paths(TimeGrid(*grid), rho, seed, std::move(paths));
}

} // namespace nlkw

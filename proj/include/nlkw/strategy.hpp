#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "nlkw/errors.hpp"
#include "nlkw/path.hpp"
#include "nlkw/time_grid.hpp"

namespace nlkw {

/**
 * Read view of the first `visible` nodes of a path. Strategy callbacks only
 * ever receive a prefix, so a strategy cannot read values it is not allowed
 * to depend on: predictability is structural, not checked after the fact.
 */
class PathPrefix {
public:
    PathPrefix(const PathBundle& path, std::size_t visible)
        : path_(&path), visible_(visible) {
        if (visible_ > path.w.size())
            throw ShapeError("PathPrefix: visible extent exceeds path length");
    }

    /// Number of accessible nodes; valid indices are 0 .. visible()-1.
    std::size_t visible() const { return visible_; }
    double rho() const { return path_->rho; }
    const TimeGrid& grid() const { return *path_->grid; }

    double t(std::size_t k) const { return path_->grid->node(check(k)); }
    double w1(std::size_t k) const { return path_->w1[check(k)]; }
    double w2(std::size_t k) const { return path_->w2[check(k)]; }
    double w(std::size_t k) const { return path_->w[check(k)]; }

private:
    std::size_t check(std::size_t k) const {
        if (k >= visible_)
            throw ShapeError("PathPrefix: access beyond visible prefix");
        return k;
    }

    const PathBundle* path_;
    std::size_t visible_;
};

/// Predictable process on a grid: values[k] applies on (t_k, t_{k+1}] and may
/// only depend on path information up to and including node k.
struct StrategyPath {
    std::shared_ptr<const TimeGrid> grid;
    std::vector<double> values; // size = grid->steps()
};

/// Strategy callback: value for the interval (t_k, t_{k+1}] given the prefix
/// of nodes 0..k. The prefix passed in always has visible() == k+1.
using StrategyFn = std::function<double(std::size_t k, const PathPrefix& prefix)>;

/// Evaluate a strategy callback along a path.
inline StrategyPath evaluate_strategy(const StrategyFn& fn, const PathBundle& path) {
    const std::size_t n = path.grid->steps();
    StrategyPath s;
    s.grid = path.grid;
    s.values.resize(n);
    for (std::size_t k = 0; k < n; ++k)
        s.values[k] = fn(k, PathPrefix(path, k + 1));
    return s;
}

inline StrategyPath constant_strategy(std::shared_ptr<const TimeGrid> grid, double value) {
    StrategyPath s;
    s.values.assign(grid->steps(), value);
    s.grid = std::move(grid);
    return s;
}

} // namespace nlkw

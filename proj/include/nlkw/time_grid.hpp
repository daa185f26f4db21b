#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "nlkw/errors.hpp"

namespace nlkw {

/// Discretization of [0, T]: strictly increasing nodes t_0 = 0, ..., t_N = T.
class TimeGrid {
public:
    /// Custom (possibly non-uniform) grid. Validates monotonicity and endpoints.
    explicit TimeGrid(std::vector<double> nodes) : nodes_(std::move(nodes)) {
        if (nodes_.size() < 2)
            throw ParameterError("TimeGrid: need at least two nodes");
        if (nodes_.front() != 0.0)
            throw ParameterError("TimeGrid: first node must be 0");
        for (std::size_t k = 1; k < nodes_.size(); ++k)
            if (!(nodes_[k] > nodes_[k - 1]))
                throw ParameterError("TimeGrid: nodes must be strictly increasing");
        if (!std::isfinite(nodes_.back()))
            throw ParameterError("TimeGrid: horizon must be finite");
    }

    /// Uniform grid with n_steps steps on [0, horizon]; t_k = k*T/N with the
    /// last node pinned to the horizon exactly.
    static TimeGrid uniform(double horizon, std::size_t n_steps) {
        if (!(horizon > 0.0) || !std::isfinite(horizon))
            throw ParameterError("TimeGrid: horizon must be positive");
        if (n_steps < 1)
            throw ParameterError("TimeGrid: need at least one step");
        std::vector<double> nodes(n_steps + 1);
        for (std::size_t k = 0; k < n_steps; ++k)
            nodes[k] = static_cast<double>(k) * horizon / static_cast<double>(n_steps);
        nodes[n_steps] = horizon;
        return TimeGrid(std::move(nodes));
    }

    double horizon() const { return nodes_.back(); }
    std::size_t steps() const { return nodes_.size() - 1; }
    double node(std::size_t k) const { return nodes_.at(k); }
    double dt(std::size_t k) const { return nodes_.at(k + 1) - nodes_.at(k); }
    std::span<const double> nodes() const { return nodes_; }

    bool operator==(const TimeGrid& other) const { return nodes_ == other.nodes_; }

private:
    std::vector<double> nodes_;
};

/// Uniform grid factory matching the CLI surface.
inline TimeGrid build_grid(double horizon, std::size_t n_steps) {
    return TimeGrid::uniform(horizon, n_steps);
}

} // namespace nlkw

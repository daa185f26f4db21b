#pragma once

#include <cmath>
#include <cstdlib>
#include <limits>
#include <memory>
#include <vector>

#include "nlkw/path.hpp"
#include "nlkw/time_grid.hpp"

namespace testutil {

/// Distance between a and b measured in units of the last place of `scale`.
inline double ulps_of_scale(double a, double b, double scale) {
    const double ulp = std::nextafter(std::abs(scale), std::numeric_limits<double>::infinity()) -
                       std::abs(scale);
    if (ulp == 0.0) return std::abs(a - b) == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return std::abs(a - b) / ulp;
}

/// Hand-built two-node path with a chosen terminal value of W (rho = 1 so
/// w == w1 exactly).
inline nlkw::PathBundle path_with_terminal_w(double horizon, double w_terminal) {
    auto grid = std::make_shared<const nlkw::TimeGrid>(nlkw::TimeGrid::uniform(horizon, 1));
    return nlkw::make_bundle(grid, {0.0, w_terminal}, {0.0, 0.0}, 1.0);
}

/// Scoped environment variable override.
class ScopedEnv {
public:
    ScopedEnv(const char* name, const char* value) : name_(name) {
        if (const char* old = std::getenv(name)) {
            had_old_ = true;
            old_ = old;
        }
        setenv(name, value, 1);
    }
    ~ScopedEnv() {
        if (had_old_) setenv(name_, old_.c_str(), 1);
        else unsetenv(name_);
    }

private:
    const char* name_;
    bool had_old_ = false;
    std::string old_;
};

} // namespace testutil

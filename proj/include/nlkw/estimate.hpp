#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "nlkw/errors.hpp"

namespace nlkw {

/// Monte Carlo estimate: sample mean, standard error of the mean, sample count.
/// Every expectation the library reports is carried in this form.
struct MCEstimate {
    double mean = 0.0;
    double se = 0.0;
    std::size_t n = 0;
};

/// Joint standard error of two estimates treated as independent.
inline double joint_se(const MCEstimate& a, const MCEstimate& b) {
    return std::sqrt(a.se * a.se + b.se * b.se);
}

/// Fixed-order accumulator for vector-valued per-path samples.
///
/// Keeps running sum and sum of squares per component. Merging block
/// accumulators in block order reproduces the exact floating-point result of
/// a serial pass, which is what makes reductions independent of the worker
/// count (see par::reduce).
class Accumulator {
public:
    explicit Accumulator(std::size_t dim) : sum_(dim, 0.0), sumsq_(dim, 0.0) {}

    std::size_t dim() const { return sum_.size(); }
    std::size_t count() const { return n_; }

    void add(std::span<const double> sample) {
        if (sample.size() != sum_.size())
            throw ShapeError("Accumulator::add: sample dimension mismatch");
        for (std::size_t i = 0; i < sum_.size(); ++i) {
            sum_[i] += sample[i];
            sumsq_[i] += sample[i] * sample[i];
        }
        ++n_;
    }

    void merge(const Accumulator& other) {
        if (other.dim() != dim())
            throw ShapeError("Accumulator::merge: dimension mismatch");
        for (std::size_t i = 0; i < sum_.size(); ++i) {
            sum_[i] += other.sum_[i];
            sumsq_[i] += other.sumsq_[i];
        }
        n_ += other.n_;
    }

    double sum(std::size_t i) const { return sum_.at(i); }

    double mean(std::size_t i) const {
        return n_ > 0 ? sum_.at(i) / static_cast<double>(n_) : 0.0;
    }

    MCEstimate estimate(std::size_t i) const {
        MCEstimate e;
        e.n = n_;
        if (n_ == 0) return e;
        const double n = static_cast<double>(n_);
        e.mean = sum_.at(i) / n;
        if (n_ > 1) {
            double var = (sumsq_.at(i) - n * e.mean * e.mean) / (n - 1.0);
            if (var < 0.0) var = 0.0; // rounding
            e.se = std::sqrt(var / n);
        }
        return e;
    }

private:
    std::vector<double> sum_;
    std::vector<double> sumsq_;
    std::size_t n_ = 0;
};

} // namespace nlkw

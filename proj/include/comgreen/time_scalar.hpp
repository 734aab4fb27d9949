#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>
#include <utility>

#include "comgreen/errors.hpp"

namespace comgreen {

/// Closed interval of admissible times; unbounded by default.
struct Interval {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();

    bool contains(double t) const noexcept { return t >= lo && t <= hi; }
    bool interior(double t) const noexcept { return t > lo && t < hi; }
    bool bounded() const noexcept { return std::isfinite(lo) && std::isfinite(hi); }

    Interval intersect(const Interval& other) const noexcept {
        return {std::max(lo, other.lo), std::min(hi, other.hi)};
    }
};

/// A real coefficient that depends on time, optionally with its analytic derivative.
///
/// The description doubles as the canonical textual form of the coefficient; objects
/// built by the catalog and by the model parser keep it parseable so that they can be
/// printed and read back.
class TimeScalar {
public:
    using Function = std::function<double(double)>;

    TimeScalar() : TimeScalar(constant(0.0)) {}

    TimeScalar(Function value, Function derivative, std::string description, Interval domain = {})
        : value_(std::move(value)),
          derivative_(std::move(derivative)),
          description_(std::move(description)),
          domain_(domain) {
        if (!value_) throw Error("TimeScalar requires a value function");
    }

    static TimeScalar constant(double c, std::string description = {}) {
        if (description.empty()) description = format_constant(c);
        return TimeScalar([c](double) { return c; }, [](double) { return 0.0; }, std::move(description));
    }

    double operator()(double t) const {
        if (!domain_.contains(t)) throw DomainError("time " + std::to_string(t) + " outside domain of '" + description_ + "'");
        return value_(t);
    }

    bool has_analytic_derivative() const noexcept { return static_cast<bool>(derivative_); }

    double derivative(double t) const {
        if (derivative_) {
            if (!domain_.contains(t)) throw DomainError("time " + std::to_string(t) + " outside domain of '" + description_ + "'");
            return derivative_(t);
        }
        return numerical_derivative(t);
    }

    /// Central difference with step 1e-6*max(1,|t|) and one Richardson level.
    double numerical_derivative(double t) const {
        const double h = fd_step(t);
        if (!domain_.contains(t - h) || !domain_.contains(t + h))
            throw DomainError("time " + std::to_string(t) + " at domain boundary of '" + description_ +
                              "' without analytic derivative");
        auto central = [&](double step) { return (value_(t + step) - value_(t - step)) / (2.0 * step); };
        return (4.0 * central(0.5 * h) - central(h)) / 3.0;
    }

    static double fd_step(double t) noexcept { return 1e-6 * std::max(1.0, std::abs(t)); }

    const std::string& description() const noexcept { return description_; }
    const Interval& domain() const noexcept { return domain_; }

private:
    static std::string format_constant(double c) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", c);
        return buf;
    }

    Function value_;
    Function derivative_;
    std::string description_;
    Interval domain_;
};

}  // namespace comgreen

#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <nlohmann/json.hpp>
#include <span>
#include <string>

#include "comgreen/errors.hpp"
#include "comgreen/time_scalar.hpp"

namespace comgreen {

using cplx = std::complex<double>;

enum class BranchMode {
    first_window,  ///< amplitude defined by continuity from t -> 0+ up to the first caustic
    tracked,       ///< continue past caustics, adding the Maslov phase per crossing
};

inline const char* to_string(BranchMode b) { return b == BranchMode::tracked ? "tracked" : "first-window"; }

/// Propagator K(x, t; x0) frozen at one time.
using KernelSlice = std::function<cplx(std::span<const double> x, std::span<const double> x0)>;

/// Closed-form or derived propagator with its validity window and normalization.
struct KernelSpec {
    std::string system;
    int dim = 1;
    Interval window;  ///< open interval (lo, hi)
    cplx C{1.0, 0.0};
    bool C_derived = false;
    BranchMode branch = BranchMode::first_window;
    nlohmann::json params = nlohmann::json::object();

    /// Non-negative measure that vanishes at caustics, e.g. |sin(omega t)| or |t|.
    std::function<double(double)> caustic_distance;
    std::function<KernelSlice(double)> make_slice;
    /// Evaluator at complex time, present for kernels that admit analytic continuation.
    std::function<cplx(std::span<const double>, cplx, std::span<const double>)> continued;

    static constexpr double caustic_threshold = 1e-12;

    void check_time(double t) const {
        if (caustic_distance && caustic_distance(t) < caustic_threshold)
            throw CausticError("kernel '" + system + "' evaluated at singular time " + std::to_string(t), t);
        if (branch == BranchMode::first_window && !window.interior(t))
            throw DomainError("time " + std::to_string(t) + " outside validity window of kernel '" + system + "'");
    }

    KernelSlice at(double t) const {
        check_time(t);
        return make_slice(t);
    }
};

inline cplx kernel_evaluate(const KernelSpec& k, std::span<const double> x, double t, std::span<const double> x0) {
    if (static_cast<int>(x.size()) != k.dim || static_cast<int>(x0.size()) != k.dim)
        throw DimensionMismatch("kernel '" + k.system + "' expects points of dimension " + std::to_string(k.dim));
    return k.at(t)(x, x0);
}

inline nlohmann::json to_json(const KernelSpec& k) {
    auto bound = [](double v) -> nlohmann::json {
        if (std::isfinite(v)) return v;
        return nullptr;
    };
    return {{"system", k.system},
            {"dim", k.dim},
            {"window", {bound(k.window.lo), bound(k.window.hi)}},
            {"C", {{"re", k.C.real()}, {"im", k.C.imag()}}},
            {"C_derived", k.C_derived},
            {"branch", to_string(k.branch)},
            {"params", k.params}};
}

}  // namespace comgreen

#pragma once

// Constant-of-motion certification: i hbar dA/dt + [A, H] = 0 sampled over time, plus
// the mutual-commutation and completeness test for a set of such observables.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <nlohmann/json.hpp>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "comgreen/grid.hpp"
#include "comgreen/grid_operators.hpp"
#include "comgreen/phasespace.hpp"

namespace comgreen {

/// R(t) = dA/dt + [A, H]/(i hbar); A is conserved at t iff R(t) vanishes.
inline LinearForm conservation_residual(const LinearObservable& a, const QuadraticHamiltonian& h, double t) {
    return observable_time_derivative(a, t) + commutator_with_hamiltonian(a, h, t);
}

/// n Chebyshev points of the first kind mapped into (lo, hi).
inline std::vector<double> chebyshev_times(double lo, double hi, int n) {
    std::vector<double> t(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k)
        t[static_cast<std::size_t>(k)] = 0.5 * (lo + hi) - 0.5 * (hi - lo) * std::cos(std::numbers::pi * (k + 0.5) / n);
    return t;
}

/// Momentum / position coefficient blocks of a set of n observables, rows per observable.
struct CoefficientBlocks {
    Eigen::MatrixXd position;
    Eigen::MatrixXd momentum;
    Eigen::VectorXd gamma;
};

inline CoefficientBlocks coefficient_blocks(std::span<const LinearObservable> set, double t) {
    const int n = set.front().dim();
    CoefficientBlocks b{Eigen::MatrixXd(set.size(), n), Eigen::MatrixXd(set.size(), n), Eigen::VectorXd(set.size())};
    for (std::size_t k = 0; k < set.size(); ++k) {
        const LinearForm f = set[k].at(t);
        b.position.row(static_cast<Eigen::Index>(k)) = f.position_block().transpose();
        b.momentum.row(static_cast<Eigen::Index>(k)) = f.momentum_block().transpose();
        b.gamma(static_cast<Eigen::Index>(k)) = f.gamma;
    }
    return b;
}

/// sigma_max([A_x | A_p]) / sigma_min(A_p): scale-free measure of how far the momentum
/// block is from singular. Infinite when A_p is exactly singular.
inline double momentum_block_condition(const CoefficientBlocks& b) {
    Eigen::MatrixXd full(b.position.rows(), b.position.cols() + b.momentum.cols());
    full << b.position, b.momentum;
    const Eigen::JacobiSVD<Eigen::MatrixXd> sp(b.momentum);
    const Eigen::JacobiSVD<Eigen::MatrixXd> sf(full);
    const double smin = sp.singularValues().minCoeff();
    if (smin == 0.0) return std::numeric_limits<double>::infinity();
    return sf.singularValues().maxCoeff() / smin;
}

struct SetSample {
    double t = 0.0;
    double residual_max = 0.0;
    double pairwise_max = 0.0;
    double ap_cond = 0.0;
    bool complete = false;
};

struct CommutingSetReport {
    std::vector<std::string> observables;
    std::string hamiltonian;
    double tol = 0.0;
    double cond_threshold = 1e8;
    bool structural_ok = true;
    std::string structural_message;
    std::vector<SetSample> samples;
    bool pass = false;

    /// Sample times where the momentum block is (numerically) singular.
    std::vector<double> degenerate_times() const {
        std::vector<double> out;
        for (const auto& s : samples)
            if (!s.complete) out.push_back(s.t);
        return out;
    }

    nlohmann::json to_json() const {
        nlohmann::json js = nlohmann::json::array();
        for (const auto& s : samples) {
            js.push_back({{"t", s.t},
                          {"residual_max", s.residual_max},
                          {"pairwise_max", s.pairwise_max},
                          {"Ap_cond", std::isfinite(s.ap_cond) ? nlohmann::json(s.ap_cond) : nlohmann::json(nullptr)},
                          {"complete", s.complete}});
        }
        nlohmann::json j{{"observable", observables}, {"hamiltonian", hamiltonian}, {"tol", tol}, {"samples", js}, {"pass", pass}};
        if (!structural_ok) j["structural_failure"] = structural_message;
        return j;
    }
};

inline CommutingSetReport check_commuting_complete_set(std::span<const LinearObservable> set, const QuadraticHamiltonian& h,
                                                       std::span<const double> t_samples, double tol, double cond_threshold = 1e8) {
    CommutingSetReport r;
    r.hamiltonian = h.label();
    r.tol = tol;
    r.cond_threshold = cond_threshold;
    for (const auto& a : set) r.observables.push_back(a.label());
    if (t_samples.empty()) throw Error("commuting-set check needs at least one sample time");
    if (static_cast<int>(set.size()) != h.dim()) {
        r.structural_ok = false;
        r.structural_message = "set has " + std::to_string(set.size()) + " observables, configuration space has dimension " + std::to_string(h.dim());
        return r;
    }
    for (const auto& a : set) {
        if (a.dim() != h.dim()) {
            r.structural_ok = false;
            r.structural_message = "observable '" + a.label() + "' has dimension " + std::to_string(a.dim());
            return r;
        }
    }
    r.pass = true;
    for (double t : t_samples) {
        SetSample s;
        s.t = t;
        for (const auto& a : set) s.residual_max = std::max(s.residual_max, conservation_residual(a, h, t).max_abs());
        for (std::size_t i = 0; i < set.size(); ++i)
            for (std::size_t j = i + 1; j < set.size(); ++j) s.pairwise_max = std::max(s.pairwise_max, std::abs(symplectic_product(set[i], set[j], t)));
        s.ap_cond = momentum_block_condition(coefficient_blocks(set, t));
        s.complete = s.ap_cond <= cond_threshold;
        if (s.residual_max > tol || s.pairwise_max > tol || !s.complete) r.pass = false;
        r.samples.push_back(s);
    }
    return r;
}

// ---- eigenvalue constancy on Schroedinger-evolved grid states ----

struct ConstancyReport {
    std::vector<double> times;
    std::vector<double> lambda;
    double max_drift = 0.0;
    /// Estimated stencil error of lambda. For observables the coarse operator uses twice the
    /// difference step, so the fine error is about |fine - coarse|/3; for Hamiltonians the
    /// coarse stencil is lower order and |fine - coarse| bounds it.
    double discretization_bound = 0.0;
    bool grid_too_coarse = false;
};

/// `apply(psi, t, coarse)` applies the operator at time t; `coarse` selects a lower-accuracy
/// stencil used only for the discretization estimate.
using GridOperatorFn = std::function<GridState(const GridState&, double, bool)>;

/// Operator with the fine/coarse scaling of its error estimate: `coarse_ratio` is the
/// factor by which the coarse error exceeds the fine one (4 for a doubled step, 0 when unknown).
struct GridOperator {
    GridOperatorFn apply;
    double coarse_ratio = 0.0;
};

inline ConstancyReport eigenvalue_constancy_check(const GridOperator& op, const std::function<GridState(double)>& psi_t,
                                                  std::span<const double> t_samples, double tolerance = std::numeric_limits<double>::infinity()) {
    const double divisor = op.coarse_ratio > 1.0 ? op.coarse_ratio - 1.0 : 1.0;
    const GridOperatorFn& apply = op.apply;
    ConstancyReport r;
    for (double t : t_samples) {
        const GridState psi = psi_t(t);
        const double nn = inner(psi, psi).real();
        const double fine = inner(psi, apply(psi, t, false)).real() / nn;
        const double coarse = inner(psi, apply(psi, t, true)).real() / nn;
        r.times.push_back(t);
        r.lambda.push_back(fine);
        r.discretization_bound = std::max(r.discretization_bound, std::abs(fine - coarse) / divisor);
    }
    for (double l : r.lambda) r.max_drift = std::max(r.max_drift, std::abs(l - r.lambda.front()));
    r.grid_too_coarse = r.discretization_bound > tolerance;
    return r;
}

/// Grid operator for a linear observable: x multiplicative, p by central differences.
inline GridOperator grid_operator(const LinearObservable& a, double hbar) {
    return {[a, hbar](const GridState& psi, double t, bool coarse) { return apply_linear(a.at(t), psi, hbar, coarse ? 2 : 1); }, 4.0};
}

/// Grid operator for a Hamiltonian, matching the discretization used by `evolve`.
inline GridOperator grid_operator(const QuadraticHamiltonian& h, double hbar, Stencil stencil = Stencil::compact_fourth_order) {
    return {[h, hbar, stencil](const GridState& psi, double t, bool coarse) {
                return GridHamiltonian(h, t, psi.axes(), hbar, coarse ? Stencil::second_order : stencil).apply(psi);
            },
            0.0};
}

}  // namespace comgreen

#pragma once

// Numerical oracles independent of the phase-space construction: implicit grid
// evolution, kernel quadrature, finite-difference PDE residuals and imaginary-time
// spectral extraction.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "comgreen/errors.hpp"
#include "comgreen/grid.hpp"
#include "comgreen/grid_operators.hpp"
#include "comgreen/kernel.hpp"
#include "comgreen/parallel.hpp"
#include "comgreen/phasespace.hpp"

namespace comgreen {

// ---- grid evolution ----

struct EvolveOptions {
    double hbar = 1.0;
    Stencil stencil = Stencil::compact_fourth_order;
    /// Relative norm drift above which the run is rejected.
    double norm_tol = 1e-6;
};

struct EvolveResult {
    GridState state;
    double norm_drift = 0.0;
    std::size_t steps = 0;
    std::vector<std::string> warnings;
};

/// Crank-Nicolson evolution to t_final with coefficients sampled at step midpoints. In 2D
/// the step is a palindromic Strang composition of line sweeps, so it stays second order.
inline EvolveResult evolve(const QuadraticHamiltonian& h, const GridState& psi0, double t_final, double dt, const EvolveOptions& opt = {}) {
    if (h.dim() != psi0.dim()) throw DimensionMismatch("hamiltonian and grid differ in dimension");
    if (!(dt > 0.0)) throw GridError("time step must be positive");
    const double t0 = psi0.time();
    const double span = t_final - t0;
    if (span < 0.0) throw GridError("t_final precedes the initial time");
    const auto steps = static_cast<std::size_t>(std::ceil(span / dt - 1e-9));
    const double step = steps ? span / static_cast<double>(steps) : 0.0;

    EvolveResult r{psi0, 0.0, steps, {}};
    const double n0 = norm(psi0);
    bool warned = false;
    for (std::size_t s = 0; s < steps; ++s) {
        const double tm = t0 + (static_cast<double>(s) + 0.5) * step;
        const GridHamiltonian gh(h, tm, psi0.axes(), opt.hbar, opt.stencil);
        if (!warned && step * gh.spectral_scale() / opt.hbar > std::numbers::pi) {
            r.warnings.push_back("time step " + std::to_string(step) + " under-resolves the grid energy scale " + std::to_string(gh.spectral_scale()));
            warned = true;
        }
        if (gh.dim() == 1) {
            gh.sweep(r.state, 0, false, step);
        } else if (!gh.has_cross_terms()) {
            gh.sweep(r.state, 0, false, 0.5 * step);
            gh.sweep(r.state, 1, false, step);
            gh.sweep(r.state, 0, false, 0.5 * step);
        } else {
            gh.sweep(r.state, 0, false, 0.5 * step);
            gh.sweep(r.state, 1, false, 0.5 * step);
            gh.sweep(r.state, 0, true, 0.5 * step);
            gh.sweep(r.state, 1, true, step);
            gh.sweep(r.state, 0, true, 0.5 * step);
            gh.sweep(r.state, 1, false, 0.5 * step);
            gh.sweep(r.state, 0, false, 0.5 * step);
        }
    }
    r.state.set_time(t0 + span);
    r.norm_drift = n0 > 0.0 ? std::abs(norm(r.state) - n0) / n0 : 0.0;
    if (r.norm_drift > opt.norm_tol)
        throw ConvergenceError("norm drift " + std::to_string(r.norm_drift) + " exceeds " + std::to_string(opt.norm_tol) + "; reduce dt");
    return r;
}

// ---- kernel quadrature ----

struct ConvolveOptions {
    /// Fraction of each axis at either edge where psi0 must be negligible.
    double support_margin = 0.1;
    double support_tol = 1e-12;
};

/// Largest |psi| within the edge margin relative to max |psi|.
inline double edge_fraction(const GridState& psi, double margin) {
    const double peak = max_abs(psi);
    if (peak == 0.0) return 0.0;
    double edge = 0.0;
    std::array<double, 2> x{};
    for (std::size_t i = 0; i < psi.size(); ++i) {
        psi.point(i, x);
        bool near = false;
        for (int a = 0; a < psi.dim(); ++a) {
            const Axis& ax = psi.axis(a);
            const double band = margin * (ax.max - ax.min);
            near = near || x[static_cast<std::size_t>(a)] < ax.min + band || x[static_cast<std::size_t>(a)] > ax.max - band;
        }
        if (near) edge = std::max(edge, std::abs(psi[i]));
    }
    return edge / peak;
}

/// psi(x, t) = sum_j weight_j K(x, t; x_j) psi0(x_j) on the grid of psi0.
inline GridState kernel_convolve(const KernelSpec& k, const GridState& psi0, double t, const ConvolveOptions& opt = {}) {
    if (k.dim != psi0.dim()) throw DimensionMismatch("kernel and grid differ in dimension");
    const KernelSlice slice = k.at(t - psi0.time());
    const double edge = edge_fraction(psi0, opt.support_margin);
    if (edge > opt.support_tol)
        {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3g", edge);
        throw GridError(std::string("initial state is not supported inside the grid: edge amplitude ratio ") + buf);
    }

    // sources with non-negligible weight
    const double peak = max_abs(psi0);
    std::vector<std::array<double, 2>> src;
    std::vector<cplx> amp;
    std::array<double, 2> x{};
    for (std::size_t j = 0; j < psi0.size(); ++j) {
        if (std::abs(psi0[j]) <= 1e-17 * peak) continue;
        psi0.point(j, x);
        src.push_back(x);
        amp.push_back(psi0.weight(j) * psi0[j]);
    }
    GridState out(psi0.axes(), t);
    const auto dim = static_cast<std::size_t>(psi0.dim());
    parallel_for(out.size(), [&](std::size_t i) {
        std::array<double, 2> xi{};
        out.point(i, xi);
        cplx s = 0.0;
        for (std::size_t j = 0; j < src.size(); ++j)
            s += slice(std::span<const double>(xi.data(), dim), std::span<const double>(src[j].data(), dim)) * amp[j];
        out[i] = s;
    });
    return out;
}

// ---- finite-difference Schroedinger residual ----

struct PdeResidual {
    double max_residual = 0.0;  ///< max |i hbar dK/dt - H K|
    double scale = 0.0;         ///< max |i hbar dK/dt|
    double relative() const { return scale > 0.0 ? max_residual / scale : max_residual; }
};

/// Evaluates i hbar dK/dt - H K at each point with central differences (space step h,
/// time step dt_fd). H acts on x with Weyl-ordered cross terms.
inline PdeResidual pde_residual(const KernelSpec& k, const QuadraticHamiltonian& h, double t, std::span<const Eigen::VectorXd> points,
                                const Eigen::VectorXd& x0, double step, double dt_fd, double hbar = 1.0) {
    const int n = k.dim;
    if (h.dim() != n || x0.size() != n) throw DimensionMismatch("kernel, hamiltonian and source point differ in dimension");
    const KernelSlice now = k.at(t), later = k.at(t + dt_fd), earlier = k.at(t - dt_fd);
    const Eigen::MatrixXd M = h.matrix(t);
    const Eigen::VectorXd v = h.vector(t);
    const double c = h.scalar_at(t);
    const cplx i{0.0, 1.0};
    auto eval = [&](const KernelSlice& s, const Eigen::VectorXd& x) {
        return s(std::span<const double>(x.data(), static_cast<std::size_t>(n)), std::span<const double>(x0.data(), static_cast<std::size_t>(n)));
    };

    PdeResidual r;
    for (const auto& x : points) {
        if (x.size() != n) throw DimensionMismatch("sample point has wrong dimension");
        const cplx k0 = eval(now, x);
        const cplx dt_term = i * hbar * (eval(later, x) - eval(earlier, x)) / (2.0 * dt_fd);
        auto shifted = [&](int a, double da, int b = -1, double db = 0.0) {
            Eigen::VectorXd y = x;
            y(a) += da;
            if (b >= 0) y(b) += db;
            return eval(now, y);
        };
        Eigen::VectorXcd grad(n);
        Eigen::MatrixXcd hess(n, n);
        for (int a = 0; a < n; ++a) {
            grad(a) = (shifted(a, step) - shifted(a, -step)) / (2.0 * step);
            hess(a, a) = (shifted(a, step) - 2.0 * k0 + shifted(a, -step)) / (step * step);
            for (int b = 0; b < a; ++b)
                hess(a, b) = hess(b, a) =
                    (shifted(a, step, b, step) - shifted(a, step, b, -step) - shifted(a, -step, b, step) + shifted(a, -step, b, -step)) / (4.0 * step * step);
        }
        cplx hk = c * k0;
        for (int a = 0; a < n; ++a) {
            hk += v(a) * x(a) * k0 - i * hbar * v(n + a) * grad(a);
            for (int b = 0; b < n; ++b) {
                hk += 0.5 * M(a, b) * x(a) * x(b) * k0;
                hk += -0.5 * hbar * hbar * M(n + a, n + b) * hess(a, b);
                // Weyl (x_a p_b + p_b x_a)/2 = -i hbar (x_a d_b + delta_ab/2)
                hk += M(a, n + b) * (-i * hbar) * (x(a) * grad(b) + (a == b ? 0.5 * k0 : cplx{}));
            }
        }
        r.max_residual = std::max(r.max_residual, std::abs(dt_term - hk));
        r.scale = std::max(r.scale, std::abs(dt_term));
    }
    return r;
}

// ---- imaginary-time spectral extraction ----

enum class Parity { even, odd };

struct SpectralOptions {
    double hbar = 1.0;
    Parity parity = Parity::even;
    /// Probe point x = x0 for the odd sector.
    double probe = 1.0;
    int samples = 64;
    double spread_tol = 1e-4;
    /// Axis on which the ground profile is sampled (1D kernels only); unset skips it.
    std::vector<Axis> profile_axes;
};

struct SpectralEstimate {
    double energy = 0.0;
    double spread = 0.0;          ///< relative disagreement of the two subrange fits
    bool continuous = false;      ///< decay is a power law, not exponential
    double tau_lo = 0.0, tau_hi = 0.0;
    std::vector<GridState> profile;  ///< zero or one normalized profile
};

namespace detail {

inline double lsq_slope(std::span<const double> x, std::span<const double> y) {
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxy += (x[k] - mx) * (y[k] - my);
        sxx += (x[k] - mx) * (x[k] - mx);
    }
    return sxy / sxx;
}

}  // namespace detail

/// E from the decay K(x, -i tau; x0) ~ exp(-E tau / hbar) over the upper half of
/// [tau_lo, tau_hi]; the two quarter ranges must agree to spread_tol.
inline SpectralEstimate imaginary_time_ground_state(const KernelSpec& k, double tau_lo, double tau_hi, const SpectralOptions& opt = {}) {
    if (!k.continued) throw Error("kernel '" + k.system + "' has no analytic continuation");
    if (!(tau_hi > tau_lo && tau_lo > 0.0)) throw DomainError("imaginary-time range must satisfy 0 < tau_lo < tau_hi");
    const int n = k.dim;
    const cplx mi{0.0, -1.0};
    std::vector<double> probe(static_cast<std::size_t>(n), 0.0), probe_neg(static_cast<std::size_t>(n), 0.0);
    if (opt.parity == Parity::odd) {
        probe[0] = opt.probe;
        probe_neg[0] = -opt.probe;
    }
    auto amplitude = [&](double tau) {
        const cplx t = mi * tau;
        cplx v = k.continued(probe, t, probe);
        if (opt.parity == Parity::odd) v -= k.continued(probe, t, probe_neg);
        return std::abs(v);
    };
    auto fit = [&](double a, double b, double& center) {
        std::vector<double> taus, logs;
        for (int s = 0; s < opt.samples; ++s) {
            const double tau = a + (b - a) * s / (opt.samples - 1);
            const double amp = amplitude(tau);
            if (!(amp > 0.0) || !std::isfinite(amp)) throw ConvergenceError("kernel amplitude underflows at tau=" + std::to_string(tau));
            taus.push_back(tau);
            logs.push_back(std::log(amp));
        }
        center = 0.5 * (a + b);
        return -opt.hbar * detail::lsq_slope(taus, logs);
    };

    SpectralEstimate r;
    r.tau_lo = tau_lo;
    r.tau_hi = tau_hi;
    const double mid = 0.5 * (tau_lo + tau_hi), q3 = 0.5 * (mid + tau_hi);
    double c_all = 0.0, c_a = 0.0, c_b = 0.0;
    r.energy = fit(mid, tau_hi, c_all);
    const double ea = fit(mid, q3, c_a), eb = fit(q3, tau_hi, c_b);
    r.spread = std::abs(ea - eb) / std::max(std::abs(r.energy), 1e-300);
    if (r.spread > opt.spread_tol) {
        // power-law decay: E tau stays constant across subranges
        const double pa = ea * c_a, pb = eb * c_b;
        if (std::abs(pa - pb) <= 1e-2 * std::abs(pa)) {
            r.continuous = true;
            r.energy = 0.0;
            return r;
        }
        throw ConvergenceError("imaginary-time slope did not converge (relative spread " + std::to_string(r.spread) + ")");
    }

    if (!opt.profile_axes.empty()) {
        if (n != 1 || opt.profile_axes.size() != 1) throw DimensionMismatch("ground profile is sampled for 1D kernels only");
        const cplx t = mi * tau_hi;
        GridState prof = GridState::sample(
            opt.profile_axes,
            [&](std::span<const double> x) {
                cplx v = k.continued(x, t, probe);
                if (opt.parity == Parity::odd) v -= k.continued(x, t, probe_neg);
                return v;
            });
        // fix the global phase at the peak and normalize
        std::size_t peak = 0;
        for (std::size_t j = 0; j < prof.size(); ++j)
            if (std::abs(prof[j]) > std::abs(prof[peak])) peak = j;
        const cplx ph = std::abs(prof[peak]) > 0.0 ? std::conj(prof[peak]) / std::abs(prof[peak]) : cplx{1.0};
        const double nn = norm(prof);
        for (auto& v : prof.values()) v *= ph / nn;
        r.profile.push_back(std::move(prof));
    }
    return r;
}

}  // namespace comgreen

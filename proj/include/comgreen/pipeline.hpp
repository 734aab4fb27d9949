#pragma once

// From a complete set of commuting constants of motion to a propagator:
// common eigenfunction (quadratic phase), the scalar mu(t) left over by the
// Schroedinger operator, its phase factor, and normalization by small-t matching.

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <limits>
#include <nlohmann/json.hpp>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "comgreen/conservation.hpp"
#include "comgreen/errors.hpp"
#include "comgreen/kernel.hpp"
#include "comgreen/phasespace.hpp"

namespace comgreen {

/// psi(x) = N exp[(i/hbar)(x^T S x / 2 + w^T x)]
struct QuadraticPhaseState {
    int dim = 1;
    Eigen::MatrixXcd S;
    Eigen::VectorXcd w;
    cplx N{1.0, 0.0};
    double t = 0.0;
    Eigen::VectorXd lambda;

    cplx operator()(std::span<const double> x, double hbar = 1.0) const {
        Eigen::VectorXcd xv(dim);
        for (int a = 0; a < dim; ++a) xv(a) = x[static_cast<std::size_t>(a)];
        const cplx phase = 0.5 * xv.dot(S * xv) + xv.dot(w);  // dot() conjugates its left argument, x is real
        return N * std::exp(cplx(0.0, 1.0) / hbar * phase);
    }

    double asymmetry() const { return (S - S.transpose()).cwiseAbs().maxCoeff(); }
};

/// S, w of a state family at one time, with their time derivatives.
struct PhaseSnapshot {
    Eigen::MatrixXcd S, Sdot;
    Eigen::VectorXcd w, wdot;
};

using PhaseFamily = std::function<PhaseSnapshot(double)>;

namespace detail {

struct SetBlocks {
    Eigen::MatrixXd Ax, Ap, Ax_dot, Ap_dot;
    Eigen::VectorXd gamma, gamma_dot;
};

inline SetBlocks set_blocks(std::span<const LinearObservable> set, double t, bool with_derivatives) {
    if (set.empty()) throw DimensionMismatch("empty observable set");
    const int n = set.front().dim();
    if (static_cast<int>(set.size()) != n)
        throw DimensionMismatch("a complete set needs " + std::to_string(n) + " observables, got " + std::to_string(set.size()));
    SetBlocks b;
    const auto blocks = coefficient_blocks(set, t);
    b.Ax = blocks.position;
    b.Ap = blocks.momentum;
    b.gamma = blocks.gamma;
    if (with_derivatives) {
        b.Ax_dot.resize(n, n);
        b.Ap_dot.resize(n, n);
        b.gamma_dot.resize(n);
        for (int k = 0; k < n; ++k) {
            const LinearForm d = set[static_cast<std::size_t>(k)].derivative_at(t);
            b.Ax_dot.row(k) = d.position_block().transpose();
            b.Ap_dot.row(k) = d.momentum_block().transpose();
            b.gamma_dot(k) = d.gamma;
        }
    }
    return b;
}

inline void require_invertible(const SetBlocks& b, double t, double cond_threshold) {
    const double cond = momentum_block_condition({b.Ax, b.Ap, b.gamma});
    if (!(cond <= cond_threshold))
        throw CausticError("momentum block of the constant-of-motion set is singular at t=" + std::to_string(t) +
                               " (condition " + std::to_string(cond) + ")",
                           t);
}

}  // namespace detail

/// Common eigenfunction of a complete commuting set with eigenvalues lambda:
/// S = -A_p^{-1} A_x, w = A_p^{-1}(lambda - gamma).
inline QuadraticPhaseState eigensolve(std::span<const LinearObservable> set, const Eigen::VectorXd& lambda, double t,
                                      double cond_threshold = 1e8) {
    const auto b = detail::set_blocks(set, t, false);
    if (lambda.size() != b.Ap.rows()) throw DimensionMismatch("eigenvalue vector has wrong length");
    detail::require_invertible(b, t, cond_threshold);
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(b.Ap);
    QuadraticPhaseState s;
    s.dim = static_cast<int>(b.Ap.rows());
    s.S = (-lu.solve(b.Ax)).cast<cplx>();
    s.w = lu.solve(lambda - b.gamma).cast<cplx>();
    s.t = t;
    s.lambda = lambda;
    return s;
}

/// A psi = (x_coeff^T x + scalar) psi in the quadratic-phase calculus, where p psi = (S x + w) psi.
struct PhaseAction {
    Eigen::VectorXcd x_coeff;
    cplx scalar;
};

inline PhaseAction apply_in_phase_calculus(const LinearForm& a, const QuadraticPhaseState& s) {
    if (a.dim() != s.dim) throw DimensionMismatch("observable and state differ in dimension");
    // only the symmetric part of S enters psi
    const Eigen::MatrixXcd S = 0.5 * (s.S + s.S.transpose());
    const Eigen::VectorXcd ap = a.momentum_block().cast<cplx>();
    return {a.position_block().cast<cplx>() + S * ap, ap.dot(s.w) + a.gamma};
}

/// Eigenstate family of a set along t; derivatives from the differentiated inverse
/// S' = -A_p^{-1}(A_x' + A_p' S), w' = A_p^{-1}(-gamma' - A_p' w).
inline PhaseFamily eigen_family(std::vector<LinearObservable> set, Eigen::VectorXd lambda, double cond_threshold = 1e8) {
    return [set = std::move(set), lambda = std::move(lambda), cond_threshold](double t) {
        const auto b = detail::set_blocks(set, t, true);
        detail::require_invertible(b, t, cond_threshold);
        const Eigen::PartialPivLU<Eigen::MatrixXd> lu(b.Ap);
        const Eigen::MatrixXd S = -lu.solve(b.Ax);
        const Eigen::VectorXd w = lu.solve(lambda - b.gamma);
        PhaseSnapshot snap;
        snap.S = S.cast<cplx>();
        snap.w = w.cast<cplx>();
        snap.Sdot = (-lu.solve(b.Ax_dot + b.Ap_dot * S)).cast<cplx>();
        snap.wdot = lu.solve(-b.gamma_dot - b.Ap_dot * w).cast<cplx>();
        return snap;
    };
}

/// Family given only by (S, w) as functions of t; derivatives by Richardson central differences.
inline PhaseFamily numeric_family(std::function<std::pair<Eigen::MatrixXcd, Eigen::VectorXcd>(double)> sw) {
    return [sw = std::move(sw)](double t) {
        const double h = TimeScalar::fd_step(t) * 100.0;
        auto central = [&](double step) {
            const auto [sp, wp] = sw(t + step);
            const auto [sm, wm] = sw(t - step);
            return std::make_pair(Eigen::MatrixXcd((sp - sm) / (2.0 * step)), Eigen::VectorXcd((wp - wm) / (2.0 * step)));
        };
        const auto [s1, w1] = central(h);
        const auto [s2, w2] = central(0.5 * h);
        const auto [S, w] = sw(t);
        return PhaseSnapshot{S, (4.0 * s2 - s1) / 3.0, w, (4.0 * w2 - w1) / 3.0};
    };
}

/// (i hbar d/dt - H) psi = (x^T Q x + L^T x + mu) psi for psi = exp[(i/hbar)(x^T S x/2 + w^T x)].
struct ResidualCoefficients {
    Eigen::MatrixXcd Q;
    Eigen::VectorXcd L;
    cplx mu;

    double max_QL() const { return std::max(Q.cwiseAbs().maxCoeff(), L.cwiseAbs().maxCoeff()); }
};

inline ResidualCoefficients schrodinger_residual_coefficients(const PhaseSnapshot& s, const QuadraticHamiltonian& h, double t, double hbar = 1.0) {
    const int n = h.dim();
    if (s.S.rows() != n || s.w.size() != n) throw DimensionMismatch("state family and hamiltonian differ in dimension");
    const Eigen::MatrixXcd M = h.matrix(t).cast<cplx>();
    const Eigen::VectorXcd v = h.vector(t).cast<cplx>();
    const Eigen::MatrixXcd Mxx = M.topLeftCorner(n, n), Mxp = M.topRightCorner(n, n), Mpp = M.bottomRightCorner(n, n);
    const Eigen::VectorXcd vx = v.head(n), vp = v.tail(n);
    const Eigen::MatrixXcd S = 0.5 * (s.S + s.S.transpose());
    const Eigen::MatrixXcd Sdot = 0.5 * (s.Sdot + s.Sdot.transpose());
    const cplx i{0.0, 1.0};

    ResidualCoefficients r;
    const Eigen::MatrixXcd q = -0.5 * Sdot - (0.5 * Mxx + Mxp * S + 0.5 * S.transpose() * Mpp * S);
    r.Q = 0.5 * (q + q.transpose());
    r.L = -s.wdot - (vx + Mxp * s.w + S.transpose() * Mpp * s.w + S.transpose() * vp);
    r.mu = 0.5 * i * hbar * (Mxp.trace() + (Mpp * S).trace()) - 0.5 * (s.w.transpose() * Mpp * s.w).value() - (vp.transpose() * s.w).value() -
           h.scalar_at(t);
    return r;
}

inline ResidualCoefficients schrodinger_residual_coefficients(const PhaseFamily& family, const QuadraticHamiltonian& h, double t, double hbar = 1.0) {
    return schrodinger_residual_coefficients(family(t), h, t, hbar);
}

namespace detail {

/// Breakpoints from a to b refined geometrically toward the finite ends of `singular`.
inline std::vector<double> graded_breakpoints(double a, double b, const Interval& singular) {
    std::vector<double> pts{a};
    double s = a;
    while (s != b) {
        double d = std::numeric_limits<double>::infinity();
        if (std::isfinite(singular.lo)) d = std::min(d, s - singular.lo);
        if (std::isfinite(singular.hi)) d = std::min(d, singular.hi - s);
        const double step = 0.5 * d;
        const double next = b > s ? std::min(b, s + step) : std::max(b, s - step);
        if (next == s) throw QuadratureError("integration interval touches a singular endpoint");
        pts.push_back(next);
        s = next;
        if (pts.size() > 4096) throw QuadratureError("too many quadrature pieces");
    }
    return pts;
}

/// Integral of f over [a, b] by Gauss-Kronrod 15 on graded pieces. Each piece is also
/// integrated as two halves; the difference bounds the error of the unsplit rule and the
/// split sum is returned.
template <typename F>
cplx integrate(F&& f, double a, double b, const Interval& singular, double rel_tol = 1e-10) {
    using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
    if (a == b) return 0.0;
    const auto pts = graded_breakpoints(a, b, singular);
    cplx total = 0.0;
    double err_total = 0.0, mag = 0.0;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        const double lo = pts[k], hi = pts[k + 1], mid = 0.5 * (lo + hi);
        double l1 = 0.0, l1a = 0.0, l1b = 0.0;
        const cplx whole = GK::integrate(f, lo, hi, 0, 0.0, nullptr, &l1);
        const cplx split = GK::integrate(f, lo, mid, 0, 0.0, nullptr, &l1a) + GK::integrate(f, mid, hi, 0, 0.0, nullptr, &l1b);
        total += split;
        err_total += std::abs(whole - split);
        mag += l1a + l1b;
    }
    if (!std::isfinite(total.real()) || !std::isfinite(total.imag()))
        throw QuadratureError("non-finite integrand between t=" + std::to_string(a) + " and t=" + std::to_string(b));
    // Boost's own estimate (the Kronrod-Gauss difference) is dominated by node roundoff on
    // the tiny pieces next to a singular end, hence the halving test.
    if (err_total > rel_tol * mag && err_total > 1e-13) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "quadrature did not converge on [%g, %g]: error estimate %.3g for magnitude %.3g", a, b, err_total, mag);
        throw QuadratureError(buf);
    }
    return total;
}

}  // namespace detail

/// F(t)/F(t_ref) = exp[(i/hbar) int_{t_ref}^t mu(s) ds]. Both times must lie inside the
/// open `window`, whose finite ends are treated as singular points of mu.
inline cplx integrate_phase_factor(const std::function<cplx(double)>& mu, double t_ref, double t, double hbar = 1.0, Interval window = {}) {
    if (!window.interior(t_ref) || !window.interior(t))
        throw CausticError("phase-factor interval [" + std::to_string(t_ref) + ", " + std::to_string(t) + "] leaves the singularity-free window",
                           window.interior(t) ? t_ref : t);
    const cplx integral = detail::integrate(
        [&](double s) {
            const cplx v = mu(s);
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw CausticError("mu is singular at t=" + std::to_string(s), s);
            return v;
        },
        t_ref, t, window);
    return std::exp(cplx(0.0, 1.0) / hbar * integral);
}

// ---- kernel assembly ----

struct AssembleOptions {
    double hbar = 1.0;
    std::string system = "derived";
    nlohmann::json params = nlohmann::json::object();
    /// Shape of the amplitude prefactor used to report C (C = lim K(0,t;0)/gauge(t));
    /// defaults to t^{-n/2}.
    std::function<cplx(double)> gauge;
    /// Matching time; 0 selects 1e-3 * min(1, window width).
    double t_match = 0.0;
    /// Relative mismatch between successive matching estimates that is tolerated.
    double match_tol = 1e-4;
};

namespace detail {

/// mu at eigenvalues lambda, as a polynomial mu0 + mu1^T lambda + lambda^T mu2 lambda.
struct MuPolynomial {
    cplx mu0;
    Eigen::VectorXcd mu1;
    Eigen::MatrixXcd mu2;
};

struct KernelFrame {
    Eigen::MatrixXd S, B;
    Eigen::VectorXd w0;
};

inline KernelFrame kernel_frame(std::span<const LinearObservable> set, double t) {
    const auto b = set_blocks(set, t, false);
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(b.Ap);
    const auto n = b.Ap.rows();
    return {-lu.solve(b.Ax), lu.solve(Eigen::MatrixXd::Identity(n, n)), -lu.solve(b.gamma)};
}

inline MuPolynomial mu_polynomial(std::span<const LinearObservable> set, const QuadraticHamiltonian& h, double t, double hbar) {
    const int n = h.dim();
    const KernelFrame f = kernel_frame(set, t);
    const Eigen::MatrixXd M = h.matrix(t);
    const Eigen::VectorXd v = h.vector(t);
    const Eigen::MatrixXd Mxp = M.topRightCorner(n, n), Mpp = M.bottomRightCorner(n, n);
    const Eigen::VectorXd vp = v.tail(n);
    const Eigen::MatrixXd S = 0.5 * (f.S + f.S.transpose());
    MuPolynomial p;
    p.mu0 = cplx(-0.5 * f.w0.dot(Mpp * f.w0) - vp.dot(f.w0) - h.scalar_at(t), 0.5 * hbar * (Mxp.trace() + (Mpp * S).trace()));
    p.mu1 = (-f.B.transpose() * Mpp * f.w0 - f.B.transpose() * vp).cast<cplx>();
    const Eigen::MatrixXd m2 = -0.5 * f.B.transpose() * Mpp * f.B;
    p.mu2 = (0.5 * (m2 + m2.transpose())).cast<cplx>();
    return p;
}

/// Integral of the mu polynomial's coefficients from t_ref to t.
inline MuPolynomial integrate_mu(std::span<const LinearObservable> set, const QuadraticHamiltonian& h, double t_ref, double t, double hbar,
                                 const Interval& window) {
    const int n = h.dim();
    MuPolynomial out{0.0, Eigen::VectorXcd::Zero(n), Eigen::MatrixXcd::Zero(n, n)};
    auto component = [&](auto pick) {
        return integrate([&](double s) -> cplx { return pick(mu_polynomial(set, h, s, hbar)); }, t_ref, t, window);
    };
    out.mu0 = component([](const MuPolynomial& p) { return p.mu0; });
    for (int a = 0; a < n; ++a) {
        out.mu1(a) = component([a](const MuPolynomial& p) { return p.mu1(a); });
        for (int b = a; b < n; ++b) out.mu2(a, b) = out.mu2(b, a) = component([a, b](const MuPolynomial& p) { return p.mu2(a, b); });
    }
    return out;
}

/// Neville extrapolation of samples y(t_k) to t = 0.
template <typename T>
T neville_at_zero(const std::vector<double>& t, std::vector<T> y) {
    const std::size_t n = t.size();
    for (std::size_t level = 1; level < n; ++level)
        for (std::size_t k = 0; k + level < n; ++k) y[k] = (t[k + level] * y[k] - t[k] * y[k + 1]) / (t[k + level] - t[k]);
    return y[0];
}

}  // namespace detail

/// Green function of H built from the initial-position constants of motion `set`.
///
/// K(x, t; x0) = exp(G(x0)) exp[(i/hbar)(x^T S x/2 + w^T x + int_{t_ref}^t mu)], with w, mu
/// evaluated at eigenvalues x0. G is quadratic in x0 and fixed by requiring K to approach
/// the free kernel as t -> 0+; it is extrapolated from matching times t_match 2^{-k}.
inline KernelSpec assemble_kernel(std::vector<LinearObservable> set, QuadraticHamiltonian h, Interval window, AssembleOptions opt = {}) {
    using detail::MuPolynomial;
    const int n = h.dim();
    if (static_cast<int>(set.size()) != n) throw DimensionMismatch("kernel assembly needs one observable per dimension");
    if (window.lo != 0.0 || !(window.hi > 0.0)) throw DomainError("kernel window must start at t = 0");
    const double hbar = opt.hbar;
    const double width = window.hi - window.lo;
    const double t_ref = window.bounded() ? 0.5 * (window.lo + window.hi) : 1.0;
    const double t_match = opt.t_match > 0.0 ? opt.t_match : 1e-3 * std::min(1.0, width);
    const cplx i{0.0, 1.0};

    // the set must be a constant-of-motion set: Q and L vanish along the family
    for (const Eigen::VectorXd& lambda : {Eigen::VectorXd(Eigen::VectorXd::Zero(n)), Eigen::VectorXd(Eigen::VectorXd::Ones(n))}) {
        const auto fam = eigen_family(set, lambda);
        for (double t : {t_ref, t_match, 0.5 * (t_ref + t_match)}) {
            const auto r = schrodinger_residual_coefficients(fam, h, t, hbar);
            const double scale = std::max(1.0, fam(t).S.cwiseAbs().maxCoeff());
            if (r.max_QL() > 1e-6 * scale)
                throw Error("observable set does not generate a solution family of hamiltonian '" + h.label() + "' (residual " +
                            std::to_string(r.max_QL()) + " at t=" + std::to_string(t) + ")");
        }
    }

    // free kernel with mass matrix M_pp(0)^{-1}
    const Eigen::MatrixXd mpp0 = h.matrix(window.lo).bottomRightCorner(n, n);
    const Eigen::MatrixXd mass = mpp0.inverse();
    const Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(mass.cast<cplx>());
    cplx log_det_mass = 0.0;
    for (int a = 0; a < n; ++a) log_det_mass += std::log(es.eigenvalues()(a));

    auto g_at = [&](double t) {
        const MuPolynomial I = detail::integrate_mu(set, h, t_ref, t, hbar, window);
        MuPolynomial g;
        g.mu0 = 0.5 * log_det_mass - 0.5 * n * std::log(2.0 * std::numbers::pi * i * hbar * t) - i / hbar * I.mu0;
        g.mu1 = -i / hbar * I.mu1;
        g.mu2 = (i / (2.0 * hbar * t)) * mass.cast<cplx>() - i / hbar * I.mu2;
        return std::make_pair(g, I);
    };

    std::vector<double> ts;
    std::vector<MuPolynomial> gs;
    std::vector<cplx> c_samples;
    std::function<cplx(double)> gauge = opt.gauge ? opt.gauge : [n](double t) { return cplx(std::pow(t, -0.5 * n)); };
    for (int k = 0; k < 4; ++k) {
        const double t = t_match * std::ldexp(1.0, -k);
        auto [g, I] = g_at(t);
        ts.push_back(t);
        gs.push_back(g);
        c_samples.push_back(I.mu0);
    }
    auto extrapolate = [&](std::size_t first, std::size_t count) {
        std::vector<double> tt(ts.begin() + static_cast<long>(first), ts.begin() + static_cast<long>(first + count));
        std::vector<cplx> y0;
        std::vector<Eigen::VectorXcd> y1;
        std::vector<Eigen::MatrixXcd> y2;
        for (std::size_t k = first; k < first + count; ++k) {
            y0.push_back(gs[k].mu0);
            y1.push_back(gs[k].mu1);
            y2.push_back(gs[k].mu2);
        }
        return MuPolynomial{detail::neville_at_zero(tt, y0), detail::neville_at_zero(tt, y1), detail::neville_at_zero(tt, y2)};
    };
    const MuPolynomial G = extrapolate(0, 4);
    const MuPolynomial G_coarse = extrapolate(0, 3);
    // compare the two estimates of the normalization on |x0| <= 1
    const double mismatch = std::max({std::abs(std::exp(G.mu0 - G_coarse.mu0) - 1.0), G.mu1.size() ? (G.mu1 - G_coarse.mu1).cwiseAbs().maxCoeff() : 0.0,
                                      (G.mu2 - G_coarse.mu2).cwiseAbs().maxCoeff()});
    if (!(mismatch <= opt.match_tol))
        throw MatchingError("small-time matching of '" + opt.system + "' is inconsistent (relative mismatch " + std::to_string(mismatch) +
                            "); check the window and branch");

    // C = lim_{t->0} K(0, t; 0) / gauge(t)
    std::vector<cplx> cs;
    for (std::size_t k = 0; k < ts.size(); ++k) cs.push_back(std::exp(G.mu0 + i / hbar * c_samples[k]) / gauge(ts[k]));
    const cplx C = detail::neville_at_zero(ts, cs);

    KernelSpec k;
    k.system = opt.system;
    k.dim = n;
    k.window = window;
    k.C = C;
    k.C_derived = true;
    k.branch = BranchMode::first_window;
    k.params = opt.params;
    k.caustic_distance = [set](double t) {
        const auto b = detail::set_blocks(set, t, false);
        const double cond = momentum_block_condition({b.Ax, b.Ap, b.gamma});
        return std::isfinite(cond) ? 1.0 / cond : 0.0;
    };
    k.make_slice = [set, h, G, t_ref, hbar, window, n](double t) -> KernelSlice {
        const detail::KernelFrame f = detail::kernel_frame(set, t);
        const MuPolynomial I = detail::integrate_mu(set, h, t_ref, t, hbar, window);
        const cplx i{0.0, 1.0};
        const Eigen::MatrixXd S = 0.5 * (f.S + f.S.transpose());
        return [S, f, I, G, hbar, n, i](std::span<const double> x, std::span<const double> x0) {
            const Eigen::Map<const Eigen::VectorXd> xv(x.data(), n), lv(x0.data(), n);
            const Eigen::VectorXd w = f.B * lv + f.w0;
            const Eigen::VectorXcd lc = lv.cast<cplx>();
            const cplx phase = 0.5 * xv.dot(S * xv) + xv.dot(w) + I.mu0 + (I.mu1.transpose() * lc).value() + (lc.transpose() * I.mu2 * lc).value();
            const cplx g = G.mu0 + (G.mu1.transpose() * lc).value() + (lc.transpose() * G.mu2 * lc).value();
            return std::exp(g + i / hbar * phase);
        };
    };
    return k;
}

}  // namespace comgreen

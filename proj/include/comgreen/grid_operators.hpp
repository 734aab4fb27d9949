#pragma once

// Discrete Hamiltonians on uniform grids (hard walls at the edges) and their
// Crank-Nicolson (Cayley) propagators along one grid line.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "comgreen/errors.hpp"
#include "comgreen/grid.hpp"
#include "comgreen/phasespace.hpp"

namespace comgreen {

enum class Stencil {
    second_order,          ///< 3-point differences throughout
    compact_fourth_order,  ///< Numerov-type compact differences where a line allows it
};

/// Terms of a one-dimensional operator along a grid line with coordinate q:
/// kinetic/2 p^2 + drift p + weyl (q p + p q)/2 + potential(q).
struct LineTerms {
    double kinetic = 0.0;
    double drift = 0.0;
    double weyl = 0.0;
    std::vector<double> potential;
};

/// H = B^{-1} K + diag(V) with tridiagonal K and symmetric Toeplitz B.
class LineOperator {
public:
    LineOperator(const LineTerms& terms, const Axis& axis, double hbar, Stencil stencil) : n_(axis.n), v_(terms.potential) {
        if (v_.empty()) v_.assign(n_, 0.0);
        if (v_.size() != n_) throw GridError("line potential has wrong length");
        const double h = axis.step();
        const cplx i{0.0, 1.0};
        klo_.assign(n_, 0.0);
        kdi_.assign(n_, 0.0);
        kup_.assign(n_, 0.0);

        const bool only_kinetic = terms.drift == 0.0 && terms.weyl == 0.0;
        const bool only_drift = terms.kinetic == 0.0 && terms.weyl == 0.0;
        if (stencil == Stencil::compact_fourth_order && terms.kinetic != 0.0 && only_kinetic) {
            bd_ = 10.0 / 12.0;
            bo_ = 1.0 / 12.0;
        } else if (stencil == Stencil::compact_fourth_order && terms.drift != 0.0 && only_drift) {
            bd_ = 4.0 / 6.0;
            bo_ = 1.0 / 6.0;
        }

        if (terms.kinetic != 0.0) {
            const double c = -0.5 * terms.kinetic * hbar * hbar / (h * h);
            for (std::size_t j = 0; j < n_; ++j) {
                kdi_[j] += -2.0 * c;
                klo_[j] += c;
                kup_[j] += c;
            }
        }
        if (terms.drift != 0.0) {
            const cplx c = -i * hbar * terms.drift / (2.0 * h);
            for (std::size_t j = 0; j < n_; ++j) {
                kup_[j] += c;
                klo_[j] -= c;
            }
        }
        if (terms.weyl != 0.0) {
            const cplx c = -i * hbar * terms.weyl / (2.0 * h);
            for (std::size_t j = 0; j < n_; ++j) {
                if (j + 1 < n_) kup_[j] += c * 0.5 * (axis.coord(j) + axis.coord(j + 1));
                if (j > 0) klo_[j] -= c * 0.5 * (axis.coord(j) + axis.coord(j - 1));
            }
        }
    }

    std::size_t size() const noexcept { return n_; }

    /// out = H in, with a strided view into a larger array.
    void apply(const cplx* in, std::size_t stride, cplx* out, std::size_t out_stride) const {
        std::vector<cplx> k(n_);
        for (std::size_t j = 0; j < n_; ++j) {
            cplx s = kdi_[j] * in[j * stride];
            if (j > 0) s += klo_[j] * in[(j - 1) * stride];
            if (j + 1 < n_) s += kup_[j] * in[(j + 1) * stride];
            k[j] = s;
        }
        if (bo_ != 0.0) solve_b(k);
        for (std::size_t j = 0; j < n_; ++j) out[j * out_stride] = k[j] + v_[j] * in[j * stride];
    }

    /// psi <- (I + i dt H / 2 hbar)^{-1} (I - i dt H / 2 hbar) psi.
    void cayley_step(cplx* psi, std::size_t stride, double dt, double hbar) const {
        const cplx itau{0.0, dt / (2.0 * hbar)};
        std::vector<cplx> lo(n_), di(n_), up(n_), rhs(n_);
        for (std::size_t j = 0; j < n_; ++j) {
            const cplx hd = kdi_[j] + bd_ * v_[j];
            const cplx hl = j > 0 ? klo_[j] + bo_ * v_[j - 1] : cplx{};
            const cplx hu = j + 1 < n_ ? kup_[j] + bo_ * v_[j + 1] : cplx{};
            di[j] = bd_ + itau * hd;
            lo[j] = bo_ + itau * hl;
            up[j] = bo_ + itau * hu;
            cplx r = (bd_ - itau * hd) * psi[j * stride];
            if (j > 0) r += (bo_ - itau * hl) * psi[(j - 1) * stride];
            if (j + 1 < n_) r += (bo_ - itau * hu) * psi[(j + 1) * stride];
            rhs[j] = r;
        }
        thomas(lo, di, up, rhs);
        for (std::size_t j = 0; j < n_; ++j) psi[j * stride] = rhs[j];
    }

private:
    static void thomas(std::vector<cplx>& lo, std::vector<cplx>& di, std::vector<cplx>& up, std::vector<cplx>& rhs) {
        const std::size_t n = di.size();
        for (std::size_t j = 1; j < n; ++j) {
            if (di[j - 1] == cplx{}) throw GridError("singular tridiagonal system");
            const cplx f = lo[j] / di[j - 1];
            di[j] -= f * up[j - 1];
            rhs[j] -= f * rhs[j - 1];
        }
        rhs[n - 1] /= di[n - 1];
        for (std::size_t j = n - 1; j-- > 0;) rhs[j] = (rhs[j] - up[j] * rhs[j + 1]) / di[j];
    }

    void solve_b(std::vector<cplx>& r) const {
        std::vector<cplx> lo(n_, bo_), di(n_, bd_), up(n_, bo_);
        thomas(lo, di, up, r);
    }

    std::size_t n_;
    std::vector<cplx> klo_, kdi_, kup_;
    double bd_ = 1.0;
    double bo_ = 0.0;
    std::vector<double> v_;
};

/// A quadratic Hamiltonian frozen at one time and split into grid-line operators.
///
/// In 2D the pieces are: x-lines (terms in x and p_x only, plus x*y and the constant),
/// y-lines (y and p_y), and the two cross generators y p_x and x p_y.
class GridHamiltonian {
public:
    GridHamiltonian(const Eigen::MatrixXd& m, const Eigen::VectorXd& v, double c, const std::vector<Axis>& axes, double hbar, Stencil stencil)
        : m_(m), v_(v), c_(c), axes_(axes), hbar_(hbar), stencil_(stencil) {
        const int n = static_cast<int>(axes_.size());
        if (m_.rows() != 2 * n || v_.size() != 2 * n) throw DimensionMismatch("hamiltonian and grid differ in dimension");
        if (n == 2 && m_(2, 3) != 0.0) throw GridError("p_x p_y coupling is not supported by the grid propagator");
    }

    GridHamiltonian(const QuadraticHamiltonian& h, double t, const std::vector<Axis>& axes, double hbar, Stencil stencil)
        : GridHamiltonian(h.matrix(t), h.vector(t), h.scalar_at(t), axes, hbar, stencil) {}

    int dim() const { return static_cast<int>(axes_.size()); }
    bool has_cross_terms() const { return dim() == 2 && (m_(1, 2) != 0.0 || m_(0, 3) != 0.0); }

    /// Line along axis a at fixed transverse coordinate.
    LineOperator line(int a, double transverse) const {
        const int n = dim();
        const Axis& ax = axes_[static_cast<std::size_t>(a)];
        LineTerms terms;
        terms.kinetic = m_(n + a, n + a);
        terms.drift = v_(n + a);
        terms.weyl = m_(a, n + a);
        terms.potential.resize(ax.n);
        for (std::size_t j = 0; j < ax.n; ++j) {
            const double q = ax.coord(j);
            double pot = 0.5 * m_(a, a) * q * q + v_(a) * q;
            if (a == 0) {
                pot += c_;
                if (n == 2) pot += m_(0, 1) * q * transverse;
            }
            terms.potential[j] = pot;
        }
        return LineOperator(terms, ax, hbar_, stencil_);
    }

    /// Cross generator along axis a: (coefficient * transverse) p_a.
    LineOperator cross_line(int a, double transverse) const {
        const Axis& ax = axes_[static_cast<std::size_t>(a)];
        LineTerms terms;
        terms.drift = (a == 0 ? m_(1, 2) : m_(0, 3)) * transverse;
        return LineOperator(terms, ax, hbar_, stencil_);
    }

    GridState apply(const GridState& psi) const {
        GridState out(psi.axes(), psi.time());
        if (dim() == 1) {
            line(0, 0.0).apply(psi.values().data(), 1, out.values().data(), 1);
            return out;
        }
        const std::size_t nx = axes_[0].n, ny = axes_[1].n;
        std::vector<cplx> tmp(nx > ny ? nx : ny);
        auto accumulate = [&](const LineOperator& op, const cplx* in, std::size_t stride, cplx* dst) {
            op.apply(in, stride, tmp.data(), 1);
            for (std::size_t j = 0; j < op.size(); ++j) dst[j * stride] += tmp[j];
        };
        for (std::size_t iy = 0; iy < ny; ++iy) {
            const double y = axes_[1].coord(iy);
            const cplx* in = psi.values().data() + iy * nx;
            cplx* dst = out.values().data() + iy * nx;
            accumulate(line(0, y), in, 1, dst);
            if (has_cross_terms()) accumulate(cross_line(0, y), in, 1, dst);
        }
        for (std::size_t ix = 0; ix < nx; ++ix) {
            const double x = axes_[0].coord(ix);
            const cplx* in = psi.values().data() + ix;
            cplx* dst = out.values().data() + ix;
            accumulate(line(1, x), in, nx, dst);
            if (has_cross_terms()) accumulate(cross_line(1, x), in, nx, dst);
        }
        return out;
    }

    /// Cayley sweep over all lines along axis a (cross generators when `cross`).
    void sweep(GridState& psi, int a, bool cross, double dt) const {
        if (dim() == 1) {
            line(0, 0.0).cayley_step(psi.values().data(), 1, dt, hbar_);
            return;
        }
        const std::size_t nx = axes_[0].n, ny = axes_[1].n;
        if (a == 0) {
            for (std::size_t iy = 0; iy < ny; ++iy) {
                const double y = axes_[1].coord(iy);
                const LineOperator op = cross ? cross_line(0, y) : line(0, y);
                op.cayley_step(psi.values().data() + iy * nx, 1, dt, hbar_);
            }
        } else {
            for (std::size_t ix = 0; ix < nx; ++ix) {
                const double x = axes_[0].coord(ix);
                const LineOperator op = cross ? cross_line(1, x) : line(1, x);
                op.cayley_step(psi.values().data() + ix, nx, dt, hbar_);
            }
        }
    }

    /// Largest |potential| and kinetic bandwidth, for time-step diagnostics.
    double spectral_scale() const {
        double e = 0.0;
        for (int a = 0; a < dim(); ++a) {
            const Axis& ax = axes_[static_cast<std::size_t>(a)];
            const double h = ax.step();
            const double qmax = std::max(std::abs(ax.min), std::abs(ax.max));
            e += 2.0 * std::abs(m_(dim() + a, dim() + a)) * hbar_ * hbar_ / (h * h);
            e += 0.5 * std::abs(m_(a, a)) * qmax * qmax + std::abs(v_(a)) * qmax;
        }
        return e + std::abs(c_);
    }

private:
    Eigen::MatrixXd m_;
    Eigen::VectorXd v_;
    double c_;
    std::vector<Axis> axes_;
    double hbar_;
    Stencil stencil_;
};

/// Applies alpha^T z + gamma with x multiplicative and p = -i hbar d/dx by central
/// differences of half-width `stride` grid steps.
inline GridState apply_linear(const LinearForm& a, const GridState& psi, double hbar, std::size_t stride = 1) {
    const int n = psi.dim();
    if (a.dim() != n) throw DimensionMismatch("observable and grid differ in dimension");
    GridState out(psi.axes(), psi.time());
    const std::size_t nx = psi.axis(0).n;
    const std::size_t ny = n == 2 ? psi.axis(1).n : 1;
    const cplx i{0.0, 1.0};
    auto value = [&](long ix, long iy) -> cplx {
        if (ix < 0 || iy < 0 || ix >= static_cast<long>(nx) || iy >= static_cast<long>(ny)) return 0.0;
        return psi[static_cast<std::size_t>(iy) * nx + static_cast<std::size_t>(ix)];
    };
    const long s = static_cast<long>(stride);
    for (std::size_t iy = 0; iy < ny; ++iy) {
        for (std::size_t ix = 0; ix < nx; ++ix) {
            const long lx = static_cast<long>(ix), ly = static_cast<long>(iy);
            cplx r = (a.gamma + a.alpha(0) * psi.axis(0).coord(ix)) * value(lx, ly);
            r += -i * hbar * a.alpha(n) * (value(lx + s, ly) - value(lx - s, ly)) / (2.0 * s * psi.axis(0).step());
            if (n == 2) {
                r += a.alpha(1) * psi.axis(1).coord(iy) * value(lx, ly);
                r += -i * hbar * a.alpha(3) * (value(lx, ly + s) - value(lx, ly - s)) / (2.0 * s * psi.axis(1).step());
            }
            out[iy * nx + ix] = r;
        }
    }
    return out;
}

}  // namespace comgreen

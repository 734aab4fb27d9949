#pragma once

// Complex wavefunction samples on a uniform 1D or 2D grid, with L2 norms under
// trapezoidal weights and CSV / binary serialization.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <span>
#include <string>
#include <vector>

#include "comgreen/errors.hpp"

namespace comgreen {

using cplx = std::complex<double>;

struct Axis {
    double min = 0.0;
    double max = 1.0;
    std::size_t n = 64;

    double step() const { return (max - min) / static_cast<double>(n - 1); }
    double coord(std::size_t j) const { return min + step() * static_cast<double>(j); }
    double weight(std::size_t j) const { return (j == 0 || j + 1 == n) ? 0.5 * step() : step(); }

    void validate() const {
        const bool pow2 = n >= 2 && (n & (n - 1)) == 0;
        if (!(pow2 || n >= 64)) throw GridError("axis point count must be a power of two or at least 64, got " + std::to_string(n));
        if (!(max > min) || !std::isfinite(min) || !std::isfinite(max)) throw GridError("axis requires finite min < max");
    }

    friend bool operator==(const Axis&, const Axis&) = default;
};

class GridState {
public:
    GridState(std::vector<Axis> axes, std::vector<cplx> values, double t = 0.0)
        : axes_(std::move(axes)), values_(std::move(values)), t_(t) {
        if (axes_.empty() || axes_.size() > 2) throw GridError("grid dimension must be 1 or 2");
        std::size_t total = 1;
        for (const auto& a : axes_) {
            a.validate();
            total *= a.n;
        }
        if (values_.size() != total) throw GridError("grid holds " + std::to_string(values_.size()) + " values, expected " + std::to_string(total));
    }

    GridState(std::vector<Axis> axes, double t = 0.0) : GridState(axes, std::vector<cplx>(count(axes)), t) {}

    /// Samples f at every grid point; x fastest in 2D.
    template <typename F>
    static GridState sample(std::vector<Axis> axes, F&& f, double t = 0.0) {
        GridState g(std::move(axes), t);
        std::array<double, 2> x{};
        for (std::size_t i = 0; i < g.size(); ++i) {
            g.point(i, x);
            g.values_[i] = f(std::span<const double>(x.data(), static_cast<std::size_t>(g.dim())));
        }
        return g;
    }

    int dim() const noexcept { return static_cast<int>(axes_.size()); }
    const Axis& axis(int a) const { return axes_.at(static_cast<std::size_t>(a)); }
    const std::vector<Axis>& axes() const noexcept { return axes_; }
    std::size_t size() const noexcept { return values_.size(); }
    double time() const noexcept { return t_; }
    void set_time(double t) noexcept { t_ = t; }

    std::span<cplx> values() noexcept { return values_; }
    std::span<const cplx> values() const noexcept { return values_; }
    cplx& operator[](std::size_t i) { return values_[i]; }
    const cplx& operator[](std::size_t i) const { return values_[i]; }

    std::size_t index(std::size_t ix, std::size_t iy = 0) const { return iy * axes_[0].n + ix; }

    void point(std::size_t flat, std::array<double, 2>& x) const {
        const std::size_t nx = axes_[0].n;
        x[0] = axes_[0].coord(flat % nx);
        x[1] = dim() == 2 ? axes_[1].coord(flat / nx) : 0.0;
    }

    double weight(std::size_t flat) const {
        const std::size_t nx = axes_[0].n;
        double w = axes_[0].weight(flat % nx);
        if (dim() == 2) w *= axes_[1].weight(flat / nx);
        return w;
    }

    bool same_grid(const GridState& other) const { return axes_ == other.axes_; }

private:
    static std::size_t count(const std::vector<Axis>& axes) {
        std::size_t total = 1;
        for (const auto& a : axes) total *= a.n;
        return total;
    }

    std::vector<Axis> axes_;
    std::vector<cplx> values_;
    double t_;
};

inline cplx inner(const GridState& a, const GridState& b) {
    if (!a.same_grid(b)) throw GridError("inner product of states on different grids");
    cplx s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.weight(i) * std::conj(a[i]) * b[i];
    return s;
}

inline double norm(const GridState& a) { return std::sqrt(std::max(0.0, inner(a, a).real())); }

inline double l2_distance(const GridState& a, const GridState& b) {
    if (!a.same_grid(b)) throw GridError("distance between states on different grids");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.weight(i) * std::norm(a[i] - b[i]);
    return std::sqrt(s);
}

inline double max_abs(const GridState& a) {
    double m = 0.0;
    for (const auto& v : a.values()) m = std::max(m, std::abs(v));
    return m;
}

// ---- CSV: columns x[,y],re,im; x fastest ----

inline void write_csv(std::ostream& os, const GridState& g) {
    os << (g.dim() == 2 ? "x,y,re,im\n" : "x,re,im\n");
    char buf[128];
    std::array<double, 2> x{};
    for (std::size_t i = 0; i < g.size(); ++i) {
        g.point(i, x);
        if (g.dim() == 2)
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", x[0], x[1], g[i].real(), g[i].imag());
        else
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", x[0], g[i].real(), g[i].imag());
        os << buf;
    }
}

inline GridState read_csv(std::istream& is, double t = 0.0) {
    std::string line;
    if (!std::getline(is, line)) throw GridError("empty CSV");
    const int dim = line.rfind("x,y,", 0) == 0 ? 2 : 1;
    if (dim == 1 && line.rfind("x,re,im", 0) != 0) throw GridError("unrecognized CSV header '" + line + "'");
    std::vector<std::array<double, 4>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::array<double, 4> r{};
        std::stringstream ss(line);
        std::string cell;
        int c = 0;
        while (std::getline(ss, cell, ',') && c < dim + 2) r[static_cast<std::size_t>(c++)] = std::stod(cell);
        if (c != dim + 2) throw GridError("malformed CSV row '" + line + "'");
        rows.push_back(r);
    }
    if (rows.empty()) throw GridError("CSV holds no samples");
    std::map<double, int> xs, ys;
    for (const auto& r : rows) {
        xs[r[0]] = 0;
        if (dim == 2) ys[r[1]] = 0;
    }
    std::vector<Axis> axes{{xs.begin()->first, xs.rbegin()->first, xs.size()}};
    if (dim == 2) axes.push_back({ys.begin()->first, ys.rbegin()->first, ys.size()});
    std::vector<cplx> values;
    values.reserve(rows.size());
    for (const auto& r : rows) values.emplace_back(r[static_cast<std::size_t>(dim)], r[static_cast<std::size_t>(dim) + 1]);
    return GridState(std::move(axes), std::move(values), t);
}

// ---- binary dump: "CGGRID1\0", u32 dim, per axis (f64 min, f64 max, u64 n), f64 t,
//      then (re, im) f64 pairs; all little-endian ----

namespace detail {

template <typename T>
void put_le(std::ostream& os, T v) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
    unsigned char bytes[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw GridError("truncated binary grid dump");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    T v;
    std::memcpy(&v, bytes, sizeof(T));
    return v;
}

inline constexpr char grid_magic[8] = {'C', 'G', 'G', 'R', 'I', 'D', '1', '\0'};

}  // namespace detail

inline void write_binary(std::ostream& os, const GridState& g) {
    os.write(detail::grid_magic, sizeof detail::grid_magic);
    detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.dim()));
    for (const auto& a : g.axes()) {
        detail::put_le(os, a.min);
        detail::put_le(os, a.max);
        detail::put_le<std::uint64_t>(os, a.n);
    }
    detail::put_le(os, g.time());
    for (const auto& v : g.values()) {
        detail::put_le(os, v.real());
        detail::put_le(os, v.imag());
    }
}

inline GridState read_binary(std::istream& is) {
    char magic[8];
    if (!is.read(magic, sizeof magic) || std::memcmp(magic, detail::grid_magic, sizeof magic) != 0) throw GridError("not a grid dump");
    const auto dim = detail::get_le<std::uint32_t>(is);
    if (dim < 1 || dim > 2) throw GridError("grid dump has invalid dimension");
    std::vector<Axis> axes;
    std::size_t total = 1;
    for (std::uint32_t a = 0; a < dim; ++a) {
        Axis ax;
        ax.min = detail::get_le<double>(is);
        ax.max = detail::get_le<double>(is);
        ax.n = detail::get_le<std::uint64_t>(is);
        ax.validate();
        if (ax.n > (std::size_t{1} << 26)) throw GridError("grid dump axis too large");
        total *= ax.n;
        axes.push_back(ax);
    }
    const double t = detail::get_le<double>(is);
    std::vector<cplx> values(total);
    for (auto& v : values) {
        const double re = detail::get_le<double>(is);
        const double im = detail::get_le<double>(is);
        v = {re, im};
    }
    return GridState(std::move(axes), std::move(values), t);
}

}  // namespace comgreen

#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace comgreen;
using oracle::I;
using oracle::pi;

namespace {

KernelSpec assemble(const std::string& name, const PhysicalParams& p = {}) {
    const auto sys = catalog::system(name, p);
    AssembleOptions opt;
    opt.system = name;
    opt.hbar = p.hbar;
    opt.gauge = catalog::gauge(name, p);
    return assemble_kernel(sys.initial_position, sys.hamiltonian, catalog::kernel(name, p).window, opt);
}

cplx eval1(const KernelSlice& s, double x, double x0) {
    const double a[1] = {x}, b[1] = {x0};
    return s(a, b);
}

// sample points: 1D lines, or tilted lines through the plane in 2D
std::vector<double> point(int dim, double u, bool source) {
    if (dim == 1) return {u};
    return source ? std::vector<double>{u, -0.2 + 0.4 * u} : std::vector<double>{u, 0.5 - 0.7 * u};
}

double max_relative_deviation(const KernelSpec& a, const KernelSpec& b, const std::vector<double>& times, double range = 2.0) {
    double worst = 0.0;
    for (double t : times) {
        const auto sa = a.at(t), sb = b.at(t);
        for (int i = 0; i <= 20; ++i)
            for (int j = 0; j <= 20; ++j) {
                const auto x = point(a.dim, -range + 2 * range * i / 20.0, false);
                const auto x0 = point(a.dim, -range + 2 * range * j / 20.0, true);
                const cplx va = sa(x, x0), vb = sb(x, x0);
                worst = std::max(worst, std::abs(va - vb) / std::abs(vb));
            }
    }
    return worst;
}

std::vector<double> window_times(const KernelSpec& k, int n = 10) {
    const double hi = std::isfinite(k.window.hi) ? k.window.hi : 4.0;
    std::vector<double> ts;
    for (int i = 1; i <= n; ++i) ts.push_back(hi * i / (n + 1.0));
    return ts;
}

}  // namespace

TEST(CatalogObservable, Examples) {
    const LinearForm x0 = catalog::observable("ho_x0").at(0.0);
    EXPECT_EQ(x0.alpha(0), 1.0);
    EXPECT_EQ(std::abs(x0.alpha(1)), 0.0);
    EXPECT_EQ(x0.gamma, 0.0);
    PhysicalParams p;
    p.k = 0.7;
    p.m = 1.9;
    EXPECT_NEAR(catalog::observable("ramp_x0", p).at(1.3).gamma, p.k * std::pow(1.3, 3) / (3 * p.m), 1e-15);
    const LinearForm mx = catalog::observable("magnetic_x0").at(pi);
    EXPECT_NEAR(mx.alpha(0), 0.0, 1e-15);
    EXPECT_NEAR(mx.alpha(1), 0.0, 1e-15);
    EXPECT_NEAR(mx.alpha(3), 2.0, 1e-15);
    EXPECT_THROW(catalog::observable("nope"), Error);
    EXPECT_EQ(catalog::observable_names().size(), 7u);
}

TEST(CatalogHamiltonian, Examples) {
    PhysicalParams p;
    p.m = 1.6;
    p.omega = 0.7;
    p.eE = 2.2;
    const auto ho = catalog::hamiltonian("ho", p);
    Eigen::Matrix2d expect;
    expect << p.m * p.omega * p.omega, 0, 0, 1 / p.m;
    EXPECT_LE((ho.matrix(0.3) - expect).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_EQ(ho.vector(0.3).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(catalog::hamiltonian("uniform", p).vector(5.0)(0), -p.eE);
    EXPECT_EQ(catalog::hamiltonian("ramp", p).vector(2.0)(0), -2.0 * p.k);
    // x^2 term of the expanded squares: (eB/2c)^2/2m = m w^2/8
    const auto mag = catalog::hamiltonian("magnetic", p);
    EXPECT_NEAR(0.5 * mag.matrix(0.0)(0, 0), p.m * p.omega * p.omega / 8.0, 1e-15);
    EXPECT_NEAR(0.5 * mag.matrix(0.0)(1, 1), p.m * p.omega * p.omega / 8.0, 1e-15);
    EXPECT_THROW(catalog::hamiltonian("nope"), Error);
}

TEST(CatalogKernel, OscillatorFormula) {
    PhysicalParams p;
    p.m = 1.4;
    p.omega = 0.8;
    p.hbar = 0.6;
    const auto k = catalog::kernel("ho", p);
    EXPECT_DOUBLE_EQ(k.window.hi, pi / p.omega);
    for (double t : {0.4, 2.0, 3.5}) {
        const double s = std::sin(p.omega * t), c = std::cos(p.omega * t);
        for (double x : {-1.0, 0.3})
            for (double x0 : {0.5, 1.7}) {
                const cplx amp = std::sqrt(p.m * p.omega / (2 * pi * I * p.hbar * s));
                const cplx expect = amp * std::exp(I * p.m * p.omega / (2 * p.hbar * s) * ((x * x + x0 * x0) * c - 2 * x0 * x));
                EXPECT_LE(std::abs(eval1(k.at(t), x, x0) - expect), 1e-14 * std::abs(expect));
            }
    }
}

TEST(CatalogKernel, PrintedRampExponent) {
    PhysicalParams p;
    p.k = 0.9;
    p.m = 1.2;
    const auto k = catalog::kernel("ramp_printed", p);
    const double t = 1.3, x = 0.4, x0 = 0.4;
    // at x = x0 only the t^6 term survives in the bracket
    const cplx amp = std::sqrt(p.m / (2 * pi * I * t));
    const cplx expect = amp * std::exp(I * p.m / (2 * t) * (-4 * p.k * p.k * std::pow(t, 6) / (45 * p.m * p.m)));
    EXPECT_LE(std::abs(eval1(k.at(t), x, x0) - expect), 1e-14);
}

TEST(CatalogKernel, UniformFieldExponent) {
    PhysicalParams p;
    p.eE = 0.7;
    p.m = 1.1;
    const auto k = catalog::kernel("uniform", p);
    const double t = 0.9, x = -0.3, x0 = 1.2;
    const cplx amp = std::sqrt(p.m / (2 * pi * I * t));
    const cplx expect = amp * std::exp(I * p.m / (2 * t) *
                                       ((x - x0) * (x - x0) + p.eE * t * t * (x + x0) / p.m - p.eE * p.eE * std::pow(t, 4) / (12 * p.m * p.m)));
    EXPECT_LE(std::abs(eval1(k.at(t), x, x0) - expect), 1e-14);
}

TEST(CatalogKernel, EvaluateExamples) {
    const auto ho = catalog::kernel("ho");
    const cplx a = eval1(ho.at(pi / 2), 0, 0);
    EXPECT_NEAR(a.real(), 0.28209479177387814, 1e-15);
    EXPECT_NEAR(a.imag(), -0.28209479177387814, 1e-15);
    const cplx b = eval1(ho.at(pi / 2), 1, 2);
    EXPECT_NEAR(std::abs(b), 1 / std::sqrt(2 * pi), 1e-15);
    EXPECT_NEAR(std::remainder(std::arg(b) + pi / 4 + 2, 2 * pi), 0.0, 1e-14);
    const cplx f = eval1(catalog::kernel("free").at(1.0), 0.3, 0.3);
    EXPECT_NEAR(f.real(), 0.28209479177387814, 1e-15);
    EXPECT_NEAR(f.imag(), -0.28209479177387814, 1e-15);
    EXPECT_THROW(ho.at(pi), CausticError);
    EXPECT_THROW(ho.at(1e-14), CausticError);
    EXPECT_THROW(ho.at(4.0), DomainError);
    const double x[2] = {0, 0};
    EXPECT_THROW(kernel_evaluate(ho, std::span<const double>(x, 2), 1.0, std::span<const double>(x, 2)), DimensionMismatch);
    EXPECT_THROW(catalog::kernel("nope"), Error);
}

TEST(CatalogKernel, TrackedBranchAddsMaslovPhase) {
    const auto k = catalog::kernel("ho", {}, BranchMode::tracked);
    const cplx v = eval1(k.at(1.5 * pi), 0, 0);
    EXPECT_NEAR(std::abs(v), 1 / std::sqrt(2 * pi), 1e-14);
    EXPECT_NEAR(std::remainder(std::arg(v) + 0.75 * pi, 2 * pi), 0.0, 1e-14);
    // inside the first window both branches agree
    EXPECT_LE(std::abs(eval1(k.at(1.0), 0.2, 0.5) - eval1(catalog::kernel("ho").at(1.0), 0.2, 0.5)), 1e-15);
    EXPECT_THROW(k.at(pi), CausticError);
}

TEST(CatalogKernel, MetadataJson) {
    const auto js = to_json(catalog::kernel("magnetic"));
    EXPECT_EQ(js.at("system"), "magnetic");
    EXPECT_EQ(js.at("branch"), "first-window");
    EXPECT_TRUE(js.at("C_derived").get<bool>());
    EXPECT_NEAR(js.at("window")[1].get<double>(), 2 * pi, 1e-15);
    EXPECT_TRUE(to_json(catalog::kernel("free")).at("window")[1].is_null());
    EXPECT_NEAR(js.at("C").at("im").get<double>(), -1 / (4 * pi), 1e-16);
}

TEST(PipelineVsCatalog, AgreeOnSampleGrids) {
    for (const auto& p : {PhysicalParams{}, PhysicalParams{0.8, 1.7, 0.9, 0.6, 1.3}}) {
        for (const std::string name : {"ho", "ramp", "uniform", "magnetic", "free"}) {
            const KernelSpec ref = catalog::kernel(name, p);
            const KernelSpec got = assemble(name, p);
            EXPECT_LE(max_relative_deviation(got, ref, window_times(ref)), 1e-10) << name;
        }
    }
}

TEST(PipelineVsCatalog, PrintedRampIsNotReproduced) {
    const KernelSpec printed = catalog::kernel("ramp_printed");
    EXPECT_GT(max_relative_deviation(assemble("ramp"), printed, window_times(printed)), 1e-2);
}

// ---- small-parameter limits ----

namespace {

double limit_deviation(const std::string& name, double param) {
    PhysicalParams p;
    if (name == "ho" || name == "magnetic") p.omega = param;
    if (name == "ramp") p.k = param;
    if (name == "uniform") p.eE = param;
    const KernelSpec k = catalog::kernel(name, p);
    const KernelSpec f = catalog::free_kernel(p, k.dim);
    return max_relative_deviation(k, f, {0.25, 0.5, 1.0, 2.0}, 1.0);
}

}  // namespace

TEST(Limits, OscillatorApproachesFreeQuadratically) {
    EXPECT_LE(limit_deviation("ho", 1e-4), 1e-6);
    const double r = limit_deviation("ho", 2e-4) / limit_deviation("ho", 1e-4);
    EXPECT_NEAR(r, 4.0, 0.1);
}

TEST(Limits, LinearCouplingsApproachFreeLinearly) {
    // the first-order terms are k t^2 (2x + x0)/6, eE t (x + x0)/2 and m w (x0 y - y0 x)/2,
    // so the deviation halves with the parameter
    for (const std::string name : {"ramp", "uniform", "magnetic"}) {
        const double d1 = limit_deviation(name, 1e-4), d2 = limit_deviation(name, 2e-4);
        EXPECT_NEAR(d2 / d1, 2.0, 0.01) << name;
        EXPECT_LE(d1, 1e-3) << name;
    }
}

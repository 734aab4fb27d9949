#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <sstream>

#include "oracles.hpp"

using namespace comgreen;
using oracle::I;

namespace {

GridState gaussian_1d(std::size_t n, double lo = -10.0, double hi = 10.0, double k = 0.7) {
    return oracle::sample({{lo, hi, n}}, [k](std::span<const double> x) { return std::exp(-0.5 * x[0] * x[0] + I * k * x[0]); }, 0.25);
}

}  // namespace

TEST(Axis, Validation) {
    EXPECT_NO_THROW((Axis{-1, 1, 32}.validate()));
    EXPECT_NO_THROW((Axis{-1, 1, 100}.validate()));
    EXPECT_THROW((Axis{-1, 1, 48}.validate()), GridError);
    EXPECT_THROW((Axis{1, -1, 64}.validate()), GridError);
    EXPECT_THROW((Axis{0, std::numeric_limits<double>::infinity(), 64}.validate()), GridError);
    EXPECT_DOUBLE_EQ((Axis{0, 1, 5}.step()), 0.25);
}

TEST(GridState, ConstructionAndIndexing) {
    EXPECT_THROW(GridState({}, {}), GridError);
    EXPECT_THROW(GridState({{0, 1, 64}}, std::vector<cplx>(10)), GridError);
    const GridState g = oracle::sample({{0, 1, 64}, {-1, 1, 128}}, [](std::span<const double> x) { return cplx(x[0], x[1]); });
    EXPECT_EQ(g.dim(), 2);
    EXPECT_EQ(g.size(), 64u * 128u);
    const cplx v = g[g.index(63, 127)];
    EXPECT_DOUBLE_EQ(v.real(), 1.0);
    EXPECT_DOUBLE_EQ(v.imag(), 1.0);
    EXPECT_DOUBLE_EQ(g[g.index(0, 0)].imag(), -1.0);
}

TEST(GridState, TrapezoidNorm) {
    // int exp(-x^2) dx = sqrt(pi)
    const GridState g = gaussian_1d(1024);
    EXPECT_NEAR(norm(g) * norm(g), std::sqrt(oracle::pi), 1e-12);
    const GridState g2 = oracle::sample({{-8, 8, 256}, {-8, 8, 256}}, [](std::span<const double> x) { return cplx(std::exp(-0.5 * (x[0] * x[0] + x[1] * x[1]))); });
    EXPECT_NEAR(norm(g2) * norm(g2), oracle::pi, 1e-12);
    EXPECT_NEAR(l2_distance(g, g), 0.0, 0.0);
    EXPECT_THROW(inner(g, g2), GridError);
}

TEST(GridIo, CsvRoundTripIsExact) {
    for (const GridState& g : {gaussian_1d(64, -3.0, 2.0),
                               oracle::sample({{-1, 1, 64}, {0, 3, 64}}, [](std::span<const double> x) { return std::exp(I * x[0] * x[1]) / 3.0; })}) {
        std::stringstream ss;
        write_csv(ss, g);
        const GridState back = read_csv(ss, g.time());
        ASSERT_TRUE(back.same_grid(g));
        for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(back[i], g[i]);
    }
}

TEST(GridIo, CsvHeaderAndErrors) {
    std::stringstream ss;
    write_csv(ss, gaussian_1d(64));
    std::string header;
    std::getline(ss, header);
    EXPECT_EQ(header, "x,re,im");
    std::stringstream empty;
    EXPECT_THROW(read_csv(empty), GridError);
    std::stringstream bad("a,b,c\n1,2,3\n");
    EXPECT_THROW(read_csv(bad), GridError);
    std::stringstream garbage("x,re,im\n1,2\n");
    EXPECT_THROW(read_csv(garbage), GridError);
}

TEST(GridIo, BinaryRoundTripIsExact) {
    const GridState g = oracle::sample({{-1, 1, 64}, {0, 3, 128}}, [](std::span<const double> x) { return std::exp(I * x[0] * x[1]) / 7.0; }, 1.25);
    std::stringstream ss;
    write_binary(ss, g);
    const std::string bytes = ss.str();
    EXPECT_EQ(bytes.size(), 8 + 4 + 2 * (8 + 8 + 8) + 8 + g.size() * 16);
    EXPECT_EQ(bytes.substr(0, 7), "CGGRID1");
    std::stringstream in(bytes);
    const GridState back = read_binary(in);
    ASSERT_TRUE(back.same_grid(g));
    EXPECT_EQ(back.time(), 1.25);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(back[i], g[i]);
    std::stringstream truncated(bytes.substr(0, bytes.size() - 5));
    EXPECT_THROW(read_binary(truncated), GridError);
    std::stringstream wrong("NOTAGRID........");
    EXPECT_THROW(read_binary(wrong), GridError);
}

TEST(ApplyLinear, MomentumOfPlaneWaveEnvelope) {
    // p psi for psi = exp(-x^2/2 + i k x) is (k + i x) psi
    const double k = 0.7;
    const GridState g = gaussian_1d(2048, -12, 12, k);
    const LinearForm p{Eigen::Vector2d(0, 1), 0.0};
    const GridState pg = apply_linear(p, g, 1.0);
    const GridState expect = oracle::sample(g.axes(), [k](std::span<const double> x) {
        return (k + I * x[0]) * std::exp(-0.5 * x[0] * x[0] + I * k * x[0]);
    });
    // interior comparison: the one-sided edges see essentially zero amplitude
    EXPECT_LE(oracle::relative_l2(pg, expect), 1e-4);
    const GridState coarse = apply_linear(p, g, 1.0, 2);
    const double r = oracle::relative_l2(coarse, expect) / oracle::relative_l2(pg, expect);
    EXPECT_NEAR(r, 4.0, 0.1);
}

TEST(GridHamiltonian, OscillatorGroundStateIsEigenvector) {
    const auto h = catalog::hamiltonian("ho");
    for (auto [stencil, tol] : {std::pair{Stencil::second_order, 1e-4}, std::pair{Stencil::compact_fourth_order, 1e-8}}) {
        const GridState g = oracle::sample({{-10, 10, 1024}}, [](std::span<const double> x) { return oracle::ho_ground(x[0], 0.0); });
        const GridHamiltonian gh(h, 0.0, g.axes(), 1.0, stencil);
        GridState hg = gh.apply(g);
        for (std::size_t i = 0; i < g.size(); ++i) hg[i] -= 0.5 * g[i];
        EXPECT_LE(norm(hg), tol);
    }
}

TEST(GridHamiltonian, CompactStencilIsFourthOrder) {
    const auto h = catalog::hamiltonian("free");
    auto error = [&](std::size_t n) {
        const GridState g = oracle::sample({{-10, 10, n}}, [](std::span<const double> x) { return std::exp(-0.5 * x[0] * x[0] + I * 1.5 * x[0]); });
        const GridState expect = oracle::sample(g.axes(), [](std::span<const double> x) {
            const cplx d = -x[0] + I * 1.5;
            return -0.5 * (d * d - 1.0) * std::exp(-0.5 * x[0] * x[0] + I * 1.5 * x[0]);
        });
        return oracle::relative_l2(GridHamiltonian(h, 0.0, g.axes(), 1.0, Stencil::compact_fourth_order).apply(g), expect);
    };
    const double r = error(257) / error(513);
    EXPECT_GT(r, 14.0);
    EXPECT_LT(r, 18.0);
}

TEST(GridHamiltonian, MagneticCrossTermsAreDetected) {
    const std::vector<Axis> axes{{-4, 4, 64}, {-4, 4, 64}};
    EXPECT_TRUE(GridHamiltonian(catalog::hamiltonian("magnetic"), 0.0, axes, 1.0, Stencil::compact_fourth_order).has_cross_terms());
    // 2D oscillator written as a magnetic model with no field
    PhysicalParams p;
    p.omega = 0.0;
    EXPECT_FALSE(GridHamiltonian(catalog::hamiltonian("magnetic", p), 0.0, axes, 1.0, Stencil::compact_fourth_order).has_cross_terms());
}

TEST(GridHamiltonian, MagneticActionOnGaussian) {
    // H of the symmetric-gauge field on exp(-(x^2+y^2)/2) with m = w = 1: the cross term
    // w/2 (y px - x py) annihilates radial functions, leaving (1/2)(p^2) + (1/8) r^2
    const auto h = catalog::hamiltonian("magnetic");
    const std::vector<Axis> axes{{-8, 8, 256}, {-8, 8, 256}};
    const GridState g = oracle::sample(axes, [](std::span<const double> x) { return cplx(std::exp(-0.5 * (x[0] * x[0] + x[1] * x[1]))); });
    const GridState expect = oracle::sample(axes, [](std::span<const double> x) {
        const double r2 = x[0] * x[0] + x[1] * x[1];
        return cplx((1.0 - 0.5 * r2 + 0.125 * r2) * std::exp(-0.5 * r2));
    });
    EXPECT_LE(oracle::relative_l2(GridHamiltonian(h, 0.0, axes, 1.0, Stencil::compact_fourth_order).apply(g), expect), 1e-6);
}

TEST(GridHamiltonian, CayleySweepIsUnitary) {
    const auto h = catalog::hamiltonian("ho");
    GridState g = gaussian_1d(512);
    const double n0 = norm(g);
    const GridHamiltonian gh(h, 0.0, g.axes(), 1.0, Stencil::compact_fourth_order);
    for (int s = 0; s < 1000; ++s) gh.sweep(g, 0, false, 0.01);
    EXPECT_LE(std::abs(norm(g) - n0), 1e-10 * n0);
}

TEST(Parallel, ThreadCapIsHonoured) {
    ::setenv("COMGREEN_THREADS", "1", 1);
    EXPECT_EQ(worker_count(), 1u);
    ::setenv("COMGREEN_THREADS", "junk", 1);
    EXPECT_GE(worker_count(), 1u);
    ::unsetenv("COMGREEN_THREADS");
    std::atomic<long> sum{0};
    parallel_for(1000, [&](std::size_t i) { sum += static_cast<long>(i); });
    EXPECT_EQ(sum.load(), 999L * 1000L / 2);
    EXPECT_THROW(parallel_for(100, [](std::size_t i) {
                     if (i == 57) throw GridError("boom");
                 }),
                 GridError);
}

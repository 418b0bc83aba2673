#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "bvp/grid_function.hpp"

using namespace bvp;

namespace {

const Grid unit(0.0, 1.0, 16);

GridFunction poly(const Grid& g, const std::vector<double>& coef)
{
    return GridFunction::scalar(g, [&](double t) {
        double v = 0.0;
        for (auto it = coef.rbegin(); it != coef.rend(); ++it)
            v = v * t + *it;
        return v;
    });
}

double max_abs_diff(const GridFunction& f, auto&& exact)
{
    double worst = 0.0;
    for (Index i = 0; i < f.nodes(); ++i)
        worst = std::max(worst, std::abs(f(i) - Complex(exact(f.grid().node(i)))));
    return worst;
}

} // namespace

TEST(Grid, RejectsDegenerateIntervalsAndCoarseGrids)
{
    EXPECT_THROW(Grid(1.0, 0.0, 16), Error);
    try {
        Grid(0.0, 1.0, 4);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "grid-too-coarse");
    }
    EXPECT_DOUBLE_EQ(unit.node(16), 1.0);
    EXPECT_DOUBLE_EQ(unit.h(), 1.0 / 16);
}

TEST(GridFunction, RejectsNonFiniteSamples)
{
    EXPECT_THROW(GridFunction::scalar(unit, [](double t) { return 1.0 / (t - 0.5); }), Error);
}

TEST(Derivative, ConstantHasZeroDerivative)
{
    const auto one = GridFunction::scalar(unit, [](double) { return 1.0; });
    // Stencil weights sum to zero up to rounding amplified by h^-order.
    for (int order = 1; order <= 4; ++order)
        EXPECT_LT(derivative(one, order).storage().cwiseAbs().maxCoeff(), 1e-13 * std::pow(unit.N(), order)) << order;
}

TEST(Derivative, ExactOnQuadratic)
{
    const auto sq = GridFunction::scalar(unit, [](double t) { return t * t; });
    EXPECT_LT(max_abs_diff(derivative(sq, 1), [](double t) { return 2.0 * t; }), 1e-12);
    EXPECT_LT(max_abs_diff(derivative(sq, 2), [](double) { return 2.0; }), 1e-10);
}

TEST(Derivative, ExactOnQuartics)
{
    const auto q = poly(unit, {0.3, -1.0, 0.5, 2.0, -0.7});
    EXPECT_LT(max_abs_diff(derivative(q, 1), [](double t) { return -1.0 + t + 6 * t * t - 2.8 * t * t * t; }), 1e-11);
}

TEST(Derivative, SecondDerivativeOfSine)
{
    const Grid g(0.0, 1.0, 200);
    const auto s = GridFunction::scalar(g, [](double t) { return std::sin(t); });
    EXPECT_LT(max_abs_diff(derivative(s, 2), [](double t) { return -std::sin(t); }), 1e-8);
}

TEST(Derivative, FourthOrderConvergenceOnExp)
{
    double prev = 0.0;
    for (int N : {20, 40, 80}) {
        const Grid g(0.0, 1.0, N);
        const auto e = GridFunction::scalar(g, [](double t) { return std::exp(t); });
        const double err = max_abs_diff(derivative(e, 1), [](double t) { return std::exp(t); });
        if (prev > 0.0)
            EXPECT_GT(prev / err, 12.0) << N;
        prev = err;
    }
}

TEST(Derivative, HigherOrdersCompose)
{
    const Grid g(0.0, 1.0, 64);
    const auto s = GridFunction::scalar(g, [](double t) { return std::sin(2 * t); });
    EXPECT_LT(max_abs_diff(derivative(s, 5), [](double t) { return 32 * std::cos(2 * t); }), 32 * 1e-3);
}

TEST(Derivative, GridTooCoarse)
{
    const Grid g(0.0, 1.0, 8);
    const auto s = GridFunction::scalar(g, [](double t) { return t; });
    EXPECT_NO_THROW(derivative(s, 2));
    try {
        derivative(s, 3);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "grid-too-coarse");
    }
}

TEST(Antiderivative, DerivativeInvertsItOnCubics)
{
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 10; ++trial) {
        const std::vector<double> c{u(rng), u(rng), u(rng), u(rng)};
        const auto f = poly(unit, c);
        const auto back = derivative(antiderivative(f), 1);
        EXPECT_LT((back.storage() - f.storage()).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(LpNorm, ClosedForms)
{
    const auto one = GridFunction::scalar(unit, [](double) { return 1.0; });
    const auto t = GridFunction::scalar(unit, [](double x) { return x; });
    EXPECT_NEAR(lp_norm(one, 2.0), 1.0, 1e-14);
    EXPECT_NEAR(lp_norm(t, 2.0), 1.0 / std::sqrt(3.0), 1e-8);
    EXPECT_DOUBLE_EQ(lp_norm(t, infinity), 1.0);
}

TEST(LpNorm, OddNodeCountUsesThreeEighthsTail)
{
    const Grid g(0.0, 1.0, 9);
    const auto t = GridFunction::scalar(g, [](double x) { return x; });
    EXPECT_NEAR(lp_norm(t, 2.0), 1.0 / std::sqrt(3.0), 1e-12);
}

TEST(LpNorm, SumsEntriesOfVectorFunctions)
{
    const auto v = GridFunction::tabulate(unit, 2, 1, [](double x) -> CMatrix {
        CMatrix m(2, 1);
        m << x, 1.0;
        return m;
    });
    EXPECT_NEAR(lp_norm(v, 2.0), 1.0 / std::sqrt(3.0) + 1.0, 1e-12);
}

TEST(LpNorm, SimpsonConvergesAtFourthOrder)
{
    // \int_0^1 sin^2 = 1/2 - sin(2)/4.
    const double exact = std::sqrt(0.5 - std::sin(2.0) / 4.0);
    double prev = 0.0;
    for (int N : {8, 16, 32, 64}) {
        const Grid g(0.0, 1.0, N);
        const double err = std::abs(lp_norm(GridFunction::scalar(g, [](double x) { return std::sin(x); }), 2.0) - exact);
        if (prev > 0.0)
            EXPECT_GE(std::log2(prev / err), 3.5) << N;
        prev = err;
    }
}

TEST(SobolevNorm, ClosedForms)
{
    const auto t = GridFunction::scalar(unit, [](double x) { return x; });
    EXPECT_NEAR(sobolev_norm(t, {1, 2.0}), std::sqrt(1.0 / 3.0 + 1.0), 1e-8);
    EXPECT_NEAR(sobolev_norm(t, {1, infinity}), 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(sobolev_norm(t, {0, 3.0}), lp_norm(t, 3.0));
}

TEST(SobolevNorm, Properties)
{
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const Grid g(-1.0, 2.0, 48);
    for (int trial = 0; trial < 25; ++trial) {
        const auto f = poly(g, {u(rng), u(rng), u(rng), u(rng), u(rng)});
        const auto h = poly(g, {u(rng), u(rng), u(rng)});
        const double lambda = 3.0 * u(rng);
        for (double p : {1.0, 2.0, 3.5, infinity}) {
            for (int n : {0, 1, 2}) {
                const SobolevIndex idx(n, p);
                const double nf = sobolev_norm(f, idx);
                EXPECT_LE(sobolev_norm(f + h, idx), nf + sobolev_norm(h, idx) + 1e-9);
                EXPECT_NEAR(sobolev_norm(Complex(lambda) * f, idx), std::abs(lambda) * nf, 1e-10 * (1.0 + nf));
                if (n > 0) {
                    const double lower = sobolev_norm(f, SobolevIndex(n - 1, p));
                    if (std::isinf(p))
                        EXPECT_GE(nf, lower - 1e-10);
                    else
                        EXPECT_GE(std::pow(nf, p), std::pow(lower, p) - 1e-10);
                }
            }
        }
    }
}

TEST(SobolevIndex, RejectsSubunitExponent)
{
    EXPECT_THROW(SobolevIndex(1, 0.5), Error);
    EXPECT_DOUBLE_EQ(SobolevIndex(0, 2.0).conjugate(), 2.0);
    EXPECT_TRUE(std::isinf(SobolevIndex(0, 1.0).conjugate()));
}

TEST(Interpolate, CubicExactAndRangeChecked)
{
    const auto c = poly(unit, {1.0, -2.0, 0.5, 3.0});
    for (double t : {0.0, 0.013, 0.5, 0.77, 0.999, 1.0}) {
        const double exact = 1.0 - 2.0 * t + 0.5 * t * t + 3.0 * t * t * t;
        EXPECT_NEAR(interpolate(c, t)(0, 0).real(), exact, 1e-13) << t;
    }
    EXPECT_THROW(interpolate(c, 1.5), Error);
}

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "bvp/expr.hpp"

using bvp::Error;
using bvp::expr::Expr;

namespace {

std::string code_of(const std::string& src)
{
    try {
        Expr::parse(src);
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

/// Random expression source over the full grammar (no division, so every
/// sample is finite for bounded t and eps).
std::string random_source(std::mt19937& rng, int depth)
{
    std::uniform_int_distribution<int> pick(0, depth > 0 ? 9 : 3);
    std::uniform_real_distribution<double> num(0.0, 5.0);
    switch (pick(rng)) {
    case 0: return "t";
    case 1: return "eps";
    case 2: return "pi";
    case 3: return bvp::format_real(num(rng));
    case 4: return "(" + random_source(rng, depth - 1) + "+" + random_source(rng, depth - 1) + ")";
    case 5: return random_source(rng, depth - 1) + "-" + random_source(rng, depth - 1);
    case 6: return random_source(rng, depth - 1) + "*" + random_source(rng, depth - 1);
    case 7: return "-" + random_source(rng, depth - 1);
    case 8: return "sin(" + random_source(rng, depth - 1) + ")";
    default: return "exp(cos(" + random_source(rng, depth - 1) + "))^2";
    }
}

} // namespace

TEST(Expr, EvaluatesTheGrammar)
{
    EXPECT_DOUBLE_EQ(Expr::parse("1 + 2*3")(0, 0), 7.0);
    EXPECT_DOUBLE_EQ(Expr::parse("2^3^2")(0, 0), 512.0);
    EXPECT_DOUBLE_EQ(Expr::parse("-2^2")(0, 0), -4.0);
    EXPECT_DOUBLE_EQ(Expr::parse("2^-1")(0, 0), 0.5);
    EXPECT_DOUBLE_EQ(Expr::parse("8/4/2")(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(Expr::parse("1 - 2 - 3")(0, 0), -4.0);
    EXPECT_DOUBLE_EQ(Expr::parse("t*eps")(3.0, 0.5), 1.5);
    EXPECT_DOUBLE_EQ(Expr::parse("1.5e-1 * 2E1")(0, 0), 3.0);
    EXPECT_DOUBLE_EQ(Expr::parse("sqrt(abs(-4)) + sign(-3) + log(exp(2))")(0, 0), 3.0);
    EXPECT_NEAR(Expr::parse("sin(pi*t)")(0.5, 0), 1.0, 1e-15);
    EXPECT_NEAR(Expr::parse("cos(pi)")(0, 0), -1.0, 1e-15);
    EXPECT_DOUBLE_EQ(Expr::parse("sign(0)")(0, 0), 0.0);
}

TEST(Expr, ErrorCodes)
{
    EXPECT_EQ(code_of("t +"), "syntax-error");
    EXPECT_EQ(code_of(""), "syntax-error");
    EXPECT_EQ(code_of("2t"), "syntax-error");
    EXPECT_EQ(code_of("(t"), "syntax-error");
    EXPECT_EQ(code_of("t)"), "syntax-error");
    EXPECT_EQ(code_of("1e999"), "syntax-error");
    EXPECT_EQ(code_of("x"), "unknown-identifier");
    EXPECT_EQ(code_of("tan(t)"), "unknown-identifier");
    EXPECT_EQ(code_of("sin(t, eps)"), "arity-mismatch");
    EXPECT_EQ(code_of("sin()"), "arity-mismatch");
    try {
        Expr::parse("t + * 2");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), bvp::ErrorKind::validation);
        EXPECT_NE(std::string(e.what()).find("offset 4"), std::string::npos) << e.what();
    }
}

TEST(Expr, DivisionByExactZeroIsNumerical)
{
    const Expr e = Expr::parse("1/(t - 0.5)");
    try {
        e(0.5, 0.0);
        FAIL();
    } catch (const Error& err) {
        EXPECT_EQ(err.kind(), bvp::ErrorKind::numerical);
        EXPECT_EQ(err.code(), "division-by-zero");
    }
    EXPECT_DOUBLE_EQ(e(1.0, 0.0), 2.0);
}

TEST(Expr, SamplingReportsTheOffendingNode)
{
    const bvp::Grid g(0.0, 1.0, 8);
    try {
        bvp::expr::sample(Expr::parse("log(t - 0.5)"), g, 0.0);
        FAIL();
    } catch (const Error& err) {
        EXPECT_EQ(err.code(), "non-finite-sample");
        EXPECT_NE(std::string(err.what()).find("node 0"), std::string::npos) << err.what();
    }
    const auto s = bvp::expr::sample(Expr::parse("t + eps"), g, 2.0);
    EXPECT_DOUBLE_EQ(s(8).real(), 3.0);
}

TEST(Expr, Dependencies)
{
    EXPECT_TRUE(Expr::parse("sin(t)").depends_on_t());
    EXPECT_FALSE(Expr::parse("sin(t)").depends_on_eps());
    EXPECT_TRUE(Expr::parse("1 + eps^2").depends_on_eps());
    EXPECT_FALSE(Expr::parse("pi").depends_on_t());
}

TEST(Expr, PrintedFormReparsesToAnEqualTree)
{
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        const std::string src = random_source(rng, 4);
        const Expr e = Expr::parse(src);
        const Expr back = Expr::parse(e.str());
        EXPECT_TRUE(back == e) << src << " -> " << e.str();
        EXPECT_EQ(back.str(), e.str());
        for (int k = 0; k < 5; ++k) {
            const double t = u(rng), eps = u(rng);
            const double x = e(t, eps), y = back(t, eps);
            if (std::isfinite(x))
                EXPECT_EQ(x, y) << src;
        }
    }
}

TEST(Expr, NegativeConstantsPrintReparseably)
{
    const Expr e(-2.5);
    EXPECT_EQ(Expr::parse(e.str())(0, 0), -2.5);
    EXPECT_EQ(Expr::parse(Expr(1e-300).str())(0, 0), 1e-300);
}

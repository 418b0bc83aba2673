#include <gtest/gtest.h>

#include "bvp/companion.hpp"

using namespace bvp;

TEST(Companion, BlockStructureForSystems)
{
    const Grid g(0.0, 1.0, 8);
    const Index m = 2;
    std::vector<GridFunction> A;
    for (int k = 0; k < 3; ++k)
        A.push_back(GridFunction::tabulate(g, m, m, [k](double t) -> CMatrix {
            CMatrix a(2, 2);
            a << 10 * k + 1 + t, 10 * k + 2, 10 * k + 3, 10 * k + 4;
            return a;
        }));
    const auto f = GridFunction::tabulate(g, m, 1, [](double t) -> CMatrix {
        CMatrix v(2, 1);
        v << t, -t;
        return v;
    });
    const auto sys = build_companion(A, f);
    ASSERT_EQ(sys.K.rows(), 6);
    const Index node = 5;
    const double t = g.node(node);
    const CMatrix K = sys.K.at(node);
    CMatrix expected = CMatrix::Zero(6, 6);
    expected.block(0, 2, 2, 2) = -CMatrix::Identity(2, 2);
    expected.block(2, 4, 2, 2) = -CMatrix::Identity(2, 2);
    for (int k = 0; k < 3; ++k)
        expected.block(4, 2 * k, 2, 2) = A[k].at(node);
    EXPECT_EQ((K - expected).norm(), 0.0);
    const CMatrix gv = sys.g.at(node);
    EXPECT_EQ(gv(4, 0), Complex(t));
    EXPECT_EQ(gv(5, 0), Complex(-t));
    EXPECT_EQ(gv.topRows(4).norm(), 0.0);
}

TEST(Companion, FirstOrderIsIdentityReduction)
{
    const Grid g(0.0, 1.0, 8);
    const std::vector<GridFunction> A{GridFunction::scalar(g, [](double t) { return 3.0 * t; })};
    const auto f = GridFunction::scalar(g, [](double) { return 1.0; });
    const auto sys = build_companion(A, f);
    EXPECT_EQ((sys.K.storage() - A[0].storage()).norm(), 0.0);
    EXPECT_EQ((sys.g.storage() - f.storage()).norm(), 0.0);
}

TEST(Companion, ExtractStateRejectsWrongHeight)
{
    const Grid g(0.0, 1.0, 8);
    const GridFunction x(g, 5, 1);
    try {
        extract_state(x, 2, 2);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "shape-mismatch");
    }
    const auto parts = extract_state(GridFunction(g, 6, 1), 2, 3);
    EXPECT_EQ(parts.size(), 3u);
    EXPECT_EQ(parts[2].rows(), 2);
}

TEST(Companion, RejectsShapeMismatch)
{
    const Grid g(0.0, 1.0, 8);
    const std::vector<GridFunction> A{GridFunction(g, 2, 2)};
    EXPECT_THROW(build_companion(A, GridFunction(g, 3, 1)), Error);
}

#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "bvp/companion.hpp"
#include "bvp/grid_function.hpp"

namespace bvp {

namespace detail {

/// Coefficient samples at fractional grid coordinate s: exact at nodes,
/// local cubic interpolation in between.
inline Eigen::RowVectorXcd sample_at(const GridFunction& f, double s)
{
    const double rounded = std::round(s);
    if (std::abs(s - rounded) < 1e-12)
        return f.storage().row(static_cast<Index>(rounded));
    const auto st = cubic_stencil(s, f.grid().N());
    Eigen::RowVectorXcd acc = Eigen::RowVectorXcd::Zero(f.entries());
    for (Index k = 0; k < 4; ++k)
        acc += st.weights[k] * f.storage().row(st.start + k);
    return acc;
}

inline CMatrix unpack(const Eigen::RowVectorXcd& row, Index rows, Index cols)
{
    CMatrix v(rows, cols);
    for (Index c = 0; c < cols; ++c)
        for (Index r = 0; r < rows; ++r)
            v(r, c) = row(r + rows * c);
    return v;
}

/// Classical RK4 for X' = -K X + g 1^T from node `start` towards both ends,
/// with `substeps` RK4 steps per grid interval. Returns per-node states
/// flattened column-major into rows of the result.
inline CMatrix propagate(const GridFunction& K, const GridFunction* g, const CMatrix& X0, Index start, int substeps)
{
    const Grid& grid = K.grid();
    const Index n = K.rows();
    const Index cols = X0.cols();
    const double h = grid.h();
    CMatrix out(grid.size(), n * cols);
    auto store = [&](Index node, const CMatrix& X) {
        if (!X.allFinite())
            throw numerical_error("integration-blowup", "non-finite state at node " + std::to_string(node));
        out.row(node) = Eigen::Map<const Eigen::RowVectorXcd>(X.data(), n * cols);
    };
    auto rhs = [&](double s, const CMatrix& X) -> CMatrix {
        CMatrix d = -(unpack(sample_at(K, s), n, n) * X);
        if (g != nullptr)
            d.colwise() += unpack(sample_at(*g, s), n, 1).col(0);
        return d;
    };
    auto sweep = [&](int dir) {
        CMatrix X = X0;
        const double ds = static_cast<double>(dir) / substeps;
        const double dt = dir * h / substeps;
        for (Index i = start; dir > 0 ? i < grid.N() : i > 0; i += dir) {
            for (int j = 0; j < substeps; ++j) {
                const double s = static_cast<double>(i) + j * ds;
                const CMatrix k1 = rhs(s, X);
                const CMatrix k2 = rhs(s + 0.5 * ds, X + 0.5 * dt * k1);
                const CMatrix k3 = rhs(s + 0.5 * ds, X + 0.5 * dt * k2);
                const CMatrix k4 = rhs(s + ds, X + dt * k3);
                X += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
            store(i + dir, X);
        }
    };
    store(start, X0);
    sweep(+1);
    sweep(-1);
    return out;
}

inline Index anchor_node(const Grid& grid, double t0)
{
    if (!grid.contains(t0))
        throw validation_error("point-out-of-range", "anchor t0 outside [a, b]");
    return static_cast<Index>(std::llround((t0 - grid.a()) / grid.h()));
}

} // namespace detail

/// Solves x' + K x = g with x(a) = x_a on the grid of K.
inline GridFunction integrate(const GridFunction& K, const GridFunction& g, const CVector& x_a, int substeps = 1)
{
    const Index n = K.rows();
    if (K.cols() != n || g.rows() != n || g.cols() != 1 || x_a.size() != n || !(K.grid() == g.grid()))
        throw validation_error("shape-mismatch", "integrate needs K (n x n), g (n x 1), x_a (n) on one grid");
    if (!x_a.allFinite())
        throw validation_error("non-finite-sample", "initial state must be finite");
    if (substeps < 1)
        throw validation_error("invalid-substeps", "substeps must be positive");
    CMatrix data = detail::propagate(K, &g, x_a, 0, substeps);
    return GridFunction(K.grid(), n, 1, std::move(data));
}

/// Y_0..Y_{r-1} with Y_k^{(j)}(t0) = delta_{kj} I_m for j = 0..r-1, plus the
/// state matrix X whose columns x_k carry (Y, Y', ..., Y^{(r-1)}).
struct FundamentalSet
{
    std::vector<GridFunction> Y; // r functions, m x m
    double t0;
    GridFunction X; // rm x rm
    Index m;
    Index r;
    double min_abs_det_X;
    std::vector<std::string> warnings;

    /// Derivative j (0 <= j < r) of Y_k as an m x m function.
    GridFunction derivative_of(Index k, Index j) const
    {
        const Index n = r * m;
        CMatrix out(X.nodes(), m * m);
        for (Index c = 0; c < m; ++c)
            for (Index i = 0; i < m; ++i)
                out.col(i + m * c) = X.storage().col((j * m + i) + n * (k * m + c));
        return GridFunction(X.grid(), m, m, std::move(out));
    }
};

inline FundamentalSet fundamental_matrices(std::span<const GridFunction> A, double t0, int substeps = 1)
{
    if (A.empty())
        throw validation_error("shape-mismatch", "need r >= 1 coefficients");
    const Index m = A[0].rows();
    const Index r = static_cast<Index>(A.size());
    const Grid& grid = A[0].grid();
    const Index start = detail::anchor_node(grid, t0);
    const auto sys = build_companion(A, GridFunction(grid, m, 1));
    const Index n = r * m;
    CMatrix data = detail::propagate(sys.K, nullptr, CMatrix::Identity(n, n), start, substeps);
    GridFunction X(grid, n, n, std::move(data));

    FundamentalSet fs{{}, grid.node(start), X, m, r, infinity, {}};
    for (Index k = 0; k < r; ++k)
        fs.Y.push_back(fs.derivative_of(k, 0));
    for (Index i = 0; i < X.nodes(); ++i)
        fs.min_abs_det_X = std::min(fs.min_abs_det_X, std::abs(X.at(i).partialPivLu().determinant()));
    if (fs.min_abs_det_X < 1e-12)
        fs.warnings.push_back("near-singular-X: min |det X| = " + std::to_string(fs.min_abs_det_X));
    return fs;
}

/// Completes exact low derivatives y, ..., y^{(r-1)} of a solution of
/// y^{(r)} + sum_k A_k y^{(k)} = f with y^{(r)} taken from the equation and
/// orders above r by finite differences, up to `max_order`. Pass f = nullptr
/// for the homogeneous equation.
inline std::vector<GridFunction> ode_stack(std::vector<GridFunction> low, std::span<const GridFunction> A,
                                           const GridFunction* f, int max_order)
{
    const Index r = static_cast<Index>(A.size());
    if (static_cast<Index>(low.size()) != r)
        throw validation_error("shape-mismatch", "need exactly r low-order derivatives");
    if (max_order < r) {
        low.resize(max_order + 1, low.front());
        return low;
    }
    GridFunction top = f ? *f : GridFunction(low[0].grid(), low[0].rows(), low[0].cols());
    if (f && top.cols() != low[0].cols()) {
        // Matrix solutions of the homogeneous equation only.
        throw validation_error("shape-mismatch", "right-hand side shape differs from solution shape");
    }
    for (Index k = 0; k < r; ++k)
        top = top - multiply(A[k], low[k]);
    low.push_back(top);
    extend_stack(low, max_order);
    return low;
}

} // namespace bvp

#pragma once

#include <span>
#include <vector>

#include "bvp/grid_function.hpp"

namespace bvp {

/// First-order form x' + K x = g of y^{(r)} + sum_k A_k y^{(k)} = f,
/// with x = col(y, y', ..., y^{(r-1)}).
struct CompanionSystem
{
    GridFunction K; // rm x rm
    GridFunction g; // rm x 1
    Index m;
    Index r;
};

/// `A[k]` multiplies y^{(k)}, k = 0..r-1; every A[k] is m x m and f is m x 1.
inline CompanionSystem build_companion(std::span<const GridFunction> A, const GridFunction& f)
{
    if (A.empty())
        throw validation_error("shape-mismatch", "companion reduction needs r >= 1 coefficients");
    const Index r = static_cast<Index>(A.size());
    const Index m = f.rows();
    const Grid& grid = f.grid();
    if (f.cols() != 1)
        throw validation_error("shape-mismatch", "right-hand side must be a column");
    for (const auto& a : A)
        if (a.rows() != m || a.cols() != m || !(a.grid() == grid))
            throw validation_error("shape-mismatch", "coefficients must be m x m on the right-hand side's grid");

    const Index n = r * m;
    CMatrix K = CMatrix::Zero(grid.size(), n * n);
    auto entry = [n](Index row, Index col) { return row + n * col; };
    for (Index blk = 0; blk + 1 < r; ++blk)
        for (Index i = 0; i < m; ++i)
            K.col(entry(blk * m + i, (blk + 1) * m + i)).setConstant(-1.0);
    for (Index k = 0; k < r; ++k)
        for (Index c = 0; c < m; ++c)
            for (Index i = 0; i < m; ++i)
                K.col(entry((r - 1) * m + i, k * m + c)) = A[k].storage().col(i + m * c);

    CMatrix g = CMatrix::Zero(grid.size(), n);
    g.rightCols(m) = f.storage();
    return {GridFunction(grid, n, n, std::move(K)), GridFunction(grid, n, 1, std::move(g)), m, r};
}

/// Splits x = col(y, y', ..., y^{(r-1)}) into its r blocks of height m.
inline std::vector<GridFunction> extract_state(const GridFunction& x, Index m, Index r)
{
    if (m < 1 || r < 1 || x.cols() != 1 || x.rows() != m * r)
        throw validation_error("shape-mismatch",
                               "state has " + std::to_string(x.rows()) + " rows, expected r*m = " + std::to_string(m * r));
    std::vector<GridFunction> out;
    out.reserve(r);
    for (Index k = 0; k < r; ++k)
        out.push_back(x.block(k * m, m));
    return out;
}

} // namespace bvp

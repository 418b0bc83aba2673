#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "bvp/boundary_operator.hpp"
#include "bvp/cauchy.hpp"
#include "bvp/companion.hpp"
#include "bvp/grid_function.hpp"

namespace bvp {

/// y^{(r)} + sum_{k<r} A_k(t) y^{(k)} = f(t) on [a, b], B y = c, with data in
/// W_p^n and the solution sought in W_p^{n+r}.
struct Problem
{
    Dims dims;
    double p = 2.0;
    Grid grid;
    std::vector<GridFunction> A; // A[k] multiplies y^{(k)}
    GridFunction f;
    BoundaryOperator B;
    CVector c;

    SobolevIndex data_index() const { return {dims.n, p}; }
    SobolevIndex solution_index() const { return {dims.top_order(), p}; }

    void validate() const
    {
        dims.validate();
        if (!(p >= 1.0))
            throw validation_error("invalid-sobolev-index", "p must be >= 1 or infinity");
        if (static_cast<Index>(A.size()) != dims.r)
            throw validation_error("dimension-mismatch", "expected r = " + std::to_string(dims.r) + " coefficient matrices");
        for (const auto& a : A)
            if (!(a.grid() == grid) || a.rows() != dims.m || a.cols() != dims.m)
                throw validation_error("dimension-mismatch", "coefficients must be m x m on the problem grid");
        if (!(f.grid() == grid) || f.rows() != dims.m || f.cols() != 1)
            throw validation_error("dimension-mismatch", "right-hand side must be m x 1 on the problem grid");
        if (!(B.dims() == dims) || !(B.grid() == grid))
            throw validation_error("dimension-mismatch", "boundary operator built for different m, n, r or grid");
        if (B.empty())
            throw validation_error("empty-operator", "boundary operator has no terms");
        if (c.size() != dims.rows())
            throw validation_error("dimension-mismatch", "c must have rm = " + std::to_string(dims.rows()) + " entries");
        if (!c.allFinite())
            throw validation_error("non-finite-sample", "c must be finite");
    }
};

enum class Classification { unique, underdetermined, unsolvable };

inline const char* to_string(Classification c)
{
    switch (c) {
    case Classification::unique: return "unique";
    case Classification::underdetermined: return "underdetermined";
    case Classification::unsolvable: return "unsolvable";
    }
    return "?";
}

struct SolveOptions
{
    /// Anchor of the fundamental matrices; defaults to a.
    std::optional<double> t0;
    /// Raise the rank tolerance to a refined-integration estimate of the error in M.
    bool refine_rank = true;
};

struct Solution
{
    /// derivs[k] = y^{(k)} for k = 0..n+r: orders below r from the integrated
    /// state, order r from the equation, higher orders by finite differences.
    std::vector<GridFunction> derivs;
    CVector q;       // superposition coefficients col(q_0, ..., q_{r-1})
    CVector c_tilde; // c - B y_hat
    CharacteristicMatrix characteristic;
    Classification classification;
    Index kernel_dim = 0;
    double lsq_residual = 0.0;
    double ode_residual = 0.0;      // ||L y - f||_{0,2} with y^{(r)} differenced from y^{(r-1)}
    double boundary_residual = 0.0; // |B y - c|
    double min_abs_det_X = 0.0;
    std::vector<std::string> warnings;

    const GridFunction& y() const { return derivs.front(); }
};

namespace detail {

/// Companion state of the Cauchy problem with zero initial data.
inline GridFunction particular_state(const Problem& P)
{
    const auto sys = build_companion(P.A, P.f);
    return integrate(sys.K, sys.g, CVector::Zero(P.dims.rows()));
}

inline std::vector<GridFunction> solution_stack(const Problem& P, const GridFunction& state)
{
    auto low = extract_state(state, P.dims.m, P.dims.r);
    return ode_stack(std::move(low), P.A, &P.f, std::max(P.dims.top_order(), P.B.required_order()));
}

/// ||L y - f||_{0,2} with y^{(r)} differenced from the integrated y^{(r-1)},
/// so it measures the discretization rather than restating the equation.
inline double ode_residual(const Problem& P, std::span<const GridFunction> stack)
{
    const Index r = P.dims.r;
    GridFunction res = derivative(stack[r - 1], 1) - P.f;
    for (Index k = 0; k < r; ++k)
        res = res + multiply(P.A[k], stack[k]);
    return lp_norm(res, 2.0);
}

} // namespace detail

/// Solution of L y = f with y^{(j)}(a) = 0, j < r.
inline GridFunction particular_solution(const Problem& P)
{
    P.validate();
    return detail::particular_state(P).block(0, P.dims.m);
}

/// Characteristic matrix with the rank tolerance raised to ten times the
/// change in M when the fundamental matrices are recomputed with two RK4
/// steps per grid cell (a Richardson estimate of the integration error).
inline std::pair<FundamentalSet, CharacteristicMatrix> characteristic_of(const Problem& P, const SolveOptions& opt = {})
{
    const double t0 = opt.t0.value_or(P.grid.a());
    FundamentalSet F = fundamental_matrices(P.A, t0);
    CharacteristicMatrix cm = characteristic_matrix(P.B, F, P.A);
    if (opt.refine_rank) {
        const FundamentalSet fine = fundamental_matrices(P.A, t0, 2);
        const CMatrix M_fine = characteristic_matrix(P.B, fine, P.A).M;
        const double err = (16.0 / 15.0) * (cm.M - M_fine).jacobiSvd().singularValues()(0);
        cm = analyze_matrix(cm.M, 10.0 * err);
    }
    return {std::move(F), std::move(cm)};
}

/// Superposition solve y = y_hat + sum_k Y_k q_k with [B Y] q = c - B y_hat.
/// Rank-deficient systems get the minimum-norm least-squares q.
inline Solution solve(const Problem& P, const SolveOptions& opt = {})
{
    P.validate();
    auto [F, cm] = characteristic_of(P, opt);
    const GridFunction x_hat = detail::particular_state(P);
    const auto hat_stack = detail::solution_stack(P, x_hat);

    Solution sol{.characteristic = cm, .classification = Classification::unique};
    sol.c_tilde = P.c - P.B.apply(hat_stack);
    sol.min_abs_det_X = F.min_abs_det_X;
    sol.warnings = F.warnings;
    const Index n = P.dims.rows();
    sol.kernel_dim = n - cm.rank;

    if (cm.rank == n) {
        sol.q = cm.M.partialPivLu().solve(sol.c_tilde);
    } else {
        CVector sigma_inv = CVector::Zero(n);
        for (Index i = 0; i < cm.rank; ++i)
            sigma_inv(i) = 1.0 / cm.svals(i);
        sol.q = cm.right_singular * sigma_inv.asDiagonal() * cm.left_singular.adjoint() * sol.c_tilde;
        sol.lsq_residual = (cm.M * sol.q - sol.c_tilde).norm();
        sol.classification = sol.lsq_residual < 1e-8 * (1.0 + sol.c_tilde.norm()) ? Classification::underdetermined
                                                                                    : Classification::unsolvable;
    }
    if (cm.condition_number() > 1e12)
        sol.warnings.push_back("ill-conditioned characteristic matrix: cond = " + std::to_string(cm.condition_number()));

    const GridFunction state = x_hat + multiply(F.X, sol.q);
    sol.derivs = detail::solution_stack(P, state);
    sol.ode_residual = detail::ode_residual(P, sol.derivs);
    sol.boundary_residual = (P.B.apply(sol.derivs) - P.c).norm();
    sol.derivs.resize(P.dims.top_order() + 1, sol.derivs.front());
    return sol;
}

struct FredholmReport
{
    Index kernel_dim;
    Index cokernel_dim;
    std::vector<GridFunction> kernel_basis; // m x 1 each
    Complex det;
    CharacteristicMatrix characteristic;

    /// The homogeneous problem has only the trivial solution.
    bool condition0() const noexcept { return kernel_dim == 0; }
};

/// Kernel and cokernel of (L, B) through the characteristic matrix: both have
/// dimension rm - rank M, and ker(L, B) = { sum_k Y_k v_k : v in ker M }.
inline FredholmReport fredholm_report(const Problem& P, const SolveOptions& opt = {})
{
    P.validate();
    auto [F, cm] = characteristic_of(P, opt);
    FredholmReport rep{P.dims.rows() - cm.rank, P.dims.rows() - cm.rank, {}, cm.det, cm};
    const CMatrix V = cm.null_space();
    for (Index j = 0; j < V.cols(); ++j)
        rep.kernel_basis.push_back(multiply(F.X, CVector(V.col(j))).block(0, P.dims.m));
    return rep;
}

} // namespace bvp

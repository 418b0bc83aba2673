#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "bvp/cauchy.hpp"
#include "bvp/grid_function.hpp"

namespace bvp {

/// Structural constants: m equations of order r, data regularity n.
struct Dims
{
    Index m = 1;
    int n = 0;
    Index r = 1;

    Index rows() const noexcept { return r * m; }
    /// Highest derivative order of a solution in W^{n+r}.
    int top_order() const noexcept { return n + static_cast<int>(r); }

    void validate() const
    {
        if (m < 1 || r < 1 || n < 0)
            throw validation_error("dimension-mismatch", "need m >= 1, r >= 1, n >= 0");
    }

    friend bool operator==(const Dims&, const Dims&) = default;
};

/// W y^{(order)}(tau).
struct PointTerm
{
    double tau;
    int order;
    CMatrix weight; // rm x m
};

/// \int_a^b W(t) y^{(order)}(t) dt.
struct IntegralTerm
{
    GridFunction weight; // rm x m
    int order;
};

/// W (tau - t)_+^power / power!, the Taylor-remainder kernel of a point term.
/// For power 0 the kernel is 1 on [a, tau] and 0 beyond.
struct TruncatedPower
{
    double tau;
    int power;
    CMatrix weight;

    CMatrix evaluate(double t) const
    {
        if (t > tau)
            return CMatrix::Zero(weight.rows(), weight.cols());
        return weight * (std::pow(tau - t, power) / std::tgamma(power + 1.0));
    }
};

/// Kernel Phi of the canonical representation: a sampled smooth part plus
/// truncated powers kept in closed form so their breakpoints integrate exactly.
struct Kernel
{
    std::optional<GridFunction> smooth;
    std::vector<TruncatedPower> pieces;

    bool empty() const noexcept { return !smooth && pieces.empty(); }

    void add_smooth(const GridFunction& part) { smooth = smooth ? *smooth + part : part; }

    CMatrix evaluate(double t, Index rows, Index cols) const
    {
        CMatrix v = smooth ? interpolate(*smooth, t) : CMatrix::Zero(rows, cols);
        for (const auto& p : pieces)
            v += p.evaluate(t);
        return v;
    }

    GridFunction sample(const Grid& grid, Index rows, Index cols) const
    {
        return GridFunction::tabulate(grid, rows, cols, [&](double t) -> CMatrix {
            CMatrix v = CMatrix::Zero(rows, cols);
            if (smooth)
                v += smooth->at(std::llround((t - grid.a()) / grid.h()));
            for (const auto& p : pieces)
                v += p.evaluate(t);
            return v;
        });
    }
};

namespace detail {

inline constexpr std::array<double, 4> gauss_x = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                                  0.8611363115940526};
inline constexpr std::array<double, 4> gauss_w = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                                  0.3478548451374538};

/// \int_lo^hi fn(t) dt with 4-point Gauss-Legendre on every grid cell
/// intersecting [lo, hi]; `extra` breakpoints split cells further.
template<typename Fn>
CMatrix cellwise_gauss(const Grid& grid, double lo, double hi, std::vector<double> extra, Index rows, Index cols, Fn&& fn)
{
    CMatrix acc = CMatrix::Zero(rows, cols);
    if (!(hi > lo))
        return acc;
    std::vector<double> cuts;
    for (Index i = 0; i <= grid.N(); ++i) {
        const double t = grid.node(i);
        if (t > lo && t < hi)
            cuts.push_back(t);
    }
    for (double e : extra)
        if (e > lo && e < hi)
            cuts.push_back(e);
    cuts.push_back(lo);
    cuts.push_back(hi);
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double x0 = cuts[k];
        const double x1 = cuts[k + 1];
        if (!(x1 > x0))
            continue;
        const double mid = 0.5 * (x0 + x1);
        const double half = 0.5 * (x1 - x0);
        for (std::size_t q = 0; q < gauss_x.size(); ++q)
            acc += (gauss_w[q] * half) * fn(mid + half * gauss_x[q]);
    }
    return acc;
}

} // namespace detail

/// sqrt(\int_a^b |Phi_x - Phi_y|_F^2 dt), integrating across every breakpoint.
inline double kernel_l2_distance(const Kernel& x, const Kernel& y, const Grid& grid, Index rows, Index cols)
{
    std::vector<double> breaks;
    for (const auto* k : {&x, &y})
        for (const auto& p : k->pieces)
            breaks.push_back(p.tau);
    const CMatrix sq = detail::cellwise_gauss(grid, grid.a(), grid.b(), breaks, 1, 1, [&](double t) {
        const CMatrix d = x.evaluate(t, rows, cols) - y.evaluate(t, rows, cols);
        return CMatrix::Constant(1, 1, d.squaredNorm());
    });
    return std::sqrt(std::abs(sq(0, 0)));
}

/// General boundary operator B: W^{n+r} -> C^{rm}. Holds an optional
/// canonical part
///   sum_s alpha_s y^{(s)}(a) + \int_a^b Phi(t) y^{(n+r)}(t) dt
/// together with composite point and integral terms.
class BoundaryOperator
{
public:
    BoundaryOperator(const Grid& grid, const Dims& dims)
        : grid_(grid)
        , dims_(dims)
    {
        dims.validate();
    }

    const Grid& grid() const noexcept { return grid_; }
    const Dims& dims() const noexcept { return dims_; }
    const std::vector<CMatrix>& alphas() const noexcept { return alphas_; }
    const Kernel& kernel() const noexcept { return kernel_; }
    const std::vector<PointTerm>& points() const noexcept { return points_; }
    const std::vector<IntegralTerm>& integrals() const noexcept { return integrals_; }

    bool is_canonical() const noexcept { return points_.empty() && integrals_.empty(); }
    bool empty() const noexcept { return alphas_.empty() && kernel_.empty() && is_canonical(); }

    BoundaryOperator& add_point(double tau, int order, const CMatrix& weight)
    {
        check_weight(weight);
        if (order < 0 || order > dims_.top_order() - 1)
            throw validation_error("order-out-of-range", "point term of order " + std::to_string(order) +
                                                             " exceeds n + r - 1 = " + std::to_string(dims_.top_order() - 1));
        if (!grid_.contains(tau))
            throw validation_error("point-out-of-range", "tau = " + std::to_string(tau) + " outside [a, b]");
        points_.push_back({tau, order, weight});
        return *this;
    }

    BoundaryOperator& add_integral(const GridFunction& weight, int order)
    {
        if (!(weight.grid() == grid_) || weight.rows() != dims_.rows() || weight.cols() != dims_.m)
            throw validation_error("shape-mismatch", "integral weight must be rm x m on the operator's grid");
        if (order < 0 || order > dims_.top_order())
            throw validation_error("order-out-of-range", "integral term of order " + std::to_string(order) +
                                                             " exceeds n + r = " + std::to_string(dims_.top_order()));
        integrals_.push_back({weight, order});
        return *this;
    }

    /// Replaces the canonical part; `alphas` must have n + r entries (or be empty).
    BoundaryOperator& set_canonical(std::vector<CMatrix> alphas, Kernel kernel)
    {
        if (!alphas.empty() && static_cast<int>(alphas.size()) != dims_.top_order())
            throw validation_error("shape-mismatch", "canonical part needs n + r matrices alpha_s");
        for (const auto& a : alphas)
            check_weight(a);
        if (kernel.smooth && (!(kernel.smooth->grid() == grid_) || kernel.smooth->rows() != dims_.rows() ||
                              kernel.smooth->cols() != dims_.m))
            throw validation_error("shape-mismatch", "kernel must be rm x m on the operator's grid");
        alphas_ = std::move(alphas);
        kernel_ = std::move(kernel);
        return *this;
    }

    /// Highest derivative order `apply` reads from a stack.
    int required_order() const
    {
        int need = 0;
        if (!alphas_.empty())
            need = dims_.top_order() - 1;
        if (!kernel_.empty())
            need = dims_.top_order();
        for (const auto& p : points_)
            need = std::max(need, p.order);
        for (const auto& t : integrals_)
            need = std::max(need, t.order);
        return need;
    }

    /// B y for y given by its derivative stack (stack[k] = y^{(k)}, m x 1).
    CVector apply(std::span<const GridFunction> stack) const
    {
        const int need = required_order();
        if (static_cast<int>(stack.size()) <= need)
            throw validation_error("order-out-of-range", "operator reads y^{(" + std::to_string(need) + ")} but only " +
                                                             std::to_string(stack.size()) + " derivatives were supplied");
        for (int k = 0; k <= need; ++k)
            if (!(stack[k].grid() == grid_) || stack[k].rows() != dims_.m || stack[k].cols() != 1)
                throw validation_error("shape-mismatch", "derivative stack must hold m x 1 functions on the operator's grid");

        CVector out = CVector::Zero(dims_.rows());
        for (std::size_t s = 0; s < alphas_.size(); ++s)
            out += alphas_[s] * stack[s].at(0);
        if (!kernel_.empty()) {
            const GridFunction& top = stack[dims_.top_order()];
            if (kernel_.smooth)
                out += integrate(multiply(*kernel_.smooth, top)).col(0);
            for (const auto& p : kernel_.pieces)
                out += detail::cellwise_gauss(grid_, grid_.a(), std::min(p.tau, grid_.b()), {}, dims_.rows(), 1,
                                              [&](double t) -> CMatrix { return p.evaluate(t) * interpolate(top, t); });
        }
        for (const auto& p : points_)
            out += p.weight * interpolate(stack[p.order], p.tau);
        for (const auto& t : integrals_)
            out += integrate(multiply(t.weight, stack[t.order])).col(0);
        return out;
    }

    /// Equivalent operator with only a canonical part: point and integral terms
    /// are rewritten through Taylor expansion about a with integral remainder.
    BoundaryOperator canonicalize() const
    {
        const Index rows = dims_.rows();
        const Index m = dims_.m;
        const int top = dims_.top_order();
        const double a = grid_.a();
        std::vector<CMatrix> alphas = alphas_.empty() ? std::vector<CMatrix>(top, CMatrix::Zero(rows, m)) : alphas_;
        Kernel kernel = kernel_;

        for (const auto& p : points_) {
            for (int s = p.order; s < top; ++s)
                alphas[s] += p.weight * (std::pow(p.tau - a, s - p.order) / std::tgamma(s - p.order + 1.0));
            if (p.tau > a)
                kernel.pieces.push_back({p.tau, top - 1 - p.order, p.weight});
        }

        for (const auto& t : integrals_) {
            if (t.order == top) {
                kernel.add_smooth(t.weight);
                continue;
            }
            // alpha_s += \int W(t) (t - a)^{s-d} / (s-d)! dt
            for (int s = t.order; s < top; ++s) {
                const int k = s - t.order;
                const GridFunction w = GridFunction::tabulate(grid_, rows, m, [&](double x) -> CMatrix {
                    return CMatrix::Constant(rows, m, std::pow(x - a, k) / std::tgamma(k + 1.0));
                });
                alphas[s] += integrate(elementwise(t.weight, w));
            }
            // Phi(u) += \int_u^b W(t) (t - u)^K / K! dt, expanded in powers of (t - a).
            const int K = top - 1 - t.order;
            std::vector<GridFunction> moments; // cumulative \int_a^u W(t) (t - a)^k dt
            for (int k = 0; k <= K; ++k) {
                const GridFunction pw = GridFunction::tabulate(grid_, rows, m, [&](double x) -> CMatrix {
                    return CMatrix::Constant(rows, m, std::pow(x - a, k));
                });
                moments.push_back(antiderivative(elementwise(t.weight, pw)));
            }
            CMatrix phi = CMatrix::Zero(grid_.size(), rows * m);
            for (Index i = 0; i < grid_.size(); ++i) {
                const double u = grid_.node(i) - a;
                for (int k = 0; k <= K; ++k) {
                    const double coef = binomial(K, k) * std::pow(-u, K - k) / std::tgamma(K + 1.0);
                    phi.row(i) += coef * (moments[k].storage().row(grid_.N()) - moments[k].storage().row(i));
                }
            }
            kernel.add_smooth(GridFunction(grid_, rows, m, std::move(phi)));
        }

        BoundaryOperator out(grid_, dims_);
        out.set_canonical(std::move(alphas), std::move(kernel));
        return out;
    }

private:
    static double binomial(int n, int k) { return std::tgamma(n + 1.0) / (std::tgamma(k + 1.0) * std::tgamma(n - k + 1.0)); }

    static GridFunction elementwise(const GridFunction& x, const GridFunction& y)
    {
        return GridFunction(x.grid(), x.rows(), x.cols(), x.storage().cwiseProduct(y.storage()));
    }

    void check_weight(const CMatrix& w) const
    {
        if (w.rows() != dims_.rows() || w.cols() != dims_.m)
            throw validation_error("shape-mismatch", "boundary weights must be rm x m");
        if (!w.allFinite())
            throw validation_error("non-finite-sample", "boundary weights must be finite");
    }

    Grid grid_;
    Dims dims_;
    std::vector<CMatrix> alphas_;
    Kernel kernel_;
    std::vector<PointTerm> points_;
    std::vector<IntegralTerm> integrals_;
};

/// The rm x rm matrix [B Y] = ([B Y_0] ... [B Y_{r-1}]) with its spectrum.
struct CharacteristicMatrix
{
    CMatrix M;
    Complex det;
    Index rank;
    Eigen::VectorXd svals;
    double rank_tolerance;
    CMatrix right_singular; // V
    CMatrix left_singular;  // U

    double condition_number() const
    {
        const double lo = svals.size() ? svals(svals.size() - 1) : 0.0;
        return lo > 0.0 ? svals(0) / lo : infinity;
    }

    /// Orthonormal basis of ker M (columns).
    CMatrix null_space() const { return right_singular.rightCols(M.cols() - rank); }

    /// Orthonormal basis of the orthogonal complement of range M (columns).
    CMatrix cokernel() const { return left_singular.rightCols(M.rows() - rank); }
};

/// Spectral summary of a square matrix; singular values at or below
/// max(1e-10 * sigma_max, floor) count as zero.
inline CharacteristicMatrix analyze_matrix(const CMatrix& M, double floor = 0.0)
{
    Eigen::JacobiSVD<CMatrix> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    CharacteristicMatrix cm{M, M.partialPivLu().determinant(), 0, svd.singularValues(), 0.0, svd.matrixV(), svd.matrixU()};
    const double smax = cm.svals.size() ? cm.svals(0) : 0.0;
    cm.rank_tolerance = std::max(1e-10 * smax, floor);
    for (Index i = 0; i < cm.svals.size(); ++i)
        if (cm.svals(i) > cm.rank_tolerance)
            ++cm.rank;
    return cm;
}

/// Derivative stack of column `j` of Y_k, up to `max_order`.
inline std::vector<GridFunction> fundamental_column_stack(const FundamentalSet& F, std::span<const GridFunction> A,
                                                          Index k, Index j, int max_order)
{
    std::vector<GridFunction> low;
    for (Index l = 0; l < F.r; ++l)
        low.push_back(F.derivative_of(k, l).column(j));
    return ode_stack(std::move(low), A, nullptr, max_order);
}

/// Column j of block l is B applied to column j of Y_l. `floor` raises the
/// rank tolerance (e.g. to a discretization-error estimate).
inline CharacteristicMatrix characteristic_matrix(const BoundaryOperator& B, const FundamentalSet& F,
                                                  std::span<const GridFunction> A, double floor = 0.0)
{
    const Dims& d = B.dims();
    if (F.m != d.m || F.r != d.r || static_cast<Index>(A.size()) != d.r)
        throw validation_error("dimension-mismatch", "fundamental set does not match the operator's m, r");
    const Index n = d.rows();
    CMatrix M(n, n);
    const int need = std::max(B.required_order(), static_cast<int>(d.r) - 1);
    for (Index l = 0; l < d.r; ++l)
        for (Index j = 0; j < d.m; ++j)
            M.col(l * d.m + j) = B.apply(fundamental_column_stack(F, A, l, j, need));
    return analyze_matrix(M, floor);
}

} // namespace bvp

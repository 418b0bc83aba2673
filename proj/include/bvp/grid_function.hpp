#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bvp/error.hpp"

namespace bvp {

using Complex = std::complex<double>;
using Index = Eigen::Index;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr double infinity = std::numeric_limits<double>::infinity();

/// %.17g formatting, used for every printed real; negative zero prints as 0.
inline std::string format_real(double v)
{
    if (v == 0.0)
        return "0";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Uniform grid on [a, b] with N subintervals (N + 1 nodes).
class Grid
{
public:
    Grid(double a, double b, int N)
        : a_(a)
        , b_(b)
        , N_(N)
    {
        if (!(std::isfinite(a) && std::isfinite(b)) || !(a < b))
            throw validation_error("invalid-interval", "require finite a < b");
        if (N < 8)
            throw validation_error("grid-too-coarse", "N must be at least 8, got " + std::to_string(N));
    }

    double a() const noexcept { return a_; }
    double b() const noexcept { return b_; }
    int N() const noexcept { return N_; }
    Index size() const noexcept { return N_ + 1; }
    double h() const noexcept { return (b_ - a_) / N_; }

    double node(Index i) const noexcept
    {
        return i == N_ ? b_ : a_ + static_cast<double>(i) * h();
    }

    bool contains(double t) const noexcept { return t >= a_ && t <= b_; }

    friend bool operator==(const Grid& x, const Grid& y) noexcept
    {
        return x.a_ == y.a_ && x.b_ == y.b_ && x.N_ == y.N_;
    }

private:
    double a_;
    double b_;
    int N_;
};

/// Sobolev space index (n derivatives, integrability exponent p; p may be `infinity`).
struct SobolevIndex
{
    int n = 0;
    double p = 2.0;

    SobolevIndex() = default;
    SobolevIndex(int n_, double p_)
        : n(n_)
        , p(p_)
    {
        if (n < 0)
            throw validation_error("invalid-sobolev-index", "n must be nonnegative");
        if (!(p >= 1.0))
            throw validation_error("invalid-sobolev-index", "p must be >= 1 or infinity");
    }

    bool is_infinite() const noexcept { return std::isinf(p); }

    /// Conjugate exponent p' with 1/p + 1/p' = 1.
    double conjugate() const noexcept
    {
        if (is_infinite())
            return 1.0;
        if (p == 1.0)
            return infinity;
        return p / (p - 1.0);
    }
};

/// Matrix-valued function sampled on a Grid. Samples are stored node-major:
/// column `i + rows * j` of the storage holds entry (i, j) at every node.
class GridFunction
{
public:
    GridFunction(const Grid& grid, Index rows, Index cols)
        : grid_(grid)
        , rows_(rows)
        , cols_(cols)
        , data_(CMatrix::Zero(grid.size(), rows * cols))
    {
        if (rows < 1 || cols < 1)
            throw validation_error("shape-mismatch", "grid function needs a positive shape");
    }

    /// Wraps node-major storage of shape (N + 1) x (rows * cols).
    GridFunction(const Grid& grid, Index rows, Index cols, CMatrix data)
        : grid_(grid)
        , rows_(rows)
        , cols_(cols)
        , data_(std::move(data))
    {
        if (rows < 1 || cols < 1 || data_.rows() != grid.size() || data_.cols() != rows * cols)
            throw validation_error("shape-mismatch", "sample storage does not match grid and shape");
        if (!data_.allFinite())
            throw numerical_error("non-finite-sample", "grid function samples must be finite");
    }

    /// Samples `fn(t)` at every node. `fn` returns a matrix of shape rows x cols
    /// or, for scalar functions, anything convertible to Complex.
    template<typename Fn>
    static GridFunction tabulate(const Grid& grid, Index rows, Index cols, Fn&& fn)
    {
        CMatrix data(grid.size(), rows * cols);
        for (Index i = 0; i < grid.size(); ++i) {
            const double t = grid.node(i);
            if constexpr (std::is_convertible_v<decltype(fn(t)), Complex>) {
                data(i, 0) = Complex(fn(t));
            } else {
                const CMatrix v = fn(t);
                for (Index c = 0; c < cols; ++c)
                    for (Index r = 0; r < rows; ++r)
                        data(i, r + rows * c) = v(r, c);
            }
        }
        return GridFunction(grid, rows, cols, std::move(data));
    }

    template<typename Fn>
    static GridFunction scalar(const Grid& grid, Fn&& fn)
    {
        return tabulate(grid, 1, 1, std::forward<Fn>(fn));
    }

    static GridFunction constant(const Grid& grid, const CMatrix& value)
    {
        return tabulate(grid, value.rows(), value.cols(), [&](double) -> CMatrix { return value; });
    }

    const Grid& grid() const noexcept { return grid_; }
    Index rows() const noexcept { return rows_; }
    Index cols() const noexcept { return cols_; }
    Index entries() const noexcept { return rows_ * cols_; }
    Index nodes() const noexcept { return data_.rows(); }
    const CMatrix& storage() const noexcept { return data_; }

    Complex operator()(Index node, Index r = 0, Index c = 0) const { return data_(node, r + rows_ * c); }

    CMatrix at(Index node) const
    {
        CMatrix v(rows_, cols_);
        for (Index c = 0; c < cols_; ++c)
            for (Index r = 0; r < rows_; ++r)
                v(r, c) = data_(node, r + rows_ * c);
        return v;
    }

    /// Node samples of entry (r, c).
    CVector component(Index r, Index c = 0) const { return data_.col(r + rows_ * c); }

    GridFunction entry(Index r, Index c = 0) const { return GridFunction(grid_, 1, 1, component(r, c)); }

    /// Column c as a rows x 1 function.
    GridFunction column(Index c) const
    {
        return GridFunction(grid_, rows_, 1, data_.middleCols(rows_ * c, rows_));
    }

    /// Rows [r0, r0 + count) of column c.
    GridFunction block(Index r0, Index count, Index c = 0) const
    {
        CMatrix out(nodes(), count);
        for (Index r = 0; r < count; ++r)
            out.col(r) = data_.col(r0 + r + rows_ * c);
        return GridFunction(grid_, count, 1, std::move(out));
    }

    friend GridFunction operator+(const GridFunction& x, const GridFunction& y)
    {
        check_compatible(x, y);
        return GridFunction(x.grid_, x.rows_, x.cols_, x.data_ + y.data_);
    }

    friend GridFunction operator-(const GridFunction& x, const GridFunction& y)
    {
        check_compatible(x, y);
        return GridFunction(x.grid_, x.rows_, x.cols_, x.data_ - y.data_);
    }

    friend GridFunction operator*(Complex s, const GridFunction& x)
    {
        return GridFunction(x.grid_, x.rows_, x.cols_, s * x.data_);
    }

    friend GridFunction operator-(const GridFunction& x) { return Complex(-1.0) * x; }

    /// Pointwise matrix product (x * y)(t) = x(t) y(t).
    friend GridFunction multiply(const GridFunction& x, const GridFunction& y)
    {
        if (!(x.grid_ == y.grid_) || x.cols_ != y.rows_)
            throw validation_error("shape-mismatch", "pointwise product of incompatible grid functions");
        CMatrix out(x.nodes(), x.rows_ * y.cols_);
        for (Index i = 0; i < x.nodes(); ++i) {
            const CMatrix v = x.at(i) * y.at(i);
            for (Index c = 0; c < y.cols_; ++c)
                out.row(i).segment(x.rows_ * c, x.rows_) = v.col(c).transpose();
        }
        return GridFunction(x.grid_, x.rows_, y.cols_, std::move(out));
    }

    /// Constant matrix times function: (W * y)(t) = W y(t).
    friend GridFunction multiply(const CMatrix& w, const GridFunction& y)
    {
        if (w.cols() != y.rows_)
            throw validation_error("shape-mismatch", "matrix/grid-function product");
        CMatrix out(y.nodes(), w.rows() * y.cols_);
        for (Index c = 0; c < y.cols_; ++c)
            out.middleCols(w.rows() * c, w.rows()) = y.data_.middleCols(y.rows_ * c, y.rows_) * w.transpose();
        return GridFunction(y.grid_, w.rows(), y.cols_, std::move(out));
    }

    /// Function times constant vector: (y * v)(t) = y(t) v.
    friend GridFunction multiply(const GridFunction& y, const CVector& v)
    {
        if (v.size() != y.cols_)
            throw validation_error("shape-mismatch", "grid-function/vector product");
        CMatrix out = CMatrix::Zero(y.nodes(), y.rows_);
        for (Index c = 0; c < y.cols_; ++c)
            out += v(c) * y.data_.middleCols(y.rows_ * c, y.rows_);
        return GridFunction(y.grid_, y.rows_, 1, std::move(out));
    }

private:
    static void check_compatible(const GridFunction& x, const GridFunction& y)
    {
        if (!(x.grid_ == y.grid_) || x.rows_ != y.rows_ || x.cols_ != y.cols_)
            throw validation_error("shape-mismatch", "grid functions differ in grid or shape");
    }

    Grid grid_;
    Index rows_;
    Index cols_;
    CMatrix data_;
};

/// Vertically stacks column functions of equal grid into one column function.
inline GridFunction stack_rows(std::span<const GridFunction> parts)
{
    if (parts.empty())
        throw validation_error("shape-mismatch", "nothing to stack");
    Index total = 0;
    for (const auto& p : parts) {
        if (p.cols() != 1 || !(p.grid() == parts[0].grid()))
            throw validation_error("shape-mismatch", "stacked parts must be columns on one grid");
        total += p.rows();
    }
    CMatrix out(parts[0].nodes(), total);
    Index at = 0;
    for (const auto& p : parts) {
        out.middleCols(at, p.rows()) = p.storage();
        at += p.rows();
    }
    return GridFunction(parts[0].grid(), total, 1, std::move(out));
}

namespace detail {

/// Fornberg's recursion: weights[k][j] for the k-th derivative at x0 from nodes x.
inline std::vector<std::vector<double>> fd_weights(double x0, std::span<const double> x, int max_order)
{
    const int n = static_cast<int>(x.size());
    std::vector<std::vector<double>> c(max_order + 1, std::vector<double>(n, 0.0));
    double c1 = 1.0;
    double c4 = x[0] - x0;
    c[0][0] = 1.0;
    for (int i = 1; i < n; ++i) {
        const int mn = std::min(i, max_order);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[i] - x0;
        for (int j = 0; j < i; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for (int k = mn; k >= 1; --k)
                c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    return c;
}

/// 4th-order-accurate stencil for one derivative order at node i, in units of h.
struct Stencil
{
    Index start;
    std::vector<double> weights;
};

inline Stencil derivative_stencil(Index i, Index N, int order)
{
    const Index half = (order + 3) / 2;
    Index start;
    Index size;
    if (i - half >= 0 && i + half <= N) {
        start = i - half;
        size = 2 * half + 1;
    } else {
        size = order + 4;
        start = std::clamp<Index>(i - size / 2, 0, N + 1 - size);
    }
    std::vector<double> x(size);
    for (Index k = 0; k < size; ++k)
        x[k] = static_cast<double>(start + k);
    auto w = fd_weights(static_cast<double>(i), x, order);
    return {start, std::move(w[order])};
}

/// Weights for local cubic interpolation at grid coordinate s = (t - a) / h.
inline Stencil cubic_stencil(double s, Index N)
{
    const Index base = std::clamp<Index>(static_cast<Index>(std::floor(s)) - 1, 0, N - 3);
    const double x[4] = {double(base), double(base + 1), double(base + 2), double(base + 3)};
    auto w = fd_weights(s, x, 0);
    return {base, std::move(w[0])};
}

} // namespace detail

/// Interpolated value of f at t (local cubic through the four nearest nodes).
inline CMatrix interpolate(const GridFunction& f, double t)
{
    const Grid& g = f.grid();
    if (!(t >= g.a() - 1e-12 * (g.b() - g.a()) && t <= g.b() + 1e-12 * (g.b() - g.a())))
        throw validation_error("point-out-of-range", "t = " + std::to_string(t) + " outside [a, b]");
    const auto st = detail::cubic_stencil((t - g.a()) / g.h(), g.N());
    Eigen::RowVectorXcd row = Eigen::RowVectorXcd::Zero(f.entries());
    for (Index k = 0; k < 4; ++k)
        row += st.weights[k] * f.storage().row(st.start + k);
    CMatrix v(f.rows(), f.cols());
    for (Index c = 0; c < f.cols(); ++c)
        for (Index r = 0; r < f.rows(); ++r)
            v(r, c) = row(r + f.rows() * c);
    return v;
}

/// Finite-difference derivative of the given order. Orders above 4 are
/// composed from passes of order at most 4; each pass needs N >= 4 * order.
inline GridFunction derivative(const GridFunction& f, int order)
{
    if (order < 0)
        throw validation_error("invalid-order", "derivative order must be nonnegative");
    if (order == 0)
        return f;
    if (order > 4)
        return derivative(derivative(f, 4), order - 4);
    const Grid& g = f.grid();
    const Index N = g.N();
    if (N < 4 * order)
        throw validation_error("grid-too-coarse",
                               "order " + std::to_string(order) + " needs N >= " + std::to_string(4 * order));
    const double scale = std::pow(g.h(), -order);
    CMatrix out(f.nodes(), f.entries());
    for (Index i = 0; i <= N; ++i) {
        const auto st = detail::derivative_stencil(i, N, order);
        Eigen::RowVectorXcd acc = Eigen::RowVectorXcd::Zero(f.entries());
        for (std::size_t k = 0; k < st.weights.size(); ++k)
            acc += st.weights[k] * f.storage().row(st.start + static_cast<Index>(k));
        out.row(i) = scale * acc;
    }
    return GridFunction(g, f.rows(), f.cols(), std::move(out));
}

/// Cumulative integral F(t_i) = \int_a^{t_i} f, exact for cubic f.
inline GridFunction antiderivative(const GridFunction& f)
{
    const Grid& g = f.grid();
    const Index N = g.N();
    const double h = g.h();
    CMatrix out(f.nodes(), f.entries());
    out.row(0).setZero();
    const auto& d = f.storage();
    for (Index i = 0; i < N; ++i) {
        Eigen::RowVectorXcd piece;
        if (i == 0)
            piece = (9.0 * d.row(0) + 19.0 * d.row(1) - 5.0 * d.row(2) + d.row(3)) / 24.0;
        else if (i == N - 1)
            piece = (d.row(N - 3) - 5.0 * d.row(N - 2) + 19.0 * d.row(N - 1) + 9.0 * d.row(N)) / 24.0;
        else
            piece = (-d.row(i - 1) + 13.0 * d.row(i) + 13.0 * d.row(i + 1) - d.row(i + 2)) / 24.0;
        out.row(i + 1) = out.row(i) + h * piece;
    }
    return GridFunction(g, f.rows(), f.cols(), std::move(out));
}

/// Composite Simpson weights on the grid (3/8 rule on the last three panels when N is odd).
inline Eigen::VectorXd simpson_weights(const Grid& g)
{
    const Index N = g.N();
    const double h = g.h();
    Eigen::VectorXd w = Eigen::VectorXd::Zero(N + 1);
    const Index even_end = (N % 2 == 0) ? N : N - 3;
    for (Index i = 0; i < even_end; i += 2) {
        w(i) += h / 3.0;
        w(i + 1) += 4.0 * h / 3.0;
        w(i + 2) += h / 3.0;
    }
    if (even_end != N) {
        w(N - 3) += 3.0 * h / 8.0;
        w(N - 2) += 9.0 * h / 8.0;
        w(N - 1) += 9.0 * h / 8.0;
        w(N) += 3.0 * h / 8.0;
    }
    return w;
}

/// Entrywise \int_a^b f(t) dt.
inline CMatrix integrate(const GridFunction& f)
{
    const Eigen::VectorXcd w = simpson_weights(f.grid()).cast<Complex>();
    const Eigen::RowVectorXcd sums = w.transpose() * f.storage();
    CMatrix v(f.rows(), f.cols());
    for (Index c = 0; c < f.cols(); ++c)
        for (Index r = 0; r < f.rows(); ++r)
            v(r, c) = sums(r + f.rows() * c);
    return v;
}

namespace detail {

inline double lp_of_samples(const CVector& samples, const Grid& g, double p)
{
    if (std::isinf(p))
        return samples.size() ? samples.cwiseAbs().maxCoeff() : 0.0;
    const Eigen::VectorXd w = simpson_weights(g);
    double acc = 0.0;
    for (Index i = 0; i < samples.size(); ++i)
        acc += w(i) * std::pow(std::abs(samples(i)), p);
    return std::pow(std::max(acc, 0.0), 1.0 / p);
}

inline void check_p(double p)
{
    if (!(p >= 1.0))
        throw validation_error("invalid-sobolev-index", "p must be >= 1 or infinity");
}

} // namespace detail

/// L_p norm; for vector or matrix shapes the entry norms are summed.
inline double lp_norm(const GridFunction& f, double p)
{
    detail::check_p(p);
    double total = 0.0;
    for (Index e = 0; e < f.entries(); ++e)
        total += detail::lp_of_samples(f.storage().col(e), f.grid(), p);
    return total;
}

/// W_p^n norm from precomputed derivatives: derivs[k] holds f^{(k)}, k = 0..n.
/// Scalar entries combine derivative L_p norms in l_p (max for p = infinity);
/// entry norms are then summed.
inline double sobolev_norm(std::span<const GridFunction> derivs, double p)
{
    detail::check_p(p);
    if (derivs.empty())
        throw validation_error("shape-mismatch", "empty derivative stack");
    const Index entries = derivs[0].entries();
    double total = 0.0;
    for (Index e = 0; e < entries; ++e) {
        double acc = 0.0;
        for (const auto& d : derivs) {
            const double v = detail::lp_of_samples(d.storage().col(e), d.grid(), p);
            acc = std::isinf(p) ? std::max(acc, v) : acc + std::pow(v, p);
        }
        total += std::isinf(p) ? acc : std::pow(acc, 1.0 / p);
    }
    return total;
}

/// f, f', ..., f^{(max_order)} by finite differences.
inline std::vector<GridFunction> derivative_stack(const GridFunction& f, int max_order)
{
    std::vector<GridFunction> out{f};
    for (int k = 1; k <= max_order; ++k)
        out.push_back(derivative(f, k));
    return out;
}

/// Extends a stack of exact lower derivatives up to max_order by
/// differencing its last entry.
inline void extend_stack(std::vector<GridFunction>& stack, int max_order)
{
    if (stack.empty())
        throw validation_error("shape-mismatch", "empty derivative stack");
    const int have = static_cast<int>(stack.size()) - 1;
    if (have >= max_order) {
        stack.resize(max_order + 1, stack.front());
        return;
    }
    const GridFunction top = stack.back();
    for (int k = 1; have + k <= max_order; ++k)
        stack.push_back(derivative(top, k));
}

inline double sobolev_norm(const GridFunction& f, const SobolevIndex& idx)
{
    const auto stack = derivative_stack(f, idx.n);
    return sobolev_norm(stack, idx.p);
}

} // namespace bvp

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bvp/solver.hpp"

namespace bvp {

/// eps -> Problem on [0, eps0) with the limit problem at eps = 0, sampled at
/// strictly decreasing eps_values.
struct ParamFamily
{
    Problem limit;
    std::vector<double> eps_values;
    std::function<Problem(double)> make;
    double eps0 = 1.0;
    /// Convergence threshold, relative to max(1, largest tabulated value).
    double conv_tolerance = 1e-3;

    void validate() const
    {
        limit.validate();
        if (!make)
            throw validation_error("schema-violation", "family has no problem generator");
        if (!(eps0 > 0.0))
            throw validation_error("schema-violation", "eps0 must be positive");
        if (eps_values.empty())
            throw validation_error("schema-violation", "family needs at least one eps value");
        for (std::size_t i = 0; i < eps_values.size(); ++i) {
            if (!(eps_values[i] > 0.0 && eps_values[i] < eps0))
                throw validation_error("schema-violation", "eps values must lie in (0, eps0)");
            if (i > 0 && !(eps_values[i] < eps_values[i - 1]))
                throw validation_error("schema-violation", "eps values must be strictly decreasing");
        }
        if (!(conv_tolerance > 0.0))
            throw validation_error("schema-violation", "conv_tolerance must be positive");
    }

    Problem at(double eps) const
    {
        Problem P = make(eps);
        P.validate();
        if (!(P.dims == limit.dims) || !(P.grid == limit.grid) || P.p != limit.p)
            throw validation_error("dimension-mismatch", "family member differs from the limit in m, n, r, p or grid");
        return P;
    }
};

/// Tabulated convergence check: verdict holds iff the last value is at most
/// tolerance * max(1, largest value) and the second half of the table is
/// nonincreasing up to 10% slack.
struct ConvergenceVerdict
{
    bool holds;
    double threshold;
};

inline ConvergenceVerdict convergence_verdict(const std::vector<double>& values, double tolerance)
{
    if (values.empty())
        return {true, tolerance};
    const double largest = *std::max_element(values.begin(), values.end());
    const double threshold = tolerance * std::max(1.0, largest);
    const double noise = 1e-12 * std::max(1.0, largest);
    bool ok = values.back() <= threshold;
    for (std::size_t i = std::max<std::size_t>(1, values.size() / 2); i < values.size(); ++i)
        ok = ok && values[i] <= 1.1 * values[i - 1] + noise;
    return {ok, threshold};
}

struct Condition0Check
{
    bool holds;
    Complex det;
    Index kernel_dim;
};

inline Condition0Check check_condition0(const ParamFamily& F)
{
    const auto rep = fredholm_report(F.limit);
    return {rep.condition0(), rep.det, rep.kernel_dim};
}

struct LimitTable
{
    std::vector<double> eps;
    std::vector<std::vector<double>> values; // per eps: per-coefficient (I) or a single gap (II)
    std::vector<double> worst;               // per eps: max over the row
    ConvergenceVerdict verdict;
    std::vector<std::string> labels;         // coefficient names (I) or probe names (II)
};

/// delta_k(eps) = ||A_k(., eps) - A_k(., 0)||_{n,p} for every coefficient.
inline LimitTable check_limit_I(const ParamFamily& F)
{
    F.validate();
    LimitTable t{};
    for (Index k = 0; k < F.limit.dims.r; ++k)
        t.labels.push_back("A" + std::to_string(k));
    for (double eps : F.eps_values) {
        const Problem P = F.at(eps);
        std::vector<double> row;
        for (Index k = 0; k < F.limit.dims.r; ++k)
            row.push_back(sobolev_norm(P.A[k] - F.limit.A[k], F.limit.data_index()));
        t.eps.push_back(eps);
        t.worst.push_back(*std::max_element(row.begin(), row.end()));
        t.values.push_back(std::move(row));
    }
    t.verdict = convergence_verdict(t.worst, F.conv_tolerance);
    return t;
}

/// A named test function with its derivative stack.
struct Probe
{
    std::string name;
    std::vector<GridFunction> stack;
};

/// Monomials e_i t^k (k = 0..n+r) with exact derivatives, plus the columns of
/// the limit problem's fundamental matrices.
inline std::vector<Probe> default_probes(const ParamFamily& F)
{
    const Problem& L = F.limit;
    const int top = L.dims.top_order();
    std::vector<Probe> probes;
    for (Index i = 0; i < L.dims.m; ++i) {
        for (int k = 0; k <= top; ++k) {
            Probe pr{"e" + std::to_string(i + 1) + "*t^" + std::to_string(k), {}};
            for (int d = 0; d <= top; ++d) {
                pr.stack.push_back(GridFunction::tabulate(L.grid, L.dims.m, 1, [&](double t) -> CMatrix {
                    CMatrix v = CMatrix::Zero(L.dims.m, 1);
                    if (d <= k)
                        v(i, 0) = std::tgamma(k + 1.0) / std::tgamma(k - d + 1.0) * std::pow(t, k - d);
                    return v;
                }));
            }
            probes.push_back(std::move(pr));
        }
    }
    const FundamentalSet Fs = fundamental_matrices(L.A, L.grid.a());
    for (Index k = 0; k < L.dims.r; ++k)
        for (Index j = 0; j < L.dims.m; ++j)
            probes.push_back({"Y" + std::to_string(k) + "[:," + std::to_string(j + 1) + "]",
                              fundamental_column_stack(Fs, L.A, k, j, top)});
    return probes;
}

/// gap(eps) = max over probes of |B(eps) y - B(0) y|.
inline LimitTable check_limit_II(const ParamFamily& F, const std::vector<Probe>& probes)
{
    F.validate();
    if (probes.empty())
        throw validation_error("schema-violation", "limit condition (II) needs at least one probe");
    LimitTable t{};
    for (const auto& p : probes)
        t.labels.push_back(p.name);
    std::vector<CVector> base;
    for (const auto& p : probes)
        base.push_back(F.limit.B.apply(p.stack));
    for (double eps : F.eps_values) {
        const Problem P = F.at(eps);
        double gap = 0.0;
        for (std::size_t i = 0; i < probes.size(); ++i)
            gap = std::max(gap, (P.B.apply(probes[i].stack) - base[i]).norm());
        t.eps.push_back(eps);
        t.values.push_back({gap});
        t.worst.push_back(gap);
    }
    t.verdict = convergence_verdict(t.worst, F.conv_tolerance);
    return t;
}

inline LimitTable check_limit_II(const ParamFamily& F) { return check_limit_II(F, default_probes(F)); }

namespace detail {

/// ||L(eps) y0 - f(eps)||_{n,p} + |B(eps) y0 - c(eps)| for the limit solution stack y0.
inline double discrepancy_of(const Problem& P, std::span<const GridFunction> y0)
{
    const Index r = P.dims.r;
    GridFunction res = y0[r] - P.f;
    for (Index k = 0; k < r; ++k)
        res = res + multiply(P.A[k], y0[k]);
    return sobolev_norm(res, P.data_index()) + (P.B.apply(y0) - P.c).norm();
}

inline std::vector<GridFunction> difference(std::span<const GridFunction> x, std::span<const GridFunction> y)
{
    std::vector<GridFunction> d;
    for (std::size_t k = 0; k < x.size(); ++k)
        d.push_back(x[k] - y[k]);
    return d;
}

} // namespace detail

/// Discrepancy of the limit solution inserted into the eps-problem.
inline double discrepancy(const ParamFamily& F, double eps)
{
    F.validate();
    const Solution y0 = solve(F.limit);
    if (y0.classification != Classification::unique)
        throw numerical_error("condition-0-fails", "the limit problem is not uniquely solvable");
    return detail::discrepancy_of(F.at(eps), y0.derivs);
}

struct AnalysisRow
{
    double eps;
    std::vector<double> limit_I; // per coefficient
    double gap_II;
    double error; // ||y(0) - y(eps)||_{n+r,p}
    std::optional<double> discrepancy;
    std::optional<double> ratio; // error / discrepancy
    Classification classification;
};

struct AnalysisReport
{
    Condition0Check cond0;
    LimitTable limit_I;
    LimitTable limit_II;
    Classification limit_classification;
    std::vector<AnalysisRow> rows;
    std::optional<double> gamma1_hat;
    std::optional<double> gamma2_hat;
    std::optional<double> eps1_hat;
    std::optional<double> eps2_hat;
    /// Condition (0) together with limit conditions (I) and (II).
    bool continuous;
    /// Tabulated errors tend to zero (same verdict rule as the limit tables).
    ConvergenceVerdict observed;
    std::vector<std::string> notes;

    bool consistent() const noexcept { return continuous == observed.holds; }
};

/// Noise floor below which error/discrepancy ratios are not formed.
inline constexpr double discrepancy_floor = 1e-10;

inline AnalysisReport two_sided_report(const ParamFamily& F, const std::vector<Probe>& probes)
{
    F.validate();
    AnalysisReport rep{};
    rep.cond0 = check_condition0(F);
    rep.limit_I = check_limit_I(F);
    rep.limit_II = check_limit_II(F, probes);
    rep.continuous = rep.cond0.holds && rep.limit_I.verdict.holds && rep.limit_II.verdict.holds;

    const Solution y0 = solve(F.limit);
    rep.limit_classification = y0.classification;
    if (y0.classification != Classification::unique)
        rep.notes.push_back(std::string("limit problem is ") + to_string(y0.classification) +
                            "; errors are measured from its minimum-norm least-squares solution");

    std::vector<double> errors;
    for (std::size_t i = 0; i < F.eps_values.size(); ++i) {
        const double eps = F.eps_values[i];
        const Problem P = F.at(eps);
        const Solution ye = solve(P);
        AnalysisRow row{eps, rep.limit_I.values[i], rep.limit_II.worst[i],
                        sobolev_norm(detail::difference(y0.derivs, ye.derivs), F.limit.p), {}, {}, ye.classification};
        if (ye.classification != Classification::unique)
            rep.notes.push_back("eps = " + format_real(eps) + ": problem is " + to_string(ye.classification));
        if (rep.cond0.holds && y0.classification == Classification::unique) {
            row.discrepancy = detail::discrepancy_of(P, y0.derivs);
            if (*row.discrepancy > discrepancy_floor)
                row.ratio = row.error / *row.discrepancy;
        }
        errors.push_back(row.error);
        rep.rows.push_back(std::move(row));
    }
    rep.observed = convergence_verdict(errors, F.conv_tolerance);

    // Scan from the smallest eps upwards.
    for (auto it = rep.rows.rbegin(); it != rep.rows.rend(); ++it) {
        if (it->classification != Classification::unique)
            break;
        rep.eps1_hat = it->eps;
    }
    for (auto it = rep.rows.rbegin(); it != rep.rows.rend(); ++it) {
        if (!rep.eps1_hat || it->eps > *rep.eps1_hat || !it->ratio)
            break;
        rep.eps2_hat = it->eps;
    }
    for (const auto& row : rep.rows) {
        if (!row.ratio)
            continue;
        rep.gamma1_hat = std::min(rep.gamma1_hat.value_or(infinity), *row.ratio);
        rep.gamma2_hat = std::max(rep.gamma2_hat.value_or(0.0), *row.ratio);
    }
    if (!rep.cond0.holds)
        rep.notes.push_back("condition (0) fails: discrepancies are undefined");
    if (!rep.consistent())
        rep.notes.push_back("criterion and observed convergence disagree on the sampled eps range");
    return rep;
}

inline AnalysisReport two_sided_report(const ParamFamily& F) { return two_sided_report(F, default_probes(F)); }

} // namespace bvp

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bvp/expr.hpp"
#include "bvp/param_analysis.hpp"

namespace bvp::cli {

using expr::Expr;

inline constexpr int schema_version = 1;

/// Complex-valued expression re + i im in t and eps.
struct ComplexExpr
{
    Expr re;
    Expr im{0.0};

    bool is_real() const { return im == Expr(0.0); }
    bool depends_on_t() const { return re.depends_on_t() || im.depends_on_t(); }
    Complex operator()(double t, double eps) const { return {re(t, eps), im(t, eps)}; }
};

using ComplexExprMatrix = std::vector<std::vector<ComplexExpr>>;

/// One summand of a boundary row: weight * y^{(order)}(tau) or
/// \int_a^b kernel(t) weight * y^{(order)}(t) dt.
struct TermSpec
{
    enum class Kind { point, integral };
    Kind kind = Kind::point;
    Expr tau{0.0};    // point terms: function of eps
    Expr kernel{1.0}; // integral terms: function of t and eps
    int order = 0;
    std::vector<ComplexExpr> weight; // m entries, functions of eps
};

struct RowSpec
{
    std::vector<TermSpec> terms;
};

struct FamilySpec
{
    double eps0 = 1.0;
    std::vector<double> eps_values;
    double conv_tolerance = 1e-3;
};

/// A Sobolev norm to report: of an expression vector or of the solution.
struct NormSpec
{
    std::string name;
    std::vector<ComplexExpr> function; // empty when of_solution
    bool of_solution = false;
    int n = 0;
    double p = 2.0;
    double eps = 0.0;
};

/// In-memory scenario file. Every eps dependence lives in the expressions.
struct Scenario
{
    std::string name;
    double a = 0.0;
    double b = 1.0;
    Dims dims;
    double p = 2.0;
    Index N = 200;
    std::vector<ComplexExprMatrix> A; // A[k] multiplies y^{(k)}; m x m
    std::vector<ComplexExpr> rhs;     // m entries
    std::vector<RowSpec> boundary;    // rm rows
    std::vector<ComplexExpr> c;       // rm entries, functions of eps
    std::optional<FamilySpec> family;
    std::vector<NormSpec> norms;

    Grid grid() const { return Grid(a, b, N); }

    /// Problem at parameter value eps (eps = 0 is the limit problem).
    Problem problem(double eps) const;

    /// Family over the scenario's eps values; requires a family block.
    ParamFamily param_family() const;
};

/// Validates and converts a parsed scenario document. Errors carry the JSON
/// path of the offending field.
Scenario parse_scenario(const nlohmann::json& doc);

Scenario load_scenario(const std::filesystem::path& path);

/// Serializes a scenario so that parse_scenario reproduces it exactly.
nlohmann::json write_scenario(const Scenario& s);

} // namespace bvp::cli

#include "scenario.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>

namespace bvp::cli {

using nlohmann::json;

namespace {

[[noreturn]] void violation(const std::string& path, const std::string& why)
{
    throw validation_error("schema-violation", path + ": " + why);
}

[[noreturn]] void mismatch(const std::string& path, const std::string& why)
{
    throw validation_error("dimension-mismatch", path + ": " + why);
}

/// Re-raises a library error with the scenario field it came from.
template<typename Fn>
auto at_field(const std::string& path, Fn&& fn) -> decltype(fn())
{
    try {
        return fn();
    } catch (const Error& e) {
        throw Error(e.kind(), e.code(), path + ": " + (e.detail().empty() ? e.code() : e.detail()));
    }
}

std::string child(const std::string& path, const std::string& key) { return path == "$" ? key : path + "." + key; }

void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed)
{
    if (!obj.is_object())
        violation(path, "expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : obj.items())
        if (!ok.count(key))
            violation(child(path, key), "unknown field");
}

const json& require(const json& obj, const char* key, const std::string& path)
{
    if (!obj.contains(key))
        violation(child(path, key), "required field is missing");
    return obj.at(key);
}

double number(const json& v, const std::string& path)
{
    if (!v.is_number())
        violation(path, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x))
        violation(path, "expected a finite number");
    return x;
}

int integer(const json& v, const std::string& path, int min)
{
    if (!v.is_number_integer())
        violation(path, "expected an integer");
    const auto x = v.get<long long>();
    if (x < min || x > 1000000)
        violation(path, "expected an integer >= " + std::to_string(min));
    return static_cast<int>(x);
}

/// Sobolev exponent: a number >= 1 or the string "inf".
double exponent(const json& v, const std::string& path)
{
    if (v.is_string() && v.get<std::string>() == "inf")
        return infinity;
    const double p = number(v, path);
    if (p < 1.0)
        throw validation_error("invalid-sobolev-index", path + ": p must be >= 1 or \"inf\"");
    return p;
}

Expr expression(const json& v, const std::string& path, bool allow_t)
{
    Expr e;
    if (v.is_number())
        e = Expr(number(v, path));
    else if (v.is_string())
        e = at_field(path, [&] { return Expr::parse(v.get<std::string>()); });
    else
        violation(path, "expected a number or an expression string");
    if (!allow_t && e.depends_on_t())
        violation(path, "must not depend on t");
    return e;
}

/// number | expression | [re, im] with re, im numbers or expressions.
ComplexExpr complex_expression(const json& v, const std::string& path, bool allow_t)
{
    if (v.is_array()) {
        if (v.size() != 2)
            violation(path, "complex values are [re, im] pairs");
        return {expression(v[0], path + "[0]", allow_t), expression(v[1], path + "[1]", allow_t)};
    }
    return {expression(v, path, allow_t)};
}

std::vector<ComplexExpr> complex_vector(const json& v, const std::string& path, bool allow_t, Index expected,
                                        const char* what)
{
    if (!v.is_array())
        violation(path, "expected an array");
    if (static_cast<Index>(v.size()) != expected)
        mismatch(path, std::string("expected ") + what + " = " + std::to_string(expected) + " entries, got " +
                           std::to_string(v.size()));
    std::vector<ComplexExpr> out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(complex_expression(v[i], path + "[" + std::to_string(i) + "]", allow_t));
    return out;
}

TermSpec term(const json& v, const std::string& path, const Dims& dims)
{
    check_keys(v, path, {"kind", "tau", "kernel", "order", "weight"});
    const json& kind = require(v, "kind", path);
    TermSpec t;
    if (kind == "point") {
        t.kind = TermSpec::Kind::point;
        t.tau = expression(require(v, "tau", path), path + ".tau", false);
        if (v.contains("kernel"))
            violation(path + ".kernel", "point terms take tau, not a kernel");
    } else if (kind == "integral") {
        t.kind = TermSpec::Kind::integral;
        if (v.contains("kernel"))
            t.kernel = expression(v.at("kernel"), path + ".kernel", true);
        if (v.contains("tau"))
            violation(path + ".tau", "integral terms take a kernel, not tau");
    } else {
        violation(path + ".kind", "expected \"point\" or \"integral\"");
    }
    t.order = integer(require(v, "order", path), path + ".order", 0);
    t.weight = complex_vector(require(v, "weight", path), path + ".weight", false, dims.m, "m");
    return t;
}

json number_json(double v) { return v; }

json expression_json(const Expr& e) { return e.str(); }

json complex_json(const ComplexExpr& e)
{
    if (e.is_real())
        return expression_json(e.re);
    return json::array({expression_json(e.re), expression_json(e.im)});
}

json complex_vector_json(const std::vector<ComplexExpr>& v)
{
    json out = json::array();
    for (const auto& e : v)
        out.push_back(complex_json(e));
    return out;
}

json exponent_json(double p) { return std::isinf(p) ? json("inf") : json(p); }

/// Samples an expression matrix (entries complex) on the grid. Column
/// vectors report errors with a single index.
GridFunction sample_matrix(const ComplexExprMatrix& m, const Grid& grid, double eps, const std::string& path,
                           bool is_vector = false)
{
    const Index rows = static_cast<Index>(m.size());
    const Index cols = static_cast<Index>(m.front().size());
    CMatrix data(grid.size(), rows * cols);
    for (Index r = 0; r < rows; ++r) {
        for (Index c = 0; c < cols; ++c) {
            const std::string where =
                path + "[" + std::to_string(r) + "]" + (is_vector ? "" : "[" + std::to_string(c) + "]");
            const auto& e = m[r][c];
            CVector col = at_field(where, [&] { return CVector(expr::sample(e.re, grid, eps).storage().col(0)); });
            if (!e.is_real())
                col += Complex(0.0, 1.0) *
                       at_field(where, [&] { return CVector(expr::sample(e.im, grid, eps).storage().col(0)); });
            data.col(r + rows * c) = col;
        }
    }
    return GridFunction(grid, rows, cols, std::move(data));
}

Complex constant(const ComplexExpr& e, double eps, const std::string& path)
{
    return at_field(path, [&] { return Complex(expr::evaluate_constant(e.re, eps), expr::evaluate_constant(e.im, eps)); });
}

} // namespace

Problem Scenario::problem(double eps) const
{
    const Grid g = grid();
    const Index m = dims.m;
    const Index rows = dims.rows();

    std::vector<GridFunction> coefficients;
    for (Index k = 0; k < dims.r; ++k)
        coefficients.push_back(sample_matrix(A[k], g, eps, "coefficients.A" + std::to_string(k)));
    ComplexExprMatrix f_col;
    for (const auto& e : rhs)
        f_col.push_back({e});
    GridFunction f = sample_matrix(f_col, g, eps, "rhs", true);

    BoundaryOperator B(g, dims);
    for (Index i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < boundary[i].terms.size(); ++j) {
            const TermSpec& t = boundary[i].terms[j];
            const std::string path = "boundary[" + std::to_string(i) + "].terms[" + std::to_string(j) + "]";
            CMatrix W = CMatrix::Zero(rows, m);
            for (Index c = 0; c < m; ++c)
                W(i, c) = constant(t.weight[c], eps, path + ".weight[" + std::to_string(c) + "]");
            if (t.kind == TermSpec::Kind::point) {
                const double tau = at_field(path + ".tau", [&] { return expr::evaluate_constant(t.tau, eps); });
                at_field(path, [&] { B.add_point(tau, t.order, W); });
            } else {
                const GridFunction k = at_field(path + ".kernel", [&] { return expr::sample(t.kernel, g, eps); });
                CMatrix data(g.size(), rows * m);
                for (Index c = 0; c < m; ++c)
                    for (Index r = 0; r < rows; ++r)
                        data.col(r + rows * c) = W(r, c) * k.storage().col(0);
                at_field(path, [&] { B.add_integral(GridFunction(g, rows, m, std::move(data)), t.order); });
            }
        }
    }

    CVector cv(rows);
    for (Index i = 0; i < rows; ++i)
        cv(i) = constant(c[i], eps, "c[" + std::to_string(i) + "]");

    Problem P{dims, p, g, std::move(coefficients), std::move(f), std::move(B), std::move(cv)};
    P.validate();
    return P;
}

ParamFamily Scenario::param_family() const
{
    if (!family)
        violation("family", "this command needs a family block");
    ParamFamily F{problem(0.0), family->eps_values, [copy = *this](double eps) { return copy.problem(eps); },
                  family->eps0, family->conv_tolerance};
    F.validate();
    return F;
}

Scenario parse_scenario(const json& doc)
{
    check_keys(doc, "$",
               {"schema_version", "name", "interval", "dims", "p", "grid", "coefficients", "rhs", "boundary", "c",
                "family", "norms"});
    const int version = integer(require(doc, "schema_version", "$"), "schema_version", 0);
    if (version != schema_version)
        violation("schema_version", "unsupported version " + std::to_string(version) + " (expected " +
                                        std::to_string(schema_version) + ")");
    Scenario s;
    if (doc.contains("name")) {
        if (!doc.at("name").is_string())
            violation("name", "expected a string");
        s.name = doc.at("name").get<std::string>();
    }

    const json& interval = require(doc, "interval", "$");
    check_keys(interval, "interval", {"a", "b"});
    s.a = number(require(interval, "a", "interval"), "interval.a");
    s.b = number(require(interval, "b", "interval"), "interval.b");
    if (!(s.a < s.b))
        violation("interval", "need a < b");

    const json& dims = require(doc, "dims", "$");
    check_keys(dims, "dims", {"m", "n", "r"});
    s.dims.m = integer(require(dims, "m", "dims"), "dims.m", 1);
    s.dims.n = integer(require(dims, "n", "dims"), "dims.n", 0);
    s.dims.r = integer(require(dims, "r", "dims"), "dims.r", 1);
    const Index m = s.dims.m;
    const Index rows = s.dims.rows();

    s.p = doc.contains("p") ? exponent(doc.at("p"), "p") : 2.0;

    const json& grid = require(doc, "grid", "$");
    check_keys(grid, "grid", {"N"});
    s.N = integer(require(grid, "N", "grid"), "grid.N", 1);
    at_field("grid.N", [&] { return s.grid(); });

    const json& coefficients = doc.contains("coefficients") ? doc.at("coefficients") : json::object();
    if (!coefficients.is_object())
        violation("coefficients", "expected an object keyed A0 .. A{r-1}");
    for (const auto& [key, value] : coefficients.items()) {
        bool known = false;
        for (Index k = 0; k < s.dims.r; ++k)
            known = known || key == "A" + std::to_string(k);
        if (!known)
            violation("coefficients." + key, "expected keys A0 .. A" + std::to_string(s.dims.r - 1));
    }
    for (Index k = 0; k < s.dims.r; ++k) {
        const std::string key = "A" + std::to_string(k);
        const std::string path = "coefficients." + key;
        ComplexExprMatrix mat(m, std::vector<ComplexExpr>(m));
        if (coefficients.contains(key)) {
            const json& rowsj = coefficients.at(key);
            if (!rowsj.is_array() || static_cast<Index>(rowsj.size()) != m)
                mismatch(path, "expected an m x m matrix with m = " + std::to_string(m));
            for (Index r = 0; r < m; ++r)
                mat[r] = complex_vector(rowsj[r], path + "[" + std::to_string(r) + "]", true, m, "m");
        }
        s.A.push_back(std::move(mat));
    }

    s.rhs = complex_vector(require(doc, "rhs", "$"), "rhs", true, m, "m");

    const json& boundary = require(doc, "boundary", "$");
    if (!boundary.is_array())
        violation("boundary", "expected an array of rows");
    if (static_cast<Index>(boundary.size()) != rows)
        throw validation_error("boundary-row-count", "expected rm = " + std::to_string(rows) + ", got " +
                                                         std::to_string(boundary.size()));
    for (std::size_t i = 0; i < boundary.size(); ++i) {
        const std::string path = "boundary[" + std::to_string(i) + "]";
        const json& row = boundary[i];
        RowSpec spec;
        if (row.is_object() && row.contains("kind")) {
            spec.terms.push_back(term(row, path, s.dims));
        } else {
            check_keys(row, path, {"terms"});
            const json& terms = require(row, "terms", path);
            if (!terms.is_array() || terms.empty())
                violation(path + ".terms", "expected a non-empty array of terms");
            for (std::size_t j = 0; j < terms.size(); ++j)
                spec.terms.push_back(term(terms[j], path + ".terms[" + std::to_string(j) + "]", s.dims));
        }
        s.boundary.push_back(std::move(spec));
    }

    s.c = complex_vector(require(doc, "c", "$"), "c", false, rows, "rm");

    if (doc.contains("family")) {
        const json& fam = doc.at("family");
        check_keys(fam, "family", {"eps0", "eps_values", "conv_tolerance"});
        FamilySpec f;
        f.eps0 = number(require(fam, "eps0", "family"), "family.eps0");
        const json& values = require(fam, "eps_values", "family");
        if (!values.is_array() || values.empty())
            violation("family.eps_values", "expected a non-empty array of numbers");
        for (std::size_t i = 0; i < values.size(); ++i)
            f.eps_values.push_back(number(values[i], "family.eps_values[" + std::to_string(i) + "]"));
        if (fam.contains("conv_tolerance"))
            f.conv_tolerance = number(fam.at("conv_tolerance"), "family.conv_tolerance");
        s.family = f;
    }

    if (doc.contains("norms")) {
        const json& norms = doc.at("norms");
        if (!norms.is_array())
            violation("norms", "expected an array");
        for (std::size_t i = 0; i < norms.size(); ++i) {
            const std::string path = "norms[" + std::to_string(i) + "]";
            const json& v = norms[i];
            check_keys(v, path, {"name", "function", "of", "n", "p", "eps"});
            NormSpec spec;
            const json& name = require(v, "name", path);
            if (!name.is_string())
                violation(path + ".name", "expected a string");
            spec.name = name.get<std::string>();
            if (v.contains("of")) {
                if (v.at("of") != "solution")
                    violation(path + ".of", "the only supported value is \"solution\"");
                if (v.contains("function"))
                    violation(path, "give either \"of\" or \"function\", not both");
                spec.of_solution = true;
            } else {
                const json& fn = require(v, "function", path);
                const json entries = fn.is_array() ? fn : json::array({fn});
                spec.function = complex_vector(entries, path + ".function", true, static_cast<Index>(entries.size()), "");
            }
            spec.n = v.contains("n") ? integer(v.at("n"), path + ".n", 0) : 0;
            spec.p = v.contains("p") ? exponent(v.at("p"), path + ".p") : 2.0;
            spec.eps = v.contains("eps") ? number(v.at("eps"), path + ".eps") : 0.0;
            s.norms.push_back(std::move(spec));
        }
    }
    return s;
}

Scenario load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw validation_error("schema-violation", "cannot open scenario file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw validation_error("schema-violation", path.string() + ": invalid JSON: " + e.what());
    }
    return parse_scenario(doc);
}

json write_scenario(const Scenario& s)
{
    json doc;
    doc["schema_version"] = schema_version;
    if (!s.name.empty())
        doc["name"] = s.name;
    doc["interval"] = {{"a", number_json(s.a)}, {"b", number_json(s.b)}};
    doc["dims"] = {{"m", s.dims.m}, {"n", s.dims.n}, {"r", s.dims.r}};
    doc["p"] = exponent_json(s.p);
    doc["grid"] = {{"N", s.N}};
    json coefficients = json::object();
    for (std::size_t k = 0; k < s.A.size(); ++k) {
        json mat = json::array();
        for (const auto& row : s.A[k])
            mat.push_back(complex_vector_json(row));
        coefficients["A" + std::to_string(k)] = mat;
    }
    doc["coefficients"] = coefficients;
    doc["rhs"] = complex_vector_json(s.rhs);
    json boundary = json::array();
    for (const auto& row : s.boundary) {
        json terms = json::array();
        for (const auto& t : row.terms) {
            json tj;
            if (t.kind == TermSpec::Kind::point) {
                tj["kind"] = "point";
                tj["tau"] = expression_json(t.tau);
            } else {
                tj["kind"] = "integral";
                tj["kernel"] = expression_json(t.kernel);
            }
            tj["order"] = t.order;
            tj["weight"] = complex_vector_json(t.weight);
            terms.push_back(tj);
        }
        boundary.push_back({{"terms", terms}});
    }
    doc["boundary"] = boundary;
    doc["c"] = complex_vector_json(s.c);
    if (s.family) {
        json values = json::array();
        for (double e : s.family->eps_values)
            values.push_back(number_json(e));
        doc["family"] = {{"eps0", number_json(s.family->eps0)},
                         {"eps_values", values},
                         {"conv_tolerance", number_json(s.family->conv_tolerance)}};
    }
    if (!s.norms.empty()) {
        json norms = json::array();
        for (const auto& n : s.norms) {
            json nj{{"name", n.name}, {"n", n.n}, {"p", exponent_json(n.p)}, {"eps", number_json(n.eps)}};
            if (n.of_solution)
                nj["of"] = "solution";
            else
                nj["function"] = complex_vector_json(n.function);
            norms.push_back(nj);
        }
        doc["norms"] = norms;
    }
    return doc;
}

} // namespace bvp::cli

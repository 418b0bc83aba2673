#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "bvp/error.hpp"
#include "bvp/grid_function.hpp"

namespace bvp::expr {

enum class Op { add, sub, mul, div, pow };
enum class Fn { sin, cos, exp, log, sqrt, abs, sign };

namespace detail {

struct Node
{
    enum class Kind { number, var_t, var_eps, neg, binary, call } kind;
    double value = 0.0;
    Op op = Op::add;
    Fn fn = Fn::sin;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
};

using NodePtr = std::shared_ptr<const Node>;

inline NodePtr make(Node n) { return std::make_shared<const Node>(std::move(n)); }

struct FnName
{
    std::string_view name;
    Fn fn;
};

inline constexpr FnName functions[] = {
    {"sin", Fn::sin}, {"cos", Fn::cos},   {"exp", Fn::exp},   {"log", Fn::log},
    {"sqrt", Fn::sqrt}, {"abs", Fn::abs}, {"sign", Fn::sign},
};

inline std::string_view name_of(Fn fn)
{
    for (const auto& f : functions)
        if (f.fn == fn)
            return f.name;
    return "?";
}

inline char symbol_of(Op op)
{
    switch (op) {
    case Op::add: return '+';
    case Op::sub: return '-';
    case Op::mul: return '*';
    case Op::div: return '/';
    case Op::pow: return '^';
    }
    return '?';
}

/// Recursive descent over
///   expr  := term (('+' | '-') term)*
///   term  := unary (('*' | '/') unary)*
///   unary := '-' unary | power
///   power := atom ('^' unary)?
///   atom  := number | 't' | 'eps' | 'pi' | fn '(' expr ')' | '(' expr ')'
class Parser
{
public:
    explicit Parser(std::string_view src)
        : src_(src)
    {}

    NodePtr parse()
    {
        skip_ws();
        if (pos_ == src_.size())
            fail("syntax-error", "empty expression");
        NodePtr e = expr();
        skip_ws();
        if (pos_ != src_.size())
            fail("syntax-error", std::string("unexpected '") + src_[pos_] + "'");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& code, const std::string& what) const
    {
        throw validation_error(code, what + " at offset " + std::to_string(pos_));
    }

    void skip_ws()
    {
        while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' || src_[pos_] == '\r'))
            ++pos_;
    }

    bool accept(char c)
    {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c)
    {
        if (!accept(c))
            fail("syntax-error", std::string("expected '") + c + "'");
    }

    NodePtr expr()
    {
        NodePtr lhs = term();
        for (;;) {
            if (accept('+'))
                lhs = make({.kind = Node::Kind::binary, .op = Op::add, .lhs = lhs, .rhs = term()});
            else if (accept('-'))
                lhs = make({.kind = Node::Kind::binary, .op = Op::sub, .lhs = lhs, .rhs = term()});
            else
                return lhs;
        }
    }

    NodePtr term()
    {
        NodePtr lhs = unary();
        for (;;) {
            if (accept('*'))
                lhs = make({.kind = Node::Kind::binary, .op = Op::mul, .lhs = lhs, .rhs = unary()});
            else if (accept('/'))
                lhs = make({.kind = Node::Kind::binary, .op = Op::div, .lhs = lhs, .rhs = unary()});
            else
                return lhs;
        }
    }

    NodePtr unary()
    {
        if (accept('-'))
            return make({.kind = Node::Kind::neg, .lhs = unary()});
        return power();
    }

    NodePtr power()
    {
        NodePtr base = atom();
        if (accept('^'))
            return make({.kind = Node::Kind::binary, .op = Op::pow, .lhs = base, .rhs = unary()});
        return base;
    }

    NodePtr atom()
    {
        skip_ws();
        if (pos_ == src_.size())
            fail("syntax-error", "unexpected end of input");
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr inner = expr();
            expect(')');
            return inner;
        }
        if ((c >= '0' && c <= '9') || c == '.')
            return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
            return identifier();
        fail("syntax-error", std::string("unexpected '") + c + "'");
    }

    NodePtr number()
    {
        const std::size_t start = pos_;
        auto digits = [&] {
            while (pos_ < src_.size() && src_[pos_] >= '0' && src_[pos_] <= '9')
                ++pos_;
        };
        digits();
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            digits();
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t save = pos_++;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-'))
                ++pos_;
            if (pos_ < src_.size() && src_[pos_] >= '0' && src_[pos_] <= '9')
                digits();
            else
                pos_ = save;
        }
        const std::string text(src_.substr(start, pos_ - start));
        if (text == ".") {
            pos_ = start;
            fail("syntax-error", "malformed number");
        }
        char* end = nullptr;
        const double v = std::strtod(text.c_str(), &end);
        if (end != text.c_str() + text.size() || !std::isfinite(v)) {
            pos_ = start;
            fail("syntax-error", "malformed number");
        }
        if (pos_ < src_.size() && (std::isalpha(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            fail("syntax-error", "implicit multiplication is not supported");
        return make({.kind = Node::Kind::number, .value = v});
    }

    NodePtr identifier()
    {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        const std::string_view id = src_.substr(start, pos_ - start);
        if (id == "t")
            return make({.kind = Node::Kind::var_t});
        if (id == "eps")
            return make({.kind = Node::Kind::var_eps});
        if (id == "pi")
            return make({.kind = Node::Kind::number, .value = std::numbers::pi});
        for (const auto& f : functions) {
            if (f.name != id)
                continue;
            expect('(');
            skip_ws();
            if (pos_ < src_.size() && src_[pos_] == ')')
                fail("arity-mismatch", std::string(id) + " takes exactly one argument");
            NodePtr arg = expr();
            if (accept(','))
                fail("arity-mismatch", std::string(id) + " takes exactly one argument");
            expect(')');
            return make({.kind = Node::Kind::call, .fn = f.fn, .lhs = arg});
        }
        pos_ = start;
        fail("unknown-identifier", "'" + std::string(id) + "'");
    }

    std::string_view src_;
    std::size_t pos_ = 0;
};

inline double eval(const Node& n, double t, double eps)
{
    switch (n.kind) {
    case Node::Kind::number: return n.value;
    case Node::Kind::var_t: return t;
    case Node::Kind::var_eps: return eps;
    case Node::Kind::neg: return -eval(*n.lhs, t, eps);
    case Node::Kind::binary: {
        const double x = eval(*n.lhs, t, eps);
        const double y = eval(*n.rhs, t, eps);
        switch (n.op) {
        case Op::add: return x + y;
        case Op::sub: return x - y;
        case Op::mul: return x * y;
        case Op::div:
            if (y == 0.0)
                throw numerical_error("division-by-zero");
            return x / y;
        case Op::pow: return std::pow(x, y);
        }
        break;
    }
    case Node::Kind::call: {
        const double x = eval(*n.lhs, t, eps);
        switch (n.fn) {
        case Fn::sin: return std::sin(x);
        case Fn::cos: return std::cos(x);
        case Fn::exp: return std::exp(x);
        case Fn::log: return std::log(x);
        case Fn::sqrt: return std::sqrt(x);
        case Fn::abs: return std::abs(x);
        case Fn::sign: return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
        }
        break;
    }
    }
    return 0.0;
}

inline std::string format_number(double v) { return format_real(v); }

inline void print(const Node& n, std::string& out)
{
    switch (n.kind) {
    case Node::Kind::number:
        // Negative literals only arise from folding; keep them reparseable.
        if (n.value < 0.0)
            out += "(" + format_number(n.value) + ")";
        else
            out += format_number(n.value);
        return;
    case Node::Kind::var_t: out += "t"; return;
    case Node::Kind::var_eps: out += "eps"; return;
    case Node::Kind::neg:
        out += "(-";
        print(*n.lhs, out);
        out += ")";
        return;
    case Node::Kind::binary:
        out += "(";
        print(*n.lhs, out);
        out += symbol_of(n.op);
        print(*n.rhs, out);
        out += ")";
        return;
    case Node::Kind::call:
        out += name_of(n.fn);
        out += "(";
        print(*n.lhs, out);
        out += ")";
        return;
    }
}

inline bool equal(const Node& x, const Node& y)
{
    if (x.kind != y.kind)
        return false;
    switch (x.kind) {
    case Node::Kind::number: return x.value == y.value;
    case Node::Kind::var_t:
    case Node::Kind::var_eps: return true;
    case Node::Kind::neg: return equal(*x.lhs, *y.lhs);
    case Node::Kind::binary: return x.op == y.op && equal(*x.lhs, *y.lhs) && equal(*x.rhs, *y.rhs);
    case Node::Kind::call: return x.fn == y.fn && equal(*x.lhs, *y.lhs);
    }
    return false;
}

inline bool mentions(const Node& n, Node::Kind var)
{
    if (n.kind == var)
        return true;
    return (n.lhs && mentions(*n.lhs, var)) || (n.rhs && mentions(*n.rhs, var));
}

} // namespace detail

/// Immutable expression in the variables t and eps.
class Expr
{
public:
    /// Constant expression.
    explicit Expr(double value = 0.0)
        : root_(detail::make({.kind = detail::Node::Kind::number, .value = value}))
    {}

    static Expr parse(std::string_view src)
    {
        return Expr(detail::Parser(src).parse());
    }

    /// Throws "division-by-zero" on an exact zero denominator; other domain
    /// violations surface as non-finite results.
    double operator()(double t, double eps) const { return detail::eval(*root_, t, eps); }

    /// Fully parenthesized source that reparses to an equivalent expression.
    std::string str() const
    {
        std::string out;
        detail::print(*root_, out);
        return out;
    }

    bool depends_on_t() const { return detail::mentions(*root_, detail::Node::Kind::var_t); }
    bool depends_on_eps() const { return detail::mentions(*root_, detail::Node::Kind::var_eps); }

    friend bool operator==(const Expr& x, const Expr& y) { return detail::equal(*x.root_, *y.root_); }

private:
    explicit Expr(detail::NodePtr root)
        : root_(std::move(root))
    {}

    detail::NodePtr root_;
};

using ExprMatrix = std::vector<std::vector<Expr>>;

/// Samples e(t_i, eps) at every node as a 1x1 grid function.
inline GridFunction sample(const Expr& e, const Grid& grid, double eps)
{
    CMatrix data(grid.size(), 1);
    for (Index i = 0; i < grid.size(); ++i) {
        const double t = grid.node(i);
        double v;
        try {
            v = e(t, eps);
        } catch (const Error& err) {
            throw Error(err.kind(), err.code(), "node " + std::to_string(i) + " (t = " + detail::format_number(t) + ")");
        }
        if (!std::isfinite(v))
            throw numerical_error("non-finite-sample", "node " + std::to_string(i) + " (t = " + detail::format_number(t) + ") in '" + e.str() + "'");
        data(i, 0) = v;
    }
    return GridFunction(grid, 1, 1, std::move(data));
}

/// Entrywise sampling of an expression matrix (rows of equal length).
inline GridFunction sample(const ExprMatrix& m, const Grid& grid, double eps)
{
    if (m.empty() || m.front().empty())
        throw validation_error("shape-mismatch", "empty expression matrix");
    const Index rows = static_cast<Index>(m.size());
    const Index cols = static_cast<Index>(m.front().size());
    CMatrix data(grid.size(), rows * cols);
    for (Index r = 0; r < rows; ++r) {
        if (static_cast<Index>(m[r].size()) != cols)
            throw validation_error("shape-mismatch", "ragged expression matrix");
        for (Index c = 0; c < cols; ++c)
            data.col(r + rows * c) = sample(m[r][c], grid, eps).storage().col(0);
    }
    return GridFunction(grid, rows, cols, std::move(data));
}

/// Evaluates an expression that must not depend on t (it is evaluated at t = 0).
inline double evaluate_constant(const Expr& e, double eps)
{
    const double v = e(0.0, eps);
    if (!std::isfinite(v))
        throw numerical_error("non-finite-sample", "'" + e.str() + "' at eps = " + detail::format_number(eps));
    return v;
}

} // namespace bvp::expr

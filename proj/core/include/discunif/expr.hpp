#pragma once

// Real-valued expressions in the plane coordinates x, y.
//
// Grammar (precedence high to low): function call / parentheses, '^' with a
// non-negative integer constant exponent (right associative), unary '-',
// '*' '/', '+' '-'. Identifiers: x, y, pi, rr (shorthand for x^2+y^2) and the
// functions sin cos exp log sqrt neg.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace discunif::expr
{

enum class Var { X, Y };

enum class Op : std::uint8_t { Const, X, Y, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp, Log, Sqrt };

/// Immutable expression DAG. Copies share nodes.
class Expr
{
public:
    Expr();
    explicit Expr(double value);
    static Expr variable(Var v);

    Op op() const noexcept;
    double constant() const noexcept;
    int exponent() const noexcept;
    const Expr& arg(int i) const noexcept;
    bool is_constant() const noexcept { return op() == Op::Const; }
    bool is_constant(double v) const noexcept { return is_constant() && constant() == v; }
    const void* id() const noexcept { return node_.get(); }

    /// Tree-walking evaluation; throws DomainError outside the domain.
    double operator()(double x, double y) const;

    friend Expr operator+(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a, const Expr& b);
    friend Expr operator*(const Expr& a, const Expr& b);
    friend Expr operator/(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a);
    friend Expr pow(const Expr& a, int n);
    friend Expr unary(Op op, const Expr& a);

private:
    struct Node;
    explicit Expr(std::shared_ptr<const Node> node) : node_{std::move(node)} {}
    static Expr make(Op op, double value, int exponent, Expr a, Expr b);
    std::shared_ptr<const Node> node_;
};

Expr pow(const Expr& a, int n);
Expr unary(Op op, const Expr& a);
inline Expr sin(const Expr& a) { return unary(Op::Sin, a); }
inline Expr cos(const Expr& a) { return unary(Op::Cos, a); }
inline Expr exp(const Expr& a) { return unary(Op::Exp, a); }
inline Expr log(const Expr& a) { return unary(Op::Log, a); }
inline Expr sqrt(const Expr& a) { return unary(Op::Sqrt, a); }
inline Expr x() { return Expr::variable(Var::X); }
inline Expr y() { return Expr::variable(Var::Y); }

Expr parse(std::string_view text);
double eval(const Expr& e, double x, double y);
Expr differentiate(const Expr& e, Var v);
/// Replaces x and y by the given expressions.
Expr substitute(const Expr& e, const Expr& sx, const Expr& sy);
/// Fully parenthesised text that parse() reads back to an equivalent expression.
std::string to_string(const Expr& e);
/// Number of distinct nodes in the DAG.
std::size_t node_count(const Expr& e);

/// Several expressions flattened into one evaluation tape with shared
/// subexpressions merged. Use for repeated evaluation over mesh vertices.
class Program
{
public:
    Program() = default;
    explicit Program(std::span<const Expr> outputs);

    std::size_t outputs() const noexcept { return outputs_.size(); }
    std::size_t size() const noexcept { return tape_.size(); }

    /// Writes one value per output. Thread safe.
    void eval(double x, double y, std::span<double> out) const;
    std::vector<double> eval(double x, double y) const;

private:
    struct Instr
    {
        Op op;
        std::uint32_t a = 0;
        std::uint32_t b = 0;
        double value = 0.0;
        int exponent = 0;
    };
    std::vector<Instr> tape_;
    std::vector<std::uint32_t> outputs_;
};

}  // namespace discunif::expr

#include "discunif/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <unordered_map>
#include <unordered_set>

#include "discunif/error.hpp"

namespace discunif::expr
{

struct Expr::Node
{
    Op op = Op::Const;
    double value = 0.0;
    int exponent = 0;
    Expr a{nullptr};
    Expr b{nullptr};
};

namespace
{

bool is_unary(Op op)
{
    switch (op) {
        case Op::Neg:
        case Op::Sin:
        case Op::Cos:
        case Op::Exp:
        case Op::Log:
        case Op::Sqrt:
            return true;
        default:
            return false;
    }
}

double checked(double v, const char* what)
{
    if (!std::isfinite(v)) {
        throw DomainError(std::string("non-finite result in ") + what);
    }
    return v;
}

double apply_unary(Op op, double a)
{
    switch (op) {
        case Op::Neg:
            return -a;
        case Op::Sin:
            return std::sin(a);
        case Op::Cos:
            return std::cos(a);
        case Op::Exp:
            return checked(std::exp(a), "exp");
        case Op::Log:
            if (!(a > 0.0)) {
                throw DomainError("log of non-positive value");
            }
            return std::log(a);
        case Op::Sqrt:
            if (a < 0.0) {
                throw DomainError("sqrt of negative value");
            }
            return std::sqrt(a);
        default:
            return a;
    }
}

double apply_binary(Op op, double a, double b, int exponent)
{
    switch (op) {
        case Op::Add:
            return a + b;
        case Op::Sub:
            return a - b;
        case Op::Mul:
            return a * b;
        case Op::Div:
            if (b == 0.0) {
                throw DomainError("division by zero");
            }
            return checked(a / b, "division");
        case Op::Pow: {
            double r = 1.0;
            for (int i = 0; i < exponent; ++i) {
                r *= a;
            }
            return checked(r, "power");
        }
        default:
            return 0.0;
    }
}

const char* function_name(Op op)
{
    switch (op) {
        case Op::Sin:
            return "sin";
        case Op::Cos:
            return "cos";
        case Op::Exp:
            return "exp";
        case Op::Log:
            return "log";
        case Op::Sqrt:
            return "sqrt";
        default:
            return "neg";
    }
}

}  // namespace

Expr::Expr() : Expr(0.0) {}

Expr::Expr(double value)
{
    auto n = std::make_shared<Node>();
    n->op = Op::Const;
    n->value = value;
    node_ = std::move(n);
}

Expr Expr::variable(Var v)
{
    auto n = std::make_shared<Node>();
    n->op = v == Var::X ? Op::X : Op::Y;
    return Expr(std::shared_ptr<const Node>(std::move(n)));
}

Expr Expr::make(Op op, double value, int exponent, Expr a, Expr b)
{
    auto n = std::make_shared<Node>();
    n->op = op;
    n->value = value;
    n->exponent = exponent;
    n->a = std::move(a);
    n->b = std::move(b);
    return Expr(std::shared_ptr<const Node>(std::move(n)));
}

Op Expr::op() const noexcept { return node_->op; }
double Expr::constant() const noexcept { return node_->value; }
int Expr::exponent() const noexcept { return node_->exponent; }

const Expr& Expr::arg(int i) const noexcept
{
    return i == 0 ? node_->a : node_->b;
}

double Expr::operator()(double x, double y) const { return eval(*this, x, y); }

// Constant folding only: operations on constants, and the neutral/absorbing
// constants 0 and 1.
Expr operator+(const Expr& a, const Expr& b)
{
    if (a.is_constant() && b.is_constant()) {
        return Expr(a.constant() + b.constant());
    }
    if (a.is_constant(0.0)) {
        return b;
    }
    if (b.is_constant(0.0)) {
        return a;
    }
    return Expr::make(Op::Add, 0.0, 0, a, b);
}

Expr operator-(const Expr& a, const Expr& b)
{
    if (a.is_constant() && b.is_constant()) {
        return Expr(a.constant() - b.constant());
    }
    if (b.is_constant(0.0)) {
        return a;
    }
    if (a.is_constant(0.0)) {
        return -b;
    }
    return Expr::make(Op::Sub, 0.0, 0, a, b);
}

Expr operator*(const Expr& a, const Expr& b)
{
    if (a.is_constant() && b.is_constant()) {
        return Expr(a.constant() * b.constant());
    }
    if (a.is_constant(0.0) || b.is_constant(0.0)) {
        return Expr(0.0);
    }
    if (a.is_constant(1.0)) {
        return b;
    }
    if (b.is_constant(1.0)) {
        return a;
    }
    return Expr::make(Op::Mul, 0.0, 0, a, b);
}

Expr operator/(const Expr& a, const Expr& b)
{
    if (a.is_constant() && b.is_constant() && b.constant() != 0.0) {
        return Expr(a.constant() / b.constant());
    }
    if (b.is_constant(1.0)) {
        return a;
    }
    if (a.is_constant(0.0) && !b.is_constant()) {
        return Expr(0.0);
    }
    return Expr::make(Op::Div, 0.0, 0, a, b);
}

Expr operator-(const Expr& a)
{
    if (a.is_constant()) {
        return Expr(-a.constant());
    }
    if (a.op() == Op::Neg) {
        return a.arg(0);
    }
    return Expr::make(Op::Neg, 0.0, 0, a, Expr(nullptr));
}

Expr pow(const Expr& a, int n)
{
    if (n < 0) {
        throw InvalidArgument("negative exponent");
    }
    if (n == 0) {
        return Expr(1.0);
    }
    if (n == 1) {
        return a;
    }
    if (a.is_constant()) {
        const double v = std::pow(a.constant(), n);
        if (std::isfinite(v)) {
            return Expr(v);
        }
    }
    return Expr::make(Op::Pow, 0.0, n, a, Expr(nullptr));
}

Expr unary(Op op, const Expr& a)
{
    if (op == Op::Neg) {
        return -a;
    }
    if (a.is_constant()) {
        try {
            const double v = apply_unary(op, a.constant());
            if (std::isfinite(v)) {
                return Expr(v);
            }
        } catch (const DomainError&) {
            // Left unfolded so evaluation reports the domain error.
        }
    }
    return Expr::make(op, 0.0, 0, a, Expr(nullptr));
}

double eval(const Expr& e, double x, double y)
{
    switch (e.op()) {
        case Op::Const:
            return e.constant();
        case Op::X:
            return x;
        case Op::Y:
            return y;
        case Op::Pow:
            return apply_binary(Op::Pow, eval(e.arg(0), x, y), 0.0, e.exponent());
        default:
            break;
    }
    if (is_unary(e.op())) {
        return apply_unary(e.op(), eval(e.arg(0), x, y));
    }
    return apply_binary(e.op(), eval(e.arg(0), x, y), eval(e.arg(1), x, y), 0);
}

Expr differentiate(const Expr& e, Var v)
{
    std::unordered_map<const void*, Expr> memo;
    std::function<Expr(const Expr&)> d = [&](const Expr& f) -> Expr {
        if (auto it = memo.find(f.id()); it != memo.end()) {
            return it->second;
        }
        Expr r;
        switch (f.op()) {
            case Op::Const:
                r = Expr(0.0);
                break;
            case Op::X:
                r = Expr(v == Var::X ? 1.0 : 0.0);
                break;
            case Op::Y:
                r = Expr(v == Var::Y ? 1.0 : 0.0);
                break;
            case Op::Add:
                r = d(f.arg(0)) + d(f.arg(1));
                break;
            case Op::Sub:
                r = d(f.arg(0)) - d(f.arg(1));
                break;
            case Op::Mul:
                r = d(f.arg(0)) * f.arg(1) + f.arg(0) * d(f.arg(1));
                break;
            case Op::Div: {
                const Expr& a = f.arg(0);
                const Expr& b = f.arg(1);
                r = d(a) / b - a * d(b) / pow(b, 2);
                break;
            }
            case Op::Pow:
                r = Expr(static_cast<double>(f.exponent())) * pow(f.arg(0), f.exponent() - 1) * d(f.arg(0));
                break;
            case Op::Neg:
                r = -d(f.arg(0));
                break;
            case Op::Sin:
                r = cos(f.arg(0)) * d(f.arg(0));
                break;
            case Op::Cos:
                r = -(sin(f.arg(0)) * d(f.arg(0)));
                break;
            case Op::Exp:
                r = f * d(f.arg(0));
                break;
            case Op::Log:
                r = d(f.arg(0)) / f.arg(0);
                break;
            case Op::Sqrt:
                r = d(f.arg(0)) / (Expr(2.0) * f);
                break;
        }
        memo.emplace(f.id(), r);
        return r;
    };
    return d(e);
}

Expr substitute(const Expr& e, const Expr& sx, const Expr& sy)
{
    std::unordered_map<const void*, Expr> memo;
    std::function<Expr(const Expr&)> s = [&](const Expr& f) -> Expr {
        if (auto it = memo.find(f.id()); it != memo.end()) {
            return it->second;
        }
        Expr r;
        switch (f.op()) {
            case Op::Const:
                r = f;
                break;
            case Op::X:
                r = sx;
                break;
            case Op::Y:
                r = sy;
                break;
            case Op::Add:
                r = s(f.arg(0)) + s(f.arg(1));
                break;
            case Op::Sub:
                r = s(f.arg(0)) - s(f.arg(1));
                break;
            case Op::Mul:
                r = s(f.arg(0)) * s(f.arg(1));
                break;
            case Op::Div:
                r = s(f.arg(0)) / s(f.arg(1));
                break;
            case Op::Pow:
                r = pow(s(f.arg(0)), f.exponent());
                break;
            default:
                r = unary(f.op(), s(f.arg(0)));
                break;
        }
        memo.emplace(f.id(), r);
        return r;
    };
    return s(e);
}

std::string to_string(const Expr& e)
{
    switch (e.op()) {
        case Op::Const: {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", e.constant());
            return e.constant() < 0.0 ? "(" + std::string(buf) + ")" : std::string(buf);
        }
        case Op::X:
            return "x";
        case Op::Y:
            return "y";
        case Op::Add:
            return "(" + to_string(e.arg(0)) + "+" + to_string(e.arg(1)) + ")";
        case Op::Sub:
            return "(" + to_string(e.arg(0)) + "-" + to_string(e.arg(1)) + ")";
        case Op::Mul:
            return "(" + to_string(e.arg(0)) + "*" + to_string(e.arg(1)) + ")";
        case Op::Div:
            return "(" + to_string(e.arg(0)) + "/" + to_string(e.arg(1)) + ")";
        case Op::Pow:
            return "(" + to_string(e.arg(0)) + "^" + std::to_string(e.exponent()) + ")";
        case Op::Neg:
            return "(-" + to_string(e.arg(0)) + ")";
        default:
            return std::string(function_name(e.op())) + "(" + to_string(e.arg(0)) + ")";
    }
}

std::size_t node_count(const Expr& e)
{
    std::unordered_set<const void*> seen;
    std::function<void(const Expr&)> walk = [&](const Expr& f) {
        if (!seen.insert(f.id()).second) {
            return;
        }
        if (f.op() == Op::Const || f.op() == Op::X || f.op() == Op::Y) {
            return;
        }
        walk(f.arg(0));
        if (!is_unary(f.op()) && f.op() != Op::Pow) {
            walk(f.arg(1));
        }
    };
    walk(e);
    return seen.size();
}

// ---------------------------------------------------------------------------
// Parser

namespace
{

class Parser
{
public:
    explicit Parser(std::string_view text) : text_{text} {}

    Expr run()
    {
        skip();
        if (pos_ >= text_.size()) {
            throw ParseError("empty expression", pos_);
        }
        Expr e = sum();
        skip();
        if (pos_ < text_.size()) {
            throw ParseError(std::string("unexpected '") + text_[pos_] + "'", pos_);
        }
        return e;
    }

private:
    void skip()
    {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n')) {
            ++pos_;
        }
    }

    bool accept(char c)
    {
        skip();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    Expr sum()
    {
        Expr e = product();
        for (;;) {
            if (accept('+')) {
                e = e + product();
            } else if (accept('-')) {
                e = e - product();
            } else {
                return e;
            }
        }
    }

    Expr product()
    {
        Expr e = signed_factor();
        for (;;) {
            if (accept('*')) {
                e = e * signed_factor();
            } else if (accept('/')) {
                e = e / signed_factor();
            } else {
                return e;
            }
        }
    }

    Expr signed_factor()
    {
        if (accept('-')) {
            return -signed_factor();
        }
        return power();
    }

    Expr power()
    {
        Expr base = primary();
        if (!accept('^')) {
            return base;
        }
        skip();
        const std::size_t exp_at = pos_;
        Expr e = signed_factor();
        if (!e.is_constant()) {
            throw ParseError("exponent must be a constant", exp_at);
        }
        const double n = e.constant();
        if (n < 0.0 || n != std::floor(n) || n > 1024.0) {
            throw ParseError("exponent must be a non-negative integer", exp_at);
        }
        return pow(base, static_cast<int>(n));
    }

    Expr primary()
    {
        skip();
        if (pos_ >= text_.size()) {
            throw ParseError("unexpected end of input", pos_);
        }
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            Expr e = sum();
            if (!accept(')')) {
                throw ParseError("expected ')'", pos_);
            }
            return e;
        }
        if ((c >= '0' && c <= '9') || c == '.') {
            return number();
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            return identifier();
        }
        throw ParseError(std::string("unexpected '") + c + "'", pos_);
    }

    Expr number()
    {
        const std::size_t start = pos_;
        auto digits = [&] {
            while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') {
                ++pos_;
            }
        };
        digits();
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            digits();
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t save = pos_++;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) {
                ++pos_;
            }
            if (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') {
                digits();
            } else {
                pos_ = save;
            }
        }
        double v = 0.0;
        const auto res = std::from_chars(text_.data() + start, text_.data() + pos_, v);
        if (res.ec != std::errc() || res.ptr != text_.data() + pos_) {
            throw ParseError("malformed number", start);
        }
        return Expr(v);
    }

    Expr identifier()
    {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
        const std::string_view name = text_.substr(start, pos_ - start);
        if (name == "x") {
            return x();
        }
        if (name == "y") {
            return y();
        }
        if (name == "rr") {
            return pow(x(), 2) + pow(y(), 2);
        }
        if (name == "pi") {
            return Expr(std::numbers::pi);
        }
        static const std::pair<std::string_view, Op> functions[] = {
            {"sin", Op::Sin}, {"cos", Op::Cos}, {"exp", Op::Exp}, {"log", Op::Log}, {"sqrt", Op::Sqrt}, {"neg", Op::Neg},
        };
        for (const auto& [fname, op] : functions) {
            if (name == fname) {
                if (!accept('(')) {
                    throw ParseError("expected '(' after " + std::string(name), pos_);
                }
                Expr arg = sum();
                if (!accept(')')) {
                    throw ParseError("expected ')'", pos_);
                }
                return unary(op, arg);
            }
        }
        throw ParseError("unknown identifier '" + std::string(name) + "'", start);
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

}  // namespace

Expr parse(std::string_view text) { return Parser(text).run(); }

// ---------------------------------------------------------------------------
// Program

Program::Program(std::span<const Expr> outputs)
{
    struct Key
    {
        Op op;
        std::uint32_t a, b;
        double value;
        int exponent;
        bool operator==(const Key&) const = default;
    };
    struct KeyHash
    {
        std::size_t operator()(const Key& k) const noexcept
        {
            std::size_t h = std::hash<double>{}(k.value);
            h ^= (static_cast<std::size_t>(k.op) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
            h ^= (static_cast<std::size_t>(k.a) * 1000003ULL + (h << 6) + (h >> 2));
            h ^= (static_cast<std::size_t>(k.b) * 998244353ULL + (h << 6) + (h >> 2));
            h ^= (static_cast<std::size_t>(k.exponent) + (h << 6) + (h >> 2));
            return h;
        }
    };
    std::unordered_map<Key, std::uint32_t, KeyHash> interned;
    std::unordered_map<const void*, std::uint32_t> slot_of;

    std::function<std::uint32_t(const Expr&)> emit = [&](const Expr& e) -> std::uint32_t {
        if (auto it = slot_of.find(e.id()); it != slot_of.end()) {
            return it->second;
        }
        Key key{e.op(), 0, 0, 0.0, 0};
        switch (e.op()) {
            case Op::Const:
                key.value = e.constant();
                break;
            case Op::X:
            case Op::Y:
                break;
            case Op::Pow:
                key.a = emit(e.arg(0));
                key.exponent = e.exponent();
                break;
            default:
                key.a = emit(e.arg(0));
                if (!is_unary(e.op())) {
                    key.b = emit(e.arg(1));
                }
                break;
        }
        std::uint32_t slot;
        if (auto it = interned.find(key); it != interned.end()) {
            slot = it->second;
        } else {
            slot = static_cast<std::uint32_t>(tape_.size());
            tape_.push_back(Instr{key.op, key.a, key.b, key.value, key.exponent});
            interned.emplace(key, slot);
        }
        slot_of.emplace(e.id(), slot);
        return slot;
    };
    for (const Expr& e : outputs) {
        outputs_.push_back(emit(e));
    }
}

void Program::eval(double x, double y, std::span<double> out) const
{
    thread_local std::vector<double> scratch;
    scratch.resize(tape_.size());
    for (std::size_t i = 0; i < tape_.size(); ++i) {
        const Instr& in = tape_[i];
        double v;
        switch (in.op) {
            case Op::Const:
                v = in.value;
                break;
            case Op::X:
                v = x;
                break;
            case Op::Y:
                v = y;
                break;
            case Op::Pow:
                v = apply_binary(Op::Pow, scratch[in.a], 0.0, in.exponent);
                break;
            default:
                v = is_unary(in.op) ? apply_unary(in.op, scratch[in.a])
                                    : apply_binary(in.op, scratch[in.a], scratch[in.b], 0);
                break;
        }
        scratch[i] = v;
    }
    for (std::size_t k = 0; k < outputs_.size() && k < out.size(); ++k) {
        out[k] = scratch[outputs_[k]];
    }
}

std::vector<double> Program::eval(double x, double y) const
{
    std::vector<double> out(outputs_.size());
    eval(x, y, out);
    return out;
}

}  // namespace discunif::expr

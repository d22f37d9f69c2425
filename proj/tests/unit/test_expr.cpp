#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "discunif/error.hpp"
#include "discunif/expr.hpp"

using namespace discunif;
using namespace discunif::expr;

namespace
{

double central_x(const Expr& e, double x, double y, double h) { return (e(x + h, y) - e(x - h, y)) / (2 * h); }
double central_y(const Expr& e, double x, double y, double h) { return (e(x, y + h) - e(x, y - h)) / (2 * h); }

std::vector<std::pair<double, double>> disc_points(int n, unsigned seed, double radius = 0.95)
{
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<std::pair<double, double>> pts;
    while (static_cast<int>(pts.size()) < n) {
        const double x = u(rng), y = u(rng);
        if (x * x + y * y <= radius * radius) {
            pts.emplace_back(x, y);
        }
    }
    return pts;
}

const char* const kCorpus[] = {
    "x^2+y^2",
    "log(2/(1+x^2+y^2))",
    "log(2/(1+0.5*rr))",
    "sin(x)*cos(y)",
    "exp(x*y)",
    "sqrt(2+x)",
    "x^5 - 3*x^3*y^2 + y",
    "1/(2+x+y)",
    "exp(-(x^2+y^2))*sin(3*x)",
    "log(1+x^2)*y^3",
    "-x^2+-y",
    "neg(x)*cos(pi*y)",
    "(x+y)^3/(3+x)",
    "sqrt(1+rr)^3",
    "0.1*(1-rr)",
    "cos(exp(x))",
    "sin(x)^2+cos(x)^2",
    "x*y*(1-rr)^2",
    "exp(2*log(2/(1+rr)))",
    "2^3*x - 4/2*y",
    "log(cos(x*y)+2)",
};

}  // namespace

TEST_CASE("parse builds the grammar tree")
{
    const Expr e = parse("x^2+y^2");
    REQUIRE(e.op() == Op::Add);
    CHECK(e.arg(0).op() == Op::Pow);
    CHECK(e.arg(0).exponent() == 2);
    CHECK(e.arg(0).arg(0).op() == Op::X);
    CHECK(e.arg(1).op() == Op::Pow);
    CHECK(e.arg(1).arg(0).op() == Op::Y);
}

TEST_CASE("precedence: power binds tighter than unary minus, then products, then sums")
{
    CHECK(eval(parse("-x^2"), 3, 0) == doctest::Approx(-9));
    CHECK(eval(parse("2*x^2+1"), 3, 0) == doctest::Approx(19));
    CHECK(eval(parse("x-y-1"), 5, 2) == doctest::Approx(2));
    CHECK(eval(parse("x/y/2"), 8, 2) == doctest::Approx(2));
    CHECK(eval(parse("2^3^2"), 0, 0) == doctest::Approx(512));
    CHECK(eval(parse("(1+x)*(1-x)"), 0.5, 0) == doctest::Approx(0.75));
    CHECK(eval(parse("pi"), 0, 0) == doctest::Approx(std::acos(-1.0)));
    CHECK(eval(parse("rr"), 0.6, 0.8) == doctest::Approx(1.0));
}

TEST_CASE("eval examples")
{
    CHECK(eval(parse("x^2+y^2"), 0.6, 0.8) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(eval(parse("log(2/(1+x^2+y^2))"), 0, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(eval(parse("log(2/(1+x^2+y^2))"), 0, 0) == doctest::Approx(0.6931471805599453));
    CHECK_THROWS_AS(eval(parse("sqrt(x)"), -1, 0), DomainError);
    CHECK_THROWS_AS(eval(parse("log(x)"), 0, 0), DomainError);
    CHECK_THROWS_AS(eval(parse("1/x"), 0, 0), DomainError);
}

TEST_CASE("syntax errors report the offset")
{
    try {
        parse("x +* y");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.offset() == 3);
    }
}

TEST_CASE("malformed inputs are rejected")
{
    const char* const bad[] = {"",      "x +* y", "(x",    "x)",      "foo(x)", "z",     "x^-1", "x^1.5",
                               "x^y",   "sin x",  "2 x",   "x..1",    "sin()",  "1e",    "*x",   "x^",
                               "log(,)", "sqrt(x,y)", "x $ y", "((x)"};
    for (const char* text : bad) {
        CAPTURE(text);
        CHECK_THROWS_AS(parse(text), ParseError);
    }
}

TEST_CASE("derivative examples")
{
    const Expr r2 = parse("x^2+y^2");
    const Expr dx = differentiate(r2, Var::X);
    for (auto [x, y] : disc_points(50, 1)) {
        CHECK(dx(x, y) == doctest::Approx(2 * x));
    }
    CHECK(differentiate(parse("log(1+x^2+y^2)"), Var::X)(1, 0) == doctest::Approx(1.0));
    const Expr dy = differentiate(parse("sin(x)*exp(x)+x^3"), Var::Y);
    for (auto [x, y] : disc_points(50, 2)) {
        CHECK(dy(x, y) == 0.0);
    }
}

TEST_CASE("symbolic derivatives agree with central differences")
{
    const auto pts = disc_points(1000, 3);
    const double h = 1e-5;
    for (const char* text : kCorpus) {
        CAPTURE(text);
        const Expr e = parse(text);
        const Expr ex = differentiate(e, Var::X);
        const Expr ey = differentiate(e, Var::Y);
        double worst = 0.0;
        for (auto [x, y] : pts) {
            worst = std::max(worst, std::abs(ex(x, y) - central_x(e, x, y, h)));
            worst = std::max(worst, std::abs(ey(x, y) - central_y(e, x, y, h)));
        }
        CHECK(worst <= 1e-6);
    }
}

TEST_CASE("second derivatives: Laplacian of the cap factor")
{
    // u = log(2/(1+t r^2)): Lap u = -4t/(1+t r^2)^2.
    const double t = 0.5;
    const Expr u = parse("log(2/(1+0.5*rr))");
    const Expr lap = differentiate(differentiate(u, Var::X), Var::X) + differentiate(differentiate(u, Var::Y), Var::Y);
    for (auto [x, y] : disc_points(100, 4, 1.0)) {
        const double r2 = x * x + y * y;
        CHECK(lap(x, y) == doctest::Approx(-4 * t / ((1 + t * r2) * (1 + t * r2))).epsilon(1e-12));
    }
}

TEST_CASE("printing round trips")
{
    const auto pts = disc_points(200, 5);
    for (const char* text : kCorpus) {
        CAPTURE(text);
        const Expr e = parse(text);
        const Expr back = parse(to_string(e));
        for (auto [x, y] : pts) {
            CHECK(std::abs(back(x, y) - e(x, y)) <= 1e-12);
        }
    }
}

TEST_CASE("programs evaluate like the trees and merge shared nodes")
{
    const Expr u = parse("log(2/(1+rr))");
    const Expr ux = differentiate(u, Var::X);
    const Expr uy = differentiate(u, Var::Y);
    const std::vector<Expr> outs{u, ux, uy};
    const Program prog(outs);
    CHECK(prog.outputs() == 3);
    CHECK(prog.size() <= node_count(u) + node_count(ux) + node_count(uy));
    for (auto [x, y] : disc_points(100, 6)) {
        const auto v = prog.eval(x, y);
        CHECK(v[0] == doctest::Approx(u(x, y)).epsilon(1e-15));
        CHECK(v[1] == doctest::Approx(ux(x, y)).epsilon(1e-15));
        CHECK(v[2] == doctest::Approx(uy(x, y)).epsilon(1e-15));
    }
}

TEST_CASE("substitution composes")
{
    // f(x, y) = x*y with x -> x + y, y -> x - y gives x^2 - y^2.
    const Expr f = substitute(parse("x*y"), parse("x+y"), parse("x-y"));
    for (auto [x, y] : disc_points(50, 7)) {
        CHECK(f(x, y) == doctest::Approx(x * x - y * y));
    }
}

TEST_CASE("constant folding")
{
    CHECK(parse("2*3+1").is_constant(7.0));
    CHECK(differentiate(parse("x^2"), Var::Y).is_constant(0.0));
}

#include "discunif/metric.hpp"

#include <cmath>
#include <sstream>

#include "discunif/error.hpp"

namespace discunif
{

using expr::Expr;

namespace
{

void check_positive(std::span<const Sym2> values)
{
    for (std::size_t v = 0; v < values.size(); ++v) {
        const Sym2& g = values[v];
        if (!(std::isfinite(g.g11) && std::isfinite(g.g12) && std::isfinite(g.g22))) {
            throw PositivityError("metric is not finite", v);
        }
        if (!(g.g11 > 0.0) || !(g.det() > 0.0)) {
            throw PositivityError("metric is not positive definite", v);
        }
    }
}

double param_number(const BuiltinParams& params, std::string_view key)
{
    auto it = params.find(key);
    if (it == params.end()) {
        throw InvalidArgument("missing parameter '" + std::string(key) + "'");
    }
    // Numbers may be written as expressions ("1/3", "pi/8").
    const Expr e = expr::parse(it->second);
    if (!e.is_constant()) {
        throw InvalidArgument("parameter '" + std::string(key) + "' must be a constant");
    }
    return e.constant();
}

Expr param_expr(const BuiltinParams& params, std::string_view key)
{
    auto it = params.find(key);
    if (it == params.end()) {
        throw InvalidArgument("missing parameter '" + std::string(key) + "'");
    }
    return expr::parse(it->second);
}

std::string format_tag(std::string_view name, const BuiltinParams& params)
{
    std::ostringstream os;
    os << name;
    char sep = ':';
    for (const auto& [k, v] : params) {
        os << sep << k << '=' << v;
        sep = ',';
    }
    return os.str();
}

double check_cap(double t)
{
    if (!(t > 0.0 && t <= 1.0)) {
        throw InvalidArgument("cap requires 0 < t <= 1");
    }
    return t;
}

Expr base_factor(const BuiltinParams& params)
{
    if (params.contains("cap") && params.contains("u")) {
        throw InvalidArgument("give either cap or u as the pullback base, not both");
    }
    if (params.contains("cap")) {
        return cap_factor(check_cap(param_number(params, "cap")));
    }
    if (params.contains("u")) {
        return param_expr(params, "u");
    }
    return Expr(0.0);
}

}  // namespace

Sym2 MetricSource::at(double x, double y) const
{
    if (const auto* c = std::get_if<ConformalSource>(&form)) {
        const double s = std::exp(2.0 * c->u(x, y));
        return {s, 0.0, s};
    }
    const auto& c = std::get<ComponentsSource>(form);
    return {c.g11(x, y), c.g12(x, y), c.g22(x, y)};
}

ComponentsSource MetricSource::components() const
{
    if (const auto* c = std::get_if<ConformalSource>(&form)) {
        const Expr s = expr::exp(Expr(2.0) * c->u);
        return {s, Expr(0.0), s};
    }
    return std::get<ComponentsSource>(form);
}

AnalyticMap AnalyticMap::identity() { return {expr::x(), expr::y()}; }

AnalyticMap AnalyticMap::radial(double a)
{
    const Expr s = Expr(a) + Expr(1.0 - a) * (expr::pow(expr::x(), 2) + expr::pow(expr::y(), 2));
    return {expr::x() * s, expr::y() * s};
}

AnalyticMap AnalyticMap::twist(double beta)
{
    const Expr phase = Expr(2.0 * beta) * expr::x() * expr::y();
    const Expr c = expr::cos(phase), s = expr::sin(phase);
    return {expr::x() * c - expr::y() * s, expr::x() * s + expr::y() * c};
}

AnalyticMap AnalyticMap::radial_twist(double a, double beta)
{
    const AnalyticMap inner = radial(a);
    const AnalyticMap outer = twist(beta);
    return {expr::substitute(outer.re, inner.re, inner.im), expr::substitute(outer.im, inner.re, inner.im)};
}

AnalyticMap AnalyticMap::mobius(Complex c)
{
    // numerator times conj(denominator), over |denominator|^2
    const Expr x = expr::x(), y = expr::y();
    const Expr nr = x - Expr(c.real()), ni = y - Expr(c.imag());
    // 1 - conj(c) z = (1 - (cr x + ci y)) + i (ci x - cr y)
    const Expr dr = Expr(1.0) - (Expr(c.real()) * x + Expr(c.imag()) * y);
    const Expr di = Expr(c.imag()) * x - Expr(c.real()) * y;
    const Expr den = expr::pow(dr, 2) + expr::pow(di, 2);
    return {(nr * dr + ni * di) / den, (ni * dr - nr * di) / den};
}

MetricSource pullback_source(const AnalyticMap& psi, const Expr& base_u, std::string tag)
{
    using expr::Var;
    const Expr Xx = expr::differentiate(psi.re, Var::X), Xy = expr::differentiate(psi.re, Var::Y);
    const Expr Yx = expr::differentiate(psi.im, Var::X), Yy = expr::differentiate(psi.im, Var::Y);
    Expr g11 = Xx * Xx + Yx * Yx;
    Expr g12 = Xx * Xy + Yx * Yy;
    Expr g22 = Xy * Xy + Yy * Yy;
    if (!base_u.is_constant(0.0)) {
        const Expr s = expr::exp(Expr(2.0) * expr::substitute(base_u, psi.re, psi.im));
        g11 = s * g11;
        g12 = s * g12;
        g22 = s * g22;
    }
    return MetricSource{ComponentsSource{g11, g12, g22}, std::move(tag)};
}

// ---------------------------------------------------------------------------

MetricField::MetricField(MeshPtr mesh, std::vector<Sym2> values) : mesh_{std::move(mesh)}, values_{std::move(values)}
{
    if (values_.size() != mesh_->num_vertices()) {
        throw InvalidArgument("metric has " + std::to_string(values_.size()) + " values for " +
                              std::to_string(mesh_->num_vertices()) + " vertices");
    }
    check_positive(values_);
}

MetricField::MetricField(MeshPtr mesh, MetricSource source) : mesh_{std::move(mesh)}, source_{std::move(source)}
{
    const auto comps = source_->components();
    const std::vector<Expr> outs{comps.g11, comps.g12, comps.g22};
    const expr::Program prog(outs);
    values_.resize(mesh_->num_vertices());
    double out[3];
    for (std::size_t v = 0; v < values_.size(); ++v) {
        const Complex z = mesh_->vertex(v);
        prog.eval(z.real(), z.imag(), out);
        values_[v] = {out[0], out[1], out[2]};
    }
    check_positive(values_);
}

MetricField MetricField::discrete() const { return MetricField(mesh_, values_); }

Sym2 MetricField::at(Complex p, PointLocator& locator) const
{
    if (source_) {
        return source_->at(p.real(), p.imag());
    }
    return locator.interpolate(std::span<const Sym2>(values_), p);
}

BeltramiField::BeltramiField(MeshPtr mesh, ComplexField mu) : mesh_{std::move(mesh)}, mu_{std::move(mu)}
{
    if (mu_.size() != mesh_->num_vertices()) {
        throw InvalidArgument("Beltrami field size does not match the mesh");
    }
    for (const Complex m : mu_) {
        if (!std::isfinite(m.real()) || !std::isfinite(m.imag())) {
            throw BoundError("Beltrami coefficient is not finite");
        }
        bound_ = std::max(bound_, std::abs(m));
    }
    if (bound_ > 1.0 - kBoundMargin) {
        throw BoundError("Beltrami coefficient bound " + std::to_string(bound_) + " is not below 1 - 1e-6");
    }
}

ConformalFactor::ConformalFactor(MeshPtr mesh, RealField u) : mesh_{std::move(mesh)}, u_{std::move(u)}
{
    if (u_.size() != mesh_->num_vertices()) {
        throw InvalidArgument("conformal factor size does not match the mesh");
    }
    for (double v : u_) {
        if (!std::isfinite(v)) {
            throw InvalidArgument("conformal factor is not finite");
        }
    }
}

ConformalFactor::ConformalFactor(MeshPtr mesh, Expr u) : mesh_{std::move(mesh)}, source_{std::move(u)}
{
    u_.resize(mesh_->num_vertices());
    for (std::size_t v = 0; v < u_.size(); ++v) {
        const Complex z = mesh_->vertex(v);
        u_[v] = (*source_)(z.real(), z.imag());
    }
}

// ---------------------------------------------------------------------------

ClassDecomposition mu_from_metric(const MetricField& g)
{
    const std::size_t n = g.size();
    ComplexField mu(n);
    RealField rho(n);
    for (std::size_t v = 0; v < n; ++v) {
        const Sym2& m = g[v];
        const double r = m.trace() + 2.0 * std::sqrt(m.det());
        rho[v] = r;
        mu[v] = Complex(m.g11 - m.g22, 2.0 * m.g12) / r;
    }
    return {BeltramiField(g.mesh_ptr(), std::move(mu)), std::move(rho)};
}

MetricField metric_from_mu(const BeltramiField& mu)
{
    std::vector<Sym2> values(mu.size());
    for (std::size_t v = 0; v < mu.size(); ++v) {
        const Complex m = mu[v];
        values[v] = {std::norm(1.0 + m), 2.0 * m.imag(), std::norm(1.0 - m)};
    }
    return MetricField(mu.mesh_ptr(), std::move(values));
}

MetricField metric_from_decomposition(const ClassDecomposition& d)
{
    const MetricField unit = metric_from_mu(d.mu);
    std::vector<Sym2> values(unit.size());
    for (std::size_t v = 0; v < values.size(); ++v) {
        values[v] = unit[v].scaled(0.25 * d.rho[v]);
    }
    return MetricField(d.mu.mesh_ptr(), std::move(values));
}

MetricField conformal_scale(const MetricField& g, const ConformalFactor& u)
{
    double umax = -INFINITY;
    for (double v : u.values()) {
        umax = std::max(umax, v);
    }
    if (umax > 300.0) {
        throw InvalidArgument("conformal factor too large (max u = " + std::to_string(umax) + ")");
    }
    if (g.source() && u.source()) {
        const MetricSource& src = *g.source();
        const Expr& f = *u.source();
        if (const auto* c = std::get_if<ConformalSource>(&src.form)) {
            return MetricField(g.mesh_ptr(), MetricSource{ConformalSource{c->u + f}, src.tag + "*e^{2u}"});
        }
        const auto& c = std::get<ComponentsSource>(src.form);
        const Expr s = expr::exp(Expr(2.0) * f);
        return MetricField(g.mesh_ptr(),
                           MetricSource{ComponentsSource{s * c.g11, s * c.g12, s * c.g22}, src.tag + "*e^{2u}"});
    }
    std::vector<Sym2> values(g.size());
    for (std::size_t v = 0; v < g.size(); ++v) {
        values[v] = g[v].scaled(std::exp(2.0 * u[v]));
    }
    return MetricField(g.mesh_ptr(), std::move(values));
}

MetricField convex_combination(const MetricField& g, const ConformalFactor& u1, const ConformalFactor& u2, double t1,
                               double t2)
{
    if (t1 < 0.0 || t2 < 0.0 || std::abs(t1 + t2 - 1.0) > 1e-12) {
        throw InvalidArgument("convex weights must be non-negative and sum to 1");
    }
    if (u1.source() && u2.source()) {
        return conformal_scale(g, ConformalFactor(g.mesh_ptr(), Expr(t1) * *u1.source() + Expr(t2) * *u2.source()));
    }
    RealField u(g.size());
    for (std::size_t v = 0; v < u.size(); ++v) {
        u[v] = t1 * u1[v] + t2 * u2[v];
    }
    return conformal_scale(g, ConformalFactor(g.mesh_ptr(), std::move(u)));
}

RealField volume_ratio(const MetricField& g0, const MetricField& g, int n)
{
    if (n < 2) {
        throw InvalidArgument("volume_ratio requires n >= 2");
    }
    check_positive(g0.values());
    check_positive(g.values());
    RealField out(g.size());
    for (std::size_t v = 0; v < out.size(); ++v) {
        const double ratio = std::sqrt(g0[v].det()) / std::sqrt(g[v].det());
        out[v] = std::pow(ratio, 2.0 / n);
    }
    return out;
}

Expr cap_factor(double t)
{
    return expr::log(Expr(2.0) / (Expr(1.0) + Expr(t) * (expr::pow(expr::x(), 2) + expr::pow(expr::y(), 2))));
}

MetricSource builtin_source(std::string_view name, const BuiltinParams& params)
{
    const std::string tag = format_tag(name, params);
    if (name == "flat") {
        return MetricSource{ComponentsSource{Expr(1.0), Expr(0.0), Expr(1.0)}, tag};
    }
    if (name == "cap") {
        return MetricSource{ConformalSource{cap_factor(check_cap(param_number(params, "t")))}, tag};
    }
    if (name == "conformal") {
        return MetricSource{ConformalSource{param_expr(params, "u")}, tag};
    }
    if (name == "components") {
        return MetricSource{
            ComponentsSource{param_expr(params, "g11"), param_expr(params, "g12"), param_expr(params, "g22")}, tag};
    }
    if (name == "pullback_radial" || name == "pullback_twist" || name == "pullback") {
        double a = 1.0, beta = 0.0;
        if (name != "pullback_twist") {
            a = param_number(params, "a");
            if (!(a > 0.0 && a <= 1.0)) {
                throw InvalidArgument("radial parameter a must lie in (0, 1]");
            }
        }
        if (name != "pullback_radial") {
            beta = param_number(params, "beta");
            if (!(std::abs(beta) < 0.5)) {
                throw InvalidArgument("twist parameter beta must satisfy |beta| < 1/2");
            }
        }
        AnalyticMap psi = name == "pullback_radial"  ? AnalyticMap::radial(a)
                          : name == "pullback_twist" ? AnalyticMap::twist(beta)
                                                     : AnalyticMap::radial_twist(a, beta);
        return pullback_source(psi, base_factor(params), tag);
    }
    throw InvalidArgument("unknown builtin metric '" + std::string(name) + "'");
}

MetricField builtin_metric(std::string_view name, const BuiltinParams& params, MeshPtr mesh)
{
    return MetricField(std::move(mesh), builtin_source(name, params));
}

}  // namespace discunif

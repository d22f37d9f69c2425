#pragma once

// Riemannian metrics on the disc and the conformal-class calculus:
// 4 g = rho |dz + mu dzbar|^2, its inverse, conformal scaling and the
// volume-element ratio.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "discunif/expr.hpp"
#include "discunif/mesh.hpp"

namespace discunif
{

/// g = g11 dx^2 + 2 g12 dx dy + g22 dy^2 with expression components.
struct ComponentsSource
{
    expr::Expr g11, g12, g22;
};

/// g = e^{2u} g0.
struct ConformalSource
{
    expr::Expr u;
};

/// Analytic description of a metric; exact derivatives feed the curvature kernels.
struct MetricSource
{
    std::variant<ComponentsSource, ConformalSource> form;
    /// Human-readable provenance ("cap:t=0.5", "components", ...).
    std::string tag;

    Sym2 at(double x, double y) const;
    bool is_conformal() const noexcept { return std::holds_alternative<ConformalSource>(form); }
    /// Component form; conformal sources are expanded to e^{2u} times the identity.
    ComponentsSource components() const;
};

/// Smooth self-map of the plane given by expressions for its real and imaginary parts.
struct AnalyticMap
{
    expr::Expr re, im;

    Complex operator()(Complex z) const { return {re(z.real(), z.imag()), im(z.real(), z.imag())}; }

    static AnalyticMap identity();
    /// z (a + (1 - a)|z|^2): fixes the unit circle pointwise.
    static AnalyticMap radial(double a);
    /// z exp(2 i beta x y): rotates circles, fixes 1, i, -1.
    static AnalyticMap twist(double beta);
    /// twist(beta) after radial(a).
    static AnalyticMap radial_twist(double a, double beta);
    /// (z - c) / (1 - conj(c) z).
    static AnalyticMap mobius(Complex c);
};

/// Pullback psi^*(e^{2u} g0) as a component source.
MetricSource pullback_source(const AnalyticMap& psi, const expr::Expr& base_u, std::string tag);

/// Per-vertex positive definite metric, optionally carrying its analytic source.
class MetricField
{
public:
    /// Discrete metric. Throws PositivityError on the first offending vertex.
    MetricField(MeshPtr mesh, std::vector<Sym2> values);
    /// Samples an analytic source at the mesh vertices.
    MetricField(MeshPtr mesh, MetricSource source);

    const DiscMesh& mesh() const noexcept { return *mesh_; }
    const MeshPtr& mesh_ptr() const noexcept { return mesh_; }
    std::span<const Sym2> values() const noexcept { return values_; }
    const Sym2& operator[](std::size_t v) const noexcept { return values_[v]; }
    std::size_t size() const noexcept { return values_.size(); }
    const std::optional<MetricSource>& source() const noexcept { return source_; }
    bool is_analytic() const noexcept { return source_.has_value(); }

    /// Same vertex values with the analytic source dropped.
    MetricField discrete() const;
    /// Metric at an arbitrary point of the disc: exact for analytic sources,
    /// barycentric interpolation otherwise.
    Sym2 at(Complex p, PointLocator& locator) const;

private:
    MeshPtr mesh_;
    std::vector<Sym2> values_;
    std::optional<MetricSource> source_;
};

/// Canonical representative of a conformal class: per-vertex mu with max |mu| < 1.
class BeltramiField
{
public:
    static constexpr double kBoundMargin = 1e-6;

    /// Throws BoundError when max |mu| > 1 - kBoundMargin or any value is not finite.
    BeltramiField(MeshPtr mesh, ComplexField mu);

    const DiscMesh& mesh() const noexcept { return *mesh_; }
    const MeshPtr& mesh_ptr() const noexcept { return mesh_; }
    std::span<const Complex> values() const noexcept { return mu_; }
    Complex operator[](std::size_t v) const noexcept { return mu_[v]; }
    std::size_t size() const noexcept { return mu_.size(); }
    /// max |mu|
    double bound() const noexcept { return bound_; }

private:
    MeshPtr mesh_;
    ComplexField mu_;
    double bound_ = 0.0;
};

/// Real function u on the vertices, optionally with its expression.
class ConformalFactor
{
public:
    ConformalFactor(MeshPtr mesh, RealField u);
    ConformalFactor(MeshPtr mesh, expr::Expr u);
    static ConformalFactor constant(MeshPtr mesh, double c) { return ConformalFactor(std::move(mesh), expr::Expr(c)); }

    const DiscMesh& mesh() const noexcept { return *mesh_; }
    const MeshPtr& mesh_ptr() const noexcept { return mesh_; }
    std::span<const double> values() const noexcept { return u_; }
    double operator[](std::size_t v) const noexcept { return u_[v]; }
    const std::optional<expr::Expr>& source() const noexcept { return source_; }

private:
    MeshPtr mesh_;
    RealField u_;
    std::optional<expr::Expr> source_;
};

struct ClassDecomposition
{
    BeltramiField mu;
    RealField rho;
};

/// [g] -> (rho, mu) with 4 g = rho |dz + mu dzbar|^2.
ClassDecomposition mu_from_metric(const MetricField& g);

/// g = |dz + mu dzbar|^2.
MetricField metric_from_mu(const BeltramiField& mu);

/// g = (rho / 4) |dz + mu dzbar|^2, inverting mu_from_metric.
MetricField metric_from_decomposition(const ClassDecomposition& d);

/// e^{2u} g. Rejects max u > 300.
MetricField conformal_scale(const MetricField& g, const ConformalFactor& u);

/// e^{2(t1 u1 + t2 u2)} g with t1, t2 >= 0, t1 + t2 = 1.
MetricField convex_combination(const MetricField& g, const ConformalFactor& u1, const ConformalFactor& u2, double t1,
                               double t2);

/// (sqrt det g0 / sqrt det g)^{2/n} pointwise.
RealField volume_ratio(const MetricField& g0, const MetricField& g, int n);

/// Builtin metric families. Parameters are passed as text:
///   flat
///   cap                  t in (0, 1]      e^{2u} g0, u = log(2 / (1 + t r^2))
///   conformal            u = <expr>
///   components           g11, g12, g22 = <expr>
///   pullback_radial      a in (0, 1]      radial(a)^* of the base
///   pullback_twist       beta, |beta| < 1/2
///   pullback             a, beta          radial_twist(a, beta)^* of the base
/// Pullback families take an optional base conformal factor: cap=<t> or u=<expr>.
using BuiltinParams = std::map<std::string, std::string, std::less<>>;
MetricSource builtin_source(std::string_view name, const BuiltinParams& params);
MetricField builtin_metric(std::string_view name, const BuiltinParams& params, MeshPtr mesh);

/// Conformal factor of the cap family, log(2 / (1 + t r^2)).
expr::Expr cap_factor(double t);

}  // namespace discunif

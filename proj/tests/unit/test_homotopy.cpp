#include <doctest.h>

#include <cmath>
#include <random>

#include "discunif/error.hpp"
#include "discunif/homotopy.hpp"

using namespace discunif;

namespace
{

Complex mu_a(Complex z, double a) { return (1 - a) * z * z / (a + 2 * (1 - a) * std::norm(z)); }

double max_diff(std::span<const Complex> a, std::span<const Complex> b)
{
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(a[i] - b[i]));
    }
    return worst;
}

double max_diff(const MetricField& a, const MetricField& b)
{
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, a[i].max_abs_diff(b[i]));
    }
    return worst;
}

double max_rel_diff(const MetricField& a, const MetricField& b)
{
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, a[i].max_abs_diff(b[i]) / std::max(b[i].g11, b[i].g22));
    }
    return worst;
}

MetricField cap(double t, const MeshPtr& m) { return builtin_metric("cap", {{"t", std::to_string(t)}}, m); }

}  // namespace

TEST_CASE("projection")
{
    const MeshPtr m = DiscMesh::build(16, 64);
    CHECK(project(builtin_metric("flat", {}, m)).bound() == 0.0);
    CHECK(project(cap(0.5, m)).bound() < 1e-15);
    const BeltramiField d = project(MetricField(m, std::vector<Sym2>(m->num_vertices(), Sym2{4, 0, 1})));
    CHECK(std::abs(d[5] - 1.0 / 3.0) < 1e-15);
}

TEST_CASE("class contraction")
{
    const MeshPtr m = DiscMesh::build(16, 64);
    ComplexField vals(m->num_vertices());
    for (std::size_t v = 0; v < vals.size(); ++v) {
        vals[v] = mu_a(m->vertex(v), 0.6);
    }
    const BeltramiField mu(m, vals);
    CHECK(max_diff(class_contraction(0.0, mu).values(), mu.values()) == 0.0);
    CHECK(class_contraction(1.0, mu).bound() == 0.0);
    const BeltramiField q = class_contraction(0.3, mu);
    for (std::size_t v = 0; v < vals.size(); ++v) {
        CHECK(std::abs(q[v]) == doctest::Approx(0.7 * std::abs(vals[v])));
    }
    CHECK_THROWS_AS(class_contraction(1.5, mu), InvalidArgument);
}

TEST_CASE("uniformization of a conformally flat metric")
{
    const MeshPtr m = DiscMesh::build(32, 128);
    const Uniformization u = uniformize(cap(0.5, m));
    CHECK(u.phi.normalized());
    const auto z = m->vertices();
    CHECK(max_diff(u.phi.values(), z) <= 1e-6);
    const ConformalFactor exact(m, cap_factor(0.5));
    double worst = 0.0;
    for (std::size_t v = 0; v < m->num_vertices(); ++v) {
        worst = std::max({worst, std::abs(u.v[v] - exact[v]), std::abs(u.u[v] - exact[v])});
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("uniformization recovers the radial oracle")
{
    const MeshPtr m = DiscMesh::build(32, 128);
    const Uniformization u = uniformize(builtin_metric("pullback_radial", {{"a", "0.7"}}, m));
    const QCMap psi = QCMap::sample(m, AnalyticMap::radial(0.7));
    CHECK(max_diff(u.phi.values(), psi.values()) <= 2e-2);
    CHECK(u.residual <= 4e-2);
    // psi_a^* g0 = e^{2v} psi_a^* g0 with v = 0: the factor vanishes.
    double worst = 0.0;
    for (std::size_t v = 0; v < m->num_vertices(); ++v) {
        worst = std::max(worst, std::abs(u.v[v]));
    }
    CHECK(worst <= 2e-2);
}

TEST_CASE("section and projection")
{
    const MeshPtr m = DiscMesh::build(32, 128);
    const MetricField gD = cap(0.5, m);
    const MetricField s0 = sigma(BeltramiField(m, ComplexField(m->num_vertices(), 0.0)), gD);
    CHECK(max_diff(s0, gD) <= 1e-6);
    ComplexField vals(m->num_vertices());
    for (std::size_t v = 0; v < vals.size(); ++v) {
        vals[v] = mu_a(m->vertex(v), 0.7);
    }
    const BeltramiField mu(m, vals);
    const MetricField s = sigma(mu, cap(1.0, m));
    CHECK(max_diff(project(s).values(), mu.values()) <= 4e-2);
    // Pullbacks preserve curvature: K of psi_a^* cap(1) is 1 away from the center fan.
    const RealField K = gauss_curvature(s);
    for (std::size_t v = 0; v < K.size(); ++v) {
        if (!m->is_boundary(v) && std::abs(m->vertex(v)) > 0.3) {
            CHECK(K[v] == doctest::Approx(1.0).epsilon(0.1));
        }
    }
}

TEST_CASE("retraction identities")
{
    const MeshPtr m = DiscMesh::build(32, 128);
    const MetricField g = builtin_metric("pullback", {{"a", "0.8"}, {"beta", "0.15"}, {"cap", "0.25"}}, m);
    const MetricField gD = cap(0.5, m);
    const Retraction H(g, gD);
    CHECK(H.reconstruction_residual() <= 2e-2);
    CHECK(max_rel_diff(H.at(0.0), g) <= H.reconstruction_residual() + 1e-14);
    const MetricField s = sigma(project(g), gD);
    CHECK(max_diff(H.at(1.0), s) <= 1e-10);
    const BeltramiField mu0 = project(H.at(0.0));
    for (double t : {0.25, 0.5, 0.75, 1.0}) {
        CHECK(max_diff(project(H.at(t)).values(), mu0.values()) <= 1e-10);
    }
    CHECK(max_diff(retraction_H(1.0, g, gD), s) <= 1e-10);
}

TEST_CASE("retraction between caps stays in II∩II∂")
{
    const MeshPtr m = DiscMesh::build(32, 128);
    const MetricField h = retraction_H(0.5, cap(0.25, m), cap(0.5, m));
    const Membership mm = membership(h, CurvatureSet::parse("II∩II∂"));
    CHECK(mm.member);
    CHECK(mm.margin > 0);
}

TEST_CASE("appendix contraction")
{
    const MeshPtr m = DiscMesh::build(16, 64);
    const MetricField g = builtin_metric("pullback", {{"a", "0.75"}, {"beta", "0.2"}}, m);
    const MetricField g0 = builtin_metric("flat", {}, m);
    CHECK(max_diff(appendix_contraction(0.0, g, g0).values(), project(g).values()) <= 1e-12);
    CHECK(appendix_contraction(1.0, g, g0).bound() <= 1e-12);
    std::mt19937_64 rng(41);
    std::normal_distribution<double> n;
    for (int trial = 0; trial < 20; ++trial) {
        const double a = n(rng), b = n(rng);
        RealField v(m->num_vertices());
        for (std::size_t i = 0; i < v.size(); ++i) {
            const Complex z = m->vertex(i);
            v[i] = a * z.real() * z.imag() + b * std::cos(2 * z.real());
        }
        const MetricField gv = conformal_scale(g, ConformalFactor(m, v));
        for (double t : {0.2, 0.5, 0.9}) {
            CHECK(max_diff(appendix_contraction(t, gv, g0).values(), appendix_contraction(t, g, g0).values()) <=
                  1e-10);
        }
    }
    CHECK_THROWS_AS(appendix_contraction(0.5, g, g0, 1), InvalidArgument);
}

TEST_CASE("full contraction endpoints and continuity")
{
    const MeshPtr m = DiscMesh::build(24, 96);
    const MetricField g = builtin_metric("pullback", {{"a", "0.85"}, {"beta", "0.1"}, {"cap", "0.25"}}, m);
    const MetricField gD = cap(0.5, m);
    const ContractionPath path(g, gD);
    CHECK(path.retraction().reconstruction_residual() <= 1e-2);
    CHECK(max_rel_diff(path.at(0.0), g) <= path.retraction().reconstruction_residual() + 1e-14);
    CHECK(max_diff(path.at(1.0), gD) == 0.0);
    CHECK(max_diff(path.at(0.5), path.at(0.5 + 1e-9)) <= 1e-6);
}

TEST_CASE("full contraction keeps a perturbed cap in II∩II∂")
{
    const MeshPtr m = DiscMesh::build(32, 128);
    const MetricField g = conformal_scale(cap(0.25, m), ConformalFactor(m, expr::parse("0.1*(1-x^2-y^2)")));
    const auto samples = contraction_margins(g, cap(0.5, m), CurvatureSet::parse("II∩II∂"));
    REQUIRE(samples.size() == 5);
    for (const PathSample& s : samples) {
        CAPTURE(s.t);
        CHECK(s.membership.member);
    }
}

TEST_CASE("default targets")
{
    CHECK(default_target(CurvatureSet::parse("II∩II∂")).tag.find("cap") != std::string::npos);
    const MeshPtr m = DiscMesh::build(16, 64);
    for (const char* name : {"II∩II∂", "II∩III∂", "III∩II∂", "I", "I∂", "I∩I∂", "II"}) {
        CAPTURE(name);
        const CurvatureSet set = CurvatureSet::parse(name);
        CHECK(membership(MetricField(m, default_target(set)), set).member);
    }
    CHECK_THROWS_AS(default_target(CurvatureSet::parse("III∩III∂")), InvalidArgument);
}

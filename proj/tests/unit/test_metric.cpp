#include <doctest.h>

#include <cmath>
#include <random>

#include "discunif/error.hpp"
#include "discunif/metric.hpp"

using namespace discunif;

namespace
{

MeshPtr mesh() { return DiscMesh::build(16, 64); }

MetricField constant_metric(const MeshPtr& m, Sym2 g) { return MetricField(m, std::vector<Sym2>(m->num_vertices(), g)); }

ComplexField random_mu(std::size_t n, double bound, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ComplexField mu(n);
    for (auto& m : mu) {
        m = std::polar(bound * std::sqrt(u(rng)), 2 * std::acos(-1.0) * u(rng));
    }
    return mu;
}

RealField random_u(const DiscMesh& m, std::mt19937_64& rng)
{
    std::normal_distribution<double> n;
    const double a = n(rng), b = n(rng), c = n(rng);
    RealField u(m.num_vertices());
    for (std::size_t v = 0; v < u.size(); ++v) {
        const Complex z = m.vertex(v);
        u[v] = a * z.real() + b * std::sin(3 * z.imag()) + c * std::norm(z);
    }
    return u;
}

// Independent oracle: the class coefficient of a 2x2 form from its complex-linear
// and antilinear parts, g(v, v) = A |v|^2 + Re(B conj(v)^2), mu = B / (A + sqrt(A^2 - |B|^2)).
Complex oracle_mu(const Sym2& g)
{
    const double a = 0.5 * (g.g11 + g.g22);
    const Complex b(0.5 * (g.g11 - g.g22), g.g12);
    return b / (a + std::sqrt(a * a - std::norm(b)));
}

}  // namespace

TEST_CASE("decomposition examples")
{
    const MeshPtr m = mesh();
    const auto flat = mu_from_metric(constant_metric(m, {1, 0, 1}));
    const auto diag = mu_from_metric(constant_metric(m, {4, 0, 1}));
    const auto conf = mu_from_metric(builtin_metric("cap", {{"t", "0.5"}}, m));
    for (std::size_t v = 0; v < m->num_vertices(); ++v) {
        CHECK(flat.mu[v] == Complex(0, 0));
        CHECK(flat.rho[v] == 4.0);
        CHECK(diag.rho[v] == doctest::Approx(9.0));
        CHECK(std::abs(diag.mu[v] - 1.0 / 3.0) < 1e-15);
        CHECK(std::abs(conf.mu[v]) < 1e-15);
    }
}

TEST_CASE("metric_from_mu examples")
{
    const MeshPtr m = mesh();
    const std::size_t n = m->num_vertices();
    const MetricField zero = metric_from_mu(BeltramiField(m, ComplexField(n, 0.0)));
    const MetricField third = metric_from_mu(BeltramiField(m, ComplexField(n, 1.0 / 3.0)));
    const MetricField half_i = metric_from_mu(BeltramiField(m, ComplexField(n, Complex(0, 0.5))));
    for (std::size_t v = 0; v < n; v += 13) {
        CHECK(zero[v].max_abs_diff({1, 0, 1}) < 1e-15);
        CHECK(third[v].max_abs_diff({16.0 / 9, 0, 4.0 / 9}) < 1e-15);
        CHECK(half_i[v].max_abs_diff({1.25, 1, 1.25}) < 1e-15);
    }
}

TEST_CASE("round trip for random coefficients")
{
    const MeshPtr m = mesh();
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        const ComplexField mu = random_mu(m->num_vertices(), 0.95, rng);
        const auto back = mu_from_metric(metric_from_mu(BeltramiField(m, mu)));
        double worst = 0.0;
        for (std::size_t v = 0; v < mu.size(); ++v) {
            worst = std::max(worst, std::abs(back.mu[v] - mu[v]));
        }
        CHECK(worst <= 1e-12);
    }
}

TEST_CASE("coefficient agrees with the linear/antilinear oracle and the modulus ratio")
{
    const MeshPtr m = mesh();
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Sym2> values(m->num_vertices());
    for (auto& g : values) {
        const double a = 1.5 + u(rng), c = 1.5 + u(rng);
        g = {a, 0.9 * u(rng) * std::sqrt(a * c), c};
    }
    const MetricField g(m, values);
    const auto d = mu_from_metric(g);
    for (std::size_t v = 0; v < values.size(); ++v) {
        const Sym2& s = values[v];
        CHECK(std::abs(d.mu[v] - oracle_mu(s)) < 1e-12);
        const double tr = s.trace(), sq = 2 * std::sqrt(s.det());
        CHECK(std::norm(d.mu[v]) == doctest::Approx((tr - sq) / (tr + sq)).epsilon(1e-12));
        CHECK(d.mu.bound() < 1.0);
    }
    const MetricField back = metric_from_decomposition(d);
    for (std::size_t v = 0; v < values.size(); ++v) {
        CHECK(back[v].max_abs_diff(values[v]) < 1e-12);
    }
}

TEST_CASE("class soundness under conformal scaling")
{
    const MeshPtr m = mesh();
    std::mt19937_64 rng(23);
    const MetricField g = metric_from_mu(BeltramiField(m, random_mu(m->num_vertices(), 0.8, rng)));
    const auto before = mu_from_metric(g);
    for (int trial = 0; trial < 10; ++trial) {
        const auto after = mu_from_metric(conformal_scale(g, ConformalFactor(m, random_u(*m, rng))));
        for (std::size_t v = 0; v < g.size(); ++v) {
            CHECK(std::abs(after.mu[v] - before.mu[v]) < 1e-12);
        }
    }
}

TEST_CASE("conformal scaling examples")
{
    const MeshPtr m = mesh();
    const MetricField g0 = builtin_metric("flat", {}, m);
    const MetricField same = conformal_scale(g0, ConformalFactor::constant(m, 0.0));
    const MetricField four = conformal_scale(g0, ConformalFactor::constant(m, std::log(2.0)));
    for (std::size_t v = 0; v < g0.size(); v += 11) {
        CHECK(same[v].max_abs_diff(g0[v]) == 0.0);
        CHECK(four[v].max_abs_diff({4, 0, 4}) < 1e-14);
    }
    CHECK_THROWS_AS(conformal_scale(g0, ConformalFactor::constant(m, 301.0)), InvalidArgument);
}

TEST_CASE("convex combinations")
{
    const MeshPtr m = mesh();
    std::mt19937_64 rng(29);
    const MetricField g = metric_from_mu(BeltramiField(m, random_mu(m->num_vertices(), 0.5, rng)));
    const ConformalFactor u1(m, random_u(*m, rng)), u2(m, random_u(*m, rng));
    RealField neg(u1.values().begin(), u1.values().end());
    for (double& x : neg) {
        x = -x;
    }
    const MetricField a = convex_combination(g, u1, u2, 1.0, 0.0);
    const MetricField b = conformal_scale(g, u1);
    const MetricField c = convex_combination(g, u1, u1, 0.3, 0.7);
    const MetricField d = convex_combination(g, u1, ConformalFactor(m, neg), 0.5, 0.5);
    for (std::size_t v = 0; v < g.size(); ++v) {
        CHECK(a[v].max_abs_diff(b[v]) < 1e-12 * (1 + b[v].trace()));
        CHECK(c[v].max_abs_diff(b[v]) < 1e-12 * (1 + b[v].trace()));
        CHECK(d[v].max_abs_diff(g[v]) < 1e-14);
    }
    CHECK_THROWS_AS(convex_combination(g, u1, u2, 0.7, 0.7), InvalidArgument);
    CHECK_THROWS_AS(convex_combination(g, u1, u2, -0.5, 1.5), InvalidArgument);
}

TEST_CASE("volume ratio")
{
    const MeshPtr m = mesh();
    std::mt19937_64 rng(31);
    const MetricField g0 = builtin_metric("flat", {}, m);
    const RealField one = volume_ratio(g0, g0, 2);
    const RealField half = volume_ratio(g0, constant_metric(m, {4, 0, 1}), 2);
    const RealField v = random_u(*m, rng);
    const MetricField scaled = conformal_scale(g0, ConformalFactor(m, v));
    const RealField e = volume_ratio(g0, scaled, 2);
    const MetricField g = metric_from_mu(BeltramiField(m, random_mu(m->num_vertices(), 0.7, rng)));
    const RealField base = volume_ratio(g0, g, 2);
    const RealField moved = volume_ratio(g0, conformal_scale(g, ConformalFactor(m, v)), 2);
    for (std::size_t i = 0; i < g0.size(); ++i) {
        CHECK(one[i] == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(half[i] == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(e[i] == doctest::Approx(std::exp(-2 * v[i])).epsilon(1e-13));
        CHECK(moved[i] * std::exp(2 * v[i]) == doctest::Approx(base[i]).epsilon(1e-12));
    }
    CHECK_THROWS_AS(volume_ratio(g0, g0, 1), InvalidArgument);
}

TEST_CASE("builtin families")
{
    const MeshPtr m = mesh();
    const MetricField flat = builtin_metric("flat", {}, m);
    const MetricField cap1 = builtin_metric("cap", {{"t", "1"}}, m);
    const MetricField cap_half = builtin_metric("cap", {{"t", "0.5"}}, m);
    CHECK(flat[0].max_abs_diff({1, 0, 1}) == 0.0);
    CHECK(cap1[0].max_abs_diff({4, 0, 4}) < 1e-14);
    for (int v : m->boundary()) {
        CHECK(cap_half[v].max_abs_diff({16.0 / 9, 0, 16.0 / 9}) < 1e-14);
    }
    CHECK_THROWS_AS(builtin_metric("cap", {{"t", "0"}}, m), InvalidArgument);
    CHECK_THROWS_AS(builtin_metric("cap", {{"t", "1.5"}}, m), InvalidArgument);
    CHECK_THROWS_AS(builtin_metric("sphere", {}, m), InvalidArgument);
    CHECK_THROWS_AS(builtin_metric("pullback_twist", {{"beta", "0.6"}}, m), InvalidArgument);
}

TEST_CASE("pullback of the radial oracle map")
{
    // psi_a(z) = z (a + (1 - a)|z|^2): psi_z = a + 2(1 - a)|z|^2, psi_zbar = (1 - a) z^2.
    const MeshPtr m = mesh();
    const double a = 0.7;
    const MetricField g = builtin_metric("pullback_radial", {{"a", "0.7"}}, m);
    for (std::size_t v = 0; v < g.size(); v += 3) {
        const Complex z = m->vertex(v);
        const Complex pz = a + 2 * (1 - a) * std::norm(z), pzb = (1 - a) * z * z;
        // Dpsi e1 = pz + pzb, Dpsi e2 = i (pz - pzb).
        const Complex d1 = pz + pzb, d2 = Complex(0, 1) * (pz - pzb);
        const Sym2 expect{std::norm(d1), std::real(d1 * std::conj(d2)), std::norm(d2)};
        CHECK(g[v].max_abs_diff(expect) < 1e-13);
    }
}

TEST_CASE("positivity and bound violations")
{
    const MeshPtr m = mesh();
    std::vector<Sym2> bad(m->num_vertices(), Sym2{1, 0, 1});
    bad[7] = {1, 2, 1};
    try {
        MetricField g(m, bad);
        FAIL("expected PositivityError");
    } catch (const PositivityError& e) {
        CHECK(e.vertex() == 7);
    }
    CHECK_THROWS_AS(BeltramiField(m, ComplexField(m->num_vertices(), 1.0 - 1e-7)), BoundError);
    CHECK_NOTHROW(BeltramiField(m, ComplexField(m->num_vertices(), 0.999)));
}

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "discunif/error.hpp"
#include "discunif/qcsolve.hpp"

using namespace discunif;

namespace
{

constexpr double kPi = std::numbers::pi;
const Complex I(0, 1);

// psi_a(z) = z (a + (1 - a)|z|^2), mu = (1 - a) z^2 / (a + 2 (1 - a)|z|^2).
Complex psi_a(Complex z, double a) { return z * (a + (1 - a) * std::norm(z)); }
Complex mu_a(Complex z, double a) { return (1 - a) * z * z / (a + 2 * (1 - a) * std::norm(z)); }

// psi_beta(z) = z exp(2 i beta x y), mu = -beta |z|^2 / (1 + beta z^2).
Complex psi_beta(Complex z, double b) { return z * std::exp(2.0 * I * b * z.real() * z.imag()); }
Complex mu_beta(Complex z, double b) { return -b * std::norm(z) / (1.0 + b * z * z); }

template <class F>
ComplexField sample(const DiscMesh& m, F f)
{
    ComplexField out(m.num_vertices());
    for (std::size_t v = 0; v < out.size(); ++v) {
        out[v] = f(m.vertex(v));
    }
    return out;
}

double max_error(const QCMap& w, const ComplexField& expect)
{
    double worst = 0.0;
    for (std::size_t v = 0; v < expect.size(); ++v) {
        worst = std::max(worst, std::abs(w[v] - expect[v]));
    }
    return worst;
}

// Root of s (a + (1 - a) s^2) = target by bisection.
double radial_inverse(double target, double a)
{
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (mid * (a + (1 - a) * mid * mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("cayley transform")
{
    CHECK(std::abs(cayley(I)) < 1e-15);
    CHECK(std::abs(cayley(0.0) - 1.0) < 1e-15);
    CHECK(std::abs(cayley(1.0) - I) < 1e-15);
    CHECK(std::abs(cayley(Complex(INFINITY, 0)) + 1.0) < 1e-15);
    CHECK_THROWS_AS(cayley(-I), DomainError);
    CHECK(!std::isfinite(std::abs(cayley_inv(-1.0))));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-3, 3), v(0.01, 3);
    for (int i = 0; i < 100; ++i) {
        const Complex z(u(rng), v(rng));
        CHECK(std::abs(cayley(z)) < 1.0);
        CHECK(std::abs(cayley_inv(cayley(z)) - z) <= 1e-14 * (1 + std::abs(z) * std::abs(z)));
    }
}

TEST_CASE("map diagnostics of sampled maps")
{
    const MeshPtr m = DiscMesh::build(32, 128);
    const QCMap id = QCMap::identity(m);
    CHECK(jacobian_min(id) == doctest::Approx(1.0));
    CHECK(holomorphy_defect(id) < 1e-14);
    CHECK(beltrami_of_map(id).bound() < 1e-14);

    const QCMap psi = QCMap::sample(m, AnalyticMap::radial(0.7));
    CHECK(psi.normalized());
    CHECK(jacobian_min(psi) == doctest::Approx(0.49).epsilon(0.05));
    CHECK(holomorphy_defect(psi) >= 0.05);
    const BeltramiField mu = beltrami_of_map(psi);
    double worst = 0.0;
    for (std::size_t v = 0; v < mu.size(); ++v) {
        worst = std::max(worst, std::abs(mu[v] - mu_a(m->vertex(v), 0.7)));
    }
    CHECK(worst <= 2.0 * m->h());

    const QCMap mob = QCMap::sample(m, AnalyticMap::mobius(0.3));
    CHECK(holomorphy_defect(mob) <= 2e-2);
    CHECK(jacobian_min(mob) > 0);

    const QCMap reflection(m, sample(*m, [](Complex z) { return std::conj(z); }));
    CHECK(jacobian_min(reflection) == doctest::Approx(-1.0));
    CHECK_THROWS_AS(beltrami_of_map(reflection), JacobianError);
}

TEST_CASE("map construction validates values")
{
    const MeshPtr m = DiscMesh::build(8, 16);
    CHECK_THROWS_AS(QCMap(m, ComplexField(m->num_vertices(), 2.0)), InvalidArgument);
    ComplexField shrunk = sample(*m, [](Complex z) { return 0.9 * z; });
    CHECK_THROWS_AS(QCMap(m, shrunk), InvalidArgument);
}

TEST_CASE("zero coefficient gives the identity")
{
    const MeshPtr m = DiscMesh::build(32, 128);
    const BeltramiSolution s = solve_beltrami(BeltramiField(m, ComplexField(m->num_vertices(), 0.0)));
    CHECK(s.diagnostics.converged);
    CHECK(max_error(s.map, sample(*m, [](Complex z) { return z; })) <= 1e-6);
    for (double e : s.map.marked_errors()) {
        CHECK(e <= 1e-12);
    }
}

TEST_CASE("oracle recovery converges under refinement")
{
    struct Case
    {
        const char* name;
        Complex (*psi)(Complex, double);
        Complex (*mu)(Complex, double);
        double p;
    };
    for (const Case& c : {Case{"radial", psi_a, mu_a, 0.7}, Case{"twist", psi_beta, mu_beta, 0.2}}) {
        CAPTURE(c.name);
        double prev = 0.0;
        for (int n : {32, 64}) {
            const MeshPtr m = DiscMesh::build(n, 4 * n);
            const BeltramiField mu(m, sample(*m, [&](Complex z) { return c.mu(z, c.p); }));
            const BeltramiSolution s = solve_beltrami(mu);
            CHECK(s.map.normalized());
            CHECK(s.diagnostics.jacobian_min > 0);
            const double err = max_error(s.map, sample(*m, [&](Complex z) { return c.psi(z, c.p); }));
            if (n == 64) {
                CHECK(err <= 5e-3);
                CHECK(prev / err >= 2.0);
            }
            prev = err;
            for (int k : m->boundary()) {
                CHECK(std::abs(std::abs(s.map[k]) - 1.0) <= 1e-9);
            }
        }
    }
}

TEST_CASE("solver multi-start agreement")
{
    const MeshPtr m = DiscMesh::build(24, 96);
    const BeltramiField mu(m, sample(*m, [](Complex z) { return mu_a(z, 0.8); }));
    const BeltramiSolution a = solve_beltrami(mu);
    SolverOptions opts;
    ComplexField start = sample(*m, [](Complex z) { return z * (1.0 + 0.05 * (1.0 - std::norm(z)) * std::cos(3 * z.real())); });
    for (int k : m->boundary()) {
        const Complex z = m->vertex(k);
        start[k] = z * std::exp(I * 0.02 * std::sin(2 * std::arg(z)) * std::sin(std::arg(z)));
    }
    opts.initial = start;
    const BeltramiSolution b = solve_beltrami(mu, opts);
    double worst = 0.0;
    for (std::size_t v = 0; v < m->num_vertices(); ++v) {
        worst = std::max(worst, std::abs(a.map[v] - b.map[v]));
    }
    CHECK(worst <= 10 * opts.tol);
}

TEST_CASE("solver rejects large coefficients and reports non-convergence")
{
    const MeshPtr m = DiscMesh::build(16, 64);
    CHECK_THROWS_AS(solve_beltrami(BeltramiField(m, ComplexField(m->num_vertices(), 0.96))), BoundError);
    SolverOptions opts;
    opts.max_iter = 1;
    const BeltramiField mu(m, sample(*m, [](Complex z) { return mu_a(z, 0.7); }));
    try {
        solve_beltrami(mu, opts);
        FAIL("expected SolverError");
    } catch (const SolverError& e) {
        CHECK(!e.diagnostics().converged);
        CHECK(e.diagnostics().residual_history.size() >= 1);
    }
}

TEST_CASE("pullbacks")
{
    const MeshPtr m = DiscMesh::build(32, 128);
    const MetricField g0 = builtin_metric("flat", {}, m);
    const MetricField cap = builtin_metric("cap", {{"t", "0.5"}}, m);
    const MetricField same = pullback_metric(QCMap::identity(m), cap);
    for (std::size_t v = 0; v < cap.size(); ++v) {
        CHECK(same[v].max_abs_diff(cap[v]) <= 1e-10 * cap[v].g11);
    }
    const QCMap rot(m, sample(*m, [](Complex z) { return I * z; }));
    const MetricField r = pullback_metric(rot, g0);
    for (std::size_t v = 0; v < g0.size(); ++v) {
        CHECK(r[v].max_abs_diff(g0[v]) <= 1e-10);
    }
    const MetricField pulled = pullback_metric(QCMap::sample(m, AnalyticMap::radial(0.7)), g0);
    const MetricField exact = builtin_metric("pullback_radial", {{"a", "0.7"}}, m);
    double worst = 0.0;
    for (std::size_t v = 0; v < g0.size(); ++v) {
        worst = std::max(worst, pulled[v].max_abs_diff(exact[v]));
    }
    CHECK(worst <= 2 * m->h());
}

TEST_CASE("inversion and composition")
{
    const MeshPtr m = DiscMesh::build(64, 256);
    const QCMap id = QCMap::identity(m);
    CHECK(max_error(invert_map(id), sample(*m, [](Complex z) { return z; })) <= 1e-12);

    const QCMap psi = QCMap::sample(m, AnalyticMap::radial(0.7));
    const QCMap inv = invert_map(psi);
    CHECK(max_error(compose(psi, inv), sample(*m, [](Complex z) { return z; })) <= 2e-3);
    CHECK(max_error(compose(inv, psi), sample(*m, [](Complex z) { return z; })) <= 2e-3);

    const double s = radial_inverse(0.7, 0.7);
    CHECK(s == doctest::Approx(0.789277103376651).epsilon(1e-12));
    PointLocator loc(*m);
    CHECK(std::abs(inv.at(0.7, loc) - s) <= 1e-3);
}

TEST_CASE("post-composition with a Mobius map keeps the coefficient")
{
    const MeshPtr m = DiscMesh::build(32, 128);
    const QCMap w = QCMap::sample(m, AnalyticMap::radial_twist(0.8, 0.1));
    const QCMap mob = QCMap::sample(m, AnalyticMap::mobius(Complex(0.2, -0.1)));
    const BeltramiField a = beltrami_of_map(w);
    const BeltramiField b = beltrami_of_map(compose(mob, w));
    double worst = 0.0;
    for (std::size_t v = 0; v < a.size(); ++v) {
        worst = std::max(worst, std::abs(a[v] - b[v]));
    }
    CHECK(worst <= 3 * m->h());
}

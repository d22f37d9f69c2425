#include "discunif/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <numbers>
#include <random>

#include "discunif/curvature.hpp"
#include "discunif/error.hpp"
#include "discunif/homotopy.hpp"

namespace discunif
{

namespace
{

using expr::Expr;
using Rng = std::mt19937_64;
using Clock = std::chrono::steady_clock;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string format(const char* fmt, ...)
{
    char buf[512];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, args);
    va_end(args);
    return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Scale
{
    int n;      // coarse rings
    double f;   // 32 / n: tolerance multiplier base

    MeshPtr coarse() const { return DiscMesh::build(n, 4 * n); }
    MeshPtr fine() const { return DiscMesh::build(2 * n, 8 * n); }
    double order1() const { return f; }
    double order2() const { return f * f; }
};

double max_abs_diff(std::span<const Complex> a, std::span<const Complex> b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a[i] - b[i]));
    }
    return m;
}

double max_abs_diff(const MetricField& a, const MetricField& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, a[i].max_abs_diff(b[i]));
    }
    return m;
}

// Random polynomial coefficient sum_{p+q<=3} c_pq z^p zbar^q with max |mu| = bound on the mesh.
ComplexField random_mu(const DiscMesh& mesh, Rng& rng, double bound)
{
    std::normal_distribution<double> normal;
    Complex c[4][4];
    for (int p = 0; p <= 3; ++p) {
        for (int q = 0; p + q <= 3; ++q) {
            c[p][q] = Complex(normal(rng), normal(rng));
        }
    }
    ComplexField mu(mesh.num_vertices());
    double peak = 0.0;
    for (std::size_t v = 0; v < mu.size(); ++v) {
        const Complex z = mesh.vertex(v);
        Complex s = 0.0;
        for (int p = 0; p <= 3; ++p) {
            for (int q = 0; p + q <= 3; ++q) {
                s += c[p][q] * std::pow(z, p) * std::pow(std::conj(z), q);
            }
        }
        mu[v] = s;
        peak = std::max(peak, std::abs(s));
    }
    for (Complex& m : mu) {
        m *= bound / peak;
    }
    return mu;
}

// Real and imaginary parts of z^m as expressions.
std::pair<Expr, Expr> z_power(int m)
{
    Expr re(1.0), im(0.0);
    for (int k = 0; k < m; ++k) {
        Expr nre = re * expr::x() - im * expr::y();
        Expr nim = re * expr::y() + im * expr::x();
        re = nre;
        im = nim;
    }
    return {re, im};
}

Expr rr() { return expr::x() * expr::x() + expr::y() * expr::y(); }

double max_vertex_error(const QCMap& w, const AnalyticMap& psi)
{
    double m = 0.0;
    for (std::size_t v = 0; v < w.mesh().num_vertices(); ++v) {
        m = std::max(m, std::abs(w[v] - psi(w.mesh().vertex(v))));
    }
    return m;
}

MetricField metric(const MeshPtr& mesh, std::string_view name, const BuiltinParams& params = {})
{
    return builtin_metric(name, params, mesh);
}

// 1. mu -> metric -> mu
CriterionResult roundtrip(const Scale& s, Rng& rng)
{
    const auto t0 = Clock::now();
    const MeshPtr mesh = s.coarse();
    std::uniform_real_distribution<double> bound(0.05, 0.95);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const BeltramiField mu(mesh, random_mu(*mesh, rng, bound(rng)));
        const BeltramiField back = mu_from_metric(metric_from_mu(mu)).mu;
        worst = std::max(worst, max_abs_diff(mu.values(), back.values()));
    }
    const double sec = seconds_since(t0);
    return {1, "mu-bijection round trip", worst <= 1e-12 && sec < 5.0,
            format("max error %.2e (<= 1e-12) over 100 fields, %.2f s (< 5 s)", worst, sec), sec};
}

// 2. oracle maps psi_a and psi_beta
CriterionResult oracle(const Scale& s)
{
    const auto t0 = Clock::now();
    struct Case
    {
        const char* name;
        AnalyticMap psi;
        std::function<Complex(Complex)> mu;  // closed form
    };
    const double a = 0.7, beta = 0.2;
    const Case cases[] = {
        {"psi_a", AnalyticMap::radial(a),
         [=](Complex z) { return (1.0 - a) * z * z / (a + 2.0 * (1.0 - a) * std::norm(z)); }},
        {"psi_b", AnalyticMap::twist(beta), [=](Complex z) { return -beta * std::norm(z) / (1.0 + beta * z * z); }},
    };
    bool ok = true;
    std::string detail;
    for (const Case& c : cases) {
        double err[2] = {0.0, 0.0};
        double slowest = 0.0, coef = 0.0;
        int k = 0;
        for (const MeshPtr& mesh : {s.coarse(), s.fine()}) {
            const BeltramiField mu = project(MetricField(mesh, pullback_source(c.psi, Expr(0.0), c.name)));
            for (std::size_t v = 0; v < mesh->num_vertices(); ++v) {
                coef = std::max(coef, std::abs(mu[v] - c.mu(mesh->vertex(v))));
            }
            const auto ts = Clock::now();
            const BeltramiSolution sol = solve_beltrami(mu);
            slowest = std::max(slowest, seconds_since(ts));
            err[k++] = max_vertex_error(sol.map, c.psi);
        }
        const double ratio = err[0] / err[1];
        const bool pass = coef <= 1e-12 && err[1] <= 5e-3 * s.order2() && ratio >= 2.0 && slowest < 60.0;
        ok = ok && pass;
        detail += format("%s: coef %.1e, error %.2e -> %.2e (ratio %.2f), %.1f s; ", c.name, coef, err[0], err[1], ratio,
                         slowest);
    }
    detail += format("limits: fine error <= %.1e, ratio >= 2, < 60 s per solve", 5e-3 * s.order2());
    return {2, "Beltrami solver oracle", ok, detail, seconds_since(t0)};
}

// 3. mu = 0 gives the identity
CriterionResult rigidity(const Scale& s)
{
    const auto t0 = Clock::now();
    const MeshPtr mesh = s.coarse();
    const BeltramiSolution sol = solve_beltrami(BeltramiField(mesh, ComplexField(mesh->num_vertices())));
    const double err = max_vertex_error(sol.map, AnalyticMap::identity());
    const double sec = seconds_since(t0);
    return {3, "identity rigidity", err <= 1e-6 && sec < 10.0,
            format("max |w - z| %.2e (<= 1e-6), %.2f s (< 10 s)", err, sec), sec};
}

// 4. e^{2u} K' = K - Lap u and e^u k' = k + du/dnu
CriterionResult conformal_identities(const Scale& s)
{
    const auto t0 = Clock::now();
    struct Case
    {
        const char* name;
        MetricSource g;
        Expr u;
    };
    const Case cases[] = {
        {"(g0, u_0.5)", builtin_source("flat", {}), cap_factor(0.5)},
        {"(cap(0.25), 0.1(1-r^2))", builtin_source("cap", {{"t", "0.25"}}), Expr(0.1) * (Expr(1.0) - rr())},
    };
    bool ok = true;
    std::string detail;
    const double limit = 1e-3 * s.order2();
    for (const Case& c : cases) {
        double res[2];
        int k = 0;
        for (const MeshPtr& mesh : {s.coarse(), s.fine()}) {
            const ConformalCheck r = conformal_curvature_check(MetricField(mesh, c.g), ConformalFactor(mesh, c.u));
            res[k++] = std::max(r.residual_K, r.residual_k);
        }
        const double ratio = res[0] / res[1];
        ok = ok && res[1] <= limit && ratio >= 3.0;
        detail += format("%s: %.2e -> %.2e (ratio %.2f); ", c.name, res[0], res[1], ratio);
    }
    detail += format("limits: fine <= %.1e, ratio >= 3", limit);
    return {4, "conformal curvature identities", ok, detail, seconds_since(t0)};
}

// 5. Gauss-Bonnet
CriterionResult gauss_bonnet_totals(const Scale& s)
{
    const auto t0 = Clock::now();
    const std::pair<const char*, BuiltinParams> cases[] = {
        {"flat", {}},
        {"cap", {{"t", "0.25"}}},
        {"cap", {{"t", "0.5"}}},
        {"cap", {{"t", "1"}}},
        {"pullback_radial", {{"a", "0.7"}}},
    };
    double worst[2] = {0.0, 0.0};
    int k = 0;
    for (const MeshPtr& mesh : {s.coarse(), s.fine()}) {
        for (const auto& [name, params] : cases) {
            worst[k] = std::max(worst[k], std::abs(gauss_bonnet(metric(mesh, name, params)) - kTwoPi));
        }
        ++k;
    }
    const double lc = 0.02 * s.order2(), lf = 0.005 * s.order2();
    return {5, "Gauss-Bonnet", worst[0] <= lc && worst[1] <= lf,
            format("max |total - 2pi| %.2e (<= %.1e) coarse, %.2e (<= %.1e) fine", worst[0], lc, worst[1], lf),
            seconds_since(t0)};
}

// 6. cap(t): K = t, k = (1 - t) / 2
CriterionResult cap_values(const Scale& s)
{
    const auto t0 = Clock::now();
    const MeshPtr mesh = s.fine();
    double eK = 0.0, ek = 0.0;
    for (double t : {0.25, 0.5, 1.0}) {
        const CurvatureReport r = curvature_report(metric(mesh, "cap", {{"t", format("%g", t)}}));
        for (std::size_t v = 0; v < r.K.size(); ++v) {
            if (!mesh->is_boundary(v)) {
                eK = std::max(eK, std::abs(r.K[v] - t));
            }
        }
        for (double kv : r.k) {
            ek = std::max(ek, std::abs(kv - 0.5 * (1.0 - t)));
        }
    }
    const double limit = 5e-3 * s.order2();
    return {6, "cap closed forms", eK <= limit && ek <= limit,
            format("max |K - t| %.2e, max |k - (1-t)/2| %.2e (<= %.1e)", eK, ek, limit), seconds_since(t0)};
}

// 7. pi o sigma, H(0), H(1), fiber constancy
CriterionResult lemma_identities(const Scale& s, Rng& rng)
{
    const auto t0 = Clock::now();
    const MeshPtr mesh = s.fine();
    const MetricField g_D = metric(mesh, "cap", {{"t", "0.5"}});

    std::vector<BeltramiField> corpus;
    corpus.push_back(project(metric(mesh, "pullback_radial", {{"a", "0.7"}})));
    corpus.push_back(project(metric(mesh, "pullback_twist", {{"beta", "0.2"}})));
    for (int i = 0; i < 2; ++i) {
        corpus.emplace_back(mesh, random_mu(*mesh, rng, 0.5));
    }
    double pi_sigma = 0.0;
    for (const BeltramiField& mu : corpus) {
        pi_sigma = std::max(pi_sigma, max_abs_diff(project(sigma(mu, g_D)).values(), mu.values()));
    }

    const MetricField g = metric(mesh, "pullback", {{"a", "0.8"}, {"beta", "0.15"}, {"cap", "0.25"}});
    const Retraction H(g, g_D);
    const double h0 = H.reconstruction_residual();
    const double h1 = max_abs_diff(H.at(1.0), sigma(project(g), g_D));
    double fiber = 0.0;
    const BeltramiField mu0 = project(H.at(0.0));
    for (double t : {0.25, 0.5, 0.75, 1.0}) {
        fiber = std::max(fiber, max_abs_diff(project(H.at(t)).values(), mu0.values()));
    }
    const double lps = 2e-2 * s.order1(), lh0 = 1e-2 * s.order1();
    const bool ok = pi_sigma <= lps && h0 <= lh0 && h1 <= 1e-10 && fiber <= 1e-10;
    return {7, "retraction identities", ok,
            format("pi o sigma %.2e (<= %.1e), H(0) %.2e (<= %.1e), H(1) %.1e (<= 1e-10), fiber %.1e (<= 1e-10)",
                   pi_sigma, lps, h0, lh0, h1, fiber),
            seconds_since(t0)};
}

Expr random_factor(Rng& rng, double amplitude)
{
    std::uniform_real_distribution<double> u(-amplitude, amplitude);
    Expr f(u(rng));
    for (int m = 1; m <= 3; ++m) {
        const auto [re, im] = z_power(m);
        f = f + Expr(u(rng)) * re + Expr(u(rng)) * im;
    }
    return f + Expr(u(rng)) * expr::sin(Expr(2.0) * expr::x() + expr::y());
}

// 8. appendix contraction
CriterionResult appendix(const Scale& s, Rng& rng)
{
    const auto t0 = Clock::now();
    const MeshPtr mesh = s.coarse();
    const MetricField g = metric(mesh, "pullback", {{"a", "0.7"}, {"beta", "0.2"}, {"cap", "0.25"}});
    const MetricField g0 = metric(mesh, "flat");
    const double e0 = max_abs_diff(appendix_contraction(0.0, g, g0).values(), project(g).values());
    const double e1 = max_abs_diff(appendix_contraction(1.0, g, g0).values(), project(g0).values());
    double inv = 0.0;
    for (int i = 0; i < 20; ++i) {
        const MetricField gv = conformal_scale(g, ConformalFactor(mesh, random_factor(rng, 0.5)));
        for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
            inv = std::max(inv, max_abs_diff(appendix_contraction(t, gv, g0).values(),
                                             appendix_contraction(t, g, g0).values()));
        }
    }
    const bool ok = std::max(e0, e1) <= 1e-12 && inv <= 1e-10;
    return {8, "appendix contraction", ok,
            format("endpoints %.1e / %.1e (<= 1e-12), class invariance %.1e (<= 1e-10) over 20 factors", e0, e1,
                   inv),
            seconds_since(t0)};
}

// In-set metric psi^*(e^{2u} g_D) for a random mild map psi and a random
// factor u that keeps the curvature conditions of the set.
MetricSource random_member(const CurvatureSet& set, const MetricSource& g_D, Rng& rng)
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double amp = 0.1;
    Expr u(0.0);
    for (int m = 0; m <= 3; ++m) {
        const double c = amp * (2.0 * unit(rng) - 1.0) / (m + 1);
        const double phase = kTwoPi * unit(rng);
        const auto [re, im] = z_power(m);
        const Expr part = Expr(std::cos(phase)) * re - Expr(std::sin(phase)) * im;
        if (set.boundary == Sign::Zero) {
            // zero normal derivative on the circle: k stays 0
            u = u + Expr(c) * part * (Expr(1.0) - Expr(static_cast<double>(m) / (m + 2)) * rr());
        } else if (set.interior == Sign::Zero) {
            // harmonic: K stays 0
            u = u + Expr(c) * part;
        } else {
            u = u + Expr(c) * part * (m == 0 ? Expr(1.0) - rr() : Expr(1.0));
        }
    }
    const double a = 1.0 - 0.1 * unit(rng);
    const double beta = 0.1 * (unit(rng) - 0.5);
    const Expr base = g_D.is_conformal() ? std::get<ConformalSource>(g_D.form).u : Expr(0.0);
    return pullback_source(AnalyticMap::radial_twist(a, beta), base + u, format("member:a=%.3f,beta=%.3f", a, beta));
}

// 9. set preservation along the full contraction
CriterionResult set_preservation(const Scale& s, Rng& rng)
{
    const auto t0 = Clock::now();
    const MeshPtr mesh = s.coarse();
    const double tol = curvature_tolerance(mesh->h());
    bool ok = true;
    std::string detail;
    for (const char* name : {"II∩II∂", "II∩III∂", "III∩II∂"}) {
        const CurvatureSet set = CurvatureSet::parse(name);
        const MetricSource target = default_target(set);
        const MetricField g_D(mesh, target);
        double worst = INFINITY;
        int drawn = 0, accepted = 0;
        while (accepted < 10) {
            if (++drawn > 100) {
                throw Error("could not draw in-set metrics for " + std::string(name));
            }
            const MetricField g(mesh, random_member(set, target, rng));
            if (!membership(g, set).member) {
                continue;
            }
            ++accepted;
            for (const PathSample& p : contraction_margins(g, g_D, set, 5)) {
                worst = std::min(worst, p.membership.margin);
            }
        }
        ok = ok && worst >= -tol;
        detail += format("%s worst margin %.4f; ", set.name().c_str(), worst);
    }
    const double sec = seconds_since(t0);
    ok = ok && sec < 900.0;
    detail += format("limits: >= -%.4f, %.0f s (< 900 s)", tol, sec);
    return {9, "set preservation along the contraction", ok, detail, sec};
}

// 10. holomorphy defect and Jacobian
CriterionResult holomorphy(const Scale& s)
{
    const auto t0 = Clock::now();
    const MeshPtr mesh = s.fine();
    double defect = 0.0, jac = INFINITY;
    for (Complex c : {Complex(0.3, 0.0), Complex(0.0, 0.2), Complex(-0.25, 0.15)}) {
        const QCMap m = QCMap::sample(mesh, AnalyticMap::mobius(c));
        defect = std::max(defect, holomorphy_defect(m));
        jac = std::min(jac, jacobian_min(m));
    }
    const QCMap reflection = QCMap::sample(mesh, {expr::x(), -expr::y()});
    const double jr = jacobian_min(reflection);
    bool rejected = false;
    try {
        beltrami_of_map(reflection);
    } catch (const JacobianError&) {
        rejected = true;
    }
    const double limit = 5e-3 * s.order2();
    return {10, "holomorphy and Jacobian diagnostics", defect <= limit && jac > 0.0 && jr < 0.0 && rejected,
            format("Mobius defect %.2e (<= %.1e), jacobian_min %.3f (> 0); reflection jacobian_min %.3f, %s", defect,
                   limit, jac, jr, rejected ? "rejected" : "accepted"),
            seconds_since(t0)};
}

const char* const kExpressionCorpus[] = {
    "x^2*y + sin(x*y)",
    "exp(-(x^2 + y^2))",
    "log(2/(1 + 0.5*rr))",
    "sqrt(1 + x^2 + 2*y^2)",
    "cos(3*x) - y^3/(2 + x)",
    "pi*x*y - 0.25*rr^2",
    "exp(sin(x))*cos(y)",
    "(x - 0.3)^3*(y + 0.2)^2",
    "1/(1 + x^2) + 1/(2 - y)",
    "log(1.5 + x*y) * sqrt(2 + sin(y))",
    "-x^4 + 2*x^2*y^2 - y^4",
    "0.1*(1 - x^2 - y^2)",
    "exp(2*log(2/(1 + rr)))",
    "x/(1 + y^2)^2 - --y",
    "2.5e-1*x^5 - 1e1*y",
};

const char* const kMalformedCorpus[] = {
    "", "   ", "x +", "(x", "x)", "2**x", "foo(x)", "x^y", "x^-1", "x^1.5", "sin x", "1..2", "x y", "z", "sqrt()",
    "@", "x^", "exp(x,y)", "3 4", "log(",
};

// 11. expression derivatives and parser rejection
CriterionResult expressions()
{
    const auto t0 = Clock::now();
    Rng rng(7);
    std::uniform_real_distribution<double> coord(-0.7, 0.7);
    const double h = 1e-5;
    double worst = 0.0;
    for (const char* text : kExpressionCorpus) {
        const Expr e = expr::parse(text);
        const Expr ex = expr::differentiate(e, expr::Var::X);
        const Expr ey = expr::differentiate(e, expr::Var::Y);
        const Expr exy = expr::differentiate(ex, expr::Var::Y);
        for (int i = 0; i < 20; ++i) {
            const double x = coord(rng), y = coord(rng);
            const double fx = (e(x + h, y) - e(x - h, y)) / (2 * h);
            const double fy = (e(x, y + h) - e(x, y - h)) / (2 * h);
            const double fxy = (ex(x, y + h) - ex(x, y - h)) / (2 * h);
            const double scale = 1.0 + std::abs(e(x, y));
            worst = std::max({worst, std::abs(fx - ex(x, y)) / scale, std::abs(fy - ey(x, y)) / scale,
                              std::abs(fxy - exy(x, y)) / scale});
        }
    }
    int accepted = 0;
    std::string which;
    for (const char* text : kMalformedCorpus) {
        try {
            expr::parse(text);
            ++accepted;
            which += format(" '%s'", text);
        } catch (const ParseError&) {
        }
    }
    const int n_bad = static_cast<int>(std::size(kMalformedCorpus));
    return {11, "expression module", worst <= 1e-6 && accepted == 0,
            format("max derivative mismatch %.1e (<= 1e-6) over %d expressions; rejected %d of %d malformed%s", worst,
                   static_cast<int>(std::size(kExpressionCorpus)), n_bad - accepted, n_bad, which.c_str()),
            seconds_since(t0)};
}

}  // namespace

CriterionResult run_criterion(int id, const AcceptanceOptions& opts)
{
    if (opts.base_rings < 8) {
        throw InvalidArgument("acceptance base resolution needs at least 8 rings");
    }
    const Scale s{opts.base_rings, 32.0 / opts.base_rings};
    Rng rng(opts.seed + static_cast<std::uint64_t>(id));
    static const char* const names[] = {
        "mu-bijection round trip",
        "Beltrami solver oracle",
        "identity rigidity",
        "conformal curvature identities",
        "Gauss-Bonnet",
        "cap closed forms",
        "retraction identities",
        "appendix contraction",
        "set preservation along the contraction",
        "holomorphy and Jacobian diagnostics",
        "expression module",
    };
    if (id < 1 || id > kCriterionCount) {
        throw InvalidArgument("criterion id must be between 1 and " + std::to_string(kCriterionCount));
    }
    const auto t0 = Clock::now();
    try {
        switch (id) {
            case 1: return roundtrip(s, rng);
            case 2: return oracle(s);
            case 3: return rigidity(s);
            case 4: return conformal_identities(s);
            case 5: return gauss_bonnet_totals(s);
            case 6: return cap_values(s);
            case 7: return lemma_identities(s, rng);
            case 8: return appendix(s, rng);
            case 9: return set_preservation(s, rng);
            case 10: return holomorphy(s);
            default: return expressions();
        }
    } catch (const std::exception& e) {
        return {id, names[id - 1], false, std::string("error: ") + e.what(), seconds_since(t0)};
    }
}

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts,
                                            const std::function<void(const CriterionResult&)>& on_result)
{
    std::vector<CriterionResult> out;
    for (int id = 1; id <= kCriterionCount; ++id) {
        out.push_back(run_criterion(id, opts));
        if (on_result) {
            on_result(out.back());
        }
    }
    return out;
}

std::string format_result(const CriterionResult& r)
{
    return format("%s %2d %s: %s [%.1f s]", r.passed ? "PASS" : "FAIL", r.id, r.name.c_str(), r.detail.c_str(),
                  r.seconds);
}

}  // namespace discunif

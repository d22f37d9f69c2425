#include "discunif/curvature.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "discunif/error.hpp"
#include "discunif/parallel.hpp"

namespace discunif
{

using expr::Expr;
using expr::Var;

namespace
{

struct MetricJet
{
    Jet E, F, G;
};

// Brioschi formula in coordinates (x, y).
double brioschi(const MetricJet& j)
{
    const Jet& E = j.E;
    const Jet& F = j.F;
    const Jet& G = j.G;
    const double a11 = -0.5 * E.fyy + F.fxy - 0.5 * G.fxx;
    const double a12 = 0.5 * E.fx;
    const double a13 = F.fx - 0.5 * E.fy;
    const double a21 = F.fy - 0.5 * G.fx;
    const double a31 = 0.5 * G.fy;
    const double detA = a11 * (E.f * G.f - F.f * F.f) - a12 * (a21 * G.f - F.f * a31) + a13 * (a21 * F.f - E.f * a31);
    const double b12 = 0.5 * E.fy;
    const double b13 = 0.5 * G.fx;
    const double detB = -b12 * (b12 * G.f - F.f * b13) + b13 * (b12 * F.f - E.f * b13);
    const double d = E.f * G.f - F.f * F.f;
    return (detA - detB) / (d * d);
}

// Geodesic curvature of the counterclockwise unit circle at p, measured
// against the inner normal.
double boundary_curvature(const MetricJet& j, Complex p)
{
    const double x = p.real();
    const double y = p.imag();
    const double g[2][2] = {{j.E.f, j.F.f}, {j.F.f, j.G.f}};
    const double dg[2][2][2] = {{{j.E.fx, j.F.fx}, {j.F.fx, j.G.fx}}, {{j.E.fy, j.F.fy}, {j.F.fy, j.G.fy}}};
    const double det = g[0][0] * g[1][1] - g[0][1] * g[0][1];
    const double ginv[2][2] = {{g[1][1] / det, -g[0][1] / det}, {-g[0][1] / det, g[0][0] / det}};
    const double tang[2] = {-y, x};
    double acc[2] = {-x, -y};
    for (int k = 0; k < 2; ++k) {
        for (int a = 0; a < 2; ++a) {
            for (int b = 0; b < 2; ++b) {
                double gamma = 0.0;
                for (int l = 0; l < 2; ++l) {
                    gamma += 0.5 * ginv[k][l] * (dg[a][b][l] + dg[b][a][l] - dg[l][a][b]);
                }
                acc[k] += gamma * tang[a] * tang[b];
            }
        }
    }
    const double n[2] = {-x, -y};
    const double an = acc[0] * n[0] + acc[1] * n[1];
    const double nn = n[0] * (ginv[0][0] * n[0] + ginv[0][1] * n[1]) + n[1] * (ginv[1][0] * n[0] + ginv[1][1] * n[1]);
    const double tt = g[0][0] * tang[0] * tang[0] + 2.0 * g[0][1] * tang[0] * tang[1] + g[1][1] * tang[1] * tang[1];
    return an / (std::sqrt(nn) * tt);
}

std::array<Expr, 6> jet_exprs(const Expr& f)
{
    const Expr fx = expr::differentiate(f, Var::X);
    const Expr fy = expr::differentiate(f, Var::Y);
    return {f, fx, fy, expr::differentiate(fx, Var::X), expr::differentiate(fx, Var::Y), expr::differentiate(fy, Var::Y)};
}

Jet to_jet(const double* v) { return Jet{v[0], v[1], v[2], v[3], v[4], v[5]}; }

// Per-vertex metric jets for the vertices in `which`.
template <class Fn>
void for_metric_jets(const MetricField& g, std::span<const int> which, Fn&& fn)
{
    const DiscMesh& mesh = g.mesh();
    if (const auto& src = g.source()) {
        if (const auto* c = std::get_if<ConformalSource>(&src->form)) {
            // E = G = e^{2u}, F = 0
            const auto ju = jet_exprs(c->u);
            const Expr list[] = {ju[0], ju[1], ju[2], ju[3], ju[4], ju[5]};
            const expr::Program prog(list);
            parallel_for(which.size(), [&](std::size_t b, std::size_t e) {
                double v[6];
                for (std::size_t i = b; i < e; ++i) {
                    const Complex p = mesh.vertex(which[i]);
                    prog.eval(p.real(), p.imag(), v);
                    const double s = std::exp(2.0 * v[0]);
                    const double ux = v[1], uy = v[2];
                    Jet E{s,
                          2.0 * s * ux,
                          2.0 * s * uy,
                          s * (4.0 * ux * ux + 2.0 * v[3]),
                          s * (4.0 * ux * uy + 2.0 * v[4]),
                          s * (4.0 * uy * uy + 2.0 * v[5])};
                    fn(i, MetricJet{E, Jet{}, E});
                }
            });
            return;
        }
        const ComponentsSource c = src->components();
        std::vector<Expr> list;
        for (const Expr* f : {&c.g11, &c.g12, &c.g22}) {
            const auto j = jet_exprs(*f);
            list.insert(list.end(), j.begin(), j.end());
        }
        const expr::Program prog(list);
        parallel_for(which.size(), [&](std::size_t b, std::size_t e) {
            double v[18];
            for (std::size_t i = b; i < e; ++i) {
                const Complex p = mesh.vertex(which[i]);
                prog.eval(p.real(), p.imag(), v);
                fn(i, MetricJet{to_jet(v), to_jet(v + 6), to_jet(v + 12)});
            }
        });
        return;
    }
    const auto fit = shared_fitter(g.mesh_ptr());
    RealField e(g.size()), f(g.size()), h(g.size());
    for (std::size_t v = 0; v < g.size(); ++v) {
        e[v] = g[v].g11;
        f[v] = g[v].g12;
        h[v] = g[v].g22;
    }
    parallel_for(which.size(), [&](std::size_t b, std::size_t end) {
        for (std::size_t i = b; i < end; ++i) {
            const std::size_t v = which[i];
            MetricJet j{fit->jet(v, e), fit->jet(v, f), fit->jet(v, h)};
            // Values are known exactly at the vertex.
            j.E.f = e[v];
            j.F.f = f[v];
            j.G.f = h[v];
            fn(i, j);
        }
    });
}

std::vector<int> all_vertices(const DiscMesh& mesh)
{
    std::vector<int> out(mesh.num_vertices());
    for (std::size_t v = 0; v < out.size(); ++v) {
        out[v] = static_cast<int>(v);
    }
    return out;
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) {
        s.remove_suffix(1);
    }
    return s;
}

}  // namespace

CurvatureSet CurvatureSet::parse(std::string_view text)
{
    CurvatureSet out;
    std::string s(text);
    for (std::string_view sep : {"∩", "&", "^", ","}) {
        for (std::size_t pos; (pos = s.find(sep)) != std::string::npos;) {
            s.replace(pos, sep.size(), "|");
        }
    }
    std::string_view rest = s;
    bool any = false;
    while (true) {
        const std::size_t bar = rest.find('|');
        std::string_view part = trim(rest.substr(0, bar));
        bool boundary = false;
        for (std::string_view suffix : {"∂", "_d", "_b", "d", "b", "D"}) {
            if (part.size() > suffix.size() && part.ends_with(suffix)) {
                part.remove_suffix(suffix.size());
                boundary = true;
                break;
            }
        }
        Sign sign;
        if (part == "I") {
            sign = Sign::NonNegative;
        } else if (part == "II") {
            sign = Sign::Positive;
        } else if (part == "III") {
            sign = Sign::Zero;
        } else {
            throw InvalidArgument("unknown curvature set '" + std::string(text) + "'");
        }
        auto& slot = boundary ? out.boundary : out.interior;
        if (slot && *slot != sign) {
            // I and II (or II and III) together: keep the stronger, reject the empty ones.
            const bool compatible = (*slot == Sign::NonNegative || sign == Sign::NonNegative);
            if (!compatible) {
                throw InvalidArgument("empty curvature set '" + std::string(text) + "'");
            }
            if (*slot == Sign::NonNegative) {
                slot = sign;
            }
        } else {
            slot = sign;
        }
        any = true;
        if (bar == std::string_view::npos) {
            break;
        }
        rest = rest.substr(bar + 1);
    }
    if (!any) {
        throw InvalidArgument("empty curvature set name");
    }
    return out;
}

std::string CurvatureSet::name() const
{
    auto roman = [](Sign s) { return s == Sign::NonNegative ? "I" : s == Sign::Positive ? "II" : "III"; };
    std::string out;
    if (interior) {
        out += roman(*interior);
    }
    if (boundary) {
        if (!out.empty()) {
            out += "∩";
        }
        out += roman(*boundary);
        out += "∂";
    }
    return out;
}

double curvature_tolerance(double h) { return std::max(1e-6, 10.0 * h * h); }

double CurvatureReport::margin(Sign s, bool boundary) const
{
    if (s == Sign::Zero) {
        return boundary ? -max_abs_k : -max_abs_K;
    }
    return boundary ? min_k : min_K;
}

Membership CurvatureReport::membership(const CurvatureSet& set) const
{
    Membership m;
    m.tol = curvature_tolerance(h);
    m.member = true;
    m.margin = INFINITY;
    m.interior_margin = INFINITY;
    m.boundary_margin = INFINITY;
    auto apply = [&](std::optional<Sign> s, bool boundary, double& slot) {
        if (!s) {
            return;
        }
        slot = margin(*s, boundary);
        m.margin = std::min(m.margin, slot);
        m.member = m.member && (*s == Sign::Positive ? slot > m.tol : slot >= -m.tol);
    };
    apply(set.interior, false, m.interior_margin);
    apply(set.boundary, true, m.boundary_margin);
    return m;
}

RealField gauss_curvature(const MetricField& g)
{
    const auto verts = all_vertices(g.mesh());
    RealField K(verts.size());
    for_metric_jets(g, verts, [&](std::size_t i, const MetricJet& j) { K[i] = brioschi(j); });
    return K;
}

RealField geodesic_curvature(const MetricField& g)
{
    const DiscMesh& mesh = g.mesh();
    const auto loop = mesh.boundary();
    RealField k(loop.size());
    for_metric_jets(g, loop, [&](std::size_t i, const MetricJet& j) {
        const Complex p = mesh.vertex(loop[i]);
        k[i] = boundary_curvature(j, p / std::abs(p));
    });
    return k;
}

CurvatureReport curvature_report(const MetricField& g)
{
    const DiscMesh& mesh = g.mesh();
    CurvatureReport r;
    r.analytic = g.is_analytic();
    r.h = mesh.h();
    r.K = gauss_curvature(g);
    r.k = geodesic_curvature(g);

    RealField density(mesh.num_vertices());
    for (std::size_t v = 0; v < density.size(); ++v) {
        density[v] = r.K[v] * std::sqrt(g[v].det());
    }
    const RealField per_tri = average_to_triangles<double>(mesh, density);
    r.area_term = integrate_interior(mesh, per_tri);
    r.boundary_term = integrate_boundary(mesh, r.k, g.values());
    r.gauss_bonnet_total = r.area_term + r.boundary_term;

    r.min_K = INFINITY;
    r.max_K = -INFINITY;
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
        if (!mesh.is_boundary(v)) {
            r.min_K = std::min(r.min_K, r.K[v]);
            r.max_K = std::max(r.max_K, r.K[v]);
        }
    }
    r.max_abs_K = std::max(std::abs(r.min_K), std::abs(r.max_K));
    r.min_k = *std::min_element(r.k.begin(), r.k.end());
    r.max_k = *std::max_element(r.k.begin(), r.k.end());
    r.max_abs_k = std::max(std::abs(r.min_k), std::abs(r.max_k));
    return r;
}

double gauss_bonnet(const MetricField& g) { return curvature_report(g).gauss_bonnet_total; }

Membership membership(const MetricField& g, const CurvatureSet& set)
{
    return curvature_report(g).membership(set);
}

ConformalCheck conformal_curvature_check(const MetricField& g, const ConformalFactor& u)
{
    if (!g.source() || !u.source()) {
        throw InvalidArgument("conformal_curvature_check needs analytic g and u");
    }
    const DiscMesh& mesh = g.mesh();
    const MetricField scaled = conformal_scale(g, u);
    const MetricField gd = g.discrete();
    const MetricField sd = scaled.discrete();
    const RealField K_g = gauss_curvature(gd);
    const RealField K_s = gauss_curvature(sd);
    const RealField k_g = geodesic_curvature(gd);
    const RealField k_s = geodesic_curvature(sd);

    // Exact Laplace-Beltrami of u and its outward normal derivative.
    const ComponentsSource c = g.source()->components();
    const Expr& f = *u.source();
    const Expr fx = expr::differentiate(f, Var::X);
    const Expr fy = expr::differentiate(f, Var::Y);
    const Expr det = c.g11 * c.g22 - c.g12 * c.g12;
    const Expr s = expr::sqrt(det);
    const Expr i11 = c.g22 / det, i12 = -c.g12 / det, i22 = c.g11 / det;
    const Expr flux_x = s * (i11 * fx + i12 * fy);
    const Expr flux_y = s * (i12 * fx + i22 * fy);
    const Expr lap = (expr::differentiate(flux_x, Var::X) + expr::differentiate(flux_y, Var::Y)) / s;
    const Expr nx = i11 * expr::x() + i12 * expr::y();
    const Expr ny = i12 * expr::x() + i22 * expr::y();
    const Expr nu = (fx * nx + fy * ny) / expr::sqrt(expr::x() * nx + expr::y() * ny);
    const Expr interior[] = {f, lap};
    const Expr boundary[] = {f, nu};
    const expr::Program prog(interior);
    const expr::Program bprog(boundary);

    ConformalCheck out;
    double v[2];
    for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
        if (mesh.is_boundary(i)) {
            continue;
        }
        const Complex p = mesh.vertex(i);
        prog.eval(p.real(), p.imag(), v);
        const double lhs = std::exp(2.0 * v[0]) * K_s[i];
        out.residual_K = std::max(out.residual_K, std::abs(lhs - (K_g[i] - v[1])));
    }
    const auto loop = mesh.boundary();
    for (std::size_t i = 0; i < loop.size(); ++i) {
        Complex p = mesh.vertex(loop[i]);
        p /= std::abs(p);
        bprog.eval(p.real(), p.imag(), v);
        const double lhs = std::exp(v[0]) * k_s[i];
        out.residual_k = std::max(out.residual_k, std::abs(lhs - (k_g[i] + v[1])));
    }
    return out;
}

}  // namespace discunif

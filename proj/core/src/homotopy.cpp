#include "discunif/homotopy.hpp"

#include <algorithm>
#include <cmath>

#include "discunif/error.hpp"

namespace discunif
{

namespace
{

void check_t(double t)
{
    if (!(t >= 0.0 && t <= 1.0)) {
        throw InvalidArgument("path parameter t must lie in [0, 1]");
    }
}

void check_same_mesh(const MetricField& a, const MetricField& b)
{
    if (a.mesh_ptr() != b.mesh_ptr()) {
        throw InvalidArgument("metrics live on different meshes");
    }
}

double relative_error(const MetricField& a, const MetricField& b)
{
    double worst = 0.0;
    for (std::size_t v = 0; v < a.size(); ++v) {
        const double scale = std::max(std::abs(b[v].g11), std::abs(b[v].g22));
        worst = std::max(worst, a[v].max_abs_diff(b[v]) / scale);
    }
    return worst;
}

MetricField flat_metric(const MeshPtr& mesh) { return builtin_metric("flat", {}, mesh); }

}  // namespace

BeltramiField project(const MetricField& g) { return mu_from_metric(g).mu; }

std::pair<RealField, RealField> conformal_factor_between(const MetricField& g, const MetricField& p)
{
    check_same_mesh(g, p);
    RealField by_trace(g.size()), by_det(g.size());
    for (std::size_t v = 0; v < g.size(); ++v) {
        by_trace[v] = 0.5 * std::log(g[v].trace() / p[v].trace());
        by_det[v] = 0.25 * std::log(g[v].det() / p[v].det());
    }
    return {std::move(by_trace), std::move(by_det)};
}

QCMap phi_of_class(const BeltramiField& mu, const SolverOptions& opts) { return solve_beltrami(mu, opts).map; }

Uniformization uniformize(const MetricField& g, const SolverOptions& opts)
{
    BeltramiSolution sol = solve_beltrami(project(g), opts);
    const MetricField p = pullback_metric(sol.map, flat_metric(g.mesh_ptr()));
    auto [v, v_det] = conformal_factor_between(g, p);

    double disagreement = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        disagreement = std::max(disagreement, std::abs(v[i] - v_det[i]));
    }
    ConformalFactor vf(g.mesh_ptr(), v);
    const double recon = relative_error(conformal_scale(p, vf), g);

    const QCMap inv = invert_map(sol.map);
    PointLocator locator(g.mesh());
    RealField u(v.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        u[i] = locator.interpolate<double>(v, inv[i]);
    }
    return Uniformization{std::move(sol.map), std::move(vf), ConformalFactor(g.mesh_ptr(), std::move(u)),
                          std::max(recon, disagreement), std::move(sol.diagnostics)};
}

MetricField sigma(const BeltramiField& mu, const MetricField& g_D, const SolverOptions& opts)
{
    if (mu.mesh_ptr() != g_D.mesh_ptr()) {
        throw InvalidArgument("coefficient and reference metric live on different meshes");
    }
    return pullback_metric(phi_of_class(mu, opts), g_D);
}

Retraction::Retraction(const MetricField& g, const MetricField& g_D, const SolverOptions& opts)
    : phi_{QCMap::identity(g.mesh_ptr())},
      target_{g_D},
      u_{ConformalFactor::constant(g.mesh_ptr(), 0.0)}
{
    check_same_mesh(g, g_D);
    BeltramiSolution sol = solve_beltrami(project(g), opts);
    phi_ = std::move(sol.map);
    diagnostics_ = std::move(sol.diagnostics);
    target_ = pullback_metric(phi_, g_D);

    auto [u, u_det] = conformal_factor_between(g, target_);
    for (std::size_t i = 0; i < u.size(); ++i) {
        factor_residual_ = std::max(factor_residual_, std::abs(u[i] - u_det[i]));
    }
    u_ = ConformalFactor(g.mesh_ptr(), std::move(u));
    reconstruction_residual_ = relative_error(conformal_scale(target_, u_), g);
}

MetricField Retraction::at(double t) const
{
    check_t(t);
    if (t == 1.0) {
        return target_;
    }
    RealField s(u_.values().begin(), u_.values().end());
    for (double& x : s) {
        x *= 1.0 - t;
    }
    return conformal_scale(target_, ConformalFactor(u_.mesh_ptr(), std::move(s)));
}

MetricField retraction_H(double t, const MetricField& g, const MetricField& g_D, const SolverOptions& opts)
{
    check_t(t);
    return Retraction(g, g_D, opts).at(t);
}

BeltramiField class_contraction(double t, const BeltramiField& mu)
{
    check_t(t);
    ComplexField out(mu.values().begin(), mu.values().end());
    for (Complex& m : out) {
        m *= 1.0 - t;
    }
    return BeltramiField(mu.mesh_ptr(), std::move(out));
}

BeltramiField appendix_contraction(double t, const MetricField& g, const MetricField& g0, int n)
{
    check_t(t);
    check_same_mesh(g, g0);
    const RealField ratio = volume_ratio(g0, g, n);
    std::vector<Sym2> values(g.size());
    for (std::size_t v = 0; v < values.size(); ++v) {
        values[v] = g[v].scaled((1.0 - t) * ratio[v]) + g0[v].scaled(t);
    }
    return project(MetricField(g.mesh_ptr(), std::move(values)));
}

ContractionPath::ContractionPath(const MetricField& g, const MetricField& g_D, const SolverOptions& opts)
    : retraction_(g, g_D, opts), g_D_{g_D}, mu_{project(g)}, opts_{opts}
{
}

MetricField ContractionPath::at(double t) const
{
    check_t(t);
    if (t <= 0.5) {
        return retraction_.at(2.0 * t);
    }
    if (t == 1.0) {
        return g_D_;
    }
    return sigma(class_contraction(2.0 * t - 1.0, mu_), g_D_, opts_);
}

MetricField full_contraction(double t, const MetricField& g, const MetricField& g_D, const SolverOptions& opts)
{
    check_t(t);
    if (t == 1.0) {
        check_same_mesh(g, g_D);
        return g_D;
    }
    if (t > 0.5) {
        return sigma(class_contraction(2.0 * t - 1.0, project(g)), g_D, opts);
    }
    return retraction_H(2.0 * t, g, g_D, opts);
}

MetricSource default_target(const CurvatureSet& set)
{
    if (set.boundary == Sign::Zero) {
        if (set.interior == Sign::Zero) {
            throw InvalidArgument("no metric on the disc has K = 0 and k = 0 (Gauss-Bonnet)");
        }
        return builtin_source("cap", {{"t", "1"}});
    }
    if (set.interior == Sign::Zero) {
        return builtin_source("flat", {});
    }
    return builtin_source("cap", {{"t", "0.5"}});
}

std::vector<PathSample> contraction_margins(const MetricField& g, const MetricField& g_D, const CurvatureSet& set,
                                            int samples, const SolverOptions& opts)
{
    if (samples < 2) {
        throw InvalidArgument("need at least two path samples");
    }
    const ContractionPath path(g, g_D, opts);
    std::vector<PathSample> out;
    for (int i = 0; i < samples; ++i) {
        const double t = static_cast<double>(i) / (samples - 1);
        out.push_back({t, membership(path.at(t), set)});
    }
    return out;
}

}  // namespace discunif

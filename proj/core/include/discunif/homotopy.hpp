#pragma once

// Uniformization g = phi^*(e^{2u} g0), the section sigma and projection pi
// between metrics and conformal classes, the retraction H onto sigma(classes),
// the class contractions and the composite contraction of all disc metrics.
//
// Two conformal factors appear and are kept apart:
//   v: g = e^{2v} phi^* g0           (defined on the source disc)
//   u: g = phi^*(e^{2u} g0)          (on the target disc, u = v o phi^{-1})
// The retraction uses a third one, g = e^{2u} phi^* g_D, and stores it as
// Retraction::factor().

#include <memory>
#include <vector>

#include "discunif/curvature.hpp"
#include "discunif/qcsolve.hpp"

namespace discunif
{

struct Uniformization
{
    QCMap phi;
    ConformalFactor v;
    ConformalFactor u;
    /// Max over vertices of |e^{2v} phi^*g0 - g| / |g| (component max norm),
    /// or of the trace/determinant disagreement, whichever is larger.
    double residual = 0.0;
    SolverDiagnostics diagnostics;
};

/// pi(g) = [g], the Beltrami coefficient of g.
BeltramiField project(const MetricField& g);

/// phi = Phi([g]), v from the trace ratio tr g / tr phi^*g0, u = v o phi^{-1}.
Uniformization uniformize(const MetricField& g, const SolverOptions& opts = {});

/// Normalized solution of the Beltrami equation for mu.
QCMap phi_of_class(const BeltramiField& mu, const SolverOptions& opts = {});

/// sigma([g]) = Phi([g])^* g_D.
MetricField sigma(const BeltramiField& mu, const MetricField& g_D, const SolverOptions& opts = {});

/// Conformal factor between conformally equivalent metrics: 1/2 log(tr g / tr p).
/// The determinant estimate 1/4 log(det g / det p) is returned as the second member.
std::pair<RealField, RealField> conformal_factor_between(const MetricField& g, const MetricField& p);

/// H(t, g) = e^{2(1-t)u} Phi([g])^* g_D with g = e^{2u} Phi([g])^* g_D.
/// Solves once; at() is cheap.
class Retraction
{
public:
    Retraction(const MetricField& g, const MetricField& g_D, const SolverOptions& opts = {});

    MetricField at(double t) const;
    /// Phi([g])
    const QCMap& phi() const noexcept { return phi_; }
    /// Phi([g])^* g_D = H(1, g)
    const MetricField& target() const noexcept { return target_; }
    const ConformalFactor& factor() const noexcept { return u_; }
    /// max |trace estimate - determinant estimate| of the factor.
    double factor_residual() const noexcept { return factor_residual_; }
    /// Max component error of H(0, g) against g, relative to |g|.
    double reconstruction_residual() const noexcept { return reconstruction_residual_; }
    const SolverDiagnostics& diagnostics() const noexcept { return diagnostics_; }

private:
    QCMap phi_;
    MetricField target_;
    ConformalFactor u_;
    double factor_residual_ = 0.0;
    double reconstruction_residual_ = 0.0;
    SolverDiagnostics diagnostics_;
};

MetricField retraction_H(double t, const MetricField& g, const MetricField& g_D, const SolverOptions& opts = {});

/// (1 - t) mu
BeltramiField class_contraction(double t, const BeltramiField& mu);

/// pi((1 - t) (vol(g0) / vol(g))^{2/n} g + t g0)
BeltramiField appendix_contraction(double t, const MetricField& g, const MetricField& g0, int n = 2);

/// t in [0, 1/2]: H(2t, g); t in [1/2, 1]: sigma((2 - 2t) pi(g), g_D).
/// The solve for [g] is shared by both halves.
class ContractionPath
{
public:
    ContractionPath(const MetricField& g, const MetricField& g_D, const SolverOptions& opts = {});

    MetricField at(double t) const;
    const Retraction& retraction() const noexcept { return retraction_; }

private:
    Retraction retraction_;
    MetricField g_D_;
    BeltramiField mu_;
    SolverOptions opts_;
};

MetricField full_contraction(double t, const MetricField& g, const MetricField& g_D, const SolverOptions& opts = {});

/// Reference metric in a curvature set: flat for III with IId, cap(1) for
/// II with IIId, cap(0.5) otherwise. Throws InvalidArgument for combinations
/// the defaults do not cover (III with IIId is empty on the disc).
MetricSource default_target(const CurvatureSet& set);

struct PathSample
{
    double t = 0.0;
    Membership membership;
};

/// Membership margins along the full contraction on a uniform t-grid.
std::vector<PathSample> contraction_margins(const MetricField& g, const MetricField& g_D, const CurvatureSet& set,
                                            int samples = 5, const SolverOptions& opts = {});

}  // namespace discunif

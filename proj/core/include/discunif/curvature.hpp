#pragma once

// Gauss curvature, boundary geodesic curvature, Gauss-Bonnet and the
// curvature-sign classes of disc metrics.

#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "discunif/metric.hpp"

namespace discunif
{

/// Sign condition on K (interior) or k (boundary).
enum class Sign { NonNegative, Positive, Zero };

/// One of the six classes
///   I: K >= 0, II: K > 0, III: K = 0, Id: k >= 0, IId: k > 0, IIId: k = 0
/// or an intersection of an interior and a boundary class.
struct CurvatureSet
{
    std::optional<Sign> interior;
    std::optional<Sign> boundary;

    /// Accepts I, II, III, I∂ (also Id / Ib / I_d), ... and intersections joined
    /// by "∩", "&", "^" or ",". Throws InvalidArgument.
    static CurvatureSet parse(std::string_view text);
    std::string name() const;
    bool operator==(const CurvatureSet&) const = default;
};

/// Membership tolerance for mesh size h: max(1e-6, 10 h^2).
double curvature_tolerance(double h);

struct Membership
{
    bool member = false;
    /// Minimum of the component margins.
    double margin = 0.0;
    double interior_margin = 0.0;
    double boundary_margin = 0.0;
    double tol = 0.0;
};

struct CurvatureReport
{
    /// Gauss curvature at every vertex; set membership uses interior vertices only.
    RealField K;
    /// Geodesic curvature by boundary loop position.
    RealField k;
    double area_term = 0.0;
    double boundary_term = 0.0;
    double gauss_bonnet_total = 0.0;
    double min_K = 0.0, max_K = 0.0, max_abs_K = 0.0;
    double min_k = 0.0, max_k = 0.0, max_abs_k = 0.0;
    bool analytic = false;
    double h = 0.0;

    /// Margin of a single condition: min value for >= and >, -max |value| for =.
    double margin(Sign s, bool boundary) const;
    Membership membership(const CurvatureSet& set) const;
};

/// Gauss curvature per vertex. Analytic sources use exact symbolic derivatives;
/// discrete metrics use local quartic least-squares fits of the components
/// (see shared_fitter).
RealField gauss_curvature(const MetricField& g);

/// Geodesic curvature of the boundary circle (counterclockwise, inner normal),
/// indexed by boundary loop position. Flat disc: k = 1.
RealField geodesic_curvature(const MetricField& g);

/// Integral of K dA_g plus integral of k ds_g.
double gauss_bonnet(const MetricField& g);

CurvatureReport curvature_report(const MetricField& g);

Membership membership(const MetricField& g, const CurvatureSet& set);

struct ConformalCheck
{
    double residual_K = 0.0;
    double residual_k = 0.0;
};

/// Max-norm residuals of e^{2u} K_{e^{2u} g} = K_g - Lap_g u and
/// e^u k_{e^{2u} g} = k_g + nu(u). Curvatures on the left and K_g, k_g come
/// from the discrete (fitted) path; Lap_g u and nu(u) are evaluated exactly.
/// Requires analytic g and u.
ConformalCheck conformal_curvature_check(const MetricField& g, const ConformalFactor& u);

}  // namespace discunif

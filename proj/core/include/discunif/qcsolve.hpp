#pragma once

// Quasiconformal self-maps of the disc: the normalized Beltrami solver and the
// map calculus (Beltrami coefficient, pullback, inverse, composition).

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "discunif/error.hpp"
#include "discunif/metric.hpp"

namespace discunif
{

/// h(z) = -(z - i) / (z + i): upper half-plane onto the unit disc, 0, 1, inf to 1, i, -1.
/// A non-finite argument stands for the point at infinity. Throws DomainError at z = -i.
Complex cayley(Complex z);
/// Inverse of cayley; returns an infinite value for -1.
Complex cayley_inv(Complex z);

/// Piecewise-linear self-map of the closed disc given by its vertex values.
class QCMap
{
public:
    /// Throws InvalidArgument when a value leaves the disc or a boundary
    /// vertex leaves the unit circle (tolerance 1e-9).
    QCMap(MeshPtr mesh, ComplexField w, bool normalized = false);

    static QCMap identity(MeshPtr mesh);
    /// Samples an analytic map; normalized is set when it fixes 1, i, -1.
    static QCMap sample(MeshPtr mesh, const AnalyticMap& f);

    const DiscMesh& mesh() const noexcept { return *mesh_; }
    const MeshPtr& mesh_ptr() const noexcept { return mesh_; }
    std::span<const Complex> values() const noexcept { return w_; }
    Complex operator[](std::size_t v) const noexcept { return w_[v]; }
    bool normalized() const noexcept { return normalized_; }
    /// Per-triangle Wirtinger derivatives.
    std::span<const Complex> wz() const noexcept { return d_.fz; }
    std::span<const Complex> wzbar() const noexcept { return d_.fzbar; }

    /// max |w(1) - 1|, |w(i) - i|, |w(-1) + 1|
    std::array<double, 3> marked_errors() const;
    /// Value at an arbitrary point of the disc; boundary points map onto the circle.
    Complex at(Complex z, PointLocator& locator) const;

private:
    MeshPtr mesh_;
    ComplexField w_;
    bool normalized_;
    WirtingerDerivatives d_;
};

struct SolverOptions
{
    /// Gauss-Newton stopping tolerance on the largest vertex update.
    double tol = 1e-6;
    int max_iter = 50;
    int verbosity = 0;
    /// Coefficients with max |mu| above this are rejected.
    double c_bound = 0.95;
    /// Starting map (boundary values on the circle, marked points fixed);
    /// identity when absent.
    std::optional<ComplexField> initial;
};

struct SolverDiagnostics
{
    /// Relative Beltrami residual |wzbar - mu wz| / |wz| (area-weighted L2) per iteration,
    /// starting with the initial guess.
    std::vector<double> residual_history;
    /// Largest vertex update per iteration.
    std::vector<double> step_history;
    int iterations = 0;
    bool converged = false;
    double residual = 0.0;
    double jacobian_min = 0.0;
    /// Triangle with the largest local Beltrami defect.
    int worst_triangle = -1;
    double worst_defect = 0.0;
    std::array<double, 3> marked_errors{};
    double seconds = 0.0;
};

/// Non-convergence or loss of orientation; carries the diagnostics.
class SolverError : public Error
{
public:
    SolverError(const std::string& msg, SolverDiagnostics diagnostics)
        : Error(msg), diagnostics_{std::move(diagnostics)}
    {
    }
    const SolverDiagnostics& diagnostics() const noexcept { return diagnostics_; }

private:
    SolverDiagnostics diagnostics_;
};

struct BeltramiSolution
{
    QCMap map;
    SolverDiagnostics diagnostics;
};

/// Normalized solution of w_zbar = mu w_z on the disc fixing 1, i, -1:
/// Gauss-Newton on the area-weighted least-squares defect with interior
/// vertex values and monotone boundary angles as unknowns.
/// Throws BoundError when max |mu| > opts.c_bound, SolverError otherwise.
BeltramiSolution solve_beltrami(const BeltramiField& mu, const SolverOptions& opts = {});

/// Per-triangle wzbar / wz averaged to vertices. Throws JacobianError on a
/// triangle with non-positive Jacobian.
BeltramiField beltrami_of_map(const QCMap& w);

/// Minimum over triangles of |wz|^2 - |wzbar|^2.
double jacobian_min(const QCMap& w);

/// |wzbar| / |wz| in the area-weighted L2 norm.
double holomorphy_defect(const QCMap& w);

/// (w^* g)(a, b) = g(Dw a, Dw b) at every vertex, with Dw from local quartic
/// fits of w (see shared_fitter) and g evaluated at w(v) (exactly for analytic g).
MetricField pullback_metric(const QCMap& w, const MetricField& g);

/// Vertex-wise inverse by point location in the image triangulation; boundary
/// vertices use the inverse of the monotone boundary angle function.
QCMap invert_map(const QCMap& w);

/// (w1 o w2)(z) = w1(w2(z)) on the mesh of w2.
QCMap compose(const QCMap& w1, const QCMap& w2);

}  // namespace discunif

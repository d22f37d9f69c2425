#pragma once

// Polar-structured triangulation of the closed unit disc and the discrete
// calculus on it (P1 elements).

#include <array>
#include <complex>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace discunif
{

using Complex = std::complex<double>;
using RealField = std::vector<double>;
using ComplexField = std::vector<Complex>;

/// Symmetric 2-tensor g11 dx^2 + 2 g12 dx dy + g22 dy^2.
struct Sym2
{
    double g11 = 1.0;
    double g12 = 0.0;
    double g22 = 1.0;

    double det() const noexcept { return g11 * g22 - g12 * g12; }
    double trace() const noexcept { return g11 + g22; }
    /// g(v, v) for the planar vector v = (Re, Im).
    double quad(Complex v) const noexcept
    {
        return g11 * v.real() * v.real() + 2.0 * g12 * v.real() * v.imag() + g22 * v.imag() * v.imag();
    }
    Sym2 scaled(double s) const noexcept { return {g11 * s, g12 * s, g22 * s}; }
    double max_abs_diff(const Sym2& o) const noexcept;

    friend Sym2 operator+(const Sym2& a, const Sym2& b) noexcept
    {
        return {a.g11 + b.g11, a.g12 + b.g12, a.g22 + b.g22};
    }
    friend Sym2 operator*(const Sym2& a, double s) noexcept { return a.scaled(s); }
};

using Triangle = std::array<int, 3>;

class DiscMesh
{
public:
    /// Center vertex plus n_r rings of n_th vertices at radii j/n_r.
    static std::shared_ptr<const DiscMesh> build(int n_r, int n_th);

    /// Rebuilds a mesh from serialized parts, validating every invariant.
    static std::shared_ptr<const DiscMesh> from_parts(int n_r, int n_th, std::vector<Complex> vertices,
                                                      std::vector<Triangle> triangles, std::vector<int> boundary,
                                                      std::array<int, 3> marked);

    int n_r() const noexcept { return n_r_; }
    int n_th() const noexcept { return n_th_; }
    /// Nominal mesh size 1/n_r.
    double h() const noexcept { return 1.0 / n_r_; }

    std::size_t num_vertices() const noexcept { return vertices_.size(); }
    std::size_t num_triangles() const noexcept { return triangles_.size(); }

    std::span<const Complex> vertices() const noexcept { return vertices_; }
    Complex vertex(std::size_t i) const noexcept { return vertices_[i]; }
    std::span<const Triangle> triangles() const noexcept { return triangles_; }
    const Triangle& triangle(std::size_t t) const noexcept { return triangles_[t]; }

    /// Counterclockwise boundary loop.
    std::span<const int> boundary() const noexcept { return boundary_; }
    /// Vertices at 1, i, -1.
    const std::array<int, 3>& marked() const noexcept { return marked_; }
    /// Positions of the marked vertices within the boundary loop.
    const std::array<int, 3>& marked_positions() const noexcept { return marked_pos_; }
    bool is_boundary(std::size_t v) const noexcept { return boundary_pos_[v] >= 0; }
    /// Index in the boundary loop, or -1 for interior vertices.
    int boundary_position(std::size_t v) const noexcept { return boundary_pos_[v]; }

    double area(std::size_t t) const noexcept { return area_[t]; }
    std::span<const double> areas() const noexcept { return area_; }
    /// Gradients of the three barycentric basis functions, packed as d/dx + i d/dy.
    const std::array<Complex, 3>& basis_gradients(std::size_t t) const noexcept { return grad_[t]; }
    /// Triangle across the edge opposite local vertex k, or -1.
    const std::array<int, 3>& neighbors(std::size_t t) const noexcept { return tri_neighbors_[t]; }

    std::span<const int> vertex_triangles(std::size_t v) const noexcept
    {
        return {vt_index_.data() + vt_offset_[v], vt_index_.data() + vt_offset_[v + 1]};
    }
    std::span<const int> vertex_neighbors(std::size_t v) const noexcept
    {
        return {vv_index_.data() + vv_offset_[v], vv_index_.data() + vv_offset_[v + 1]};
    }
    /// Vertices within k edges of v (v first).
    std::vector<int> ring(std::size_t v, int k) const;

private:
    DiscMesh() = default;
    void finalize();

    int n_r_ = 0;
    int n_th_ = 0;
    std::vector<Complex> vertices_;
    std::vector<Triangle> triangles_;
    std::vector<int> boundary_;
    std::array<int, 3> marked_{};
    std::array<int, 3> marked_pos_{};
    std::vector<int> boundary_pos_;
    std::vector<double> area_;
    std::vector<std::array<Complex, 3>> grad_;
    std::vector<std::array<int, 3>> tri_neighbors_;
    std::vector<int> vt_offset_, vt_index_;
    std::vector<int> vv_offset_, vv_index_;
};

using MeshPtr = std::shared_ptr<const DiscMesh>;

struct WirtingerDerivatives
{
    ComplexField fz;     // per triangle
    ComplexField fzbar;  // per triangle
};

/// Per-triangle Wirtinger derivatives of the piecewise-linear interpolant.
WirtingerDerivatives wirtinger(const DiscMesh& mesh, std::span<const Complex> f);

/// Per-triangle planar gradient (d/dx + i d/dy) of a real vertex field.
ComplexField gradient(const DiscMesh& mesh, std::span<const double> f);

/// Sum of density * Euclidean triangle area.
double integrate_interior(const DiscMesh& mesh, std::span<const double> density);

/// Trapezoidal rule along the boundary loop; density is indexed by loop
/// position. With a metric (one tensor per vertex), edge lengths are measured
/// as the mean of sqrt(g(tau, tau)) at the two endpoints.
double integrate_boundary(const DiscMesh& mesh, std::span<const double> density, std::span<const Sym2> metric = {});

/// Outward unit normal z/|z| at each boundary loop position.
ComplexField boundary_normal(const DiscMesh& mesh);

/// Area-weighted average of per-triangle values onto vertices.
template <class T>
std::vector<T> average_to_vertices(const DiscMesh& mesh, std::span<const T> per_triangle)
{
    std::vector<T> out(mesh.num_vertices());
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
        T acc = per_triangle[mesh.vertex_triangles(v)[0]] * 0.0;
        double w = 0.0;
        for (int t : mesh.vertex_triangles(v)) {
            acc = acc + per_triangle[t] * mesh.area(t);
            w += mesh.area(t);
        }
        out[v] = acc * (1.0 / w);
    }
    return out;
}

/// Mean of the three vertex values on every triangle.
template <class T>
std::vector<T> average_to_triangles(const DiscMesh& mesh, std::span<const T> per_vertex)
{
    std::vector<T> out(mesh.num_triangles());
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const Triangle& tri = mesh.triangle(t);
        out[t] = (per_vertex[tri[0]] + per_vertex[tri[1]] + per_vertex[tri[2]]) * (1.0 / 3.0);
    }
    return out;
}

/// Result of locating a point: containing (or nearest boundary) triangle and
/// barycentric coordinates, which may be slightly negative for points in the
/// sliver between a boundary chord and the unit circle.
struct Location
{
    int triangle = -1;
    std::array<double, 3> bary{};
};

/// Walking point locator over a triangulation with the connectivity of `mesh`
/// and vertex positions `positions` (the mesh's own, or a mapped image of them).
/// Not thread safe: holds the last triangle found as the next walk seed.
class PointLocator
{
public:
    explicit PointLocator(const DiscMesh& mesh);
    PointLocator(const DiscMesh& mesh, std::span<const Complex> positions);

    /// Points with |p| > 1 + 1e-9 are clamped radially onto the unit circle.
    Location locate(Complex p);

    template <class T>
    T interpolate(std::span<const T> field, Complex p)
    {
        const Location loc = locate(p);
        const Triangle& tri = mesh_->triangle(loc.triangle);
        return field[tri[0]] * loc.bary[0] + field[tri[1]] * loc.bary[1] + field[tri[2]] * loc.bary[2];
    }

private:
    std::array<double, 3> barycentric(int t, Complex p) const;
    std::optional<Location> walk(int start, Complex p);

    const DiscMesh* mesh_;
    std::span<const Complex> pos_;
    int seed_ = 0;
};

/// One-shot barycentric interpolation.
template <class T>
T interpolate(const DiscMesh& mesh, std::span<const T> field, Complex p)
{
    PointLocator loc(mesh);
    return loc.interpolate(field, p);
}

/// Local polynomial jet of a field at a vertex: value and derivatives up to second order.
struct Jet
{
    double f = 0.0;
    double fx = 0.0;
    double fy = 0.0;
    double fxx = 0.0;
    double fxy = 0.0;
    double fyy = 0.0;
};

/// Least-squares polynomial fits over Euclidean vertex neighbourhoods.
/// The fitting operators are precomputed per vertex; applying them to a field
/// is a small dot product per derivative.
class LocalFitter
{
public:
    /// degree 2, 3 or 4. The neighbourhood of v is the ball of radius
    /// radius * (longest edge at v); boundary_radius replaces radius on and next
    /// to the boundary when larger. Vertices closer than center_radius to the
    /// origin use a ball of at least that (absolute) radius, which averages out
    /// the anisotropic fan of the polar mesh. Balls too small for a
    /// well-conditioned fit are grown by 25% at a time.
    LocalFitter(MeshPtr mesh, int degree, double radius, double boundary_radius = 0.0, double center_radius = 0.0);

    const DiscMesh& mesh() const noexcept { return *mesh_; }
    int degree() const noexcept { return degree_; }

    Jet jet(std::size_t v, std::span<const double> field) const;
    /// Complex fields: fitted component-wise; returns (d/dx, d/dy).
    std::pair<Complex, Complex> gradient(std::size_t v, std::span<const Complex> field) const;

    std::span<const int> neighborhood(std::size_t v) const noexcept
    {
        return {nb_index_.data() + nb_offset_[v], nb_index_.data() + nb_offset_[v + 1]};
    }

private:
    MeshPtr mesh_;
    int degree_;
    std::vector<int> nb_offset_, nb_index_;
    // Six rows per vertex (f, fx, fy, fxx, fxy, fyy), one weight per neighbour.
    std::vector<double> weights_;
};

/// Both fitters are quartic with balls of 3 edges (4 near the boundary). Near
/// the center the ball is at least c sqrt(h) - |z| / 2 wide: solutions of the
/// Beltrami solver carry an O(h^2 log r) error around the center fan, which
/// the narrow balls would amplify into O(1) curvature errors.
enum class FitUse
{
    /// Metric components for the curvature kernels (c = 1).
    Curvature,
    /// Differentials of solved maps in pullbacks (c = 2).
    MapDifferential,
};

/// Fitter for the given use, cached for the few most recently used meshes.
std::shared_ptr<const LocalFitter> shared_fitter(const MeshPtr& mesh, FitUse use = FitUse::Curvature);

}  // namespace discunif

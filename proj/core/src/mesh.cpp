#include "discunif/mesh.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <list>
#include <map>
#include <mutex>
#include <numbers>
#include <string>

#include "discunif/error.hpp"

namespace discunif
{

double Sym2::max_abs_diff(const Sym2& o) const noexcept
{
    return std::max({std::abs(g11 - o.g11), std::abs(g12 - o.g12), std::abs(g22 - o.g22)});
}

namespace
{

double signed_area(Complex a, Complex b, Complex c)
{
    const Complex u = b - a;
    const Complex v = c - a;
    return 0.5 * (u.real() * v.imag() - u.imag() * v.real());
}

}  // namespace

MeshPtr DiscMesh::build(int n_r, int n_th)
{
    if (n_r < 8) {
        throw InvalidArgument("n_r must be >= 8, got " + std::to_string(n_r));
    }
    if (n_th < 16 || n_th % 4 != 0) {
        throw InvalidArgument("n_th must be >= 16 and divisible by 4, got " + std::to_string(n_th));
    }
    std::shared_ptr<DiscMesh> m(new DiscMesh());
    m->n_r_ = n_r;
    m->n_th_ = n_th;
    auto index = [&](int j, int k) { return 1 + (j - 1) * n_th + ((k % n_th) + n_th) % n_th; };

    m->vertices_.reserve(1 + static_cast<std::size_t>(n_r) * n_th);
    m->vertices_.push_back(Complex(0.0, 0.0));
    for (int j = 1; j <= n_r; ++j) {
        const double r = static_cast<double>(j) / n_r;
        for (int k = 0; k < n_th; ++k) {
            Complex z = std::polar(r, 2.0 * std::numbers::pi * k / n_th);
            if (k % (n_th / 4) == 0) {
                static const Complex quarter[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
                z = r * quarter[k / (n_th / 4)];
            } else if (j == n_r) {
                z /= std::abs(z);
            }
            m->vertices_.push_back(z);
        }
    }

    for (int k = 0; k < n_th; ++k) {
        m->triangles_.push_back({0, index(1, k), index(1, k + 1)});
    }
    for (int j = 1; j < n_r; ++j) {
        for (int k = 0; k < n_th; ++k) {
            const int a = index(j, k);
            const int b = index(j, k + 1);
            const int c = index(j + 1, k + 1);
            const int d = index(j + 1, k);
            m->triangles_.push_back({a, d, c});
            m->triangles_.push_back({a, c, b});
        }
    }
    for (auto& tri : m->triangles_) {
        if (signed_area(m->vertices_[tri[0]], m->vertices_[tri[1]], m->vertices_[tri[2]]) < 0.0) {
            std::swap(tri[1], tri[2]);
        }
    }
    for (int k = 0; k < n_th; ++k) {
        m->boundary_.push_back(index(n_r, k));
    }
    m->marked_ = {index(n_r, 0), index(n_r, n_th / 4), index(n_r, n_th / 2)};
    m->finalize();
    return m;
}

MeshPtr DiscMesh::from_parts(int n_r, int n_th, std::vector<Complex> vertices, std::vector<Triangle> triangles,
                             std::vector<int> boundary, std::array<int, 3> marked)
{
    std::shared_ptr<DiscMesh> m(new DiscMesh());
    m->n_r_ = n_r;
    m->n_th_ = n_th;
    m->vertices_ = std::move(vertices);
    m->triangles_ = std::move(triangles);
    m->boundary_ = std::move(boundary);
    m->marked_ = marked;
    const int nv = static_cast<int>(m->vertices_.size());
    for (const auto& tri : m->triangles_) {
        for (int v : tri) {
            if (v < 0 || v >= nv) {
                throw MeshError("triangle references vertex " + std::to_string(v) + " out of range");
            }
        }
    }
    for (int v : m->boundary_) {
        if (v < 0 || v >= nv) {
            throw MeshError("boundary references vertex out of range");
        }
        if (std::abs(std::abs(m->vertices_[v]) - 1.0) > 1e-12) {
            throw MeshError("boundary vertex " + std::to_string(v) + " is not on the unit circle");
        }
    }
    m->finalize();
    return m;
}

void DiscMesh::finalize()
{
    const std::size_t nv = vertices_.size();
    const std::size_t nt = triangles_.size();
    area_.resize(nt);
    grad_.resize(nt);
    for (std::size_t t = 0; t < nt; ++t) {
        const auto& tri = triangles_[t];
        const Complex p0 = vertices_[tri[0]], p1 = vertices_[tri[1]], p2 = vertices_[tri[2]];
        const double a = signed_area(p0, p1, p2);
        if (!(a > 1e-14)) {
            throw MeshError("degenerate or negatively oriented triangle " + std::to_string(t));
        }
        area_[t] = a;
        const Complex I(0.0, 1.0);
        grad_[t] = {I * (p2 - p1) / (2.0 * a), I * (p0 - p2) / (2.0 * a), I * (p1 - p0) / (2.0 * a)};
    }

    // Edge adjacency.
    tri_neighbors_.assign(nt, {-1, -1, -1});
    std::map<std::pair<int, int>, std::pair<int, int>> edges;
    for (std::size_t t = 0; t < nt; ++t) {
        for (int k = 0; k < 3; ++k) {
            int a = triangles_[t][(k + 1) % 3];
            int b = triangles_[t][(k + 2) % 3];
            auto key = std::minmax(a, b);
            auto it = edges.find(key);
            if (it == edges.end()) {
                edges.emplace(key, std::make_pair(static_cast<int>(t), k));
            } else {
                if (it->second.first < 0) {
                    throw MeshError("edge shared by more than two triangles");
                }
                tri_neighbors_[t][k] = it->second.first;
                tri_neighbors_[it->second.first][it->second.second] = static_cast<int>(t);
                it->second.first = -1;
            }
        }
    }

    // Vertex -> triangles, vertex -> vertices.
    vt_offset_.assign(nv + 1, 0);
    for (const auto& tri : triangles_) {
        for (int v : tri) {
            ++vt_offset_[v + 1];
        }
    }
    for (std::size_t v = 0; v < nv; ++v) {
        vt_offset_[v + 1] += vt_offset_[v];
    }
    vt_index_.resize(vt_offset_[nv]);
    {
        std::vector<int> fill(vt_offset_.begin(), vt_offset_.end() - 1);
        for (std::size_t t = 0; t < nt; ++t) {
            for (int v : triangles_[t]) {
                vt_index_[fill[v]++] = static_cast<int>(t);
            }
        }
    }
    std::vector<std::vector<int>> adj(nv);
    for (const auto& tri : triangles_) {
        for (int k = 0; k < 3; ++k) {
            adj[tri[k]].push_back(tri[(k + 1) % 3]);
            adj[tri[k]].push_back(tri[(k + 2) % 3]);
        }
    }
    vv_offset_.assign(nv + 1, 0);
    vv_index_.clear();
    for (std::size_t v = 0; v < nv; ++v) {
        if (adj[v].empty()) {
            throw MeshError("isolated vertex " + std::to_string(v));
        }
        std::sort(adj[v].begin(), adj[v].end());
        adj[v].erase(std::unique(adj[v].begin(), adj[v].end()), adj[v].end());
        vv_index_.insert(vv_index_.end(), adj[v].begin(), adj[v].end());
        vv_offset_[v + 1] = static_cast<int>(vv_index_.size());
    }

    // Boundary loop: closed, counterclockwise, and made of boundary edges.
    boundary_pos_.assign(nv, -1);
    const int nb = static_cast<int>(boundary_.size());
    if (nb < 3) {
        throw MeshError("boundary loop too short");
    }
    for (int p = 0; p < nb; ++p) {
        if (boundary_pos_[boundary_[p]] >= 0) {
            throw MeshError("boundary loop is not simple");
        }
        boundary_pos_[boundary_[p]] = p;
    }
    std::size_t boundary_edges = 0;
    for (const auto& [key, val] : edges) {
        if (val.first >= 0) {
            ++boundary_edges;
            if (boundary_pos_[key.first] < 0 || boundary_pos_[key.second] < 0) {
                throw MeshError("boundary edge not on the boundary loop");
            }
        }
    }
    if (boundary_edges != static_cast<std::size_t>(nb)) {
        throw MeshError("boundary loop does not match the mesh boundary");
    }
    double winding = 0.0;
    for (int p = 0; p < nb; ++p) {
        winding += std::arg(vertices_[boundary_[(p + 1) % nb]] / vertices_[boundary_[p]]);
    }
    if (std::abs(winding - 2.0 * std::numbers::pi) > 1e-9) {
        throw MeshError("boundary loop is not counterclockwise");
    }
    const Complex targets[3] = {{1, 0}, {0, 1}, {-1, 0}};
    for (int i = 0; i < 3; ++i) {
        const int v = marked_[i];
        if (v < 0 || static_cast<std::size_t>(v) >= nv || boundary_pos_[v] < 0 ||
            std::abs(vertices_[v] - targets[i]) > 1e-15) {
            throw MeshError("marked vertex " + std::to_string(i) + " is not the boundary vertex at 1, i, -1");
        }
        marked_pos_[i] = boundary_pos_[v];
    }
}

std::vector<int> DiscMesh::ring(std::size_t v, int k) const
{
    std::vector<int> out{static_cast<int>(v)};
    std::vector<char> seen(vertices_.size(), 0);
    seen[v] = 1;
    std::size_t begin = 0;
    for (int level = 0; level < k; ++level) {
        const std::size_t end = out.size();
        for (std::size_t i = begin; i < end; ++i) {
            for (int w : vertex_neighbors(out[i])) {
                if (!seen[w]) {
                    seen[w] = 1;
                    out.push_back(w);
                }
            }
        }
        begin = end;
    }
    return out;
}

WirtingerDerivatives wirtinger(const DiscMesh& mesh, std::span<const Complex> f)
{
    WirtingerDerivatives d;
    d.fz.resize(mesh.num_triangles());
    d.fzbar.resize(mesh.num_triangles());
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangle(t);
        const auto& g = mesh.basis_gradients(t);
        Complex fz = 0.0, fzbar = 0.0;
        for (int k = 0; k < 3; ++k) {
            fz += f[tri[k]] * std::conj(g[k]);
            fzbar += f[tri[k]] * g[k];
        }
        d.fz[t] = 0.5 * fz;
        d.fzbar[t] = 0.5 * fzbar;
    }
    return d;
}

ComplexField gradient(const DiscMesh& mesh, std::span<const double> f)
{
    ComplexField out(mesh.num_triangles());
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangle(t);
        const auto& g = mesh.basis_gradients(t);
        out[t] = f[tri[0]] * g[0] + f[tri[1]] * g[1] + f[tri[2]] * g[2];
    }
    return out;
}

double integrate_interior(const DiscMesh& mesh, std::span<const double> density)
{
    double sum = 0.0;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        sum += density[t] * mesh.area(t);
    }
    return sum;
}

double integrate_boundary(const DiscMesh& mesh, std::span<const double> density, std::span<const Sym2> metric)
{
    const auto loop = mesh.boundary();
    const std::size_t nb = loop.size();
    double sum = 0.0;
    for (std::size_t p = 0; p < nb; ++p) {
        const int a = loop[p];
        const int b = loop[(p + 1) % nb];
        const Complex tau = mesh.vertex(b) - mesh.vertex(a);
        double len = std::abs(tau);
        if (!metric.empty()) {
            len = 0.5 * (std::sqrt(metric[a].quad(tau)) + std::sqrt(metric[b].quad(tau)));
        }
        sum += 0.5 * (density[p] + density[(p + 1) % nb]) * len;
    }
    return sum;
}

ComplexField boundary_normal(const DiscMesh& mesh)
{
    ComplexField out;
    out.reserve(mesh.boundary().size());
    for (int v : mesh.boundary()) {
        const Complex z = mesh.vertex(v);
        out.push_back(z / std::abs(z));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Point location

PointLocator::PointLocator(const DiscMesh& mesh) : PointLocator(mesh, mesh.vertices()) {}

PointLocator::PointLocator(const DiscMesh& mesh, std::span<const Complex> positions) : mesh_{&mesh}, pos_{positions}
{
}

std::array<double, 3> PointLocator::barycentric(int t, Complex p) const
{
    const auto& tri = mesh_->triangle(t);
    const Complex a = pos_[tri[0]], b = pos_[tri[1]], c = pos_[tri[2]];
    const double total = signed_area(a, b, c);
    return {signed_area(p, b, c) / total, signed_area(a, p, c) / total, signed_area(a, b, p) / total};
}

std::optional<Location> PointLocator::walk(int start, Complex p)
{
    constexpr double eps = -1e-12;
    int t = start;
    int prev = -1;
    const std::size_t limit = mesh_->num_triangles() + 16;
    for (std::size_t step = 0; step < limit; ++step) {
        const auto bary = barycentric(t, p);
        int worst = 0;
        for (int k = 1; k < 3; ++k) {
            if (bary[k] < bary[worst]) {
                worst = k;
            }
        }
        if (bary[worst] >= eps) {
            return Location{t, bary};
        }
        int next = mesh_->neighbors(t)[worst];
        if (next == prev) {
            // Try the other negative edge before bouncing back.
            for (int k = 0; k < 3; ++k) {
                if (k != worst && bary[k] < eps && mesh_->neighbors(t)[k] >= 0) {
                    next = mesh_->neighbors(t)[k];
                }
            }
        }
        if (next < 0) {
            // Outside a boundary chord: inside the sliver when |p| <= 1.
            return Location{t, bary};
        }
        prev = t;
        t = next;
    }
    return std::nullopt;
}

Location PointLocator::locate(Complex p)
{
    const double r = std::abs(p);
    if (!std::isfinite(r) || r > 1.0 + 1e-6) {
        throw PointLocationError("point outside the closed disc: |p| = " + std::to_string(r));
    }
    if (r > 1.0) {
        p /= r;
    }
    if (auto loc = walk(seed_, p)) {
        seed_ = loc->triangle;
        return *loc;
    }
    // Walk failed (non-convex image or cycling): exhaustive scan.
    int best = -1;
    double best_min = -1e300;
    std::array<double, 3> best_bary{};
    for (std::size_t t = 0; t < mesh_->num_triangles(); ++t) {
        const auto bary = barycentric(static_cast<int>(t), p);
        const double m = std::min({bary[0], bary[1], bary[2]});
        if (m > best_min) {
            best_min = m;
            best = static_cast<int>(t);
            best_bary = bary;
        }
    }
    if (best < 0 || best_min < -0.5) {
        throw PointLocationError("could not locate point (" + std::to_string(p.real()) + ", " +
                                 std::to_string(p.imag()) + ")");
    }
    seed_ = best;
    return Location{best, best_bary};
}

// ---------------------------------------------------------------------------
// Local polynomial fits

namespace
{

int monomial_count(int degree) { return (degree + 1) * (degree + 2) / 2; }

void monomials(int degree, double dx, double dy, double* row)
{
    int c = 0;
    for (int d = 0; d <= degree; ++d) {
        for (int i = d; i >= 0; --i) {
            // dx^i dy^(d-i)
            row[c++] = std::pow(dx, i) * std::pow(dy, d - i);
        }
    }
}

}  // namespace

LocalFitter::LocalFitter(MeshPtr mesh, int degree, double radius, double boundary_radius, double center_radius)
    : mesh_{std::move(mesh)}, degree_{degree}
{
    if (degree < 2 || degree > 4) {
        throw InvalidArgument("fit degree must be 2, 3 or 4");
    }
    if (!(radius > 0.0)) {
        throw InvalidArgument("fit radius must be positive");
    }
    const int p = monomial_count(degree);
    const std::size_t nv = mesh_->num_vertices();
    nb_offset_.assign(nv + 1, 0);
    std::vector<char> seen(nv, 0);
    std::vector<int> nb;
    std::vector<double> row(p);
    for (std::size_t v = 0; v < nv; ++v) {
        const Complex c = mesh_->vertex(v);
        double edge = 0.0;
        bool near = mesh_->is_boundary(v);
        for (int w : mesh_->vertex_neighbors(v)) {
            edge = std::max(edge, std::abs(mesh_->vertex(w) - c));
            near = near || mesh_->is_boundary(w);
        }
        double reach = (near ? std::max(radius, boundary_radius) : radius) * edge;
        reach = std::max(reach, center_radius - 0.5 * std::abs(c));
        for (int attempt = 0;; ++attempt, reach *= 1.25) {
            // Vertices within `reach` of v, collected through the edge graph.
            nb.assign(1, static_cast<int>(v));
            seen[v] = 1;
            for (std::size_t i = 0; i < nb.size(); ++i) {
                for (int w : mesh_->vertex_neighbors(nb[i])) {
                    if (!seen[w] && std::abs(mesh_->vertex(w) - c) <= reach) {
                        seen[w] = 1;
                        nb.push_back(w);
                    }
                }
            }
            for (int w : nb) {
                seen[w] = 0;
            }
            const int m = static_cast<int>(nb.size());
            if (m < p + 3) {
                continue;
            }
            Eigen::MatrixXd A(m, p);
            for (int i = 0; i < m; ++i) {
                const Complex d = (mesh_->vertex(nb[i]) - c) / reach;
                monomials(degree, d.real(), d.imag(), row.data());
                A.row(i) = Eigen::Map<const Eigen::RowVectorXd>(row.data(), p);
            }
            // Normal equations on the scaled monomials; the Gram eigenvalues
            // are the squared singular values of A.
            const Eigen::MatrixXd gram = A.transpose() * A;
            const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
            const auto& ev = eig.eigenvalues();
            if (ev(0) <= 1e-12 * ev(p - 1) && attempt < 8) {
                continue;
            }
            if (ev(0) <= 1e-24 * ev(p - 1)) {
                throw MeshError("local fit is singular at vertex " + std::to_string(v));
            }
            // Rows of the pseudo-inverse for monomials 1, dx, dy, dx^2, dx dy, dy^2.
            const Eigen::MatrixXd pinv = eig.eigenvectors().topRows(6) * ev.cwiseInverse().asDiagonal() *
                                         eig.eigenvectors().transpose() * A.transpose();
            const double inv = 1.0 / reach;
            const double factors[6] = {1.0, inv, inv, 2.0 * inv * inv, inv * inv, 2.0 * inv * inv};
            for (int r = 0; r < 6; ++r) {
                for (int i = 0; i < m; ++i) {
                    weights_.push_back(pinv(r, i) * factors[r]);
                }
            }
            nb_index_.insert(nb_index_.end(), nb.begin(), nb.end());
            nb_offset_[v + 1] = static_cast<int>(nb_index_.size());
            break;
        }
    }
}

Jet LocalFitter::jet(std::size_t v, std::span<const double> field) const
{
    const auto nb = neighborhood(v);
    const std::size_t m = nb.size();
    const double* w = weights_.data() + 6 * static_cast<std::size_t>(nb_offset_[v]);
    double out[6] = {0, 0, 0, 0, 0, 0};
    for (int r = 0; r < 6; ++r) {
        double acc = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            acc += w[r * m + i] * field[nb[i]];
        }
        out[r] = acc;
    }
    return Jet{out[0], out[1], out[2], out[3], out[4], out[5]};
}

std::pair<Complex, Complex> LocalFitter::gradient(std::size_t v, std::span<const Complex> field) const
{
    const auto nb = neighborhood(v);
    const std::size_t m = nb.size();
    const double* w = weights_.data() + 6 * static_cast<std::size_t>(nb_offset_[v]);
    Complex fx = 0.0, fy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        fx += w[1 * m + i] * field[nb[i]];
        fy += w[2 * m + i] * field[nb[i]];
    }
    return {fx, fy};
}

std::shared_ptr<const LocalFitter> shared_fitter(const MeshPtr& mesh, FitUse use)
{
    using Entry = std::pair<FitUse, std::shared_ptr<const LocalFitter>>;
    static std::mutex lock;
    static std::list<Entry> cache;
    constexpr std::size_t capacity = 8;
    std::lock_guard guard(lock);
    for (auto it = cache.begin(); it != cache.end(); ++it) {
        if (it->first == use && &it->second->mesh() == mesh.get()) {
            auto hit = *it;
            cache.erase(it);
            cache.push_front(hit);
            return hit.second;
        }
    }
    const double center = (use == FitUse::MapDifferential ? 2.0 : 1.0) * std::sqrt(mesh->h());
    auto fit = std::make_shared<const LocalFitter>(mesh, 4, 3.0, 4.0, center);
    cache.emplace_front(use, fit);
    if (cache.size() > capacity) {
        cache.pop_back();
    }
    return fit;
}

}  // namespace discunif

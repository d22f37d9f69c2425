#include "discunif/qcsolve.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "discunif/parallel.hpp"

namespace discunif
{

namespace
{

constexpr double kPi = std::numbers::pi;
constexpr double kCircleTol = 1e-9;
const Complex kI{0.0, 1.0};
const std::array<Complex, 3> kMarkedTargets{Complex{1.0, 0.0}, Complex{0.0, 1.0}, Complex{-1.0, 0.0}};

double softplus(double s) { return s > 30.0 ? s : std::log1p(std::exp(s)); }
double logistic(double s) { return 1.0 / (1.0 + std::exp(-s)); }
double softplus_inv(double d) { return d > 30.0 ? d : std::log(std::expm1(d)); }

// Monotone piecewise-linear boundary angle function of a map: domain angles
// alpha_k of the boundary loop against image angles theta_k, both unwrapped.
struct BoundaryAngles
{
    std::vector<double> alpha;
    std::vector<double> theta;

    BoundaryAngles(const DiscMesh& mesh, std::span<const Complex> w)
    {
        const auto loop = mesh.boundary();
        const std::size_t n = loop.size();
        alpha.resize(n + 1);
        theta.resize(n + 1);
        for (std::size_t k = 0; k < n; ++k) {
            alpha[k] = std::arg(mesh.vertex(loop[k]));
            theta[k] = std::arg(w[loop[k]]);
            if (k > 0) {
                while (alpha[k] < alpha[k - 1]) {
                    alpha[k] += 2.0 * kPi;
                }
                while (theta[k] < theta[k - 1] - kPi) {
                    theta[k] += 2.0 * kPi;
                }
                while (theta[k] > theta[k - 1] + kPi) {
                    theta[k] -= 2.0 * kPi;
                }
            }
        }
        alpha[n] = alpha[0] + 2.0 * kPi;
        theta[n] = theta[0] + 2.0 * kPi;
    }

    static double lookup(std::span<const double> xs, std::span<const double> ys, double x)
    {
        const double x0 = xs.front();
        double r = std::fmod(x - x0, 2.0 * kPi);
        if (r < 0.0) {
            r += 2.0 * kPi;
        }
        const double xr = x0 + r;
        const auto it = std::upper_bound(xs.begin(), xs.end(), xr);
        std::size_t k = it == xs.begin() ? 0 : static_cast<std::size_t>(it - xs.begin()) - 1;
        k = std::min(k, xs.size() - 2);
        const double span = xs[k + 1] - xs[k];
        const double f = span > 0.0 ? (xr - xs[k]) / span : 0.0;
        return ys[k] + f * (ys[k + 1] - ys[k]);
    }

    bool monotone() const
    {
        for (std::size_t k = 1; k < theta.size(); ++k) {
            if (!(theta[k] > theta[k - 1])) {
                return false;
            }
        }
        return true;
    }

    double forward(double a) const { return lookup(alpha, theta, a); }
    double backward(double t) const { return lookup(theta, alpha, t); }
};

// Snaps exact quarter angles so that 1, i, -1 come out exactly.
Complex on_circle(double angle)
{
    const double q = angle / (0.5 * kPi);
    const double r = std::round(q);
    if (q == r) {
        static const Complex quarter[4] = {{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}, {0.0, -1.0}};
        return quarter[((static_cast<long>(r) % 4) + 4) % 4];
    }
    return std::polar(1.0, angle);
}

double relative_residual(const DiscMesh& mesh, std::span<const Complex> mu_t, const WirtingerDerivatives& d,
                         int* worst = nullptr, double* worst_defect = nullptr)
{
    double num = 0.0, den = 0.0;
    double wd = -1.0;
    int wt = -1;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const double e = std::norm(d.fzbar[t] - mu_t[t] * d.fz[t]);
        num += mesh.area(t) * e;
        den += mesh.area(t) * std::norm(d.fz[t]);
        const double local = std::sqrt(e / std::max(std::norm(d.fz[t]), 1e-300));
        if (local > wd) {
            wd = local;
            wt = static_cast<int>(t);
        }
    }
    if (worst) {
        *worst = wt;
        *worst_defect = wd;
    }
    return den > 0.0 ? std::sqrt(num / den) : INFINITY;
}

std::pair<double, int> min_jacobian(const DiscMesh& mesh, const WirtingerDerivatives& d)
{
    double m = INFINITY;
    int at = -1;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const double j = std::norm(d.fz[t]) - std::norm(d.fzbar[t]);
        if (j < m) {
            m = j;
            at = static_cast<int>(t);
        }
    }
    return {m, at};
}

// Boundary parameterization: three arcs between the marked points, each with
// softplus increments normalized to the arc's angular span.
struct Arcs
{
    struct Arc
    {
        int start_pos = 0;  // loop position of the leading marked point
        int edges = 0;
        double angle0 = 0.0;
        double span = 0.0;
        int param0 = 0;  // index of the first increment parameter
    };
    std::array<Arc, 3> arcs;
    std::vector<int> arc_of;    // per loop position: arc index, -1 at marked points
    std::vector<int> local_of;  // per loop position: offset within its arc
    int params = 0;

    explicit Arcs(const DiscMesh& mesh)
    {
        const int n = static_cast<int>(mesh.boundary().size());
        const auto& mp = mesh.marked_positions();
        const double angle0[3] = {0.0, 0.5 * kPi, kPi};
        const double span[3] = {0.5 * kPi, 0.5 * kPi, kPi};
        arc_of.assign(n, -1);
        local_of.assign(n, 0);
        for (int a = 0; a < 3; ++a) {
            Arc& arc = arcs[a];
            arc.start_pos = mp[a];
            arc.edges = ((mp[(a + 1) % 3] - mp[a]) % n + n) % n;
            arc.angle0 = angle0[a];
            arc.span = span[a];
            arc.param0 = params;
            params += arc.edges;
            for (int k = 1; k < arc.edges; ++k) {
                const int pos = (arc.start_pos + k) % n;
                arc_of[pos] = a;
                local_of[pos] = k;
            }
        }
    }
};

}  // namespace

Complex cayley(Complex z)
{
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
        return {-1.0, 0.0};
    }
    const Complex den = z + kI;
    if (std::abs(den) == 0.0) {
        throw DomainError("cayley transform has a pole at -i");
    }
    return -(z - kI) / den;
}

Complex cayley_inv(Complex z)
{
    const Complex den = 1.0 + z;
    if (std::abs(den) == 0.0) {
        return {INFINITY, 0.0};
    }
    return kI * (1.0 - z) / den;
}

QCMap::QCMap(MeshPtr mesh, ComplexField w, bool normalized)
    : mesh_{std::move(mesh)}, w_{std::move(w)}, normalized_{normalized}
{
    if (w_.size() != mesh_->num_vertices()) {
        throw InvalidArgument("map has " + std::to_string(w_.size()) + " values for " +
                              std::to_string(mesh_->num_vertices()) + " vertices");
    }
    for (std::size_t v = 0; v < w_.size(); ++v) {
        const double r = std::abs(w_[v]);
        if (!std::isfinite(r) || r > 1.0 + kCircleTol) {
            throw InvalidArgument("map value leaves the closed disc at vertex " + std::to_string(v));
        }
        if (mesh_->is_boundary(v) && std::abs(r - 1.0) > kCircleTol) {
            throw InvalidArgument("boundary vertex " + std::to_string(v) + " is not mapped onto the unit circle");
        }
    }
    d_ = wirtinger(*mesh_, w_);
}

QCMap QCMap::identity(MeshPtr mesh)
{
    ComplexField w(mesh->vertices().begin(), mesh->vertices().end());
    return QCMap(std::move(mesh), std::move(w), true);
}

QCMap QCMap::sample(MeshPtr mesh, const AnalyticMap& f)
{
    ComplexField w(mesh->num_vertices());
    for (std::size_t v = 0; v < w.size(); ++v) {
        w[v] = f(mesh->vertex(v));
    }
    bool fixes = true;
    for (int m = 0; m < 3; ++m) {
        fixes = fixes && std::abs(w[mesh->marked()[m]] - kMarkedTargets[m]) <= 1e-12;
    }
    return QCMap(std::move(mesh), std::move(w), fixes);
}

std::array<double, 3> QCMap::marked_errors() const
{
    std::array<double, 3> e{};
    for (int m = 0; m < 3; ++m) {
        e[m] = std::abs(w_[mesh_->marked()[m]] - kMarkedTargets[m]);
    }
    return e;
}

Complex QCMap::at(Complex z, PointLocator& locator) const
{
    if (std::abs(z) >= 1.0 - 1e-12) {
        const BoundaryAngles ba(*mesh_, w_);
        return on_circle(ba.forward(std::arg(z)));
    }
    Complex p = locator.interpolate<Complex>(w_, z);
    if (std::abs(p) > 1.0) {
        p /= std::abs(p);
    }
    return p;
}

BeltramiSolution solve_beltrami(const BeltramiField& mu, const SolverOptions& opts)
{
    const auto clock0 = std::chrono::steady_clock::now();
    if (mu.bound() > opts.c_bound) {
        throw BoundError("max |mu| = " + std::to_string(mu.bound()) + " exceeds the solver bound " +
                         std::to_string(opts.c_bound));
    }
    const MeshPtr& meshp = mu.mesh_ptr();
    const DiscMesh& mesh = *meshp;
    const std::size_t nv = mesh.num_vertices();
    const std::size_t nt = mesh.num_triangles();
    const auto loop = mesh.boundary();
    const int nb = static_cast<int>(loop.size());

    const ComplexField mu_t = average_to_triangles<Complex>(mesh, mu.values());

    // Unknown layout: (Re w, Im w) for interior vertices, then boundary increment parameters.
    std::vector<int> col(nv, -1);
    int ncols = 0;
    for (std::size_t v = 0; v < nv; ++v) {
        if (!mesh.is_boundary(v)) {
            col[v] = ncols;
            ncols += 2;
        }
    }
    const Arcs arcs(mesh);
    const int pcol0 = ncols;
    ncols += arcs.params;

    // State.
    ComplexField w(nv);
    std::vector<double> s(arcs.params, softplus_inv(1.0));
    if (opts.initial) {
        const ComplexField& init = *opts.initial;
        if (init.size() != nv) {
            throw InvalidArgument("initial map has the wrong size");
        }
        const QCMap probe(meshp, init);
        const BoundaryAngles ba(mesh, init);
        for (const auto& arc : arcs.arcs) {
            auto th = [&](int pos) { return ba.theta[pos % nb] + 2.0 * kPi * (pos / nb); };
            const int p0 = arc.start_pos;
            const double scale = arc.edges / (th(p0 + arc.edges) - th(p0));
            for (int j = 0; j < arc.edges; ++j) {
                const double d = (th(p0 + j + 1) - th(p0 + j)) * scale;
                if (!(d > 0.0)) {
                    throw InvalidArgument("initial map is not monotone on the boundary");
                }
                s[arc.param0 + j] = softplus_inv(d);
            }
        }
        for (std::size_t v = 0; v < nv; ++v) {
            if (!mesh.is_boundary(v)) {
                w[v] = init[v];
            }
        }
    } else {
        for (std::size_t v = 0; v < nv; ++v) {
            w[v] = mesh.vertex(v);
        }
    }

    // Boundary angles and their derivatives with respect to the increment parameters.
    std::vector<double> theta(nb);
    auto boundary_from_params = [&](const std::vector<double>& sp, ComplexField& out) {
        for (int a = 0; a < 3; ++a) {
            const auto& arc = arcs.arcs[a];
            double total = 0.0;
            for (int j = 0; j < arc.edges; ++j) {
                total += softplus(sp[arc.param0 + j]);
            }
            double acc = 0.0;
            for (int k = 0; k < arc.edges; ++k) {
                const int pos = (arc.start_pos + k) % nb;
                theta[pos] = k == 0 ? arc.angle0 : arc.angle0 + arc.span * acc / total;
                out[loop[pos]] = k == 0 ? kMarkedTargets[a] : std::polar(1.0, theta[pos]);
                acc += softplus(sp[arc.param0 + k]);
            }
        }
    };
    boundary_from_params(s, w);

    auto objective = [&](const ComplexField& wf) {
        double f = 0.0;
        for (std::size_t t = 0; t < nt; ++t) {
            const auto& tri = mesh.triangle(t);
            const auto& c = mesh.basis_gradients(t);
            Complex r = 0.0;
            for (int i = 0; i < 3; ++i) {
                r += wf[tri[i]] * (c[i] - mu_t[t] * std::conj(c[i]));
            }
            f += mesh.area(t) * std::norm(0.5 * r);
        }
        return f;
    };

    SolverDiagnostics diag;
    auto record = [&](const ComplexField& wf) {
        const auto d = wirtinger(mesh, wf);
        diag.residual = relative_residual(mesh, mu_t, d, &diag.worst_triangle, &diag.worst_defect);
        diag.jacobian_min = min_jacobian(mesh, d).first;
        return diag.residual;
    };
    diag.residual_history.push_back(record(w));

    double F = objective(w);
    double lambda = 1e-8;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    bool analyzed = false;
    std::vector<Eigen::Triplet<double>> trip;
    std::vector<std::pair<int, Complex>> row;  // column, d r / d column (complex)
    Eigen::VectorXd rhs(ncols);

    for (int iter = 0; iter < opts.max_iter && !diag.converged; ++iter) {
        if (diag.residual <= 1e-13) {
            diag.converged = true;
            break;
        }
        // Per boundary position, derivative of theta with respect to its arc parameters.
        std::vector<std::vector<double>> dth(nb);
        for (const auto& arc : arcs.arcs) {
            double total = 0.0;
            for (int j = 0; j < arc.edges; ++j) {
                total += softplus(s[arc.param0 + j]);
            }
            double acc = 0.0;
            for (int k = 1; k < arc.edges; ++k) {
                acc += softplus(s[arc.param0 + k - 1]);
                const int pos = (arc.start_pos + k) % nb;
                auto& dk = dth[pos];
                dk.resize(arc.edges);
                for (int j = 0; j < arc.edges; ++j) {
                    const double ind = j < k ? total : 0.0;
                    dk[j] = arc.span * logistic(s[arc.param0 + j]) * (ind - acc) / (total * total);
                }
            }
        }

        trip.clear();
        rhs.setZero();
        for (std::size_t t = 0; t < nt; ++t) {
            const auto& tri = mesh.triangle(t);
            const auto& c = mesh.basis_gradients(t);
            const double sq = std::sqrt(mesh.area(t));
            Complex r = 0.0;
            row.clear();
            for (int i = 0; i < 3; ++i) {
                const Complex a = 0.5 * sq * (c[i] - mu_t[t] * std::conj(c[i]));
                const int v = tri[i];
                r += a * w[v];
                if (col[v] >= 0) {
                    row.emplace_back(col[v], a);
                    row.emplace_back(col[v] + 1, a * kI);
                } else {
                    const int pos = mesh.boundary_position(v);
                    const int arc_index = arcs.arc_of[pos];
                    if (arc_index < 0) {
                        continue;
                    }
                    const auto& arc = arcs.arcs[arc_index];
                    const Complex dw = a * kI * w[v];
                    for (int j = 0; j < arc.edges; ++j) {
                        row.emplace_back(pcol0 + arc.param0 + j, dw * dth[pos][j]);
                    }
                }
            }
            // Merge duplicate columns (two boundary vertices on the same arc).
            std::sort(row.begin(), row.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
            std::size_t m = 0;
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (m > 0 && row[m - 1].first == row[i].first) {
                    row[m - 1].second += row[i].second;
                } else {
                    row[m++] = row[i];
                }
            }
            row.resize(m);
            for (std::size_t i = 0; i < m; ++i) {
                const Complex ji = row[i].second;
                rhs[row[i].first] -= ji.real() * r.real() + ji.imag() * r.imag();
                for (std::size_t k = i; k < m; ++k) {
                    const Complex jk = row[k].second;
                    const double v = ji.real() * jk.real() + ji.imag() * jk.imag();
                    const int a = row[i].first, b = row[k].first;
                    trip.emplace_back(std::max(a, b), std::min(a, b), v);
                }
            }
        }
        Eigen::SparseMatrix<double> normal(ncols, ncols);
        normal.setFromTriplets(trip.begin(), trip.end());
        Eigen::VectorXd diagonal = normal.diagonal();
        const double dmax = diagonal.maxCoeff();

        bool accepted = false;
        for (int tries = 0; tries < 12 && !accepted; ++tries) {
            Eigen::SparseMatrix<double> damped = normal;
            for (int k = 0; k < ncols; ++k) {
                damped.coeffRef(k, k) += lambda * std::max(diagonal[k], 1e-12 * dmax);
            }
            if (!analyzed) {
                ldlt.analyzePattern(damped.selfadjointView<Eigen::Lower>());
                analyzed = true;
            }
            ldlt.factorize(damped.selfadjointView<Eigen::Lower>());
            if (ldlt.info() != Eigen::Success) {
                lambda *= 10.0;
                continue;
            }
            const Eigen::VectorXd step = ldlt.solve(rhs);
            ComplexField trial = w;
            std::vector<double> trial_s = s;
            double max_step = 0.0;
            for (std::size_t v = 0; v < nv; ++v) {
                if (col[v] >= 0) {
                    const Complex d{step[col[v]], step[col[v] + 1]};
                    trial[v] += d;
                    max_step = std::max(max_step, std::abs(d));
                }
            }
            for (int j = 0; j < arcs.params; ++j) {
                trial_s[j] += step[pcol0 + j];
            }
            const std::vector<double> before = theta;
            boundary_from_params(trial_s, trial);
            for (int pos = 0; pos < nb; ++pos) {
                max_step = std::max(max_step, std::abs(theta[pos] - before[pos]));
            }
            const double F_trial = objective(trial);
            if (F_trial <= F * (1.0 + 1e-12)) {
                accepted = true;
                w = std::move(trial);
                s = std::move(trial_s);
                F = F_trial;
                lambda = std::max(lambda * 0.1, 1e-12);
                diag.step_history.push_back(max_step);
                diag.residual_history.push_back(record(w));
                diag.iterations = iter + 1;
                if (opts.verbosity > 0) {
                    std::fprintf(stderr, "solve_beltrami: iter %d residual %.6e step %.3e lambda %.1e\n", iter + 1,
                                 diag.residual, max_step, lambda);
                }
                if (max_step <= opts.tol) {
                    diag.converged = true;
                }
            } else {
                theta = before;
                lambda *= 10.0;
            }
        }
        if (!accepted) {
            // No decrease possible at any damping: stationary to working precision.
            diag.converged = diag.step_history.empty() ? F <= 1e-20 : true;
            break;
        }
    }
    boundary_from_params(s, w);

    QCMap map(meshp, std::move(w), true);
    diag.marked_errors = map.marked_errors();
    record(ComplexField(map.values().begin(), map.values().end()));
    diag.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock0).count();
    if (!diag.converged) {
        throw SolverError("Beltrami solver did not converge in " + std::to_string(opts.max_iter) + " iterations",
                          std::move(diag));
    }
    if (!(diag.jacobian_min > 0.0)) {
        throw SolverError("Beltrami solution is not orientation preserving (min jacobian " +
                              std::to_string(diag.jacobian_min) + ")",
                          std::move(diag));
    }
    return BeltramiSolution{std::move(map), std::move(diag)};
}

BeltramiField beltrami_of_map(const QCMap& w)
{
    const DiscMesh& mesh = w.mesh();
    ComplexField per_tri(mesh.num_triangles());
    for (std::size_t t = 0; t < per_tri.size(); ++t) {
        const double j = std::norm(w.wz()[t]) - std::norm(w.wzbar()[t]);
        if (!(j > 0.0)) {
            throw JacobianError("map is not orientation preserving", t, j);
        }
        per_tri[t] = w.wzbar()[t] / w.wz()[t];
    }
    return BeltramiField(w.mesh_ptr(), average_to_vertices<Complex>(mesh, per_tri));
}

double jacobian_min(const QCMap& w)
{
    double m = INFINITY;
    for (std::size_t t = 0; t < w.wz().size(); ++t) {
        m = std::min(m, std::norm(w.wz()[t]) - std::norm(w.wzbar()[t]));
    }
    return m;
}

double holomorphy_defect(const QCMap& w)
{
    const DiscMesh& mesh = w.mesh();
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        num += mesh.area(t) * std::norm(w.wzbar()[t]);
        den += mesh.area(t) * std::norm(w.wz()[t]);
    }
    return std::sqrt(num / den);
}

MetricField pullback_metric(const QCMap& w, const MetricField& g)
{
    const DiscMesh& mesh = w.mesh();
    const auto fit = shared_fitter(w.mesh_ptr(), FitUse::MapDifferential);
    std::vector<Sym2> out(mesh.num_vertices());
    parallel_for(out.size(), [&](std::size_t b, std::size_t e) {
        PointLocator locator(g.mesh());
        for (std::size_t v = b; v < e; ++v) {
            const auto [wx, wy] = fit->gradient(v, w.values());
            Complex p = w[v];
            if (std::abs(p) > 1.0) {
                p /= std::abs(p);
            }
            const Sym2 G = g.source() ? g.source()->at(p.real(), p.imag()) : g.at(p, locator);
            const double xy = G.g11 * wx.real() * wy.real() + G.g12 * (wx.real() * wy.imag() + wx.imag() * wy.real()) +
                              G.g22 * wx.imag() * wy.imag();
            out[v] = Sym2{G.quad(wx), xy, G.quad(wy)};
        }
    });
    return MetricField(w.mesh_ptr(), std::move(out));
}

QCMap invert_map(const QCMap& w)
{
    const DiscMesh& mesh = w.mesh();
    const BoundaryAngles ba(mesh, w.values());
    if (!ba.monotone()) {
        throw JacobianError("boundary map is not monotone", 0, jacobian_min(w));
    }
    ComplexField out(mesh.num_vertices());
    parallel_for(out.size(), [&](std::size_t b, std::size_t e) {
        PointLocator locator(mesh, w.values());
        for (std::size_t v = b; v < e; ++v) {
            const Complex z = mesh.vertex(v);
            if (mesh.is_boundary(v)) {
                out[v] = on_circle(ba.backward(std::arg(z)));
                continue;
            }
            const Location loc = locator.locate(z);
            const Triangle& tri = mesh.triangle(loc.triangle);
            Complex p = loc.bary[0] * mesh.vertex(tri[0]) + loc.bary[1] * mesh.vertex(tri[1]) +
                        loc.bary[2] * mesh.vertex(tri[2]);
            if (std::abs(p) > 1.0) {
                p /= std::abs(p);
            }
            out[v] = p;
        }
    });
    return QCMap(w.mesh_ptr(), std::move(out), w.normalized());
}

QCMap compose(const QCMap& w1, const QCMap& w2)
{
    const DiscMesh& mesh = w2.mesh();
    const BoundaryAngles ba(w1.mesh(), w1.values());
    ComplexField out(mesh.num_vertices());
    parallel_for(out.size(), [&](std::size_t b, std::size_t e) {
        PointLocator locator(w1.mesh());
        for (std::size_t v = b; v < e; ++v) {
            const Complex p = w2[v];
            if (mesh.is_boundary(v)) {
                out[v] = on_circle(ba.forward(std::arg(p)));
                continue;
            }
            Complex q = locator.interpolate<Complex>(w1.values(), p);
            if (std::abs(q) > 1.0) {
                q /= std::abs(q);
            }
            out[v] = q;
        }
    });
    return QCMap(w2.mesh_ptr(), std::move(out), w1.normalized() && w2.normalized());
}

}  // namespace discunif

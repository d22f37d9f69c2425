#pragma once

// JSON and CSV documents for meshes, metrics, reports, maps and paths.
// Output is deterministic: fixed field order, numbers printed with %.17g.
//
// Metric documents:
//   {"type": "components", "g11": "<expr>", "g12": "<expr>", "g22": "<expr>"}
//   {"type": "conformal", "u": "<expr>"}
//   {"type": "builtin", "name": "cap", "params": {"t": 0.5}}
//   {"type": "discrete", "values": [[g11, g12, g22], ...]}
// The shorthand builtin:name[:key=value...] stands for the builtin document.

#include <string>
#include <string_view>
#include <vector>

#include "discunif/acceptance.hpp"
#include "discunif/homotopy.hpp"

namespace discunif::io
{

/// %.17g; non-finite values become null.
std::string format_number(double v);

/// Parses a metric document, the builtin shorthand, or @path to a file holding either.
MetricField parse_metric(std::string_view text, MeshPtr mesh);
/// Analytic part only; throws InvalidArgument for discrete documents.
MetricSource parse_metric_source(std::string_view text);
std::string metric_json(const MetricField& g);

/// "64x256" -> (64, 256)
std::pair<int, int> parse_resolution(std::string_view text);
/// "0,0.25,0.5" or a count "5" (uniform grid); sorted, within [0, 1].
std::vector<double> parse_t_grid(std::string_view text);

MeshPtr parse_mesh(std::string_view json);
std::string mesh_json(const DiscMesh& mesh);

std::string report_json(const CurvatureReport& r);
std::string membership_json(const CurvatureSet& set, const Membership& m);
std::string gauss_bonnet_json(const CurvatureReport& r);

std::string beltrami_json(const BeltramiField& mu);
std::string diagnostics_json(const SolverDiagnostics& d);
std::string solution_json(const BeltramiSolution& s);
std::string uniformization_json(const Uniformization& u);

struct RoundTrip
{
    BeltramiField mu;
    double residual = 0.0;
};
/// mu_from_metric followed by metric_from_decomposition.
RoundTrip roundtrip(const MetricField& g);
std::string roundtrip_json(const RoundTrip& r);

struct PathRecord
{
    double t = 0.0;
    MetricField metric;
    Membership membership;
};
/// Metrics along a path and, when a set is given, their margins.
std::string path_json(const std::vector<PathRecord>& path, const CurvatureSet* set);
std::string margins_csv(const std::vector<PathRecord>& path);
/// Coefficients along a class path (appendix contraction).
std::string beltrami_path_json(const std::vector<std::pair<double, BeltramiField>>& path);

std::string acceptance_json(const std::vector<CriterionResult>& results);

/// Error detail for the error stream: {"error": kind, "message": ...}.
std::string error_json(std::string_view kind, std::string_view message);

/// Vertex table x,y,K,|mu| for plotting.
std::string vertex_csv(const MetricField& g, const CurvatureReport& r);
/// Boundary table position,x,y,k.
std::string boundary_csv(const MetricField& g, const CurvatureReport& r);

}  // namespace discunif::io

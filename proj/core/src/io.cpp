#include "discunif/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <optional>
#include <sstream>

#include "discunif/error.hpp"

namespace discunif::io
{

namespace
{

using json = nlohmann::ordered_json;

void dump(const json& j, std::string& out)
{
    switch (j.type()) {
        case json::value_t::object: {
            out += '{';
            bool first = true;
            for (const auto& [key, value] : j.items()) {
                if (!first) {
                    out += ',';
                }
                first = false;
                out += json(key).dump(-1, ' ', false, json::error_handler_t::replace);
                out += ':';
                dump(value, out);
            }
            out += '}';
            break;
        }
        case json::value_t::array: {
            out += '[';
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) {
                    out += ',';
                }
                dump(j[i], out);
            }
            out += ']';
            break;
        }
        case json::value_t::number_float: out += format_number(j.get<double>()); break;
        default: out += j.dump(-1, ' ', false, json::error_handler_t::replace);
    }
}

std::string to_text(const json& j)
{
    std::string out;
    dump(j, out);
    out += '\n';
    return out;
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json complex_array(std::span<const Complex> values)
{
    json a = json::array();
    for (Complex c : values) {
        a.push_back(json::array({number(c.real()), number(c.imag())}));
    }
    return a;
}

json real_array(std::span<const double> values)
{
    json a = json::array();
    for (double v : values) {
        a.push_back(number(v));
    }
    return a;
}

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

double parse_double(std::string_view s, std::string_view what)
{
    const std::string t = trim(s);
    double v = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
        throw InvalidArgument("malformed " + std::string(what) + " '" + std::string(s) + "'");
    }
    return v;
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw InvalidArgument("cannot read '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json parse_json(std::string_view text)
{
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("malformed JSON: ") + e.what());
    }
}

std::string json_string(const json& doc, const char* key)
{
    if (!doc.contains(key) || !doc[key].is_string()) {
        throw InvalidArgument(std::string("metric document needs a string field '") + key + "'");
    }
    return doc[key].get<std::string>();
}

// Builtin shorthand name[:key=value...], also accepting ',' between parameters.
MetricSource parse_shorthand(std::string_view text)
{
    std::vector<std::string> parts;
    std::string cur;
    for (char c : text) {
        if (c == ':' || c == ',') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);
    BuiltinParams params;
    for (std::size_t i = 1; i < parts.size(); ++i) {
        const auto eq = parts[i].find('=');
        if (eq == std::string::npos || eq == 0) {
            throw InvalidArgument("builtin parameter '" + parts[i] + "' is not key=value");
        }
        params[trim(parts[i].substr(0, eq))] = trim(parts[i].substr(eq + 1));
    }
    return builtin_source(trim(parts[0]), params);
}

std::string param_text(const json& v)
{
    if (v.is_string()) {
        return v.get<std::string>();
    }
    if (v.is_number()) {
        return format_number(v.get<double>());
    }
    throw InvalidArgument("builtin parameters must be numbers or strings");
}

// Either an analytic source or discrete values.
struct MetricDoc
{
    std::optional<MetricSource> source;
    std::vector<Sym2> values;
};

MetricDoc parse_doc(std::string_view raw)
{
    std::string text = trim(raw);
    if (!text.empty() && text[0] == '@') {
        text = trim(read_file(text.substr(1)));
    }
    if (text.rfind("builtin:", 0) == 0) {
        return {parse_shorthand(std::string_view(text).substr(8)), {}};
    }
    const json doc = parse_json(text);
    if (!doc.is_object() || !doc.contains("type") || !doc["type"].is_string()) {
        throw InvalidArgument("metric document needs a string field 'type'");
    }
    const std::string type = doc["type"].get<std::string>();
    const std::string tag = doc.contains("tag") && doc["tag"].is_string() ? doc["tag"].get<std::string>() : type;
    if (type == "components") {
        return {MetricSource{ComponentsSource{expr::parse(json_string(doc, "g11")), expr::parse(json_string(doc, "g12")),
                                              expr::parse(json_string(doc, "g22"))},
                             tag},
                {}};
    }
    if (type == "conformal") {
        return {MetricSource{ConformalSource{expr::parse(json_string(doc, "u"))}, tag}, {}};
    }
    if (type == "builtin") {
        BuiltinParams params;
        if (doc.contains("params")) {
            if (!doc["params"].is_object()) {
                throw InvalidArgument("builtin 'params' must be an object");
            }
            for (const auto& [k, v] : doc["params"].items()) {
                params[k] = param_text(v);
            }
        }
        return {builtin_source(json_string(doc, "name"), params), {}};
    }
    if (type == "discrete") {
        if (!doc.contains("values") || !doc["values"].is_array()) {
            throw InvalidArgument("discrete metric needs a 'values' array");
        }
        MetricDoc out;
        for (const json& row : doc["values"]) {
            if (!row.is_array() || row.size() != 3 || !row[0].is_number() || !row[1].is_number() ||
                !row[2].is_number()) {
                throw InvalidArgument("discrete metric values must be [g11, g12, g22] triples");
            }
            out.values.push_back({row[0].get<double>(), row[1].get<double>(), row[2].get<double>()});
        }
        return out;
    }
    throw InvalidArgument("unknown metric type '" + type + "'");
}

json source_doc(const MetricSource& src)
{
    json j;
    if (const auto* conf = std::get_if<ConformalSource>(&src.form)) {
        j["type"] = "conformal";
        j["tag"] = src.tag;
        j["u"] = expr::to_string(conf->u);
    } else {
        const auto& c = std::get<ComponentsSource>(src.form);
        j["type"] = "components";
        j["tag"] = src.tag;
        j["g11"] = expr::to_string(c.g11);
        j["g12"] = expr::to_string(c.g12);
        j["g22"] = expr::to_string(c.g22);
    }
    return j;
}

json metric_doc(const MetricField& g)
{
    if (g.source()) {
        return source_doc(*g.source());
    }
    json values = json::array();
    for (const Sym2& s : g.values()) {
        values.push_back(json::array({number(s.g11), number(s.g12), number(s.g22)}));
    }
    return json{{"type", "discrete"}, {"values", std::move(values)}};
}

json membership_doc(const CurvatureSet& set, const Membership& m)
{
    return json{{"set", set.name()},
                {"member", m.member},
                {"margin", number(m.margin)},
                {"interior_margin", number(m.interior_margin)},
                {"boundary_margin", number(m.boundary_margin)},
                {"tol", number(m.tol)}};
}

json diagnostics_doc(const SolverDiagnostics& d)
{
    return json{{"converged", d.converged},
                {"iterations", d.iterations},
                {"residual", number(d.residual)},
                {"jacobian_min", number(d.jacobian_min)},
                {"worst_triangle", d.worst_triangle},
                {"worst_defect", number(d.worst_defect)},
                {"marked_errors", real_array(d.marked_errors)},
                {"residual_history", real_array(d.residual_history)},
                {"step_history", real_array(d.step_history)}};
}

json gauss_bonnet_doc(const CurvatureReport& r)
{
    return json{{"area_term", number(r.area_term)},
                {"boundary_term", number(r.boundary_term)},
                {"total", number(r.gauss_bonnet_total)},
                {"defect", number(r.gauss_bonnet_total - 2.0 * std::numbers::pi)}};
}

std::string csv_number(double v) { return std::isfinite(v) ? format_number(v) : std::string("nan"); }

}  // namespace

std::string format_number(double v)
{
    if (!std::isfinite(v)) {
        return "null";
    }
    if (v == 0.0) {
        return "0";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

MetricField parse_metric(std::string_view text, MeshPtr mesh)
{
    MetricDoc doc = parse_doc(text);
    if (doc.source) {
        return MetricField(std::move(mesh), std::move(*doc.source));
    }
    if (doc.values.size() != mesh->num_vertices()) {
        throw InvalidArgument("discrete metric has " + std::to_string(doc.values.size()) + " values, the mesh has " +
                              std::to_string(mesh->num_vertices()) + " vertices");
    }
    return MetricField(std::move(mesh), std::move(doc.values));
}

MetricSource parse_metric_source(std::string_view text)
{
    MetricDoc doc = parse_doc(text);
    if (!doc.source) {
        throw InvalidArgument("expected an analytic metric, got discrete values");
    }
    return std::move(*doc.source);
}

std::string metric_json(const MetricField& g) { return to_text(metric_doc(g)); }

std::pair<int, int> parse_resolution(std::string_view text)
{
    const std::string t = trim(text);
    const auto x = t.find_first_of("xX");
    auto to_int = [&](std::string_view s) {
        int v = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size() || v <= 0) {
            throw InvalidArgument("malformed resolution '" + t + "' (expected N or NxM)");
        }
        return v;
    };
    if (x == std::string::npos) {
        const int n = to_int(t);
        return {n, 4 * n};
    }
    return {to_int(std::string_view(t).substr(0, x)), to_int(std::string_view(t).substr(x + 1))};
}

std::vector<double> parse_t_grid(std::string_view text)
{
    const std::string t = trim(text);
    std::vector<double> grid;
    if (t.find_first_of(",.") == std::string::npos && t != "0" && t != "1") {
        const double n = parse_double(t, "t-grid");
        if (n < 2 || n != std::floor(n) || n > 1000) {
            throw InvalidArgument("t-grid count must be an integer between 2 and 1000");
        }
        for (int i = 0; i < n; ++i) {
            grid.push_back(i / (n - 1));
        }
        return grid;
    }
    std::size_t start = 0;
    while (start <= t.size()) {
        const auto comma = t.find(',', start);
        const auto end = comma == std::string::npos ? t.size() : comma;
        grid.push_back(parse_double(std::string_view(t).substr(start, end - start), "t-grid value"));
        start = end + 1;
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] >= 0.0 && grid[i] <= 1.0)) {
            throw InvalidArgument("t-grid values must lie in [0, 1]");
        }
        if (i && grid[i] <= grid[i - 1]) {
            throw InvalidArgument("t-grid must be strictly increasing");
        }
    }
    return grid;
}

MeshPtr parse_mesh(std::string_view text)
{
    const json doc = parse_json(text);
    try {
        std::vector<Complex> vertices;
        for (const json& v : doc.at("vertices")) {
            vertices.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
        }
        std::vector<Triangle> triangles;
        for (const json& t : doc.at("triangles")) {
            triangles.push_back({t.at(0).get<int>(), t.at(1).get<int>(), t.at(2).get<int>()});
        }
        std::vector<int> boundary = doc.at("boundary").get<std::vector<int>>();
        const json& m = doc.at("marked");
        return DiscMesh::from_parts(doc.at("n_r").get<int>(), doc.at("n_th").get<int>(), std::move(vertices),
                                    std::move(triangles), std::move(boundary),
                                    {m.at(0).get<int>(), m.at(1).get<int>(), m.at(2).get<int>()});
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("malformed mesh document: ") + e.what());
    }
}

std::string mesh_json(const DiscMesh& mesh)
{
    json vertices = json::array(), triangles = json::array();
    for (Complex v : mesh.vertices()) {
        vertices.push_back(json::array({number(v.real()), number(v.imag())}));
    }
    for (const Triangle& t : mesh.triangles()) {
        triangles.push_back(json::array({t[0], t[1], t[2]}));
    }
    const auto& m = mesh.marked();
    return to_text(json{{"n_r", mesh.n_r()},
                        {"n_th", mesh.n_th()},
                        {"vertices", std::move(vertices)},
                        {"triangles", std::move(triangles)},
                        {"boundary", std::vector<int>(mesh.boundary().begin(), mesh.boundary().end())},
                        {"marked", json::array({m[0], m[1], m[2]})}});
}

std::string report_json(const CurvatureReport& r)
{
    json margins;
    for (bool boundary : {false, true}) {
        for (Sign s : {Sign::NonNegative, Sign::Positive, Sign::Zero}) {
            CurvatureSet set;
            (boundary ? set.boundary : set.interior) = s;
            margins[set.name()] = number(r.margin(s, boundary));
        }
    }
    return to_text(json{{"h", number(r.h)},
                        {"analytic", r.analytic},
                        {"tolerance", number(curvature_tolerance(r.h))},
                        {"K", {{"min", number(r.min_K)}, {"max", number(r.max_K)}, {"max_abs", number(r.max_abs_K)}}},
                        {"k", {{"min", number(r.min_k)}, {"max", number(r.max_k)}, {"max_abs", number(r.max_abs_k)}}},
                        {"gauss_bonnet", gauss_bonnet_doc(r)},
                        {"margins", std::move(margins)},
                        {"K_values", real_array(r.K)},
                        {"k_values", real_array(r.k)}});
}

std::string membership_json(const CurvatureSet& set, const Membership& m) { return to_text(membership_doc(set, m)); }

std::string gauss_bonnet_json(const CurvatureReport& r)
{
    json j = gauss_bonnet_doc(r);
    j["h"] = number(r.h);
    j["analytic"] = r.analytic;
    return to_text(j);
}

std::string beltrami_json(const BeltramiField& mu)
{
    return to_text(json{{"bound", number(mu.bound())}, {"mu", complex_array(mu.values())}});
}

std::string diagnostics_json(const SolverDiagnostics& d) { return to_text(diagnostics_doc(d)); }

std::string solution_json(const BeltramiSolution& s)
{
    return to_text(json{{"normalized", s.map.normalized()},
                        {"map", complex_array(s.map.values())},
                        {"diagnostics", diagnostics_doc(s.diagnostics)}});
}

std::string uniformization_json(const Uniformization& u)
{
    return to_text(json{{"residual", number(u.residual)},
                        {"phi", complex_array(u.phi.values())},
                        {"v", real_array(u.v.values())},
                        {"u", real_array(u.u.values())},
                        {"diagnostics", diagnostics_doc(u.diagnostics)}});
}

RoundTrip roundtrip(const MetricField& g)
{
    ClassDecomposition d = mu_from_metric(g);
    const MetricField back = metric_from_decomposition(d);
    double residual = 0.0;
    for (std::size_t v = 0; v < g.size(); ++v) {
        residual = std::max(residual, back[v].max_abs_diff(g[v]));
    }
    return {std::move(d.mu), residual};
}

std::string roundtrip_json(const RoundTrip& r)
{
    return to_text(json{{"residual", number(r.residual)},
                        {"bound", number(r.mu.bound())},
                        {"mu", complex_array(r.mu.values())}});
}

std::string path_json(const std::vector<PathRecord>& path, const CurvatureSet* set)
{
    json samples = json::array();
    for (const PathRecord& p : path) {
        json s{{"t", number(p.t)}, {"metric", metric_doc(p.metric)}};
        if (set) {
            s["membership"] = membership_doc(*set, p.membership);
        }
        samples.push_back(std::move(s));
    }
    json j;
    j["set"] = set ? json(set->name()) : json(nullptr);
    j["samples"] = std::move(samples);
    return to_text(j);
}

std::string beltrami_path_json(const std::vector<std::pair<double, BeltramiField>>& path)
{
    json samples = json::array();
    for (const auto& [t, mu] : path) {
        samples.push_back(json{{"t", number(t)}, {"bound", number(mu.bound())}, {"mu", complex_array(mu.values())}});
    }
    return to_text(json{{"samples", std::move(samples)}});
}

std::string margins_csv(const std::vector<PathRecord>& path)
{
    std::string out = "t,member,margin,interior_margin,boundary_margin,tol\n";
    for (const PathRecord& p : path) {
        const Membership& m = p.membership;
        out += csv_number(p.t) + ',' + (m.member ? "1" : "0") + ',' + csv_number(m.margin) + ',' +
               csv_number(m.interior_margin) + ',' + csv_number(m.boundary_margin) + ',' + csv_number(m.tol) + '\n';
    }
    return out;
}

std::string acceptance_json(const std::vector<CriterionResult>& results)
{
    json criteria = json::array();
    bool all = true;
    for (const CriterionResult& r : results) {
        all = all && r.passed;
        criteria.push_back(json{{"id", r.id}, {"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
    }
    return to_text(json{{"passed", all}, {"criteria", std::move(criteria)}});
}

std::string error_json(std::string_view kind, std::string_view message)
{
    return to_text(json{{"error", std::string(kind)}, {"message", std::string(message)}});
}

std::string vertex_csv(const MetricField& g, const CurvatureReport& r)
{
    const BeltramiField mu = project(g);
    std::string out = "x,y,K,abs_mu\n";
    for (std::size_t v = 0; v < g.size(); ++v) {
        const Complex z = g.mesh().vertex(v);
        out += csv_number(z.real()) + ',' + csv_number(z.imag()) + ',' + csv_number(r.K[v]) + ',' +
               csv_number(std::abs(mu[v])) + '\n';
    }
    return out;
}

std::string boundary_csv(const MetricField& g, const CurvatureReport& r)
{
    std::string out = "position,x,y,k\n";
    const auto loop = g.mesh().boundary();
    for (std::size_t i = 0; i < loop.size(); ++i) {
        const Complex z = g.mesh().vertex(loop[i]);
        out += std::to_string(i) + ',' + csv_number(z.real()) + ',' + csv_number(z.imag()) + ',' + csv_number(r.k[i]) +
               '\n';
    }
    return out;
}

}  // namespace discunif::io

// discunif: command-line front end of the disc uniformization toolkit.
//
//   discunif curvature --metric builtin:cap:t=0.5 --res 64x256
//   discunif member --metric '{"type":"conformal","u":"log(2/(1+x^2+y^2))"}' --set 'II∩III∂'
//   discunif contract --metric builtin:pullback:a=0.8:beta=0.1:cap=0.25 --set 'II∩II∂' --t-grid 5
//
// Exit status: 0 on success, 1 on invalid input, 2 when the solver fails.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "discunif/acceptance.hpp"
#include "discunif/error.hpp"
#include "discunif/homotopy.hpp"
#include "discunif/io.hpp"

using namespace discunif;

namespace
{

struct Job
{
    std::string metric = "builtin:flat";
    std::string res = "32x128";
    double tol = SolverOptions{}.tol;
    int max_iter = SolverOptions{}.max_iter;
    int verbosity = 0;
    std::string set;
    std::string t_grid = "5";
    std::string gd;
    std::string out;
    std::string format = "json";
    int n = 2;
};

struct Context
{
    MeshPtr mesh;
    SolverOptions opts;
};

Context context(const Job& job)
{
    const auto [n_r, n_th] = io::parse_resolution(job.res);
    SolverOptions opts;
    opts.tol = job.tol;
    opts.max_iter = job.max_iter;
    opts.verbosity = job.verbosity;
    return {DiscMesh::build(n_r, n_th), opts};
}

void emit(const Job& job, const std::string& text)
{
    if (job.out.empty()) {
        std::fwrite(text.data(), 1, text.size(), stdout);
        return;
    }
    std::ofstream f(job.out, std::ios::binary);
    if (!f) {
        throw InvalidArgument("cannot write '" + job.out + "'");
    }
    f << text;
}

void require_json(const Job& job, const char* command)
{
    if (job.format != "json") {
        throw InvalidArgument(std::string(command) + " only supports --format json");
    }
}

std::optional<CurvatureSet> optional_set(const Job& job)
{
    if (job.set.empty()) {
        return std::nullopt;
    }
    return CurvatureSet::parse(job.set);
}

MetricField reference_metric(const Job& job, const Context& ctx, const std::optional<CurvatureSet>& set)
{
    if (!job.gd.empty()) {
        return io::parse_metric(job.gd, ctx.mesh);
    }
    return MetricField(ctx.mesh, set ? default_target(*set) : default_target(CurvatureSet::parse("II∩II∂")));
}

int run_curvature(const Job& job)
{
    const Context ctx = context(job);
    const MetricField g = io::parse_metric(job.metric, ctx.mesh);
    const CurvatureReport r = curvature_report(g);
    if (job.format == "csv") {
        emit(job, io::vertex_csv(g, r));
        if (!job.out.empty()) {
            Job b = job;
            b.out = job.out + ".boundary.csv";
            emit(b, io::boundary_csv(g, r));
        }
    } else {
        require_json(job, "curvature");
        emit(job, io::report_json(r));
    }
    return 0;
}

int run_gauss_bonnet(const Job& job)
{
    require_json(job, "gauss-bonnet");
    const Context ctx = context(job);
    emit(job, io::gauss_bonnet_json(curvature_report(io::parse_metric(job.metric, ctx.mesh))));
    return 0;
}

int run_member(const Job& job)
{
    require_json(job, "member");
    if (job.set.empty()) {
        throw InvalidArgument("member needs --set");
    }
    const Context ctx = context(job);
    const CurvatureSet set = CurvatureSet::parse(job.set);
    emit(job, io::membership_json(set, membership(io::parse_metric(job.metric, ctx.mesh), set)));
    return 0;
}

int run_roundtrip(const Job& job)
{
    require_json(job, "roundtrip");
    const Context ctx = context(job);
    emit(job, io::roundtrip_json(io::roundtrip(io::parse_metric(job.metric, ctx.mesh))));
    return 0;
}

int run_solve(const Job& job)
{
    require_json(job, "solve");
    const Context ctx = context(job);
    emit(job, io::solution_json(solve_beltrami(project(io::parse_metric(job.metric, ctx.mesh)), ctx.opts)));
    return 0;
}

int run_uniformize(const Job& job)
{
    require_json(job, "uniformize");
    const Context ctx = context(job);
    emit(job, io::uniformization_json(uniformize(io::parse_metric(job.metric, ctx.mesh), ctx.opts)));
    return 0;
}

template <class Path>
int run_path(const Job& job, const Path& path, const std::optional<CurvatureSet>& set)
{
    std::vector<io::PathRecord> records;
    for (double t : io::parse_t_grid(job.t_grid)) {
        MetricField m = path.at(t);
        const Membership mem = set ? membership(m, *set) : Membership{};
        records.push_back({t, std::move(m), mem});
    }
    if (job.format == "csv") {
        if (!set) {
            throw InvalidArgument("--format csv writes the margins table and needs --set");
        }
        emit(job, io::margins_csv(records));
    } else {
        require_json(job, "path commands");
        emit(job, io::path_json(records, set ? &*set : nullptr));
    }
    return 0;
}

int run_contract(const Job& job)
{
    const Context ctx = context(job);
    const auto set = optional_set(job);
    const MetricField g = io::parse_metric(job.metric, ctx.mesh);
    return run_path(job, ContractionPath(g, reference_metric(job, ctx, set), ctx.opts), set);
}

int run_retract(const Job& job)
{
    const Context ctx = context(job);
    const auto set = optional_set(job);
    const MetricField g = io::parse_metric(job.metric, ctx.mesh);
    return run_path(job, Retraction(g, reference_metric(job, ctx, set), ctx.opts), set);
}

int run_appendix(const Job& job)
{
    require_json(job, "appendix-contract");
    const Context ctx = context(job);
    const MetricField g = io::parse_metric(job.metric, ctx.mesh);
    const MetricField g0 =
        job.gd.empty() ? builtin_metric("flat", {}, ctx.mesh) : io::parse_metric(job.gd, ctx.mesh);
    std::vector<std::pair<double, BeltramiField>> path;
    for (double t : io::parse_t_grid(job.t_grid)) {
        path.emplace_back(t, appendix_contraction(t, g, g0, job.n));
    }
    emit(job, io::beltrami_path_json(path));
    return 0;
}

int run_selftest(const Job& job)
{
    AcceptanceOptions opts;
    opts.base_rings = io::parse_resolution(job.res).first;
    const bool table = job.format != "json";
    const auto results = run_acceptance(opts, [&](const CriterionResult& r) {
        if (table) {
            std::printf("%s\n", format_result(r).c_str());
            std::fflush(stdout);
        }
    });
    bool all = true;
    for (const auto& r : results) {
        all = all && r.passed;
    }
    if (!table) {
        emit(job, io::acceptance_json(results));
    } else {
        std::printf("%s: %d criteria at %d rings\n", all ? "PASS" : "FAIL", kCriterionCount, opts.base_rings);
    }
    return all ? 0 : 1;
}

int fail(int code, std::string_view kind, std::string_view message)
{
    const std::string text = io::error_json(kind, message);
    std::fwrite(text.data(), 1, text.size(), stderr);
    return code;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Numerical uniformization, curvature classes and contractions of disc metrics"};
    app.require_subcommand(1);
    Job job;

    auto metric_opts = [&](CLI::App* sub, bool solver) {
        sub->add_option("--metric", job.metric, "metric document, builtin:name[:key=value...] or @file")
            ->capture_default_str();
        sub->add_option("--res", job.res, "mesh resolution n_r x n_th")->capture_default_str();
        sub->add_option("--out", job.out, "output file (default stdout)");
        sub->add_option("--format", job.format, "json or csv")
            ->capture_default_str()
            ->check(CLI::IsMember({"json", "csv"}));
        if (solver) {
            sub->add_option("--tol", job.tol, "solver step tolerance")->capture_default_str();
            sub->add_option("--max-iter", job.max_iter, "solver iteration cap")->capture_default_str();
            sub->add_option("--verbosity", job.verbosity, "solver progress on stderr (0-2)");
        }
    };
    auto path_opts = [&](CLI::App* sub) {
        sub->add_option("--set", job.set, "curvature set for the margins table, e.g. II∩II∂");
        sub->add_option("--t-grid", job.t_grid, "comma-separated t values or a sample count")->capture_default_str();
        sub->add_option("--gd", job.gd, "reference metric g_D (default chosen from --set)");
    };

    struct Command
    {
        const char* name;
        const char* help;
        int (*run)(const Job&);
    };
    const Command commands[] = {
        {"curvature", "Gauss and geodesic curvature report", run_curvature},
        {"gauss-bonnet", "Gauss-Bonnet total", run_gauss_bonnet},
        {"member", "membership margins for a curvature set", run_member},
        {"roundtrip", "metric -> (rho, mu) -> metric", run_roundtrip},
        {"solve", "normalized Beltrami solution for the class of a metric", run_solve},
        {"uniformize", "g = phi^*(e^{2u} g0)", run_uniformize},
        {"contract", "full contraction path towards g_D", run_contract},
        {"retract", "retraction H(t, g) onto sigma(classes)", run_retract},
        {"appendix-contract", "class contraction of the appendix", run_appendix},
        {"selftest", "acceptance suite at reduced resolution", run_selftest},
    };
    int (*selected)(const Job&) = nullptr;
    for (const Command& c : commands) {
        CLI::App* sub = app.add_subcommand(c.name, c.help);
        const std::string name = c.name;
        if (name == "selftest") {
            job.res = "16";
            sub->add_option("--res", job.res, "base ring count of the suite")->capture_default_str();
            sub->add_option("--out", job.out, "output file for --format json");
            sub->add_option("--format", job.format, "table or json")
                ->capture_default_str()
                ->check(CLI::IsMember({"json", "table"}));
            job.format = "table";
        } else {
            const bool solver = name != "curvature" && name != "gauss-bonnet" && name != "member" &&
                                name != "roundtrip" && name != "appendix-contract";
            metric_opts(sub, solver);
            if (name == "member") {
                sub->add_option("--set", job.set, "curvature set, e.g. II∩III∂")->required();
            }
            if (name == "contract" || name == "retract") {
                path_opts(sub);
            }
            if (name == "appendix-contract") {
                sub->add_option("--t-grid", job.t_grid, "comma-separated t values or a sample count")
                    ->capture_default_str();
                sub->add_option("--gd", job.gd, "reference metric g0 (default flat)");
                sub->add_option("--n", job.n, "dimension in the volume ratio")->capture_default_str();
            }
        }
        sub->callback([&selected, run = c.run] { selected = run; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }
    // selftest keeps its own defaults; other commands default to json output.
    if (job.format == "table" && selected != run_selftest) {
        job.format = "json";
    }

    try {
        return selected(job);
    } catch (const SolverError& e) {
        return fail(2, "solver", e.what());
    } catch (const ParseError& e) {
        return fail(1, "parse", e.what());
    } catch (const Error& e) {
        return fail(1, "validation", e.what());
    } catch (const std::exception& e) {
        return fail(1, "internal", e.what());
    }
}

#include <benchmark/benchmark.h>

#include <cmath>

#include "discunif/curvature.hpp"
#include "discunif/qcsolve.hpp"

using namespace discunif;

namespace
{

BeltramiField radial_mu(const MeshPtr& m, double a)
{
    ComplexField mu(m->num_vertices());
    for (std::size_t v = 0; v < mu.size(); ++v) {
        const Complex z = m->vertex(v);
        mu[v] = (1 - a) * z * z / (a + 2 * (1 - a) * std::norm(z));
    }
    return BeltramiField(m, std::move(mu));
}

void BM_MeshBuild(benchmark::State& state)
{
    const int n = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(DiscMesh::build(n, 4 * n));
    }
}
BENCHMARK(BM_MeshBuild)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_FitterSetup(benchmark::State& state)
{
    const int n = static_cast<int>(state.range(0));
    const MeshPtr m = DiscMesh::build(n, 4 * n);
    for (auto _ : state) {
        LocalFitter fit(m, 4, 3.0, 4.0, std::sqrt(m->h()));
        benchmark::DoNotOptimize(fit.neighborhood(0).size());
    }
}
BENCHMARK(BM_FitterSetup)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_CurvatureAnalytic(benchmark::State& state)
{
    const int n = static_cast<int>(state.range(0));
    const MeshPtr m = DiscMesh::build(n, 4 * n);
    const MetricField g = builtin_metric("pullback", {{"a", "0.8"}, {"beta", "0.1"}, {"cap", "0.5"}}, m);
    for (auto _ : state) {
        benchmark::DoNotOptimize(curvature_report(g).gauss_bonnet_total);
    }
}
BENCHMARK(BM_CurvatureAnalytic)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_CurvatureDiscrete(benchmark::State& state)
{
    const int n = static_cast<int>(state.range(0));
    const MeshPtr m = DiscMesh::build(n, 4 * n);
    const MetricField g = builtin_metric("cap", {{"t", "0.5"}}, m).discrete();
    shared_fitter(m);
    for (auto _ : state) {
        benchmark::DoNotOptimize(curvature_report(g).gauss_bonnet_total);
    }
}
BENCHMARK(BM_CurvatureDiscrete)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_SolveRadial(benchmark::State& state)
{
    const int n = static_cast<int>(state.range(0));
    const MeshPtr m = DiscMesh::build(n, 4 * n);
    const BeltramiField mu = radial_mu(m, 0.7);
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_beltrami(mu).diagnostics.iterations);
    }
}
BENCHMARK(BM_SolveRadial)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond)->Iterations(2);

}  // namespace
BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include <cmath>

#include "qvdp/chimera.hpp"
#include "qvdp/lindblad.hpp"
#include "qvdp/phasespace.hpp"
#include "qvdp/semiclassical.hpp"

using namespace qvdp;

namespace {

SystemSpec pair_spec(int n_max)
{
    SystemSpec s;
    s.topology = Topology::conjugate_pair;
    s.epsilon = 1.99;
    s.cutoff = FockCutoff(n_max);
    return s;
}

void BM_BuildLiouvillian(benchmark::State& state)
{
    const SystemSpec s = pair_spec(static_cast<int>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(build_liouvillian(s));
}
BENCHMARK(BM_BuildLiouvillian)->Arg(8)->Arg(12)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_SteadyState(benchmark::State& state)
{
    const Liouvillian l = build_liouvillian(pair_spec(static_cast<int>(state.range(0))));
    for (auto _ : state)
        benchmark::DoNotOptimize(steady_state(l));
}
BENCHMARK(BM_SteadyState)->Arg(8)->Arg(12)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_WignerGrid(benchmark::State& state)
{
    const FockCutoff c(16);
    const DensityMatrix rho = DensityMatrix::pure(coherent_ket({1.0, 0.5}, c), {c.dim()});
    PhaseGrid g;
    g.nx = g.ny = static_cast<int>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(wigner(rho, g));
}
BENCHMARK(BM_WignerGrid)->Arg(81)->Arg(161)->Unit(benchmark::kMillisecond);

void BM_EulerMaruyama(benchmark::State& state)
{
    const SystemSpec s = pair_spec(16);
    const auto n = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        const SdeState end = em_run({0.1, 0.2, -0.1, 0.3}, s, 1e-3, n, 1, EmOptions{}, [](std::size_t, const SdeState&) {});
        benchmark::DoNotOptimize(end);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(BM_EulerMaruyama)->Arg(100000);

void BM_ChimeraStep(benchmark::State& state)
{
    RingSpec r;
    const MeanFieldState s0 = init_chimera(r, 21, std::sqrt(2.5), 1);
    for (auto _ : state)
        benchmark::DoNotOptimize(mean_field_step(s0, r, 1e-3));
}
BENCHMARK(BM_ChimeraStep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

#include "stflow/drift.hpp"
#include "stflow/heat_kernel.hpp"
#include "stflow/moduli.hpp"
#include "stflow/pde.hpp"
#include "stflow/sde_flow.hpp"
#include "stflow/transport.hpp"

#include <benchmark/benchmark.h>

#include <cmath>

using namespace stflow;

static void BM_HeatConvolve1D(benchmark::State& state) {
    const Grid g(1, 4.0, static_cast<int>(state.range(0)));
    std::vector<double> f(g.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::sin(g.coord(static_cast<int>(i)));
    for (auto _ : state) benchmark::DoNotOptimize(convolve(g, f, 0.01));
    state.SetItemsProcessed(state.iterations() * static_cast<long long>(g.size()));
}
BENCHMARK(BM_HeatConvolve1D)->Arg(256)->Arg(1024)->Arg(4096);

static void BM_HeatConvolve2D(benchmark::State& state) {
    const Grid g(2, 4.0, static_cast<int>(state.range(0)));
    std::vector<double> f(g.size(), 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(convolve(g, f, 0.05));
}
BENCHMARK(BM_HeatConvolve2D)->Arg(64)->Arg(128);

static void BM_SolveMild(benchmark::State& state) {
    const Grid g(1, M_PI, static_cast<int>(state.range(0)), true);
    const TimeGrid t(0.0, 1.0, 64);
    const GridFunction f = sample(g, t, 1, [](double, const Vec& x) { return Vec::Constant(1, std::sin(x(0))); });
    const GridFunction b = sample_drift(drifts::sine(1), g, t);
    for (auto _ : state) benchmark::DoNotOptimize(solve_mild(f, b).iterations);
}
BENCHMARK(BM_SolveMild)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_Resolvent(benchmark::State& state) {
    const Grid g(1, M_PI, 128, true);
    const TimeGrid t(0.0, 1.0, 64);
    const GridFunction b = sample_drift(drifts::sine(1), g, t);
    for (auto _ : state) benchmark::DoNotOptimize(solve_resolvent(b, static_cast<double>(state.range(0))).grad_sup);
}
BENCHMARK(BM_Resolvent)->Arg(4)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_SimulateFlow(benchmark::State& state) {
    FlowOptions o;
    o.M = static_cast<int>(state.range(0));
    o.dt = 1.0 / 256;
    const DriftSpec b = drifts::tanh(2);
    for (auto _ : state) benchmark::DoNotOptimize(simulate_flow(b, {Vec::Zero(2)}, o).X.data());
    state.SetItemsProcessed(state.iterations() * state.range(0) * 256);
}
BENCHMARK(BM_SimulateFlow)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_MollifiedDriftEval(benchmark::State& state) {
    const DriftSpec b = mollify_drift(drifts::holder(static_cast<int>(state.range(0)), 0.5), 16.0);
    const Vec x = Vec::Constant(static_cast<int>(state.range(0)), 0.3);
    for (auto _ : state) benchmark::DoNotOptimize(b(0.0, x));
}
BENCHMARK(BM_MollifiedDriftEval)->Arg(1)->Arg(2)->Arg(3);

static void BM_DerivativeFlow(benchmark::State& state) {
    FlowOptions o;
    o.M = 200;
    const DriftSpec b = drifts::sine(2);
    FlowEnsemble ens = simulate_flow(b, {Vec::Zero(2)}, o);
    for (auto _ : state) {
        derivative_flow(b, ens);
        benchmark::DoNotOptimize(ens.xi.data());
    }
}
BENCHMARK(BM_DerivativeFlow)->Unit(benchmark::kMillisecond);

static void BM_TransportPath(benchmark::State& state) {
    FlowOptions o;
    o.M = 1;
    o.dt = 1.0 / 64;
    const TransportSolution sol =
        solve_transport(drifts::sine(1), [](const Vec& x) { return std::sin(x(0)); }, Grid(1, 2.0, 65), o, false);
    for (auto _ : state) benchmark::DoNotOptimize(sol.path_values(0));
}
BENCHMARK(BM_TransportPath)->Unit(benchmark::kMillisecond);

static void BM_DiniIntegral(benchmark::State& state) {
    const Modulus m = Modulus::power_log(1.0, 0.5, 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(dini_integral(m, 0.0, 0.5));
}
BENCHMARK(BM_DiniIntegral);

static void BM_MaxRegularity(benchmark::State& state) {
    const Modulus m = Modulus::inverse_log(1.0, 2.0);
    for (auto _ : state) benchmark::DoNotOptimize(verify_max_regularity(m).holds);
}
BENCHMARK(BM_MaxRegularity)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

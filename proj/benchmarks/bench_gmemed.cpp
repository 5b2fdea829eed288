// bench_gmemed.cpp — timings for the FMO workload.
#include <benchmark/benchmark.h>

#include "gmemed/heom.hpp"
#include "gmemed/kernels.hpp"
#include "gmemed/lineshape.hpp"
#include "gmemed/propagators.hpp"

namespace {

using namespace gmemed;

SystemSpec fmo4() {
    SystemSpec s;
    ModuleSpec a;
    a.label = "1";
    a.site_energies = Eigen::Vector2d(12400.0, 12520.0);
    a.intra_couplings = Eigen::Matrix2d{{0.0, -87.0}, {-87.0, 0.0}};
    ModuleSpec b;
    b.label = "2";
    b.site_energies = Eigen::Vector2d(12200.0, 12310.0);
    b.intra_couplings = Eigen::Matrix2d{{0.0, -53.0}, {-53.0, 0.0}};
    s.modules = {a, b};
    s.inter_couplings = {{{0, 0}, {1, 0}, 5.0}, {{0, 0}, {1, 1}, -5.0}, {{0, 1}, {1, 0}, 30.0}, {{0, 1}, {1, 1}, 8.0}};
    s.bath = {35.0, 106.0, 300.0};
    return s;
}

KernelTable fmo_kernels(const UniformGrid& grid) {
    const SystemSpec s = fmo4();
    return kernel_med1(build_exciton_basis(s), DrudeLineshape::from_bath(s.bath), grid);
}

void lineshape_grid(benchmark::State& state) {
    const DrudeLineshape g = DrudeLineshape::from_bath(fmo4().bath);
    const UniformGrid grid = UniformGrid::from_horizon(2.0, 1e-3);
    for (auto _ : state) benchmark::DoNotOptimize(g.evaluate(grid));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(grid.count));
}
BENCHMARK(lineshape_grid)->Unit(benchmark::kMicrosecond);

void kernel_fmo(benchmark::State& state) {
    const UniformGrid grid = UniformGrid::from_horizon(2.0, 1e-3);
    for (auto _ : state) benchmark::DoNotOptimize(fmo_kernels(grid));
}
BENCHMARK(kernel_fmo)->Unit(benchmark::kMillisecond);

void time_local(benchmark::State& state) {
    const UniformGrid grid = UniformGrid::from_horizon(2.0, 1e-3);
    const KernelTable table = fmo_kernels(grid);
    const Eigen::Vector2d p0(1.0, 0.0);
    for (auto _ : state) benchmark::DoNotOptimize(propagate_time_local(table, p0, grid));
}
BENCHMARK(time_local)->Unit(benchmark::kMillisecond);

void convolution(benchmark::State& state) {
    const UniformGrid grid = UniformGrid::from_horizon(static_cast<double>(state.range(0)) * 1e-3, 1e-3);
    const KernelTable table = fmo_kernels(grid);
    const Eigen::Vector2d p0(1.0, 0.0);
    for (auto _ : state) benchmark::DoNotOptimize(propagate_convolution(table, p0, grid));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(convolution)->RangeMultiplier(2)->Range(250, 2000)->Complexity(benchmark::oNSquared)->Unit(benchmark::kMillisecond);

void heom_short(benchmark::State& state) {
    const SystemSpec s = fmo4();
    HeomConfig config;
    config.depth = static_cast<int>(state.range(0));
    config.matsubara = 0;
    config.horizon = 0.1;
    for (auto _ : state) benchmark::DoNotOptimize(heom_propagate(s, config, {0, 0}));
    state.counters["ados"] = static_cast<double>(heom_ado_count(4, config.depth, config.matsubara));
}
BENCHMARK(heom_short)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();

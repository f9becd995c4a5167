#include <benchmark/benchmark.h>

#include <cmath>

#include "bubblelab/point4.hpp"
#include "bubblelab/radial_engine.hpp"

using namespace bubblelab;

static void BM_ShootBubble(benchmark::State& state) {
    const double tol = std::pow(10.0, -static_cast<double>(state.range(0)));
    for (auto _ : state) {
        auto sol = shoot(constants::beta_star, 1e4, tol);
        benchmark::DoNotOptimize(sol.r_max());
    }
}
BENCHMARK(BM_ShootBubble)->Arg(6)->Arg(8)->Arg(10)->Unit(benchmark::kMillisecond);

static void BM_EnergyTotal(benchmark::State& state) {
    const auto sol = shoot(2.0 * constants::beta_star, 1e4, 1e-10);
    for (auto _ : state) benchmark::DoNotOptimize(energy_total(sol).value);
}
BENCHMARK(BM_EnergyTotal)->Unit(benchmark::kMicrosecond);

static void BM_FindBeta(benchmark::State& state) {
    for (auto _ : state)
        benchmark::DoNotOptimize(find_beta_for_energy(8.0 * constants::pi2, 0.85, 1.2, 1e-8));
}
BENCHMARK(BM_FindBeta)->Unit(benchmark::kMillisecond)->Iterations(1);

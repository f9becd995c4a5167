#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "bubblelab/bubble_detector.hpp"
#include "bubblelab/green_ball.hpp"
#include "bubblelab/quantizer.hpp"

using namespace bubblelab;

static void BM_MassBubble(benchmark::State& state) {
    const auto f = gen_fk(1e-3, 4.0);
    MassOptions opts;
    opts.shells.strata = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(mass(f, Ball{Point4{}, 1.0}, nullptr, opts).value);
}
BENCHMARK(BM_MassBubble)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

static FieldOracle three_bubbles() {
    const std::vector<Point4> c{Point4{}, Point4::axis(0, 1e-3), Point4::axis(1, 0.1)};
    const std::vector<double> mu{1e-6, 1e-6, 1e-6};
    return gen_multibubble(c, mu, 1.0, LaplacianMode::Analytic);
}

static void BM_FindPeaks(benchmark::State& state) {
    const auto f = three_bubbles();
    for (auto _ : state) benchmark::DoNotOptimize(find_peaks(f).points.size());
}
BENCHMARK(BM_FindPeaks)->Unit(benchmark::kMillisecond);

static void BM_Quantize(benchmark::State& state) {
    std::vector<FieldOracle> fam;
    for (int k = 0; k <= 10; ++k) fam.push_back(gen_fk(std::pow(0.5, k), 4.0).with_family_index(k));
    for (auto _ : state) benchmark::DoNotOptimize(quantize(fam, Annulus{Point4{}, 1.0, 2.0}).total_verdict());
}
BENCHMARK(BM_Quantize)->Unit(benchmark::kMillisecond)->Iterations(1);

static void BM_GreenNavier(benchmark::State& state) {
    const BallSpec ball(Point4{}, 1.0);
    const Point4 x(0.2, 0.1, 0.0, 0.0), y(-0.3, 0.0, 0.2, 0.1);
    for (auto _ : state) benchmark::DoNotOptimize(green_navier(x, y, ball).value);
}
BENCHMARK(BM_GreenNavier)->Unit(benchmark::kMillisecond);

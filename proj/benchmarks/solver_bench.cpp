#include <benchmark/benchmark.h>

#include "pointscat/goursat.hpp"
#include "pointscat/point_source.hpp"

using namespace pointscat;

namespace {

// constant q, g = 1 on the spherical fast path; range(0) = radial shells (time steps = 2x)
void BM_GoursatSpherical(benchmark::State& state) {
    GoursatOptions o;
    o.symmetry = FieldSymmetry::spherical;
    o.grid.radial = static_cast<int>(state.range(0));
    o.grid.time = 2 * o.grid.radial;
    const ConeTrace g{{0, 0, 0}, [](const Vec3&) { return 1.0; }};
    for (auto _ : state) {
        auto sol = goursat_solve([](const Vec3&) { return 0.5; }, 0.5, g, o);
        benchmark::DoNotOptimize(sol.u.values().data());
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_GoursatSpherical)->RangeMultiplier(2)->Range(12, 96)->Unit(benchmark::kMillisecond)->Complexity();

// radial bump seen from the boundary on a reduced grid; range(0) = threads
void BM_PointSourceAxial(benchmark::State& state) {
    PotentialSpec spec;
    spec.width = 0.6;
    spec.margin_h = 0.3;
    const Potential q = Potential::from_spec(spec);
    PointSourceOptions o;
    o.grid.radial = 24;
    o.grid.time = 48;
    o.grid.polar = 16;
    o.grid.azimuth = 32;
    o.quadrature.polar = 16;
    o.quadrature.azimuth = 32;
    o.quadrature.radial_panels = 12;
    o.threads = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(solve_point_source(q, Vec3{0, 0, 1}, o).backscatter(0.7));
}
BENCHMARK(BM_PointSourceAxial)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();

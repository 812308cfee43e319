#include <benchmark/benchmark.h>

#include "convexlab/consistency.hpp"
#include "convexlab/constraints.hpp"
#include "convexlab/fem.hpp"
#include "convexlab/qp.hpp"

using namespace convexlab;

static void BM_AssembleStiffness(benchmark::State& state) {
  const Mesh mesh = build_structured_mesh(MeshKind::Mesh1, static_cast<int>(state.range(0)));
  const int degree = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(assemble_stiffness(mesh, degree));
}
BENCHMARK(BM_AssembleStiffness)->ArgsProduct({{16, 32, 64, 128}, {1, 2}})->Unit(benchmark::kMicrosecond);

static void BM_ConformalConstraints(benchmark::State& state) {
  const Mesh mesh = build_structured_mesh(MeshKind::Mesh3, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(conformal_convexity_constraints(mesh));
}
BENCHMARK(BM_ConformalConstraints)->RangeMultiplier(2)->Range(16, 128)->Unit(benchmark::kMicrosecond);

static void BM_ConvexL2Distance(benchmark::State& state) {
  const Rect domain{1.0, 1.0, 2.0, 2.0};
  const Mesh mesh = build_structured_mesh(MeshKind::Mesh1, static_cast<int>(state.range(0)), domain);
  const AdversarialQuadratic target = lemma2_matrix(Point(-1, 0), Point(0, 1), 1.0, Point(1, 1));
  for (auto _ : state) benchmark::DoNotOptimize(min_l2_distance_convex(mesh, target.field()));
}
BENCHMARK(BM_ConvexL2Distance)->RangeMultiplier(2)->Range(4, 32)->Unit(benchmark::kMillisecond);

// threads = 0 uses the default cap.
static void BM_ConsistencySuite(benchmark::State& state) {
  const auto functions = standard_test_functions();
  const auto threads = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_suite(tabulated_cases(), functions, {}, {}, threads));
}
BENCHMARK(BM_ConsistencySuite)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_MAIN();

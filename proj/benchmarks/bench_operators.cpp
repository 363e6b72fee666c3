#include <benchmark/benchmark.h>

#include "sirtnet/dataio.hpp"
#include "sirtnet/geometry.hpp"
#include "sirtnet/solvers.hpp"

using namespace sirtnet;

namespace {

Image phantom(std::size_t n) { return generate_phantoms({}, 1, n, 1)[0]; }

void BM_ForwardProject(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto g = ProjectionGeometry::parallel(n, 20);
  const Image x = phantom(n);
  for (auto _ : state) benchmark::DoNotOptimize(forward_project(x, g));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.ray_count()));
}
BENCHMARK(BM_ForwardProject)->Arg(64)->Arg(128)->Arg(256);

void BM_BackProject(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto g = ProjectionGeometry::parallel(n, 20);
  const Sinogram p = forward_project(phantom(n), g);
  for (auto _ : state) benchmark::DoNotOptimize(back_project(p, g));
}
BENCHMARK(BM_BackProject)->Arg(64)->Arg(128)->Arg(256);

void BM_SirtIterations(benchmark::State& state) {
  const auto g = ProjectionGeometry::parallel(64, 20);
  const Sinogram p = forward_project(phantom(64), g);
  const auto w = SirtWeights::compute(g);
  for (auto _ : state) benchmark::DoNotOptimize(sirt_run(g.make_image(), p, g, 10, w));
}
BENCHMARK(BM_SirtIterations);

void BM_Fbp(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto g = ProjectionGeometry::parallel(n, 180);
  const Sinogram p = forward_project(phantom(n), g);
  for (auto _ : state) benchmark::DoNotOptimize(fbp(p, g));
}
BENCHMARK(BM_Fbp)->Arg(64)->Arg(128);

void BM_Cgls(benchmark::State& state) {
  const auto g = ProjectionGeometry::parallel(64, 20);
  const Sinogram p = forward_project(phantom(64), g);
  for (auto _ : state) benchmark::DoNotOptimize(cgls(p, g, 50));
}
BENCHMARK(BM_Cgls);

}  // namespace

#include <benchmark/benchmark.h>

#include "sirtnet/dataio.hpp"
#include "sirtnet/network.hpp"

using namespace sirtnet;

namespace {

void BM_MsdForward(benchmark::State& state) {
  const auto depth = static_cast<std::size_t>(state.range(0));
  const auto n = static_cast<std::size_t>(state.range(1));
  MsdNetwork net(depth, 10);
  init_uniform(net, -0.25, 0.25, 1);
  const Image x = generate_phantoms({}, 1, n, 2)[0];
  for (auto _ : state) benchmark::DoNotOptimize(msd_infer(net, x));
}
BENCHMARK(BM_MsdForward)->Args({15, 64})->Args({51, 64})->Args({15, 128});

void BM_MsdForwardBackward(benchmark::State& state) {
  const auto depth = static_cast<std::size_t>(state.range(0));
  const std::size_t n = 64;
  MsdNetwork net(depth, 10);
  init_uniform(net, -0.25, 0.25, 3);
  const Image x = generate_phantoms({}, 1, n, 4)[0];
  const std::vector<double> dloss(n * n, 1e-3);
  for (auto _ : state) {
    const auto fwd = msd_forward(net, x);
    benchmark::DoNotOptimize(msd_backward(net, fwd.tape, dloss));
  }
}
BENCHMARK(BM_MsdForwardBackward)->Arg(15)->Arg(51);

void BM_TrainEpoch(benchmark::State& state) {
  const std::size_t n = 64;
  MsdNetwork net(15, 10);
  init_uniform(net, -0.25, 0.25, 5);
  Batch data;
  const auto images = generate_phantoms({}, 20, n, 6);
  for (const auto& img : images) {
    data.inputs.push_back(img);
    data.targets.push_back(Image(n, 0.0f));
  }
  AdamState adam(net.architecture().parameter_count(), AdamConfig{});
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(train_epoch(net, data, 10, adam, seed++));
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

}  // namespace

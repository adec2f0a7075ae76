// Microbenchmarks for the hot paths: neighbor queries, subsampling, the
// forward pass, the simulator, and metric sweeps.

#include <benchmark/benchmark.h>

#include <vector>

#include "pointcam/geometry.hpp"
#include "pointcam/metrics.hpp"
#include "pointcam/network.hpp"
#include "pointcam/rng.hpp"
#include "pointcam/ups.hpp"

namespace {

using namespace pointcam;
using geometry::PointCloud;
using geometry::Vec3;

PointCloud random_cloud(int n, std::uint64_t seed) {
  Rng rng(seed);
  PointCloud cloud;
  cloud.id = "bench";
  cloud.labels.emplace();
  for (int i = 0; i < n; ++i) {
    cloud.coords.push_back(
        {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});
    cloud.labels->push_back(0);
  }
  return cloud;
}

void bm_knn(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const PointCloud cloud = random_cloud(n, 11);
  const int k = n / 2;
  for (auto _ : state) {
    benchmark::DoNotOptimize(geometry::knn(0, cloud, k));
  }
}
BENCHMARK(bm_knn)->Arg(512)->Arg(4096);

void bm_farthest_point_sample(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const PointCloud cloud = random_cloud(n, 13);
  for (auto _ : state) {
    benchmark::DoNotOptimize(geometry::farthest_point_sample(cloud, n / 4, 0));
  }
}
BENCHMARK(bm_farthest_point_sample)->Arg(512)->Arg(4096);

void bm_simulator(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const PointCloud cloud = random_cloud(n, 17);
  ups::UpsParams params;
  params.beta_min = 0.4;
  params.beta_max = 0.6;
  Rng rng(19);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ups::ups_segmentation(cloud, params, 1, rng));
  }
}
BENCHMARK(bm_simulator)->Arg(512)->Arg(4096);

void bm_forward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const PointCloud cloud = random_cloud(n, 23);
  network::BackboneConfig backbone;
  backbone.num_known_classes = 3;
  network::UpeConfig upe;
  Rng rng(29);
  const network::Model model(backbone, upe, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.forward(cloud.coords));
  }
}
BENCHMARK(bm_forward)->Arg(512);

void bm_auroc(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(31);
  std::vector<metrics::ScoreRecord> dump;
  for (int i = 0; i < n; ++i) {
    dump.push_back({"u" + std::to_string(i), rng.uniform(), rng.uniform() < 0.3});
  }
  dump[0].is_unknown = false;
  dump[1].is_unknown = true;
  for (auto _ : state) {
    benchmark::DoNotOptimize(metrics::auroc(dump));
  }
}
BENCHMARK(bm_auroc)->Arg(1000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();

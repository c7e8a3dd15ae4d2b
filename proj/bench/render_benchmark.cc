// Banded OpenMP renderer against the serial brute-force reference.
//
//   ./fragsplat_render_benchmark --benchmark_min_time=0.5
//
// The reference tests every pixel against every splat, so it is only run at
// the smaller sizes.

#include <random>

#include <benchmark/benchmark.h>
#include <omp.h>

#include "fragsplat/render/rasterizer.h"

namespace fragsplat {
namespace {

CameraIntrinsics Camera(int size) {
  CameraIntrinsics k;
  k.fx = k.fy = 0.9 * size;
  k.cx = k.cy = 0.5 * (size - 1);
  k.width = k.height = size;
  return k;
}

// Roughly what a fragment initialization looks like: one splat per pixel
// on a bumpy surface, a few depth layers.
GaussianSet Scene(int n) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  GaussianSet set;
  set.first_frame = 1;
  set.last_frame = 1;
  for (int i = 0; i < n; ++i) {
    Gaussian g;
    const double z = 2.0 + 2.0 * u(rng);
    g.center = Vec3((u(rng) - 0.5) * 1.1 * z, (u(rng) - 0.5) * 1.1 * z, z);
    g.scale = 1.2 * z / (0.9 * 128.0) * (0.5 + u(rng));
    g.opacity = 0.3 + 0.6 * u(rng);
    g.color = Vec3(u(rng), u(rng), u(rng));
    g.source = {1, 1, i};
    set.gaussians.push_back(g);
  }
  return set;
}

Image Ones(const CameraIntrinsics& k) { return Image(k.width, k.height, 1.0); }

void SetThreads(benchmark::State& state) {
  const int threads = static_cast<int>(state.range(2));
  omp_set_num_threads(threads > 0 ? threads : omp_get_num_procs());
}

void BM_Render(benchmark::State& state) {
  SetThreads(state);
  const GaussianSet set = Scene(static_cast<int>(state.range(0)));
  const CameraIntrinsics k = Camera(static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(Render(set, Pose(), k));
}

void BM_RenderReference(benchmark::State& state) {
  const GaussianSet set = Scene(static_cast<int>(state.range(0)));
  const CameraIntrinsics k = Camera(static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(RenderReference(set, Pose(), k));
}

void BM_RenderBackward(benchmark::State& state) {
  SetThreads(state);
  const GaussianSet set = Scene(static_cast<int>(state.range(0)));
  const CameraIntrinsics k = Camera(static_cast<int>(state.range(1)));
  ForwardState forward;
  Render(set, Pose(), k, &forward);
  const Image grad = Ones(k);
  for (auto _ : state) {
    benchmark::DoNotOptimize(RenderBackward(set, Pose(), k, forward, grad));
  }
}

void BM_RenderBackwardReference(benchmark::State& state) {
  const GaussianSet set = Scene(static_cast<int>(state.range(0)));
  const CameraIntrinsics k = Camera(static_cast<int>(state.range(1)));
  const Image grad = Ones(k);
  for (auto _ : state) {
    benchmark::DoNotOptimize(RenderBackwardReference(set, Pose(), k, grad));
  }
}

// {splats, image size, threads}; threads 0 means all cores.
BENCHMARK(BM_Render)
    ->Args({4096, 64, 1})
    ->Args({4096, 64, 0})
    ->Args({65536, 128, 1})
    ->Args({65536, 128, 0})
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RenderReference)->Args({4096, 64, 1})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RenderBackward)
    ->Args({4096, 64, 1})
    ->Args({4096, 64, 0})
    ->Args({65536, 128, 1})
    ->Args({65536, 128, 0})
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RenderBackwardReference)->Args({4096, 64, 1})->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace fragsplat

BENCHMARK_MAIN();

// Copyright 2026 The msslam Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <numbers>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "msslam/bundle_adjustment.h"
#include "msslam/sim3_alignment.h"
#include "msslam/synthetic.h"
#include "msslam/two_view.h"

namespace msslam {
namespace {

SyntheticTwoView NoisyScene(int points) {
  TwoViewSceneOptions options;
  options.num_points = points;
  options.noise.gaussian_sigma = 0.5;
  options.noise.outlier_fraction = 0.2;
  return MakeTwoView(42, options);
}

void BM_WeightedEightPoint(benchmark::State& state) {
  const SyntheticTwoView scene = NoisyScene(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(WeightedEightPoint(scene.matches));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_WeightedEightPoint)->RangeMultiplier(4)->Range(16, 1024)->Complexity();

void BM_SedJacobian(benchmark::State& state) {
  const SyntheticTwoView scene = NoisyScene(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(SedJacobian(scene.gt_pose, scene.matches));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SedJacobian)->RangeMultiplier(4)->Range(16, 1024)->Complexity();

void BM_LmRefineSed(benchmark::State& state) {
  const SyntheticTwoView scene = NoisyScene(200);
  std::mt19937_64 rng(1);
  const RelativePose start = PerturbPose(scene.gt_pose, state.range(0) * std::numbers::pi / 180.0, rng);
  for (auto _ : state) benchmark::DoNotOptimize(LmRefineSed(start, scene.matches));
}
BENCHMARK(BM_LmRefineSed)->Arg(5)->Arg(30)->Unit(benchmark::kMicrosecond);

void BM_SolveTwoView(benchmark::State& state) {
  const SyntheticTwoView scene = NoisyScene(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(SolveTwoView(scene.matches));
}
BENCHMARK(BM_SolveTwoView)->Arg(100)->Arg(1000)->Unit(benchmark::kMicrosecond);

void BM_SolveBundleAdjustment(benchmark::State& state) {
  BaSceneOptions options;
  options.num_frames = static_cast<int>(state.range(0));
  options.num_anchors = static_cast<int>(state.range(1));
  const BaScene scene = MakeBaScene(7, options);
  std::mt19937_64 rng(8);
  FactorGraph perturbed = scene.graph;
  PerturbBaScene(perturbed, 2.0, 0.05, options.frame_spacing, rng);
  for (auto _ : state) {
    FactorGraph graph = perturbed;
    benchmark::DoNotOptimize(SolveBundleAdjustment(graph));
  }
}
BENCHMARK(BM_SolveBundleAdjustment)
    ->Args({4, 50})
    ->Args({8, 400})
    ->Unit(benchmark::kMillisecond);

void BM_EstimateScale(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> depth(0.5, 10.0);
  std::vector<double> map(n), tri(n);
  for (int k = 0; k < n; ++k) {
    tri[k] = depth(rng);
    map[k] = k % 3 == 0 ? depth(rng) : 2.0 * tri[k];
  }
  for (auto _ : state) benchmark::DoNotOptimize(EstimateScale(map, tri));
  state.SetComplexityN(n);
}
BENCHMARK(BM_EstimateScale)->RangeMultiplier(4)->Range(16, 1024)->Complexity(benchmark::oNSquared);

}  // namespace
}  // namespace msslam

BENCHMARK_MAIN();

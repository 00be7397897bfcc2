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

// Acceptance checks. Prints one [PASS]/[FAIL] line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "msslam/bundle_adjustment.h"
#include "msslam/error.h"
#include "msslam/metrics.h"
#include "msslam/sim3_alignment.h"
#include "msslam/synthetic.h"
#include "msslam/two_view.h"
#include "oracles.h"

#ifdef MSSLAM_HAVE_CLI
#include "commands.h"
#endif

namespace msslam {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Printf(const char* format, auto... args) {
  char buffer[512];
  std::snprintf(buffer, sizeof(buffer), format, args...);
  return buffer;
}

class Stopwatch {
 public:
  double Seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Analytic SED Jacobians against central differences, 1000 configurations.
Outcome JacobianFidelity() {
  constexpr int kConfigs = 1000;
  constexpr double kMaxRelativeError = 1e-5;
  constexpr double kMaxSeconds = 10.0;
  const Stopwatch clock;
  std::mt19937_64 rng(20260101);
  std::uniform_real_distribution<double> pixel(0.0, 640.0);
  std::uniform_real_distribution<double> focal(150.0, 900.0);
  std::uniform_real_distribution<double> center(150.0, 450.0);
  double worst = 0.0;
  int evaluated = 0;
  for (int i = 0; i < kConfigs; ++i) {
    AnchorMatchSet set;
    for (Intrinsics& k : set.cameras) k = {focal(rng), focal(rng), center(rng), center(rng)};
    const int frame = i % 2;
    set.correspondences[frame].push_back(
        {{pixel(rng), pixel(rng)}, {pixel(rng), pixel(rng)}, 1.0});
    const RelativePose pose = oracle::RandomRelativePose(rng, 90.0);
    const std::vector<SedResidual> residuals = SedJacobian(pose, set);
    if (residuals.empty()) continue;
    const Eigen::Matrix<double, 2, 6> numeric = oracle::FiniteDifferenceJacobian(
        pose, set.correspondences[frame][0], frame, set.cameras);
    worst = std::max(worst, (residuals[0].jacobian - numeric).norm() /
                                std::max(numeric.norm(), 1e-8));
    ++evaluated;
  }
  const double seconds = clock.Seconds();
  return {evaluated == kConfigs && worst < kMaxRelativeError && seconds < kMaxSeconds,
          Printf("max relative error %.2e over %d configurations (limit %.0e), %.2f s "
                 "(limit %.0f s)",
                 worst, evaluated, kMaxRelativeError, seconds, kMaxSeconds)};
}

// Full pipeline on 100 noise-free scenes.
Outcome TwoViewExactness() {
  constexpr int kScenes = 100;
  constexpr int kRequired = 99;
  constexpr double kMaxSeconds = 5.0;
  TwoViewSceneOptions options;
  options.num_points = 100;
  std::vector<SyntheticTwoView> scenes;
  for (int s = 0; s < kScenes; ++s) scenes.push_back(MakeTwoView(1000 + s, options));
  const Stopwatch clock;
  int good = 0;
  double worst_rot = 0.0, worst_trans = 0.0;
  for (const SyntheticTwoView& scene : scenes) {
    try {
      const SedSolveReport report = SolveTwoView(scene.matches);
      const double rot = oracle::RotationErrorDeg(report.pose.rotation, scene.gt_pose.rotation);
      const double trans =
          oracle::AngleDeg(report.pose.translation_dir, scene.gt_pose.translation_dir);
      worst_rot = std::max(worst_rot, rot);
      worst_trans = std::max(worst_trans, trans);
      good += rot < 0.01 && trans < 0.05;
    } catch (const Error&) {
    }
  }
  const double seconds = clock.Seconds();
  return {good >= kRequired && seconds < kMaxSeconds,
          Printf("%d/%d scenes with rot < 0.01 deg and trans < 0.05 deg (need %d); worst "
                 "%.2e / %.2e deg; %.2f s (limit %.0f s)",
                 good, kScenes, kRequired, worst_rot, worst_trans, seconds, kMaxSeconds)};
}

double SuccessRate(const std::vector<BasinRow>& rows, double init_deg) {
  int total = 0, success = 0;
  for (const BasinRow& row : rows) {
    if (row.init_deg != init_deg) continue;
    ++total;
    success += std::max(row.final_rot_deg, row.final_trans_deg) < kBasinSuccessDeg;
  }
  return total == 0 ? 0.0 : static_cast<double>(success) / total;
}

// Basin of convergence: SED alone versus the preconditioned pipeline.
Outcome BasinReproduction() {
  constexpr int kSeeds = 100;
  constexpr double kMaxSeconds = 60.0;
  std::vector<uint64_t> seeds(kSeeds);
  for (int s = 0; s < kSeeds; ++s) seeds[s] = 5000 + s;
  const Stopwatch clock;
  const std::vector<double> sed_grid = {5.0, 60.0};
  const std::vector<BasinRow> sed = RunBasinExperiment(seeds, sed_grid, BasinMode::kSedOnly);
  const std::vector<double> pre_grid = {5.0, 20.0, 45.0, 60.0, 90.0};
  const std::vector<BasinRow> pre =
      RunBasinExperiment(seeds, pre_grid, BasinMode::kPreconditioned);
  const double seconds = clock.Seconds();

  const double rate5 = SuccessRate(sed, 5.0);
  const double rate60 = SuccessRate(sed, 60.0);
  double worst_pre = 1.0;
  for (const double angle : pre_grid) worst_pre = std::min(worst_pre, SuccessRate(pre, angle));
  const bool pass = rate5 > 2.0 * rate60 && worst_pre >= 0.99 && seconds < kMaxSeconds;
  return {pass, Printf("sed_only success %.2f at 5 deg vs %.2f at 60 deg (ratio %.2f, need > 2); "
                       "preconditioned worst-angle success %.2f (need >= 0.99); %.2f s "
                       "(limit %.0f s)",
                       rate5, rate60, rate60 > 0 ? rate5 / rate60 : INFINITY, worst_pre,
                       seconds, kMaxSeconds)};
}

// 30% outliers at weight 0.01 with 0.5 px noise.
Outcome OutlierRobustness() {
  constexpr int kSeeds = 100;
  constexpr double kMaxMedianDeg = 2.0;
  TwoViewSceneOptions options;
  options.noise.gaussian_sigma = 0.5;
  options.noise.outlier_fraction = 0.3;
  options.noise.outlier_weight = 0.01;
  std::vector<double> errors;
  for (int s = 0; s < kSeeds; ++s) {
    const SyntheticTwoView scene = MakeTwoView(7000 + s, options);
    try {
      const SedSolveReport report = SolveTwoView(scene.matches);
      errors.push_back(
          oracle::AngleDeg(report.pose.translation_dir, scene.gt_pose.translation_dir));
    } catch (const Error&) {
      errors.push_back(180.0);
    }
  }
  std::sort(errors.begin(), errors.end());
  const double median = 0.5 * (errors[kSeeds / 2 - 1] + errors[kSeeds / 2]);
  return {median < kMaxMedianDeg,
          Printf("median translation error %.3f deg over %d seeds (limit %.1f deg)", median,
                 kSeeds, kMaxMedianDeg)};
}

// 4 frames, 50 anchors, 2 deg and 5% perturbations.
Outcome BundleAdjustmentCorrectness() {
  constexpr int kSeeds = 20;
  int converged = 0;
  bool monotone = true;
  double worst_rmse = 0.0, worst_rot = 0.0, worst_gauge = 0.0;
  for (int s = 0; s < kSeeds; ++s) {
    BaScene scene = MakeBaScene(300 + s);
    std::mt19937_64 rng(400 + s);
    PerturbBaScene(scene.graph, 2.0, 0.05, BaSceneOptions{}.frame_spacing, rng);

    // Gauge invariance of the reprojection cost, at the perturbed state.
    const double cost = EvaluateReprojection(scene.graph).cost;
    FactorGraph moved = scene.graph;
    Se3Pose global;
    global.rotation = oracle::AxisAngle(Eigen::Vector3d(0.3, -1.2, 0.8));
    global.translation = Eigen::Vector3d(-5.0, 2.0, 7.0);
    const double scale = 0.25 + 0.3 * s;
    for (BaFrame& frame : moved.mutable_frames()) {
      frame.world_from_camera = global * frame.world_from_camera;
      frame.world_from_camera.translation *= scale;
    }
    for (BaAnchor& anchor : moved.mutable_anchors()) anchor.depth *= scale;
    worst_gauge = std::max(worst_gauge, std::abs(EvaluateReprojection(moved).cost - cost) / cost);

    const BaReport report = SolveBundleAdjustment(scene.graph);
    for (size_t i = 1; i < report.cost_history.size(); ++i) {
      monotone &= report.cost_history[i] <= report.cost_history[i - 1];
    }
    double rot = 0.0;
    const Eigen::Matrix3d r0 = scene.graph.frames()[0].world_from_camera.rotation;
    for (size_t f = 1; f < scene.world_from_camera.size(); ++f) {
      rot = std::max(rot, oracle::RotationErrorDeg(
                              scene.world_from_camera[0].rotation.transpose() *
                                  scene.world_from_camera[f].rotation,
                              r0.transpose() * scene.graph.frames()[f].world_from_camera.rotation));
    }
    worst_rmse = std::max(worst_rmse, report.final_rmse);
    worst_rot = std::max(worst_rot, rot);
    converged += report.final_rmse < 1e-6 && rot < 0.01;
  }
  return {converged == kSeeds && monotone && worst_gauge < 1e-9,
          Printf("%d/%d graphs with RMSE < 1e-6 px and rot < 0.01 deg (worst %.2e px, %.2e "
                 "deg); cost monotone: %s; gauge relative change %.1e (limit 1e-9)",
                 converged, kSeeds, worst_rmse, worst_rot, monotone ? "yes" : "no",
                 worst_gauge)};
}

// Random similarities with scale in [0.5, 2], candidates incl. distractors.
Outcome Sim3JoinRoundTrip() {
  constexpr int kSeeds = 50;
  constexpr double kLambda = 1.05;
  int good = 0;
  double worst_ratio = 1.0, worst_rot = 0.0, worst_ate = 0.0;
  for (int s = 0; s < kSeeds; ++s) {
    std::mt19937_64 rng(900 + s);
    TrajectoryPairOptions options;
    options.world_a_from_world_b = RandomSim3(rng, 0.5, 2.0);
    const SyntheticTrajectoryPair pair = MakeTrajectoryPair(900 + s, options);
    std::vector<JoinCandidate> candidates;
    for (const CandidatePair& p : pair.pairs) {
      candidates.push_back({p.frame_a, p.frame_b, p.matches, {}});
    }
    try {
      const JoinResult result = JoinBestCandidate(pair.a, pair.b, candidates);
      const double ratio = result.world_a_from_world_b.scale / pair.world_a_from_world_b.scale;
      const double rot = oracle::RotationErrorDeg(result.world_a_from_world_b.rotation,
                                                  pair.world_a_from_world_b.rotation);
      const Trajectory truth = MergeTrajectories(pair.a, pair.b_in_world_a, Sim3Transform{});
      const double ate = ComputeAte(result.merged, truth, AlignmentMode::kSim3).rmse /
                         pair.scene_diameter;
      worst_ratio = std::max({worst_ratio, ratio, 1.0 / ratio});
      worst_rot = std::max(worst_rot, rot);
      worst_ate = std::max(worst_ate, ate);
      good += ratio > 1.0 / kLambda && ratio < kLambda && rot < 1.0 && ate < 0.01;
    } catch (const Error&) {
    }
  }
  return {good == kSeeds,
          Printf("%d/%d seeds; worst scale ratio %.6f (band %.2f), rot %.2e deg (limit 1), "
                 "ATE %.2e of scene diameter (limit 0.01)",
                 good, kSeeds, worst_ratio, kLambda, worst_rot, worst_ate)};
}

Outcome ScaleVotingExactness() {
  constexpr int kInstances = 1000;
  std::mt19937_64 rng(31337);
  std::uniform_int_distribution<int> size(1, 60);
  std::uniform_real_distribution<double> depth(0.1, 20.0);
  std::uniform_real_distribution<double> scale(0.1, 10.0);
  std::uniform_real_distribution<double> lambda(1.01, 1.3);
  std::bernoulli_distribution outlier(0.4);
  std::normal_distribution<double> jitter(0.0, 0.03);
  int equal = 0;
  for (int i = 0; i < kInstances; ++i) {
    const int n = size(rng);
    const double s = scale(rng);
    const double l = i % 2 == 0 ? 1.05 : lambda(rng);
    std::vector<double> map(n), tri(n);
    for (int k = 0; k < n; ++k) {
      tri[k] = depth(rng);
      map[k] = outlier(rng) ? depth(rng) : s * tri[k] * (1.0 + jitter(rng));
    }
    if (n > 3 && i % 5 == 0) {
      map[2] = map[0];
      tri[2] = tri[0];
    }
    const ScaleEstimate estimate = EstimateScale(map, tri, l);
    const oracle::NaiveScale expected = oracle::NaiveEstimateScale(map, tri, l);
    equal += estimate.scale == expected.scale && estimate.inliers == expected.inliers;
  }
  return {equal == kInstances,
          Printf("%d/%d instances identical to the brute-force counter (same s, same inliers)",
                 equal, kInstances)};
}

Outcome MetricsSanity() {
  const double tau = 10.0;
  const std::vector<double> zero = {0.0}, half = {tau / 2}, at = {tau}, beyond = {2 * tau};
  const bool auc = PoseAuc(zero, tau) == 100.0 && std::abs(PoseAuc(half, tau) - 50.0) < 1e-12 &&
                   PoseAuc(at, tau) == 0.0 && PoseAuc(beyond, tau) == 0.0;

  std::mt19937_64 rng(2718);
  std::normal_distribution<double> normal(0.0, 1.0);
  Trajectory gt;
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  for (int k = 0; k < 1000; ++k) {
    p += 0.1 * Eigen::Vector3d(normal(rng), normal(rng), normal(rng));
    Keyframe keyframe;
    keyframe.timestamp = 0.05 * k;
    keyframe.world_from_camera.translation = p;
    keyframe.world_from_camera.rotation =
        oracle::AxisAngle(0.3 * Eigen::Vector3d(normal(rng), normal(rng), normal(rng)));
    gt.keyframes.push_back(keyframe);
  }
  Sim3Transform gauge;
  gauge.scale = 2.7;
  gauge.rotation = oracle::AxisAngle(Eigen::Vector3d(2.0, 0.1, -0.7));
  gauge.translation = Eigen::Vector3d(100.0, -3.0, 8.0);
  const double gauge_rmse =
      ComputeAte(TransformTrajectory(gt, gauge), gt, AlignmentMode::kSim3).rmse;

  const double sigma = 0.01;
  Trajectory noisy = gt;
  std::normal_distribution<double> noise(0.0, sigma);
  for (Keyframe& k : noisy.keyframes) {
    k.world_from_camera.translation += Eigen::Vector3d(noise(rng), noise(rng), noise(rng));
  }
  const double noisy_rmse = ComputeAte(noisy, gt, AlignmentMode::kSim3).rmse;
  const double expected = sigma * std::sqrt(3.0);
  const bool statistical = std::abs(noisy_rmse - expected) < 0.1 * expected;
  return {auc && gauge_rmse < 1e-9 && statistical,
          Printf("AUC hand cases %s; gauged-copy ATE %.1e (limit 1e-9); noise ATE %.5f vs "
                 "sigma*sqrt(3) = %.5f (limit 10%%)",
                 auc ? "ok" : "wrong", gauge_rmse, noisy_rmse, expected)};
}

#ifdef MSSLAM_HAVE_CLI
std::string Slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// Runs every command twice with identical flags into separate directories
// and compares all output files and stdout byte for byte.
Outcome CliDeterminism() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "msslam_acceptance_determinism";
  fs::remove_all(root);
  std::vector<std::string> mismatches;
  int files = 0;
  bool all_ok = true;
  std::string stdout_runs[2];
  for (int run = 0; run < 2; ++run) {
    const fs::path dir = root / std::to_string(run);
    fs::create_directories(dir);
    const auto p = [&](const std::string& name) { return (dir / name).string(); };
    const std::vector<std::vector<std::string>> commands = {
        {"synth", "two-view", "--seed", "7", "--noise", "0.5", "--outliers", "0.3", "--out",
         p("s")},
        {"two-view", p("s.matches.txt"), "--json", p("tv.json")},
        {"basin", "--mode", "sed_only", "--grid", "0:90:30", "--seeds", "5", "--out",
         p("sed.csv")},
        {"basin", "--mode", "preconditioned", "--grid", "0:90:45", "--seeds", "5", "--out",
         p("pre.csv")},
        {"synth", "traj-pair", "--seed", "4", "--out", p("t")},
        {"join", p("t.a.tum"), p("t.b.tum"), p("t.pair0.matches.txt"), "--depths-a",
         p("t.a.depth"), "--depths-b", p("t.b.depth"), "--frame-a", "7", "--frame-b", "0",
         "--out", p("merged.tum"), "--sim3", p("sim3.json")},
        {"ate", p("merged.tum"), p("t.gt_merged.tum"), "--mode", "sim3"},
    };
    for (const auto& command : commands) {
      std::ostringstream out, err;
      const int code = cli::Run(command, out, err);
      if (code != 0) {
        all_ok = false;
        mismatches.push_back(command[0] + " exit " + std::to_string(code));
      }
      // Paths differ between runs; everything else must not.
      std::string text = out.str();
      for (size_t at; (at = text.find(dir.string())) != std::string::npos;) {
        text.replace(at, dir.string().size(), "<dir>");
      }
      stdout_runs[run] += text;
    }
  }
  if (stdout_runs[0] != stdout_runs[1]) mismatches.push_back("stdout");
  for (const auto& entry : fs::directory_iterator(root / "0")) {
    const fs::path other = root / "1" / entry.path().filename();
    std::string a = Slurp(entry.path());
    std::string b = Slurp(other);
    // The gt JSON records the output paths.
    for (std::string* s : {&a, &b}) {
      for (const std::string dir : {(root / "0").string(), (root / "1").string()}) {
        for (size_t at; (at = s->find(dir)) != std::string::npos;) s->replace(at, dir.size(), "<dir>");
      }
    }
    ++files;
    if (!fs::exists(other) || a != b) mismatches.push_back(entry.path().filename().string());
  }
  fs::remove_all(root);
  std::string detail = Printf("%d output files and stdout of 7 commands compared", files);
  if (!mismatches.empty()) {
    detail += "; differing:";
    for (const std::string& m : mismatches) detail += " " + m;
  }
  return {all_ok && mismatches.empty() && files > 10, detail};
}
#else
Outcome CliDeterminism() { return {false, "command-line tool not built"}; }
#endif

}  // namespace
}  // namespace msslam

int main() {
  using msslam::Outcome;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"Jacobian fidelity", msslam::JacobianFidelity},
      {"Two-view exactness", msslam::TwoViewExactness},
      {"Basin of convergence", msslam::BasinReproduction},
      {"Outlier robustness via weights", msslam::OutlierRobustness},
      {"Bundle adjustment correctness", msslam::BundleAdjustmentCorrectness},
      {"Sim(3) join round-trip", msslam::Sim3JoinRoundTrip},
      {"Scale voting vs brute force", msslam::ScaleVotingExactness},
      {"Metrics sanity", msslam::MetricsSanity},
      {"CLI determinism", msslam::CliDeterminism},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome outcome;
    try {
      outcome = check();
    } catch (const std::exception& error) {
      outcome = {false, std::string("exception: ") + error.what()};
    }
    failures += !outcome.pass;
    std::printf("[%s] %s: %s\n", outcome.pass ? "PASS" : "FAIL", name, outcome.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}

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

#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "msslam/bundle_adjustment.h"
#include "msslam/geometry.h"
#include "msslam/sim3_alignment.h"
#include "msslam/trajectory.h"
#include "msslam/two_view.h"

namespace msslam {

// 512x512 pinhole camera with a 90 degree field of view.
Intrinsics StandardCamera();
ImageSize StandardImageSize();

enum class WeightPolicy {
  kOracle,   // inliers weigh 1, outliers `outlier_weight`
  kUniform,  // everything weighs 1
};

struct NoiseModel {
  // Isotropic pixel noise, truncated at a radius of 3 sigma.
  double gaussian_sigma = 0.0;
  double outlier_fraction = 0.0;
  // Outliers are redrawn uniformly in [box_min, box_max]^2 pixels.
  double outlier_box_min = 0.0;
  double outlier_box_max = 512.0;
  double outlier_weight = 0.01;
  WeightPolicy weight_policy = WeightPolicy::kOracle;

  void Validate() const;
};

struct TwoViewSceneOptions {
  int num_points = 100;
  double baseline = 1.0;
  // Points are sampled at depths in [min, max] * baseline in their anchor's
  // camera.
  double min_depth = 1.0;
  double max_depth = 4.0;
  double max_rotation_deg = 20.0;
  NoiseModel noise;
  int max_attempts_per_point = 10000;
};

struct SyntheticTwoView {
  AnchorMatchSet matches;
  RelativePose gt_pose;
  double baseline = 1.0;
  // Scene points in camera-0 coordinates, per correspondence.
  std::array<std::vector<Eigen::Vector3d>, 2> points;
  std::array<std::vector<bool>, 2> is_outlier;
};

// Throws kInvalidArgument for fewer than 8 points and kVisibilityFailure if a
// point visible in both images cannot be found.
SyntheticTwoView MakeTwoView(uint64_t seed, const TwoViewSceneOptions& options);

struct Box3 {
  Eigen::Vector3d min = Eigen::Vector3d(-1.5, -1.0, 6.0);
  Eigen::Vector3d max = Eigen::Vector3d(1.5, 1.0, 8.0);

  bool IsEmpty() const { return (max.array() <= min.array()).any(); }
};

struct TrajectoryPairOptions {
  int num_frames = 8;  // per trajectory
  // Shared point cloud, in trajectory A's world frame; every anchor lies in
  // it and every camera sees all of it.
  Box3 overlap_region;
  int anchors_per_frame = 60;
  // world_a_from_world_b.
  Sim3Transform world_a_from_world_b;
  // Pixel noise on matches.
  NoiseModel noise;
  // Relative Gaussian noise on the map depths.
  double depth_noise = 0.0;
  int num_distractors = 1;
  double time_step = 0.1;
  double b_time_offset = 100.0;
};

struct CandidatePair {
  int frame_a = 0;
  int frame_b = 0;
  AnchorMatchSet matches;
  bool covisible = true;
};

struct SyntheticTrajectoryPair {
  Trajectory a;
  Trajectory b;  // expressed in world B, in B units
  Trajectory b_in_world_a;
  std::vector<CandidatePair> pairs;
  Sim3Transform world_a_from_world_b;
  double scene_diameter = 0.0;
};

struct BaSceneOptions {
  int num_frames = 4;
  int num_anchors = 50;  // spread round-robin over the frames
  double frame_spacing = 0.3;
  double max_rotation_deg = 5.0;
};

struct BaScene {
  FactorGraph graph{StandardCamera()};
  // Ground truth, aligned with the graph's frames and anchors.
  std::vector<Se3Pose> world_from_camera;
  std::vector<double> depths;
};

// Noise-free graph: every anchor is observed by every other frame, one edge
// per ordered frame pair.
BaScene MakeBaScene(uint64_t seed, const BaSceneOptions& options = {});

// Rotates every frame except frame 0 by `rotation_deg` about a random axis,
// shifts its position by `rotation_deg` percent of the frame spacing, and
// scales every depth except anchor 0's by 1 +/- `depth_fraction`.
void PerturbBaScene(FactorGraph& graph, double rotation_deg, double depth_fraction,
                    double frame_spacing, std::mt19937_64& rng);

// Log-uniform scale in [min_scale, max_scale], rotation by a uniform angle
// in [0, pi) about a random axis, translation uniform in [-1, 1]^3.
Sim3Transform RandomSim3(std::mt19937_64& rng, double min_scale = 0.5,
                         double max_scale = 2.0);

// Two smooth trajectories observing one point cloud. Map depths equal ground
// truth unless `depth_noise` is set. Pairs list the covisible candidates
// first, then distractors whose matches are random pixels.
SyntheticTrajectoryPair MakeTrajectoryPair(uint64_t seed,
                                           const TrajectoryPairOptions& options);

enum class BasinMode { kSedOnly, kPreconditioned };

const char* BasinModeName(BasinMode mode);

// A basin run succeeds when both final errors are below this, in degrees.
constexpr double kBasinSuccessDeg = 0.5;

struct BasinRow {
  double init_deg = 0.0;
  uint64_t seed = 0;
  BasinMode mode = BasinMode::kSedOnly;
  double final_rot_deg = 0.0;
  double final_trans_deg = 0.0;
  bool converged = false;  // reached the ground truth: both errors < kBasinSuccessDeg
};

// Rotates the pose by `angle` (radians) about a random axis and tilts the
// translation direction by the same angle about a random axis orthogonal to
// it.
RelativePose PerturbPose(const RelativePose& pose, double angle,
                         std::mt19937_64& rng);

struct BasinOptions {
  TwoViewSceneOptions scene;
  LmOptions lm;
};

// For each grid angle and seed: perturb the ground truth by the angle, then
// run either the SED refinement alone from that initialization or the full
// preconditioned pipeline, and record the final error. Rows are ordered by
// grid angle, then seed.
std::vector<BasinRow> RunBasinExperiment(std::span<const uint64_t> seeds,
                                         std::span<const double> init_deg_grid,
                                         BasinMode mode,
                                         const BasinOptions& options = {});

// Columns: init_deg,seed,mode,final_rot_deg,final_trans_deg,converged.
std::string BasinRowsToCsv(std::span<const BasinRow> rows);

}  // namespace msslam

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

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "msslam/geometry.h"

namespace msslam {

struct BaFrame {
  Se3Pose world_from_camera;
};

struct BaAnchor {
  int frame = 0;
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
  double depth = 1.0;
};

struct BaObservation {
  int anchor = 0;
  Eigen::Vector2d match = Eigen::Vector2d::Zero();
  double weight = 1.0;
};

// Anchors of `source` observed in `target`.
struct BaEdge {
  int source = 0;
  int target = 0;
  std::vector<BaObservation> observations;
};

// Frames, anchors and directed edges of the reprojection objective. All
// frames share one set of intrinsics.
class FactorGraph {
 public:
  explicit FactorGraph(const Intrinsics& camera) : camera_(camera) {}

  int AddFrame(const Se3Pose& world_from_camera);
  // Throws kInvalidArgument for unknown frames or non-positive depth.
  int AddAnchor(int frame, const Eigen::Vector2d& pixel, double depth);
  // Throws kInvalidArgument for self edges, unknown frames, or observations
  // of anchors not owned by `source`.
  int AddEdge(int source, int target, std::vector<BaObservation> observations);

  const Intrinsics& camera() const { return camera_; }
  const std::vector<BaFrame>& frames() const { return frames_; }
  const std::vector<BaAnchor>& anchors() const { return anchors_; }
  const std::vector<BaEdge>& edges() const { return edges_; }

  std::vector<BaFrame>& mutable_frames() { return frames_; }
  std::vector<BaAnchor>& mutable_anchors() { return anchors_; }
  std::vector<BaEdge>& mutable_edges() { return edges_; }

 private:
  Intrinsics camera_;
  std::vector<BaFrame> frames_;
  std::vector<BaAnchor> anchors_;
  std::vector<BaEdge> edges_;
};

// Pixel residual Pi[G_target^-1 G_source Pi^-1(a_k, d_k)] - m_kj for one
// observation of an edge. Throws kBehindCamera.
Eigen::Vector2d ReprojectionResidual(const FactorGraph& graph, int edge,
                                     int observation);

struct ReprojectionCost {
  double cost = 0.0;          // sum of w * |r|^2
  double total_weight = 0.0;  // sum of w over in-front observations
  int num_behind = 0;

  double Rmse() const {
    return total_weight > 0.0 ? std::sqrt(cost / total_weight) : 0.0;
  }
};

ReprojectionCost EvaluateReprojection(const FactorGraph& graph);

struct BaOptions {
  int max_iterations = 100;
  double initial_damping = 1e-4;
  double damping_decrease = 0.5;
  double damping_increase = 4.0;
  double min_damping = 1e-10;
  double max_damping = 1e6;
  double step_tolerance = 1e-12;
  double cost_decrease_tolerance = 1e-14;
  // After convergence, rescale the reconstruction so the mean log-depth
  // matches its initial value. This is an exact gauge move.
  bool restore_mean_log_depth = true;
};

struct BaReport {
  int iterations = 0;
  double initial_rmse = 0.0;
  double final_rmse = 0.0;
  bool converged = false;
  int num_behind = 0;
  // Total cost after initialization and after every accepted step.
  std::vector<double> cost_history;
};

// Levenberg-Marquardt over poses (right-multiplied se(3) updates) and inverse
// depths. Frame 0 and the depth of anchor 0 are held fixed. Depths are
// eliminated with a Schur complement. Throws kInvalidArgument for graphs with
// fewer than 2 frames or 6 anchors, kIndefiniteSystem if the reduced system
// cannot be factored.
BaReport SolveBundleAdjustment(FactorGraph& graph, const BaOptions& options = {});

// Constant-velocity prediction G_last * (G_prev^-1 * G_last). Uses the last
// two poses of `history`; throws kInvalidArgument for fewer than two.
Se3Pose ExtrapolatePose(std::span<const Se3Pose> history);

// Resets every match to the reprojection of its anchor. Returns the number of
// observations that fell behind the target camera; those are left unchanged.
int ReprojectMatches(FactorGraph& graph);

}  // namespace msslam

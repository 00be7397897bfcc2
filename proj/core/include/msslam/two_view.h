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
#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "msslam/geometry.h"

namespace msslam {

struct ImageSize {
  int width = 0;
  int height = 0;
};

// An anchor in one image, its estimated location in the other image and the
// confidence of that estimate.
struct AnchorMatch {
  Eigen::Vector2d anchor = Eigen::Vector2d::Zero();
  Eigen::Vector2d match = Eigen::Vector2d::Zero();
  double weight = 1.0;
};

// Bi-directional correspondences between image 0 and image 1.
// correspondences[0] holds anchors of image 0 matched into image 1,
// correspondences[1] anchors of image 1 matched into image 0.
struct AnchorMatchSet {
  std::array<std::vector<AnchorMatch>, 2> correspondences;
  std::array<Intrinsics, 2> cameras;
  std::array<ImageSize, 2> image_sizes;

  size_t Size() const {
    return correspondences[0].size() + correspondences[1].size();
  }
  // Number of correspondences with strictly positive weight.
  size_t NumWeighted() const;
};

// Affine map of pixel coordinates onto [-1, 1] using the image bounds.
struct PointNormalization {
  Eigen::Matrix3d transform = Eigen::Matrix3d::Identity();

  static PointNormalization ForImage(const ImageSize& size);

  Eigen::Vector2d Apply(const Eigen::Vector2d& pixel) const;
  Eigen::Vector2d Invert(const Eigen::Vector2d& normalized) const;
};

struct NormalizedMatchSet {
  // Points mapped into [-1, 1]; intrinsics premultiplied by the transforms so
  // the set still describes the same geometry.
  AnchorMatchSet set;
  std::array<PointNormalization, 2> normalizations;
};

NormalizedMatchSet NormalizePoints(const AnchorMatchSet& set);

// Weighted homogeneous least squares for the fundamental matrix. Points are
// normalized internally; the result is returned in pixel coordinates,
// projected to rank 2 and scaled to unit Frobenius norm. Throws
// kInsufficientMatches (< 8 weighted matches) or kRankDeficient.
Eigen::Matrix3d WeightedEightPoint(const AnchorMatchSet& set);

// The four pose hypotheses of an essential matrix, in the order
// (t, R1), (t, R2), (-t, R1), (-t, R2).
std::array<RelativePose, 4> DecomposeEssential(const Eigen::Matrix3d& essential);

struct ChiralityResult {
  int index = -1;
  std::array<int, 4> positive_counts{};
};

// Picks the candidate that puts the most positively weighted matches in
// front of both cameras. Throws kAmbiguousCandidate on a tie for the best
// count, including the case of no evidence at all.
ChiralityResult SelectByChirality(const std::array<RelativePose, 4>& candidates,
                                  const AnchorMatchSet& set);

// Candidate minimizing rotation geodesic plus translation-direction angle to
// the reference. Ties resolve to the lowest index.
int SelectByGroundTruth(const std::array<RelativePose, 4>& candidates,
                        const RelativePose& reference);

struct SedEvaluation {
  double cost = 0.0;
  int num_degenerate = 0;
};

// Symmetric epipolar distance: weighted squared point-to-line errors of the
// image-0 anchors under `pose` plus those of the image-1 anchors under the
// inverse pose. Matches with degenerate lines are skipped and counted.
SedEvaluation EvaluateSed(const RelativePose& pose, const AnchorMatchSet& set);

inline double SedCost(const RelativePose& pose, const AnchorMatchSet& set) {
  return EvaluateSed(pose, set).cost;
}

// Local parameterization: xi = (xi_R, xi_t), pose(xi) =
// (exp(xi_R) R, exp(xi_t) t).
struct SedResidual {
  int frame = 0;
  int index = 0;
  double weight = 0.0;
  Eigen::Vector2d error = Eigen::Vector2d::Zero();
  Eigen::Matrix<double, 2, 6> jacobian = Eigen::Matrix<double, 2, 6>::Zero();
};

// Partial derivatives of the point-to-line error with respect to the line.
Eigen::Matrix<double, 2, 3> PointLineErrorJacobian(const Eigen::Vector2d& point,
                                                   const EpipolarLine& line);

// Derivatives of the essential matrix at xi = 0, one 3x3 matrix per local
// coordinate (xi_R first, then xi_t).
std::array<Eigen::Matrix3d, 6> EssentialJacobian(const RelativePose& pose);

RelativePose RetractRelativePose(const RelativePose& pose,
                                 const Eigen::Matrix<double, 6, 1>& xi);

// Residuals and analytic Jacobians at xi = 0. Degenerate lines are skipped.
std::vector<SedResidual> SedJacobian(const RelativePose& pose,
                                     const AnchorMatchSet& set);

struct LmOptions {
  int max_iterations = 50;
  double initial_damping = 1e-4;
  double damping_decrease = 0.5;
  double damping_increase = 4.0;
  double min_damping = 1e-10;
  double max_damping = 1e6;
  double step_tolerance = 1e-10;
  double cost_decrease_tolerance = 1e-12;
};

struct SedSolveReport {
  RelativePose pose;
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  bool converged = false;
  int candidate_index = -1;
  int num_degenerate = 0;
};

// Levenberg-Marquardt on the SED. Only cost-reducing steps are accepted.
// Non-convergence is reported through `converged`, not thrown.
SedSolveReport LmRefineSed(const RelativePose& initial, const AnchorMatchSet& set,
                           const LmOptions& options = {});

// Replaces every match by its orthogonal projection onto its epipolar line.
// Matches with degenerate lines are left unchanged.
AnchorMatchSet ClampToEpipolar(const AnchorMatchSet& set,
                               const RelativePose& pose);

struct TwoViewOptions {
  LmOptions lm;
};

// normalize -> weighted 8-point -> essential -> 4 candidates -> chirality ->
// LM refinement -> clamping. Errors are rethrown prefixed with the stage.
SedSolveReport SolveTwoView(const AnchorMatchSet& set,
                            const TwoViewOptions& options = {},
                            AnchorMatchSet* clamped = nullptr);

}  // namespace msslam

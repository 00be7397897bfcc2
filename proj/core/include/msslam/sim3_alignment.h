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
#include <span>
#include <vector>

#include "msslam/geometry.h"
#include "msslam/trajectory.h"
#include "msslam/two_view.h"

namespace msslam {

constexpr double kDefaultScaleRatioBound = 1.05;
constexpr double kDefaultMinInlierFraction = 0.3;

// A cross-trajectory image pair. Image 0 of `matches` is keyframe `frame_a`
// of trajectory A, image 1 is keyframe `frame_b` of trajectory B. Anchor k of
// image f corresponds to anchor id k of that keyframe's depth records.
struct JoinCandidate {
  int frame_a = 0;
  int frame_b = 0;
  AnchorMatchSet matches;
  RelativePose pose;  // a->b: x_b = R x_a + t
};

struct TriangulatedDepth {
  int anchor = 0;  // index into correspondences[frame]
  double depth = 0.0;
};

struct TriangulatedDepths {
  std::array<std::vector<TriangulatedDepth>, 2> per_frame;
  int num_dropped = 0;

  size_t size() const { return per_frame[0].size() + per_frame[1].size(); }
};

// Unit-baseline depth of every anchor, in its own frame. Degenerate or
// non-positive triangulations are dropped. Throws kTooFewValidDepths when
// fewer than 10 survive.
TriangulatedDepths ComputeTriangulatedDepths(const JoinCandidate& candidate);

struct ScaleEstimate {
  double scale = 0.0;
  int inlier_count = 0;
  double inlier_fraction = 0.0;
  std::vector<int> inliers;
};

// Maximizes the number of k with 1/lambda < d_k / (s * d'_k) < lambda by
// trying every s = d_k / d'_k. Ties resolve to the smaller s. Throws
// kEmptyInput for empty input and kInvalidArgument for mismatched sizes or
// non-positive depths.
ScaleEstimate EstimateScale(std::span<const double> map_depths,
                            std::span<const double> triangulated_depths,
                            double lambda = kDefaultScaleRatioBound);

// Which scale multiplies the unit translation of the similarity. The
// reference-frame scale is the one consistent with the units of the result;
// the other variant is kept for comparison.
enum class Sim3TranslationScale {
  kReferenceScale,
  kQueryScale,
};

// camera_a_from_camera_b with scale s_a / s_b, rotation R^T and translation
// s * (-R^T t). Throws kInsufficientInliers if either inlier fraction is
// below `min_inlier_fraction`.
Sim3Transform BuildSim3(
    const RelativePose& pose, const ScaleEstimate& scale_a,
    const ScaleEstimate& scale_b,
    double min_inlier_fraction = kDefaultMinInlierFraction,
    Sim3TranslationScale translation_scale = Sim3TranslationScale::kReferenceScale);

Sim3Transform ToSim3(const Se3Pose& pose);

// world_a_from_world_b from the camera-level similarity of a candidate pair.
Sim3Transform WorldAlignment(const Se3Pose& world_a_from_camera_a,
                             const Se3Pose& world_b_from_camera_b,
                             const Sim3Transform& camera_a_from_camera_b);

// Maps B through `world_a_from_world_b` and interleaves by timestamp. A
// timestamp present in both inputs is merged into one keyframe when the two
// poses agree to 1e-6 and throws kTimestampCollision otherwise.
Trajectory MergeTrajectories(const Trajectory& a, const Trajectory& b,
                             const Sim3Transform& world_a_from_world_b);

struct JoinOptions {
  TwoViewOptions two_view;
  double lambda = kDefaultScaleRatioBound;
  double min_inlier_fraction = kDefaultMinInlierFraction;
  Sim3TranslationScale translation_scale = Sim3TranslationScale::kReferenceScale;
};

struct JoinResult {
  SedSolveReport two_view;
  ScaleEstimate scale_a;
  ScaleEstimate scale_b;
  Sim3Transform camera_a_from_camera_b;
  Sim3Transform world_a_from_world_b;
  Trajectory merged;
};

// Two-view solve, triangulation, scale voting on both sides, similarity
// construction and merge. A side without any usable depth pair is reported
// as kInsufficientInliers. Matches with zero parallax between identical
// cameras skip the two-view solve: the similarity is then a pure scale voted
// from the map depths of anchors at the same pixel.
JoinResult JoinTrajectories(const Trajectory& a, const Trajectory& b,
                            int frame_a, int frame_b,
                            const AnchorMatchSet& matches,
                            const JoinOptions& options = {});

// Evaluates several candidate pairs and keeps the one whose weaker side has
// the highest inlier fraction. Throws kInsufficientInliers if none succeeds.
JoinResult JoinBestCandidate(const Trajectory& a, const Trajectory& b,
                             std::span<const JoinCandidate> candidates,
                             const JoinOptions& options = {});

}  // namespace msslam

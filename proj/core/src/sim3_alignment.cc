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

#include "msslam/sim3_alignment.h"

#include <algorithm>
#include <string>

#include "msslam/error.h"

namespace msslam {
namespace {

constexpr size_t kMinValidDepths = 10;

}  // namespace

std::optional<double> Keyframe::FindDepth(int anchor_id) const {
  for (const AnchorDepth& entry : anchor_depths) {
    if (entry.anchor_id == anchor_id) return entry.depth;
  }
  return std::nullopt;
}

void Trajectory::Validate() const {
  for (size_t i = 0; i < keyframes.size(); ++i) {
    if (i > 0 && !(keyframes[i].timestamp > keyframes[i - 1].timestamp)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "trajectory timestamps must strictly increase (keyframe " +
                      std::to_string(i) + ")");
    }
    for (const AnchorDepth& entry : keyframes[i].anchor_depths) {
      if (!(entry.depth > 0.0)) {
        throw Error(ErrorCode::kInvalidArgument,
                    "non-positive anchor depth in keyframe " + std::to_string(i));
      }
    }
  }
}

Trajectory TransformTrajectory(const Trajectory& trajectory,
                               const Sim3Transform& transform) {
  Trajectory result = trajectory;
  for (Keyframe& keyframe : result.keyframes) {
    keyframe.world_from_camera = transform.TransformPose(keyframe.world_from_camera);
    for (AnchorDepth& entry : keyframe.anchor_depths) {
      entry.depth *= transform.scale;
    }
  }
  return result;
}

TriangulatedDepths ComputeTriangulatedDepths(const JoinCandidate& candidate) {
  const AnchorMatchSet& set = candidate.matches;
  const std::array<Se3Pose, 2> other_from_own = {
      candidate.pose.ToSe3(), candidate.pose.Inverse().ToSe3()};
  TriangulatedDepths result;
  for (int frame = 0; frame < 2; ++frame) {
    const auto& correspondences = set.correspondences[frame];
    for (size_t k = 0; k < correspondences.size(); ++k) {
      const AnchorMatch& c = correspondences[k];
      try {
        const TriangulatedPoint p =
            TriangulateMidpoint(other_from_own[frame], c.anchor, c.match,
                                set.cameras[frame], set.cameras[1 - frame]);
        if (p.depth_i > 0.0 && p.depth_j > 0.0) {
          result.per_frame[frame].push_back({static_cast<int>(k), p.depth_i});
          continue;
        }
      } catch (const Error& error) {
        if (error.code() != ErrorCode::kParallelRays) throw;
      }
      ++result.num_dropped;
    }
  }
  if (result.size() < kMinValidDepths) {
    throw Error(ErrorCode::kTooFewValidDepths,
                "only " + std::to_string(result.size()) +
                    " valid triangulated depths, need " +
                    std::to_string(kMinValidDepths));
  }
  return result;
}

ScaleEstimate EstimateScale(std::span<const double> map_depths,
                            std::span<const double> triangulated_depths,
                            double lambda) {
  if (map_depths.size() != triangulated_depths.size()) {
    throw Error(ErrorCode::kInvalidArgument, "depth lists differ in length");
  }
  if (map_depths.empty()) {
    throw Error(ErrorCode::kEmptyInput, "no depth pairs to estimate scale from");
  }
  const size_t n = map_depths.size();
  for (size_t k = 0; k < n; ++k) {
    if (!(map_depths[k] > 0.0) || !(triangulated_depths[k] > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "depths must be positive");
    }
  }

  const double lower = 1.0 / lambda;
  const auto count_inliers = [&](double scale) {
    int count = 0;
    for (size_t m = 0; m < n; ++m) {
      const double ratio = map_depths[m] / (scale * triangulated_depths[m]);
      if (lower < ratio && ratio < lambda) ++count;
    }
    return count;
  };

  double best_scale = 0.0;
  int best_count = -1;
  for (size_t k = 0; k < n; ++k) {
    const double scale = map_depths[k] / triangulated_depths[k];
    const int count = count_inliers(scale);
    if (count > best_count || (count == best_count && scale < best_scale)) {
      best_count = count;
      best_scale = scale;
    }
  }

  ScaleEstimate estimate;
  estimate.scale = best_scale;
  for (size_t m = 0; m < n; ++m) {
    const double ratio = map_depths[m] / (best_scale * triangulated_depths[m]);
    if (lower < ratio && ratio < lambda) {
      estimate.inliers.push_back(static_cast<int>(m));
    }
  }
  estimate.inlier_count = static_cast<int>(estimate.inliers.size());
  estimate.inlier_fraction =
      static_cast<double>(estimate.inlier_count) / static_cast<double>(n);
  return estimate;
}

Sim3Transform BuildSim3(const RelativePose& pose, const ScaleEstimate& scale_a,
                        const ScaleEstimate& scale_b, double min_inlier_fraction,
                        Sim3TranslationScale translation_scale) {
  if (scale_a.inlier_fraction < min_inlier_fraction ||
      scale_b.inlier_fraction < min_inlier_fraction) {
    throw Error(ErrorCode::kInsufficientInliers,
                "insufficient scale inliers (" +
                    std::to_string(scale_a.inlier_fraction) + ", " +
                    std::to_string(scale_b.inlier_fraction) + " < " +
                    std::to_string(min_inlier_fraction) + ")");
  }
  const RelativePose b_to_a = pose.Inverse();
  const double translation_factor =
      translation_scale == Sim3TranslationScale::kReferenceScale
          ? scale_a.scale
          : scale_b.scale;
  Sim3Transform transform;
  transform.scale = scale_a.scale / scale_b.scale;
  transform.rotation = b_to_a.rotation;
  transform.translation = translation_factor * b_to_a.translation_dir;
  return transform;
}

Sim3Transform ToSim3(const Se3Pose& pose) {
  Sim3Transform transform;
  transform.rotation = pose.rotation;
  transform.translation = pose.translation;
  return transform;
}

Sim3Transform WorldAlignment(const Se3Pose& world_a_from_camera_a,
                             const Se3Pose& world_b_from_camera_b,
                             const Sim3Transform& camera_a_from_camera_b) {
  return ToSim3(world_a_from_camera_a) * camera_a_from_camera_b *
         ToSim3(world_b_from_camera_b.Inverse());
}

namespace {
constexpr double kDuplicatePoseTolerance = 1e-6;
}  // namespace

Trajectory MergeTrajectories(const Trajectory& a, const Trajectory& b,
                             const Sim3Transform& world_a_from_world_b) {
  const Trajectory mapped = TransformTrajectory(b, world_a_from_world_b);
  Trajectory merged;
  merged.keyframes.reserve(a.size() + b.size());
  merged.keyframes.insert(merged.keyframes.end(), a.keyframes.begin(),
                          a.keyframes.end());
  merged.keyframes.insert(merged.keyframes.end(), mapped.keyframes.begin(),
                          mapped.keyframes.end());
  std::stable_sort(merged.keyframes.begin(), merged.keyframes.end(),
                   [](const Keyframe& lhs, const Keyframe& rhs) {
                     return lhs.timestamp < rhs.timestamp;
                   });
  // A shared timestamp is accepted only when both sides put the camera in
  // the same place (a trajectory joined with itself); A's keyframe is kept.
  std::vector<Keyframe> unique;
  unique.reserve(merged.keyframes.size());
  for (Keyframe& keyframe : merged.keyframes) {
    if (!unique.empty() && keyframe.timestamp == unique.back().timestamp) {
      const Se3Pose& kept = unique.back().world_from_camera;
      const Se3Pose& other = keyframe.world_from_camera;
      const double tolerance = kDuplicatePoseTolerance *
                               std::max(1.0, kept.translation.norm());
      if ((kept.translation - other.translation).norm() > tolerance ||
          RotationAngle(kept.rotation.transpose() * other.rotation) >
              kDuplicatePoseTolerance) {
        throw Error(ErrorCode::kTimestampCollision,
                    "timestamp " + std::to_string(keyframe.timestamp) +
                        " occurs in both trajectories");
      }
      continue;
    }
    unique.push_back(std::move(keyframe));
  }
  merged.keyframes = std::move(unique);
  return merged;
}

namespace {

// Views whose every weighted match sits on its anchor and share intrinsics
// have no baseline: the epipolar geometry is undefined and triangulation
// impossible.
constexpr double kZeroParallaxPx = 1e-6;

bool IsZeroParallax(const AnchorMatchSet& matches) {
  if (matches.cameras[0].Matrix() != matches.cameras[1].Matrix()) return false;
  size_t weighted = 0;
  for (const auto& correspondences : matches.correspondences) {
    for (const AnchorMatch& c : correspondences) {
      if (c.weight <= 0.0) continue;
      if ((c.match - c.anchor).norm() > kZeroParallaxPx) return false;
      ++weighted;
    }
  }
  return weighted > 0;
}

// Coincident cameras: rotation is the identity, translation zero, and the
// scale comes from the ratio of the two map depths along shared rays. Image-1
// anchor j pairs with the image-0 anchor at the same pixel.
JoinResult JoinCoincidentViews(const Trajectory& a, const Trajectory& b,
                               const std::array<const Keyframe*, 2>& keyframes,
                               const AnchorMatchSet& matches,
                               const JoinOptions& options) {
  std::vector<double> depths_a;
  std::vector<double> depths_b;
  const auto& anchors_a = matches.correspondences[0];
  const auto& anchors_b = matches.correspondences[1];
  for (size_t j = 0; j < anchors_b.size(); ++j) {
    if (anchors_b[j].weight <= 0.0) continue;
    const std::optional<double> depth_b =
        keyframes[1]->FindDepth(static_cast<int>(j));
    if (!depth_b) continue;
    for (size_t k = 0; k < anchors_a.size(); ++k) {
      if (anchors_a[k].weight <= 0.0 ||
          (anchors_a[k].anchor - anchors_b[j].anchor).norm() > kZeroParallaxPx) {
        continue;
      }
      const std::optional<double> depth_a =
          keyframes[0]->FindDepth(static_cast<int>(k));
      if (depth_a) {
        depths_a.push_back(*depth_a);
        depths_b.push_back(*depth_b);
      }
      break;
    }
  }
  if (depths_a.empty()) {
    throw Error(ErrorCode::kInsufficientInliers,
                "estimate_scale: no coincident anchors with map depth");
  }
  JoinResult result;
  result.two_view.pose.rotation = Eigen::Matrix3d::Identity();
  result.two_view.pose.translation_dir = Eigen::Vector3d::Zero();
  result.two_view.converged = true;
  result.scale_a = EstimateScale(depths_a, depths_b, options.lambda);
  result.scale_b = result.scale_a;
  if (result.scale_a.inlier_fraction < options.min_inlier_fraction) {
    throw Error(ErrorCode::kInsufficientInliers,
                "build_sim3: inlier fraction below threshold");
  }
  result.camera_a_from_camera_b.scale = result.scale_a.scale;
  result.camera_a_from_camera_b.rotation = Eigen::Matrix3d::Identity();
  result.camera_a_from_camera_b.translation = Eigen::Vector3d::Zero();
  result.world_a_from_world_b = WorldAlignment(
      keyframes[0]->world_from_camera, keyframes[1]->world_from_camera,
      result.camera_a_from_camera_b);
  result.merged = MergeTrajectories(a, b, result.world_a_from_world_b);
  return result;
}

}  // namespace

JoinResult JoinTrajectories(const Trajectory& a, const Trajectory& b,
                            int frame_a, int frame_b,
                            const AnchorMatchSet& matches,
                            const JoinOptions& options) {
  if (frame_a < 0 || frame_a >= static_cast<int>(a.size()) || frame_b < 0 ||
      frame_b >= static_cast<int>(b.size())) {
    throw Error(ErrorCode::kInvalidArgument, "join frame index out of range");
  }
  const std::array<const Keyframe*, 2> keyframes = {&a.keyframes[frame_a],
                                                    &b.keyframes[frame_b]};
  if (IsZeroParallax(matches)) {
    return JoinCoincidentViews(a, b, keyframes, matches, options);
  }
  JoinResult result;
  JoinCandidate candidate{frame_a, frame_b, matches, {}};
  result.two_view = SolveTwoView(matches, options.two_view);
  candidate.pose = result.two_view.pose;

  TriangulatedDepths triangulated;
  try {
    triangulated = ComputeTriangulatedDepths(candidate);
  } catch (const Error& error) {
    RethrowWithStage(error, "triangulated_depths");
  }

  std::array<ScaleEstimate, 2> scales;
  for (int frame = 0; frame < 2; ++frame) {
    std::vector<double> map_depths;
    std::vector<double> unit_depths;
    for (const TriangulatedDepth& entry : triangulated.per_frame[frame]) {
      const std::optional<double> depth = keyframes[frame]->FindDepth(entry.anchor);
      if (!depth) continue;
      map_depths.push_back(*depth);
      unit_depths.push_back(entry.depth);
    }
    if (map_depths.empty()) {
      throw Error(ErrorCode::kInsufficientInliers,
                  "estimate_scale: no depth pairs for image " +
                      std::to_string(frame));
    }
    scales[frame] = EstimateScale(map_depths, unit_depths, options.lambda);
  }
  result.scale_a = scales[0];
  result.scale_b = scales[1];

  result.camera_a_from_camera_b =
      BuildSim3(candidate.pose, result.scale_a, result.scale_b,
                options.min_inlier_fraction, options.translation_scale);
  result.world_a_from_world_b = WorldAlignment(
      keyframes[0]->world_from_camera, keyframes[1]->world_from_camera,
      result.camera_a_from_camera_b);
  result.merged = MergeTrajectories(a, b, result.world_a_from_world_b);
  return result;
}

JoinResult JoinBestCandidate(const Trajectory& a, const Trajectory& b,
                             std::span<const JoinCandidate> candidates,
                             const JoinOptions& options) {
  std::optional<JoinResult> best;
  double best_fraction = -1.0;
  for (const JoinCandidate& candidate : candidates) {
    try {
      JoinResult result = JoinTrajectories(a, b, candidate.frame_a,
                                           candidate.frame_b, candidate.matches,
                                           options);
      const double fraction = std::min(result.scale_a.inlier_fraction,
                                       result.scale_b.inlier_fraction);
      if (fraction > best_fraction) {
        best_fraction = fraction;
        best = std::move(result);
      }
    } catch (const Error& error) {
      // A failed pair is a retry signal; any other error is not.
      switch (error.code()) {
        case ErrorCode::kInsufficientInliers:
        case ErrorCode::kTooFewValidDepths:
        case ErrorCode::kInsufficientMatches:
        case ErrorCode::kRankDeficient:
        case ErrorCode::kAmbiguousCandidate:
          break;
        default:
          throw;
      }
    }
  }
  if (!best) {
    throw Error(ErrorCode::kInsufficientInliers,
                "no candidate pair produced enough scale inliers");
  }
  return std::move(*best);
}

}  // namespace msslam

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

#include "msslam/metrics.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "msslam/error.h"

namespace msslam {
namespace {

double ToDegrees(double radians) { return radians * 180.0 / std::numbers::pi; }

}  // namespace

PoseError ComputePoseError(const RelativePose& estimate,
                           const RelativePose& ground_truth) {
  PoseError error;
  error.rot_deg = ToDegrees(
      RotationAngle(estimate.rotation.transpose() * ground_truth.rotation));
  const double cos_angle = std::clamp(
      estimate.translation_dir.normalized().dot(
          ground_truth.translation_dir.normalized()),
      -1.0, 1.0);
  // acos loses precision near 0; fall back to the cross product there.
  error.trans_deg = cos_angle > 0.9
                        ? ToDegrees(AngleBetween(estimate.translation_dir,
                                                 ground_truth.translation_dir))
                        : ToDegrees(std::acos(cos_angle));
  return error;
}

double PoseAuc(std::span<const double> errors_deg, double threshold_deg) {
  if (errors_deg.empty()) {
    throw Error(ErrorCode::kEmptyInput, "pose AUC needs at least one error");
  }
  if (!(threshold_deg > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "AUC threshold must be positive");
  }
  double area = 0.0;
  for (const double error : errors_deg) {
    area += std::max(0.0, threshold_deg - std::max(0.0, error));
  }
  return 100.0 * area /
         (threshold_deg * static_cast<double>(errors_deg.size()));
}

AteResult ComputeAte(const Trajectory& estimate, const Trajectory& ground_truth,
                     AlignmentMode mode, double max_time_difference) {
  std::vector<double> gt_times;
  gt_times.reserve(ground_truth.size());
  for (const Keyframe& keyframe : ground_truth.keyframes) {
    gt_times.push_back(keyframe.timestamp);
  }

  std::vector<Eigen::Vector3d> source;
  std::vector<Eigen::Vector3d> target;
  for (const Keyframe& keyframe : estimate.keyframes) {
    const long upper = std::lower_bound(gt_times.begin(), gt_times.end(),
                                        keyframe.timestamp) -
                       gt_times.begin();
    long best = -1;
    double best_diff = 0.0;
    for (const long candidate : {upper - 1, upper}) {
      if (candidate < 0 || candidate >= static_cast<long>(gt_times.size())) {
        continue;
      }
      const double diff = std::abs(gt_times[candidate] - keyframe.timestamp);
      if (best < 0 || diff < best_diff) {
        best = candidate;
        best_diff = diff;
      }
    }
    if (best < 0 || best_diff > max_time_difference) continue;
    source.push_back(keyframe.world_from_camera.translation);
    target.push_back(ground_truth.keyframes[best].world_from_camera.translation);
  }

  const int n = static_cast<int>(source.size());
  if (n < 3) {
    throw Error(ErrorCode::kTooFewPairs,
                "only " + std::to_string(n) + " associated poses, need 3");
  }
  Eigen::Matrix3Xd src(3, n);
  Eigen::Matrix3Xd dst(3, n);
  for (int i = 0; i < n; ++i) {
    src.col(i) = source[i];
    dst.col(i) = target[i];
  }
  const Eigen::Matrix4d transform =
      Eigen::umeyama(src, dst, mode == AlignmentMode::kSim3);

  AteResult result;
  result.num_pairs = n;
  const Eigen::Matrix3d scaled_rotation = transform.topLeftCorner<3, 3>();
  result.gt_from_estimate.scale = std::cbrt(scaled_rotation.determinant());
  result.gt_from_estimate.rotation =
      scaled_rotation / result.gt_from_estimate.scale;
  result.gt_from_estimate.translation = transform.topRightCorner<3, 1>();

  double sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    sum_sq += (result.gt_from_estimate * source[i] - target[i]).squaredNorm();
  }
  result.rmse = std::sqrt(sum_sq / n);
  return result;
}

}  // namespace msslam

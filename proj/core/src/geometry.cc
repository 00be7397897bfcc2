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

#include "msslam/geometry.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/SVD>

#include "msslam/error.h"

namespace msslam {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDegenerateLine:
      return "degenerate line";
    case ErrorCode::kBehindCamera:
      return "behind camera";
    case ErrorCode::kParallelRays:
      return "parallel rays";
    case ErrorCode::kRankDeficient:
      return "rank deficient";
    case ErrorCode::kAmbiguousCandidate:
      return "ambiguous candidate";
    case ErrorCode::kInsufficientMatches:
      return "insufficient matches";
    case ErrorCode::kTooFewValidDepths:
      return "too few valid depths";
    case ErrorCode::kEmptyInput:
      return "empty input";
    case ErrorCode::kInsufficientInliers:
      return "insufficient inliers";
    case ErrorCode::kTimestampCollision:
      return "timestamp collision";
    case ErrorCode::kTooFewPairs:
      return "too few pairs";
    case ErrorCode::kIndefiniteSystem:
      return "indefinite system";
    case ErrorCode::kInvalidArgument:
      return "invalid argument";
    case ErrorCode::kVisibilityFailure:
      return "visibility failure";
  }
  return "unknown";
}

void RethrowWithStage(const Error& error, const std::string& stage) {
  throw Error(error.code(), stage + ": " + error.what());
}

Eigen::Matrix3d Intrinsics::Matrix() const {
  Eigen::Matrix3d k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

Eigen::Matrix3d Intrinsics::InverseMatrix() const {
  Eigen::Matrix3d k_inv;
  k_inv << 1.0 / fx, 0.0, -cx / fx, 0.0, 1.0 / fy, -cy / fy, 0.0, 0.0, 1.0;
  return k_inv;
}

Se3Pose Se3Pose::Inverse() const {
  Se3Pose inverse;
  inverse.rotation = rotation.transpose();
  inverse.translation = -(inverse.rotation * translation);
  return inverse;
}

Eigen::Vector3d Se3Pose::operator*(const Eigen::Vector3d& point) const {
  return rotation * point + translation;
}

Se3Pose Se3Pose::operator*(const Se3Pose& other) const {
  Se3Pose result;
  result.rotation = rotation * other.rotation;
  result.translation = rotation * other.translation + translation;
  return result;
}

RelativePose RelativePose::Inverse() const {
  RelativePose inverse;
  inverse.rotation = rotation.transpose();
  inverse.translation_dir = -(inverse.rotation * translation_dir);
  inverse.translation_dir.normalize();
  return inverse;
}

Se3Pose RelativePose::ToSe3(double baseline) const {
  Se3Pose pose;
  pose.rotation = rotation;
  pose.translation = baseline * translation_dir;
  return pose;
}

Sim3Transform Sim3Transform::Inverse() const {
  Sim3Transform inverse;
  inverse.scale = 1.0 / scale;
  inverse.rotation = rotation.transpose();
  inverse.translation = -(inverse.scale * (inverse.rotation * translation));
  return inverse;
}

Eigen::Vector3d Sim3Transform::operator*(const Eigen::Vector3d& point) const {
  return scale * (rotation * point) + translation;
}

Sim3Transform Sim3Transform::operator*(const Sim3Transform& other) const {
  Sim3Transform result;
  result.scale = scale * other.scale;
  result.rotation = rotation * other.rotation;
  result.translation = scale * (rotation * other.translation) + translation;
  return result;
}

Se3Pose Sim3Transform::TransformPose(const Se3Pose& world_from_camera) const {
  Se3Pose result;
  result.rotation = rotation * world_from_camera.rotation;
  result.translation = (*this) * world_from_camera.translation;
  return result;
}

Eigen::Matrix3d Skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

Eigen::Matrix3d So3Exp(const Eigen::Vector3d& omega) {
  const double theta_sq = omega.squaredNorm();
  const double theta = std::sqrt(theta_sq);
  const Eigen::Matrix3d w = Skew(omega);
  double a;
  double b;
  if (theta < 1e-8) {
    a = 1.0 - theta_sq / 6.0;
    b = 0.5 - theta_sq / 24.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta_sq;
  }
  return Eigen::Matrix3d::Identity() + a * w + b * w * w;
}

Eigen::Vector3d So3Log(const Eigen::Matrix3d& rotation) {
  // The quaternion form 2 atan2(|v|, w) v / |v| is well conditioned at every
  // angle, including near pi where acos of the trace is not.
  Eigen::Quaterniond q(rotation);
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  const double sin_half = q.vec().norm();
  if (sin_half == 0.0) {
    return Eigen::Vector3d::Zero();
  }
  return (2.0 * std::atan2(sin_half, q.w()) / sin_half) * q.vec();
}

double RotationAngle(const Eigen::Matrix3d& rotation) {
  const Eigen::Vector3d vee(rotation(2, 1) - rotation(1, 2),
                            rotation(0, 2) - rotation(2, 0),
                            rotation(1, 0) - rotation(0, 1));
  // atan2 keeps precision near 0 where acos of the trace does not.
  return std::atan2(0.5 * vee.norm(), 0.5 * (rotation.trace() - 1.0));
}

double AngleBetween(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

bool IsRotation(const Eigen::Matrix3d& matrix, double tolerance) {
  return (matrix * matrix.transpose() - Eigen::Matrix3d::Identity())
                 .cwiseAbs()
                 .maxCoeff() <= tolerance &&
         std::abs(matrix.determinant() - 1.0) <= tolerance;
}

Eigen::Matrix3d ProjectToRotation(const Eigen::Matrix3d& matrix) {
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      matrix, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() > 0.0
                ? 1.0
                : -1.0;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

Eigen::Matrix3d EssentialFromPose(const RelativePose& pose) {
  return Skew(pose.translation_dir) * pose.rotation;
}

Eigen::Matrix3d FundamentalFromEssential(const Eigen::Matrix3d& essential,
                                         const Intrinsics& camera1,
                                         const Intrinsics& camera2) {
  return camera2.InverseMatrix().transpose() * essential *
         camera1.InverseMatrix();
}

EpipolarLine ComputeEpipolarLine(const Eigen::Vector2d& anchor,
                                 const Eigen::Matrix3d& fundamental) {
  EpipolarLine line;
  line.coeffs = fundamental * anchor.homogeneous();
  return line;
}

EpipolarLine ComputeEpipolarLine(const Eigen::Vector2d& anchor,
                                 const RelativePose& pose,
                                 const Intrinsics& camera1,
                                 const Intrinsics& camera2) {
  return ComputeEpipolarLine(
      anchor,
      FundamentalFromEssential(EssentialFromPose(pose), camera1, camera2));
}

Eigen::Vector2d PointLineError(const Eigen::Vector2d& point,
                               const EpipolarLine& line) {
  if (line.IsDegenerate()) {
    throw Error(ErrorCode::kDegenerateLine,
                "epipolar line has vanishing normal");
  }
  const Eigen::Vector3d& l = line.coeffs;
  const double d = line.NormalNormSq();
  const double zeta = l.x() * point.x() + l.y() * point.y() + l.z();
  return (zeta / d) * Eigen::Vector2d(l.x(), l.y());
}

Eigen::Vector2d Project(const Eigen::Vector3d& point, const Intrinsics& camera) {
  if (point.z() <= 0.0) {
    throw Error(ErrorCode::kBehindCamera, "point is behind the camera");
  }
  return {camera.fx * point.x() / point.z() + camera.cx,
          camera.fy * point.y() / point.z() + camera.cy};
}

Eigen::Vector3d Backproject(const Eigen::Vector2d& pixel, double depth,
                            const Intrinsics& camera) {
  if (depth <= 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "depth must be positive");
  }
  return depth * Eigen::Vector3d((pixel.x() - camera.cx) / camera.fx,
                                 (pixel.y() - camera.cy) / camera.fy, 1.0);
}

TriangulatedPoint TriangulateMidpoint(const Se3Pose& j_from_i,
                                      const Eigen::Vector2d& anchor,
                                      const Eigen::Vector2d& match,
                                      const Intrinsics& camera1,
                                      const Intrinsics& camera2) {
  const Eigen::Vector3d ray1 = camera1.InverseMatrix() * anchor.homogeneous();
  const Eigen::Matrix3d rt = j_from_i.rotation.transpose();
  const Eigen::Vector3d ray2 =
      rt * (camera2.InverseMatrix() * match.homogeneous());
  const Eigen::Vector3d center2 = -(rt * j_from_i.translation);

  const double angle = AngleBetween(ray1, ray2);
  if (angle < kMinTriangulationAngle ||
      std::numbers::pi - angle < kMinTriangulationAngle) {
    throw Error(ErrorCode::kParallelRays, "rays are nearly parallel");
  }

  // Closest points: s*ray1 = center2 + u*ray2 in the least squares sense.
  Eigen::Matrix2d a;
  a << ray1.dot(ray1), -ray1.dot(ray2), -ray1.dot(ray2), ray2.dot(ray2);
  const Eigen::Vector2d b(ray1.dot(center2), -ray2.dot(center2));
  const Eigen::Vector2d su = a.inverse() * b;

  TriangulatedPoint result;
  result.point_i = 0.5 * (su[0] * ray1 + center2 + su[1] * ray2);
  result.depth_i = result.point_i.z();
  result.depth_j = (j_from_i * result.point_i).z();
  return result;
}

double Triangulate(const RelativePose& pose, const Eigen::Vector2d& anchor,
                   const Eigen::Vector2d& match, const Intrinsics& camera1,
                   const Intrinsics& camera2) {
  return TriangulateMidpoint(pose.ToSe3(), anchor, match, camera1, camera2)
      .depth_i;
}

}  // namespace msslam

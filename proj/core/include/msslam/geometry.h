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

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace msslam {

// Pinhole intrinsics in pixels. Distortion is not modeled.
struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  static Intrinsics Identity() { return {}; }

  bool IsValid() const { return fx > 0.0 && fy > 0.0; }
  Eigen::Matrix3d Matrix() const;
  Eigen::Matrix3d InverseMatrix() const;
};

// Rigid transform: x_out = rotation * x_in + translation.
struct Se3Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Se3Pose Identity() { return {}; }

  Se3Pose Inverse() const;
  Eigen::Vector3d operator*(const Eigen::Vector3d& point) const;
  Se3Pose operator*(const Se3Pose& other) const;
};

// Relative pose of a camera pair "i->j" with the convention
// x_j = rotation * x_i + translation_dir, where translation_dir has unit
// norm. Only 5 degrees of freedom are observable from two views.
struct RelativePose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation_dir = Eigen::Vector3d::UnitX();

  // The "j->i" pose. The inverse of a unit-translation pose again has unit
  // translation, up to renormalization.
  RelativePose Inverse() const;
  Se3Pose ToSe3(double baseline = 1.0) const;
};

// Similarity transform: x_out = scale * rotation * x_in + translation.
struct Sim3Transform {
  double scale = 1.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Sim3Transform Identity() { return {}; }

  Sim3Transform Inverse() const;
  Eigen::Vector3d operator*(const Eigen::Vector3d& point) const;
  Sim3Transform operator*(const Sim3Transform& other) const;
  // Maps a world-from-camera pose into the target frame. The camera frame
  // keeps an orthonormal rotation; its length unit is rescaled by `scale`.
  Se3Pose TransformPose(const Se3Pose& world_from_camera) const;
};

// Homogeneous image line l = (l_x, l_y, l_z): l_x*u + l_y*v + l_z = 0.
struct EpipolarLine {
  static constexpr double kDegenerateNormSq = 1e-12;

  Eigen::Vector3d coeffs = Eigen::Vector3d::Zero();

  double NormalNormSq() const {
    return coeffs.x() * coeffs.x() + coeffs.y() * coeffs.y();
  }
  bool IsDegenerate() const { return NormalNormSq() <= kDegenerateNormSq; }
};

Eigen::Matrix3d Skew(const Eigen::Vector3d& v);

// Rodrigues' formula; a Taylor expansion is used below ||omega|| = 1e-8.
Eigen::Matrix3d So3Exp(const Eigen::Vector3d& omega);
Eigen::Vector3d So3Log(const Eigen::Matrix3d& rotation);

// Geodesic angle of a rotation, in radians, within [0, pi].
double RotationAngle(const Eigen::Matrix3d& rotation);
// Angle between two (not necessarily unit) vectors, in radians.
double AngleBetween(const Eigen::Vector3d& a, const Eigen::Vector3d& b);

bool IsRotation(const Eigen::Matrix3d& matrix, double tolerance = 1e-9);
// Closest rotation in the Frobenius sense.
Eigen::Matrix3d ProjectToRotation(const Eigen::Matrix3d& matrix);

// E = [t]_x R for x_j = R x_i + t, so that x_j^T E x_i = 0.
Eigen::Matrix3d EssentialFromPose(const RelativePose& pose);

// F = K2^-T E K1^-1, so that m_j^T F a_i = 0 in pixel coordinates.
Eigen::Matrix3d FundamentalFromEssential(const Eigen::Matrix3d& essential,
                                         const Intrinsics& camera1,
                                         const Intrinsics& camera2);

EpipolarLine ComputeEpipolarLine(const Eigen::Vector2d& anchor,
                                 const Eigen::Matrix3d& fundamental);
EpipolarLine ComputeEpipolarLine(const Eigen::Vector2d& anchor,
                                 const RelativePose& pose,
                                 const Intrinsics& camera1,
                                 const Intrinsics& camera2);

// Vector from the orthogonal projection of `point` onto `line` to `point`.
// Its norm is the point-to-line distance. Throws kDegenerateLine.
Eigen::Vector2d PointLineError(const Eigen::Vector2d& point,
                               const EpipolarLine& line);

// Throws kBehindCamera when point.z() <= 0.
Eigen::Vector2d Project(const Eigen::Vector3d& point, const Intrinsics& camera);
// Throws kInvalidArgument when depth <= 0.
Eigen::Vector3d Backproject(const Eigen::Vector2d& pixel, double depth,
                            const Intrinsics& camera);

struct TriangulatedPoint {
  Eigen::Vector3d point_i;  // midpoint, in frame i
  double depth_i = 0.0;     // z in frame i
  double depth_j = 0.0;     // z in frame j
};

// Midpoint triangulation of the rays through `anchor` (frame i) and `match`
// (frame j). Depths are in units of the pose's translation, i.e. unit
// baseline for a RelativePose. Depths may be negative. Throws kParallelRays
// when the rays are within kMinTriangulationAngle of (anti)parallel.
constexpr double kMinTriangulationAngle = 1e-4;

TriangulatedPoint TriangulateMidpoint(const Se3Pose& j_from_i,
                                      const Eigen::Vector2d& anchor,
                                      const Eigen::Vector2d& match,
                                      const Intrinsics& camera1,
                                      const Intrinsics& camera2);

// Depth of the anchor's 3D point in frame i.
double Triangulate(const RelativePose& pose, const Eigen::Vector2d& anchor,
                   const Eigen::Vector2d& match, const Intrinsics& camera1,
                   const Intrinsics& camera2);

}  // namespace msslam

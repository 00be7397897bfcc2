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

#include "msslam/two_view.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include "msslam/error.h"

namespace msslam {
namespace {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

// Relative singular-value threshold below which the weighted design matrix
// is considered rank deficient.
constexpr double kRankTolerance = 1e-10;

// Fundamental matrices for both directions. Image-1 anchors use the inverse
// pose, whose essential matrix is exactly E^T, hence F^T.
std::array<Eigen::Matrix3d, 2> DirectionalFundamentals(
    const RelativePose& pose, const AnchorMatchSet& set) {
  const Eigen::Matrix3d f = FundamentalFromEssential(
      EssentialFromPose(pose), set.cameras[0], set.cameras[1]);
  return {f, f.transpose()};
}

}  // namespace

size_t AnchorMatchSet::NumWeighted() const {
  size_t count = 0;
  for (const auto& frame : correspondences) {
    count += std::count_if(frame.begin(), frame.end(),
                           [](const AnchorMatch& c) { return c.weight > 0.0; });
  }
  return count;
}

PointNormalization PointNormalization::ForImage(const ImageSize& size) {
  if (size.width <= 0 || size.height <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "image size must be positive");
  }
  PointNormalization normalization;
  normalization.transform << 2.0 / size.width, 0.0, -1.0, 0.0,
      2.0 / size.height, -1.0, 0.0, 0.0, 1.0;
  return normalization;
}

Eigen::Vector2d PointNormalization::Apply(const Eigen::Vector2d& pixel) const {
  return {transform(0, 0) * pixel.x() + transform(0, 2),
          transform(1, 1) * pixel.y() + transform(1, 2)};
}

Eigen::Vector2d PointNormalization::Invert(
    const Eigen::Vector2d& normalized) const {
  return {(normalized.x() - transform(0, 2)) / transform(0, 0),
          (normalized.y() - transform(1, 2)) / transform(1, 1)};
}

NormalizedMatchSet NormalizePoints(const AnchorMatchSet& set) {
  NormalizedMatchSet result;
  result.set = set;
  for (int frame = 0; frame < 2; ++frame) {
    result.normalizations[frame] =
        PointNormalization::ForImage(set.image_sizes[frame]);
  }
  for (int frame = 0; frame < 2; ++frame) {
    const PointNormalization& own = result.normalizations[frame];
    const PointNormalization& other = result.normalizations[1 - frame];
    for (AnchorMatch& c : result.set.correspondences[frame]) {
      c.anchor = own.Apply(c.anchor);
      c.match = other.Apply(c.match);
    }
    const Eigen::Matrix3d k = own.transform * set.cameras[frame].Matrix();
    Intrinsics& camera = result.set.cameras[frame];
    camera.fx = k(0, 0);
    camera.fy = k(1, 1);
    camera.cx = k(0, 2);
    camera.cy = k(1, 2);
    result.set.image_sizes[frame] = {2, 2};
  }
  return result;
}

Eigen::Matrix3d WeightedEightPoint(const AnchorMatchSet& set) {
  const size_t num_weighted = set.NumWeighted();
  if (num_weighted < 8) {
    throw Error(ErrorCode::kInsufficientMatches,
                "insufficient matches: " + std::to_string(num_weighted) +
                    " weighted matches, need at least 8");
  }
  const NormalizedMatchSet normalized = NormalizePoints(set);

  // Each row holds the coefficients of the row-major entries of F in the
  // constraint x1^T F x0 = 0, scaled by the match weight.
  Eigen::MatrixXd design(num_weighted, 9);
  Eigen::Index row = 0;
  for (int frame = 0; frame < 2; ++frame) {
    for (const AnchorMatch& c : normalized.set.correspondences[frame]) {
      if (c.weight <= 0.0) {
        continue;
      }
      const Eigen::Vector3d x0 =
          (frame == 0 ? c.anchor : c.match).homogeneous();
      const Eigen::Vector3d x1 =
          (frame == 0 ? c.match : c.anchor).homogeneous();
      for (int r = 0; r < 3; ++r) {
        for (int col = 0; col < 3; ++col) {
          design(row, 3 * r + col) = c.weight * x1[r] * x0[col];
        }
      }
      ++row;
    }
  }

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeFullV);
  const Eigen::VectorXd& sigma = svd.singularValues();
  const double threshold = kRankTolerance * sigma[0];
  const Eigen::Index rank = (sigma.array() > threshold).count();
  if (rank < 8) {
    throw Error(ErrorCode::kRankDeficient,
                "design matrix has numerical rank " + std::to_string(rank) +
                    " < 8");
  }

  const Eigen::Matrix<double, 9, 1> f_vec = svd.matrixV().col(8);
  Eigen::Matrix3d f_normalized;
  f_normalized << f_vec[0], f_vec[1], f_vec[2], f_vec[3], f_vec[4], f_vec[5],
      f_vec[6], f_vec[7], f_vec[8];

  const Eigen::JacobiSVD<Eigen::Matrix3d> f_svd(
      f_normalized, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d singular = f_svd.singularValues();
  singular[2] = 0.0;
  f_normalized =
      f_svd.matrixU() * singular.asDiagonal() * f_svd.matrixV().transpose();

  Eigen::Matrix3d f = normalized.normalizations[1].transform.transpose() *
                      f_normalized * normalized.normalizations[0].transform;
  return f / f.norm();
}

std::array<RelativePose, 4> DecomposeEssential(
    const Eigen::Matrix3d& essential) {
  Eigen::Matrix3d w;
  w << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  Eigen::Matrix3d z;
  z << 0, 1, 0, -1, 0, 0, 0, 0, 0;

  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      essential, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d& u = svd.matrixU();
  const Eigen::Matrix3d& v = svd.matrixV();

  const Eigen::Matrix3d t_skew = u * z * u.transpose();
  Eigen::Vector3d t(t_skew(2, 1), t_skew(0, 2), t_skew(1, 0));
  t.normalize();

  Eigen::Matrix3d r1 = u * w * v.transpose();
  Eigen::Matrix3d r2 = u * w.transpose() * v.transpose();
  if (r1.determinant() < 0.0) r1 = -r1;
  if (r2.determinant() < 0.0) r2 = -r2;

  return {RelativePose{r1, t}, RelativePose{r2, t}, RelativePose{r1, -t},
          RelativePose{r2, -t}};
}

ChiralityResult SelectByChirality(const std::array<RelativePose, 4>& candidates,
                                  const AnchorMatchSet& set) {
  ChiralityResult result;
  for (int i = 0; i < 4; ++i) {
    const std::array<Se3Pose, 2> j_from_i = {
        candidates[i].ToSe3(), candidates[i].Inverse().ToSe3()};
    int count = 0;
    for (int frame = 0; frame < 2; ++frame) {
      const Intrinsics& own = set.cameras[frame];
      const Intrinsics& other = set.cameras[1 - frame];
      for (const AnchorMatch& c : set.correspondences[frame]) {
        if (c.weight <= 0.0) {
          continue;
        }
        try {
          const TriangulatedPoint p = TriangulateMidpoint(
              j_from_i[frame], c.anchor, c.match, own, other);
          if (p.depth_i > 0.0 && p.depth_j > 0.0) {
            ++count;
          }
        } catch (const Error& error) {
          if (error.code() != ErrorCode::kParallelRays) throw;
        }
      }
    }
    result.positive_counts[i] = count;
  }

  const auto best = std::max_element(result.positive_counts.begin(),
                                     result.positive_counts.end());
  const int num_best = static_cast<int>(std::count(
      result.positive_counts.begin(), result.positive_counts.end(), *best));
  if (*best == 0 || num_best > 1) {
    throw Error(ErrorCode::kAmbiguousCandidate,
                "chirality test cannot separate candidates (best count " +
                    std::to_string(*best) + ")");
  }
  result.index = static_cast<int>(best - result.positive_counts.begin());
  return result;
}

int SelectByGroundTruth(const std::array<RelativePose, 4>& candidates,
                        const RelativePose& reference) {
  int best = 0;
  double best_distance = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 4; ++i) {
    const double distance =
        RotationAngle(candidates[i].rotation.transpose() * reference.rotation) +
        AngleBetween(candidates[i].translation_dir, reference.translation_dir);
    if (distance < best_distance) {
      best_distance = distance;
      best = i;
    }
  }
  return best;
}

SedEvaluation EvaluateSed(const RelativePose& pose, const AnchorMatchSet& set) {
  const auto fundamentals = DirectionalFundamentals(pose, set);
  SedEvaluation evaluation;
  for (int frame = 0; frame < 2; ++frame) {
    for (const AnchorMatch& c : set.correspondences[frame]) {
      const EpipolarLine line = ComputeEpipolarLine(c.anchor, fundamentals[frame]);
      if (line.IsDegenerate()) {
        ++evaluation.num_degenerate;
        continue;
      }
      evaluation.cost += c.weight * PointLineError(c.match, line).squaredNorm();
    }
  }
  return evaluation;
}

Eigen::Matrix<double, 2, 3> PointLineErrorJacobian(const Eigen::Vector2d& point,
                                                   const EpipolarLine& line) {
  const Eigen::Vector3d& l = line.coeffs;
  const double d = line.NormalNormSq();
  const double d2 = d * d;
  const double zeta = l.x() * point.x() + l.y() * point.y() + l.z();

  Eigen::Matrix<double, 2, 3> j;
  j(0, 0) = -2.0 * l.x() * l.x() * zeta / d2 + l.x() * point.x() / d + zeta / d;
  j(0, 1) = -2.0 * l.x() * l.y() * zeta / d2 + l.x() * point.y() / d;
  j(0, 2) = l.x() / d;
  j(1, 0) = -2.0 * l.y() * l.x() * zeta / d2 + l.y() * point.x() / d;
  j(1, 1) = -2.0 * l.y() * l.y() * zeta / d2 + l.y() * point.y() / d + zeta / d;
  j(1, 2) = l.y() / d;
  return j;
}

std::array<Eigen::Matrix3d, 6> EssentialJacobian(const RelativePose& pose) {
  const Eigen::Matrix3d t_skew = Skew(pose.translation_dir);
  std::array<Eigen::Matrix3d, 6> partials;
  for (int k = 0; k < 3; ++k) {
    const Eigen::Vector3d e = Eigen::Vector3d::Unit(k);
    // E(xi_R) = [t]_x exp(xi_R) R.
    partials[k] = t_skew * Skew(e) * pose.rotation;
    // E(xi_t) = [exp(xi_t) t]_x R, with d(exp(xi_t) t)/d(xi_t) = -[t]_x.
    partials[3 + k] = Skew(-t_skew.col(k)) * pose.rotation;
  }
  return partials;
}

RelativePose RetractRelativePose(const RelativePose& pose,
                                 const Eigen::Matrix<double, 6, 1>& xi) {
  RelativePose result;
  result.rotation = So3Exp(xi.head<3>()) * pose.rotation;
  result.translation_dir = So3Exp(xi.tail<3>()) * pose.translation_dir;
  result.translation_dir.normalize();
  return result;
}

std::vector<SedResidual> SedJacobian(const RelativePose& pose,
                                     const AnchorMatchSet& set) {
  const auto fundamentals = DirectionalFundamentals(pose, set);
  const std::array<Eigen::Matrix3d, 6> de = EssentialJacobian(pose);
  const Eigen::Matrix3d k0_inv = set.cameras[0].InverseMatrix();
  const Eigen::Matrix3d k1_inv = set.cameras[1].InverseMatrix();

  // dF/dxi for the forward direction; the reverse direction is transposed.
  std::array<Eigen::Matrix3d, 6> df;
  for (int k = 0; k < 6; ++k) {
    df[k] = k1_inv.transpose() * de[k] * k0_inv;
  }

  std::vector<SedResidual> residuals;
  residuals.reserve(set.Size());
  for (int frame = 0; frame < 2; ++frame) {
    const auto& correspondences = set.correspondences[frame];
    for (size_t i = 0; i < correspondences.size(); ++i) {
      const AnchorMatch& c = correspondences[i];
      const Eigen::Vector3d a = c.anchor.homogeneous();
      const EpipolarLine line = ComputeEpipolarLine(c.anchor, fundamentals[frame]);
      if (line.IsDegenerate()) {
        continue;
      }
      SedResidual residual;
      residual.frame = frame;
      residual.index = static_cast<int>(i);
      residual.weight = c.weight;
      residual.error = PointLineError(c.match, line);
      const Eigen::Matrix<double, 2, 3> derr_dl =
          PointLineErrorJacobian(c.match, line);
      for (int k = 0; k < 6; ++k) {
        const Eigen::Vector3d dl =
            frame == 0 ? Eigen::Vector3d(df[k] * a)
                       : Eigen::Vector3d(df[k].transpose() * a);
        residual.jacobian.col(k) = derr_dl * dl;
      }
      residuals.push_back(residual);
    }
  }
  return residuals;
}

SedSolveReport LmRefineSed(const RelativePose& initial, const AnchorMatchSet& set,
                           const LmOptions& options) {
  SedSolveReport report;
  report.pose = initial;
  SedEvaluation current = EvaluateSed(initial, set);
  report.initial_cost = current.cost;
  report.final_cost = current.cost;
  report.num_degenerate = current.num_degenerate;

  double damping = options.initial_damping;
  while (report.iterations < options.max_iterations) {
    ++report.iterations;

    Matrix6d hessian = Matrix6d::Zero();
    Vector6d gradient = Vector6d::Zero();
    for (const SedResidual& r : SedJacobian(report.pose, set)) {
      hessian.noalias() += r.weight * r.jacobian.transpose() * r.jacobian;
      gradient.noalias() += r.weight * r.jacobian.transpose() * r.error;
    }
    // Floor keeps the Marquardt scaling positive definite even for
    // parameters that no residual observes.
    const Vector6d diagonal =
        hessian.diagonal().cwiseMax(1e-12 * std::max(1.0, hessian.diagonal().maxCoeff()));

    bool accepted = false;
    while (!accepted) {
      Matrix6d damped = hessian;
      damped.diagonal() += damping * diagonal;
      const Eigen::LDLT<Matrix6d> ldlt(damped);
      const Vector6d step = -ldlt.solve(gradient);
      if (!step.allFinite()) {
        damping *= options.damping_increase;
        if (damping > options.max_damping) break;
        continue;
      }
      if (step.norm() < options.step_tolerance) {
        report.converged = true;
        return report;
      }
      const RelativePose candidate = RetractRelativePose(report.pose, step);
      const SedEvaluation evaluation = EvaluateSed(candidate, set);
      if (evaluation.cost < current.cost) {
        const double decrease = current.cost - evaluation.cost;
        report.pose = candidate;
        current = evaluation;
        report.final_cost = current.cost;
        report.num_degenerate = current.num_degenerate;
        damping = std::max(damping * options.damping_decrease,
                           options.min_damping);
        accepted = true;
        if (decrease <
            options.cost_decrease_tolerance * std::max(1.0, current.cost)) {
          report.converged = true;
          return report;
        }
      } else {
        damping *= options.damping_increase;
        if (damping > options.max_damping) break;
      }
    }
    if (!accepted) {
      // Damping saturated without finding a descent step.
      return report;
    }
  }
  return report;
}

AnchorMatchSet ClampToEpipolar(const AnchorMatchSet& set,
                               const RelativePose& pose) {
  const auto fundamentals = DirectionalFundamentals(pose, set);
  AnchorMatchSet clamped = set;
  for (int frame = 0; frame < 2; ++frame) {
    for (AnchorMatch& c : clamped.correspondences[frame]) {
      const EpipolarLine line = ComputeEpipolarLine(c.anchor, fundamentals[frame]);
      if (line.IsDegenerate()) {
        continue;
      }
      c.match -= PointLineError(c.match, line);
    }
  }
  return clamped;
}

SedSolveReport SolveTwoView(const AnchorMatchSet& set,
                            const TwoViewOptions& options,
                            AnchorMatchSet* clamped) {
  if (set.NumWeighted() < 8) {
    throw Error(ErrorCode::kInsufficientMatches,
                "solve_two_view: insufficient matches (" +
                    std::to_string(set.NumWeighted()) + " weighted, need 8)");
  }

  Eigen::Matrix3d fundamental;
  try {
    fundamental = WeightedEightPoint(set);
  } catch (const Error& error) {
    RethrowWithStage(error, "weighted_eight_point");
  }

  const Eigen::Matrix3d essential = set.cameras[1].Matrix().transpose() *
                                    fundamental * set.cameras[0].Matrix();
  const std::array<RelativePose, 4> candidates = DecomposeEssential(essential);

  ChiralityResult chirality;
  try {
    chirality = SelectByChirality(candidates, set);
  } catch (const Error& error) {
    RethrowWithStage(error, "select_by_chirality");
  }

  SedSolveReport report;
  try {
    report = LmRefineSed(candidates[chirality.index], set, options.lm);
  } catch (const Error& error) {
    RethrowWithStage(error, "lm_refine_sed");
  }
  report.candidate_index = chirality.index;

  if (clamped != nullptr) {
    *clamped = ClampToEpipolar(set, report.pose);
  }
  return report;
}

}  // namespace msslam

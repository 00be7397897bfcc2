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

#include "msslam/bundle_adjustment.h"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>

#include "msslam/error.h"

namespace msslam {
namespace {

constexpr double kMinDepthInTarget = 1e-9;

struct Prediction {
  bool in_front = false;
  Eigen::Vector3d point_target = Eigen::Vector3d::Zero();
  Eigen::Vector3d point_source = Eigen::Vector3d::Zero();
  Eigen::Matrix3d target_from_source = Eigen::Matrix3d::Identity();
};

Prediction Predict(const FactorGraph& graph, const BaEdge& edge,
                   const BaAnchor& anchor) {
  const Se3Pose& source = graph.frames()[edge.source].world_from_camera;
  const Se3Pose& target = graph.frames()[edge.target].world_from_camera;
  const Se3Pose target_from_source = target.Inverse() * source;
  Prediction prediction;
  prediction.point_source = Backproject(anchor.pixel, anchor.depth, graph.camera());
  prediction.point_target = target_from_source * prediction.point_source;
  prediction.target_from_source = target_from_source.rotation;
  prediction.in_front = prediction.point_target.z() > kMinDepthInTarget;
  return prediction;
}

Eigen::Matrix<double, 2, 3> ProjectionJacobian(const Eigen::Vector3d& q,
                                               const Intrinsics& camera) {
  const double inv_z = 1.0 / q.z();
  Eigen::Matrix<double, 2, 3> j;
  j << camera.fx * inv_z, 0.0, -camera.fx * q.x() * inv_z * inv_z, 0.0,
      camera.fy * inv_z, -camera.fy * q.y() * inv_z * inv_z;
  return j;
}

double MeanLogDepth(const FactorGraph& graph) {
  double sum = 0.0;
  for (const BaAnchor& anchor : graph.anchors()) {
    sum += std::log(anchor.depth);
  }
  return sum / static_cast<double>(graph.anchors().size());
}

// Rescales the reconstruction about frame 0. Leaves every residual unchanged.
void RescaleAboutFirstFrame(FactorGraph& graph, double factor) {
  const Eigen::Vector3d origin =
      graph.frames().front().world_from_camera.translation;
  for (BaFrame& frame : graph.mutable_frames()) {
    Eigen::Vector3d& t = frame.world_from_camera.translation;
    t = origin + factor * (t - origin);
  }
  for (BaAnchor& anchor : graph.mutable_anchors()) {
    anchor.depth *= factor;
  }
}

}  // namespace

int FactorGraph::AddFrame(const Se3Pose& world_from_camera) {
  frames_.push_back({world_from_camera});
  return static_cast<int>(frames_.size()) - 1;
}

int FactorGraph::AddAnchor(int frame, const Eigen::Vector2d& pixel,
                           double depth) {
  if (frame < 0 || frame >= static_cast<int>(frames_.size())) {
    throw Error(ErrorCode::kInvalidArgument, "anchor references unknown frame");
  }
  if (!(depth > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "anchor depth must be positive");
  }
  anchors_.push_back({frame, pixel, depth});
  return static_cast<int>(anchors_.size()) - 1;
}

int FactorGraph::AddEdge(int source, int target,
                         std::vector<BaObservation> observations) {
  const int num_frames = static_cast<int>(frames_.size());
  if (source < 0 || source >= num_frames || target < 0 || target >= num_frames) {
    throw Error(ErrorCode::kInvalidArgument, "edge references unknown frame");
  }
  if (source == target) {
    throw Error(ErrorCode::kInvalidArgument,
                "self edge (" + std::to_string(source) + ", " +
                    std::to_string(target) + ") rejected");
  }
  for (const BaObservation& observation : observations) {
    if (observation.anchor < 0 ||
        observation.anchor >= static_cast<int>(anchors_.size()) ||
        anchors_[observation.anchor].frame != source) {
      throw Error(ErrorCode::kInvalidArgument,
                  "edge observes an anchor not owned by its source frame");
    }
  }
  edges_.push_back({source, target, std::move(observations)});
  return static_cast<int>(edges_.size()) - 1;
}

Eigen::Vector2d ReprojectionResidual(const FactorGraph& graph, int edge,
                                     int observation) {
  const BaEdge& e = graph.edges().at(edge);
  const BaObservation& o = e.observations.at(observation);
  const Prediction prediction = Predict(graph, e, graph.anchors()[o.anchor]);
  return Project(prediction.point_target, graph.camera()) - o.match;
}

ReprojectionCost EvaluateReprojection(const FactorGraph& graph) {
  ReprojectionCost result;
  for (const BaEdge& edge : graph.edges()) {
    for (const BaObservation& o : edge.observations) {
      const Prediction prediction =
          Predict(graph, edge, graph.anchors()[o.anchor]);
      if (!prediction.in_front) {
        ++result.num_behind;
        continue;
      }
      const Eigen::Vector2d r =
          Project(prediction.point_target, graph.camera()) - o.match;
      result.cost += o.weight * r.squaredNorm();
      result.total_weight += o.weight;
    }
  }
  return result;
}

BaReport SolveBundleAdjustment(FactorGraph& graph, const BaOptions& options) {
  const int num_frames = static_cast<int>(graph.frames().size());
  const int num_anchors = static_cast<int>(graph.anchors().size());
  if (num_frames < 2 || num_anchors < 6) {
    throw Error(ErrorCode::kInvalidArgument,
                "bundle adjustment needs >= 2 frames and >= 6 anchors");
  }

  // Frame 0 and anchor 0 fix the 7-DOF gauge.
  const int num_pose_params = 6 * (num_frames - 1);
  const int num_depth_params = num_anchors - 1;
  const auto pose_offset = [](int frame) { return 6 * (frame - 1); };

  const double initial_mean_log_depth = MeanLogDepth(graph);
  ReprojectionCost current = EvaluateReprojection(graph);

  BaReport report;
  report.initial_rmse = current.Rmse();
  report.final_rmse = current.Rmse();
  report.num_behind = current.num_behind;
  report.cost_history.push_back(current.cost);

  double damping = options.initial_damping;
  const Intrinsics& camera = graph.camera();

  while (report.iterations < options.max_iterations) {
    ++report.iterations;

    Eigen::MatrixXd h_pp = Eigen::MatrixXd::Zero(num_pose_params, num_pose_params);
    Eigen::MatrixXd h_pd = Eigen::MatrixXd::Zero(num_pose_params, num_depth_params);
    Eigen::VectorXd h_dd = Eigen::VectorXd::Zero(num_depth_params);
    Eigen::VectorXd g_p = Eigen::VectorXd::Zero(num_pose_params);
    Eigen::VectorXd g_d = Eigen::VectorXd::Zero(num_depth_params);

    for (const BaEdge& edge : graph.edges()) {
      for (const BaObservation& o : edge.observations) {
        if (o.weight <= 0.0) continue;
        const BaAnchor& anchor = graph.anchors()[o.anchor];
        const Prediction prediction = Predict(graph, edge, anchor);
        if (!prediction.in_front) continue;

        const Eigen::Vector3d& q = prediction.point_target;
        const Eigen::Vector3d& p = prediction.point_source;
        const Eigen::Matrix3d& r_ts = prediction.target_from_source;
        const Eigen::Vector2d residual = Project(q, camera) - o.match;
        const Eigen::Matrix<double, 2, 3> dproj = ProjectionJacobian(q, camera);

        Eigen::Matrix<double, 2, 6> j_source;
        j_source.leftCols<3>() = dproj * (-r_ts * Skew(p));
        j_source.rightCols<3>() = dproj * r_ts;
        Eigen::Matrix<double, 2, 6> j_target;
        j_target.leftCols<3>() = dproj * Skew(q);
        j_target.rightCols<3>() = -dproj;
        // p = ray / rho, so dp/drho = -p / rho = -p * depth.
        const Eigen::Vector2d j_depth = dproj * (r_ts * (-p * anchor.depth));

        const double w = o.weight;
        const int blocks[2] = {edge.source, edge.target};
        const Eigen::Matrix<double, 2, 6>* jacobians[2] = {&j_source, &j_target};
        for (int a = 0; a < 2; ++a) {
          if (blocks[a] == 0) continue;
          const int oa = pose_offset(blocks[a]);
          g_p.segment<6>(oa) += w * jacobians[a]->transpose() * residual;
          for (int b = 0; b < 2; ++b) {
            if (blocks[b] == 0) continue;
            const int ob = pose_offset(blocks[b]);
            h_pp.block<6, 6>(oa, ob) +=
                w * jacobians[a]->transpose() * (*jacobians[b]);
          }
          if (o.anchor != 0) {
            h_pd.block<6, 1>(oa, o.anchor - 1) +=
                w * jacobians[a]->transpose() * j_depth;
          }
        }
        if (o.anchor != 0) {
          h_dd[o.anchor - 1] += w * j_depth.squaredNorm();
          g_d[o.anchor - 1] += w * j_depth.dot(residual);
        }
      }
    }

    const double max_diag = std::max(
        {1.0, num_pose_params > 0 ? h_pp.diagonal().maxCoeff() : 0.0,
         num_depth_params > 0 ? h_dd.maxCoeff() : 0.0});
    const double floor = 1e-12 * max_diag;
    const Eigen::VectorXd pose_diag = h_pp.diagonal().cwiseMax(floor);
    const Eigen::VectorXd depth_diag = h_dd.cwiseMax(floor);

    bool accepted = false;
    bool finished = false;
    while (!accepted) {
      Eigen::MatrixXd a_pp = h_pp;
      a_pp.diagonal() += damping * pose_diag;
      const Eigen::VectorXd a_dd = h_dd + damping * depth_diag;
      const Eigen::VectorXd a_dd_inv = a_dd.cwiseInverse();

      const Eigen::MatrixXd h_pd_scaled = h_pd * a_dd_inv.asDiagonal();
      const Eigen::MatrixXd schur = a_pp - h_pd_scaled * h_pd.transpose();
      const Eigen::VectorXd rhs = -g_p + h_pd_scaled * g_d;
      const Eigen::LLT<Eigen::MatrixXd> llt(schur);
      if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::kIndefiniteSystem,
                    "damped reduced camera system failed to factor");
      }
      const Eigen::VectorXd step_pose = llt.solve(rhs);
      const Eigen::VectorXd step_depth =
          a_dd_inv.cwiseProduct(-g_d - h_pd.transpose() * step_pose);

      const double step_norm =
          std::sqrt(step_pose.squaredNorm() + step_depth.squaredNorm());
      if (step_norm < options.step_tolerance) {
        report.converged = true;
        finished = true;
        break;
      }

      FactorGraph candidate = graph;
      bool valid = true;
      for (int f = 1; f < num_frames; ++f) {
        Se3Pose& pose = candidate.mutable_frames()[f].world_from_camera;
        const Eigen::Matrix<double, 6, 1> delta =
            step_pose.segment<6>(pose_offset(f));
        pose.translation += pose.rotation * delta.tail<3>();
        pose.rotation = pose.rotation * So3Exp(delta.head<3>());
      }
      for (int k = 1; k < num_anchors && valid; ++k) {
        BaAnchor& anchor = candidate.mutable_anchors()[k];
        const double inverse_depth = 1.0 / anchor.depth + step_depth[k - 1];
        if (!(inverse_depth > 0.0)) {
          valid = false;
        } else {
          anchor.depth = 1.0 / inverse_depth;
        }
      }

      const ReprojectionCost evaluation =
          valid ? EvaluateReprojection(candidate) : ReprojectionCost{};
      if (valid && evaluation.num_behind <= current.num_behind &&
          evaluation.cost < current.cost) {
        const double decrease = current.cost - evaluation.cost;
        graph = std::move(candidate);
        current = evaluation;
        report.cost_history.push_back(current.cost);
        damping = std::max(damping * options.damping_decrease,
                           options.min_damping);
        accepted = true;
        if (decrease <
            options.cost_decrease_tolerance * std::max(1.0, current.cost)) {
          report.converged = true;
          finished = true;
        }
      } else {
        damping *= options.damping_increase;
        if (damping > options.max_damping) {
          finished = true;
          break;
        }
      }
    }
    if (finished) break;
  }

  if (options.restore_mean_log_depth) {
    RescaleAboutFirstFrame(graph,
                           std::exp(initial_mean_log_depth - MeanLogDepth(graph)));
  }
  const ReprojectionCost final_cost = EvaluateReprojection(graph);
  report.final_rmse = final_cost.Rmse();
  report.num_behind = final_cost.num_behind;
  return report;
}

Se3Pose ExtrapolatePose(std::span<const Se3Pose> history) {
  if (history.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "pose extrapolation needs at least two poses");
  }
  const Se3Pose& last = history[history.size() - 1];
  const Se3Pose& previous = history[history.size() - 2];
  Se3Pose next = last * (previous.Inverse() * last);
  next.rotation = ProjectToRotation(next.rotation);
  return next;
}

int ReprojectMatches(FactorGraph& graph) {
  int num_behind = 0;
  for (BaEdge& edge : graph.mutable_edges()) {
    for (BaObservation& o : edge.observations) {
      const Prediction prediction =
          Predict(graph, edge, graph.anchors()[o.anchor]);
      if (!prediction.in_front) {
        ++num_behind;
        continue;
      }
      o.match = Project(prediction.point_target, graph.camera());
    }
  }
  return num_behind;
}

}  // namespace msslam

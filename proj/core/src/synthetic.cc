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

#include "msslam/synthetic.h"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>

#include "msslam/error.h"
#include "msslam/metrics.h"

namespace msslam {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

Eigen::Vector3d RandomUnitVector(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Vector3d v;
  do {
    v = Eigen::Vector3d(normal(rng), normal(rng), normal(rng));
  } while (v.norm() < 1e-6);
  return v.normalized();
}

bool InImage(const Eigen::Vector2d& pixel, const ImageSize& size) {
  return pixel.x() >= 0.0 && pixel.x() <= size.width && pixel.y() >= 0.0 &&
         pixel.y() <= size.height;
}

bool Visible(const Eigen::Vector3d& point_camera, const Intrinsics& camera,
             const ImageSize& size) {
  return point_camera.z() > 1e-3 && InImage(Project(point_camera, camera), size);
}

Eigen::Vector2d TruncatedGaussian(double sigma, std::mt19937_64& rng) {
  if (sigma <= 0.0) return Eigen::Vector2d::Zero();
  std::normal_distribution<double> normal(0.0, sigma);
  Eigen::Vector2d noise;
  do {
    noise = Eigen::Vector2d(normal(rng), normal(rng));
  } while (noise.norm() > 3.0 * sigma);
  return noise;
}

// Adds pixel noise, outliers and weights to every correspondence in place.
std::array<std::vector<bool>, 2> ApplyNoise(const NoiseModel& noise,
                                            AnchorMatchSet& set,
                                            std::mt19937_64& rng) {
  std::vector<std::pair<int, int>> all;
  for (int frame = 0; frame < 2; ++frame) {
    for (size_t i = 0; i < set.correspondences[frame].size(); ++i) {
      all.emplace_back(frame, static_cast<int>(i));
    }
  }
  const size_t num_outliers = static_cast<size_t>(
      std::floor(noise.outlier_fraction * static_cast<double>(all.size()) + 1e-9));
  std::vector<size_t> order(all.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  std::array<std::vector<bool>, 2> is_outlier;
  for (int frame = 0; frame < 2; ++frame) {
    is_outlier[frame].assign(set.correspondences[frame].size(), false);
  }
  for (size_t i = 0; i < num_outliers; ++i) {
    const auto [frame, index] = all[order[i]];
    is_outlier[frame][index] = true;
  }

  std::uniform_real_distribution<double> box(noise.outlier_box_min,
                                             noise.outlier_box_max);
  for (int frame = 0; frame < 2; ++frame) {
    for (size_t i = 0; i < set.correspondences[frame].size(); ++i) {
      AnchorMatch& c = set.correspondences[frame][i];
      if (is_outlier[frame][i]) {
        const double x = box(rng);
        const double y = box(rng);
        c.match = Eigen::Vector2d(x, y);
        c.weight = noise.weight_policy == WeightPolicy::kOracle
                       ? noise.outlier_weight
                       : 1.0;
      } else {
        const ImageSize& size = set.image_sizes[1 - frame];
        const Eigen::Vector2d exact = c.match;
        int attempts = 0;
        do {
          c.match = exact + TruncatedGaussian(noise.gaussian_sigma, rng);
        } while (!InImage(c.match, size) && ++attempts < 100);
        if (!InImage(c.match, size)) c.match = exact;
        c.weight = 1.0;
      }
    }
  }
  return is_outlier;
}

Eigen::Matrix3d LookAt(const Eigen::Vector3d& position,
                       const Eigen::Vector3d& target, double roll) {
  const Eigen::Vector3d z = (target - position).normalized();
  const Eigen::Vector3d x = Eigen::Vector3d::UnitY().cross(z).normalized();
  const Eigen::Vector3d y = z.cross(x);
  Eigen::Matrix3d world_from_camera;
  world_from_camera << x, y, z;
  return world_from_camera * So3Exp(Eigen::Vector3d(0.0, 0.0, roll));
}

}  // namespace

Intrinsics StandardCamera() { return {256.0, 256.0, 256.0, 256.0}; }

ImageSize StandardImageSize() { return {512, 512}; }

void NoiseModel::Validate() const {
  if (gaussian_sigma < 0.0 || outlier_fraction < 0.0 ||
      outlier_fraction >= 1.0 || outlier_box_max < outlier_box_min) {
    throw Error(ErrorCode::kInvalidArgument, "noise model out of range");
  }
}

SyntheticTwoView MakeTwoView(uint64_t seed, const TwoViewSceneOptions& options) {
  if (options.num_points < 8) {
    throw Error(ErrorCode::kInvalidArgument, "two-view scene needs >= 8 points");
  }
  options.noise.Validate();
  std::mt19937_64 rng(seed);

  SyntheticTwoView scene;
  scene.baseline = options.baseline;
  AnchorMatchSet& set = scene.matches;
  set.cameras = {StandardCamera(), StandardCamera()};
  set.image_sizes = {StandardImageSize(), StandardImageSize()};

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double angle = options.max_rotation_deg * kDegToRad * unit(rng);
  const Eigen::Matrix3d rotation = So3Exp(angle * RandomUnitVector(rng));
  const Eigen::Vector3d center = options.baseline * RandomUnitVector(rng);
  Se3Pose j_from_i;
  j_from_i.rotation = rotation;
  j_from_i.translation = -(rotation * center);
  scene.gt_pose.rotation = rotation;
  scene.gt_pose.translation_dir = j_from_i.translation.normalized();
  const Se3Pose i_from_j = j_from_i.Inverse();

  const int counts[2] = {(options.num_points + 1) / 2, options.num_points / 2};
  for (int frame = 0; frame < 2; ++frame) {
    const Intrinsics& own = set.cameras[frame];
    const Intrinsics& other = set.cameras[1 - frame];
    const ImageSize& own_size = set.image_sizes[frame];
    const ImageSize& other_size = set.image_sizes[1 - frame];
    const Se3Pose& other_from_own = frame == 0 ? j_from_i : i_from_j;
    std::uniform_real_distribution<double> u(0.0, own_size.width);
    std::uniform_real_distribution<double> v(0.0, own_size.height);
    std::uniform_real_distribution<double> depth(
        options.min_depth * options.baseline, options.max_depth * options.baseline);
    for (int k = 0; k < counts[frame]; ++k) {
      bool found = false;
      for (int attempt = 0; attempt < options.max_attempts_per_point; ++attempt) {
        const Eigen::Vector2d pixel(u(rng), v(rng));
        const Eigen::Vector3d point = Backproject(pixel, depth(rng), own);
        const Eigen::Vector3d point_other = other_from_own * point;
        if (!Visible(point_other, other, other_size)) continue;
        set.correspondences[frame].push_back(
            {pixel, Project(point_other, other), 1.0});
        scene.points[frame].push_back(frame == 0 ? point : point_other);
        found = true;
        break;
      }
      if (!found) {
        throw Error(ErrorCode::kVisibilityFailure,
                    "could not sample a point visible in both images");
      }
    }
  }
  scene.is_outlier = ApplyNoise(options.noise, set, rng);
  return scene;
}

SyntheticTrajectoryPair MakeTrajectoryPair(uint64_t seed,
                                           const TrajectoryPairOptions& options) {
  if (options.overlap_region.IsEmpty()) {
    throw Error(ErrorCode::kInvalidArgument, "overlap region is empty");
  }
  if (options.num_frames < 2 || options.anchors_per_frame < 10) {
    throw Error(ErrorCode::kInvalidArgument,
                "trajectory pair needs >= 2 frames and >= 10 anchors per frame");
  }
  options.noise.Validate();
  std::mt19937_64 rng(seed);
  const Intrinsics camera = StandardCamera();
  const ImageSize image_size = StandardImageSize();
  const Box3& region = options.overlap_region;
  const Eigen::Vector3d target = 0.5 * (region.min + region.max);
  const int n = options.num_frames;

  // Ground-truth poses of both trajectories, in world A.
  std::array<std::vector<Se3Pose>, 2> poses;
  for (int k = 0; k < n; ++k) {
    const double tau = static_cast<double>(k) / (n - 1);
    const double wave = 2.0 * std::numbers::pi * tau;
    const Eigen::Vector3d position_a(-3.0 + 2.5 * tau, 0.2 * std::sin(wave),
                                     0.5 * tau);
    const Eigen::Vector3d position_b(0.5 + 2.5 * tau, 0.2 * std::cos(wave) - 0.2,
                                     0.5 * (1.0 - tau));
    poses[0].push_back({LookAt(position_a, target, 0.05 * std::sin(1.5 * wave)),
                        position_a});
    poses[1].push_back({LookAt(position_b, target, 0.05 * std::cos(1.5 * wave)),
                        position_b});
  }

  const auto visible_everywhere = [&](const Eigen::Vector3d& world) {
    for (const auto& trajectory : poses) {
      for (const Se3Pose& pose : trajectory) {
        if (!Visible(pose.Inverse() * world, camera, image_size)) return false;
      }
    }
    return true;
  };

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double scale = options.world_a_from_world_b.scale;
  const Sim3Transform world_b_from_world_a = options.world_a_from_world_b.Inverse();

  SyntheticTrajectoryPair result;
  result.world_a_from_world_b = options.world_a_from_world_b;
  // World points of every keyframe's anchors, indexed [trajectory][frame][id].
  std::array<std::vector<std::vector<Eigen::Vector3d>>, 2> anchor_points;
  std::array<Trajectory*, 2> outputs = {&result.a, &result.b};
  for (int t = 0; t < 2; ++t) {
    anchor_points[t].resize(n);
    for (int k = 0; k < n; ++k) {
      Keyframe keyframe;
      keyframe.timestamp =
          (t == 0 ? 0.0 : options.b_time_offset) + k * options.time_step;
      const Se3Pose& pose = poses[t][k];
      const Se3Pose camera_from_world = pose.Inverse();
      for (int id = 0; id < options.anchors_per_frame; ++id) {
        Eigen::Vector3d world;
        int attempts = 0;
        do {
          if (++attempts > 10000) {
            throw Error(ErrorCode::kVisibilityFailure,
                        "overlap region is not visible from every camera");
          }
          world = region.min.array() +
                  (region.max - region.min).array() *
                      Eigen::Array3d(unit(rng), unit(rng), unit(rng));
        } while (!visible_everywhere(world));
        anchor_points[t][k].push_back(world);
        double depth = (camera_from_world * world).z();
        if (options.depth_noise > 0.0) {
          std::normal_distribution<double> depth_noise(0.0, options.depth_noise);
          depth *= std::max(0.05, 1.0 + depth_noise(rng));
        }
        // Trajectory B measures lengths in its own units.
        keyframe.anchor_depths.push_back({id, t == 0 ? depth : depth / scale});
      }
      keyframe.world_from_camera =
          t == 0 ? pose : world_b_from_world_a.TransformPose(pose);
      outputs[t]->keyframes.push_back(std::move(keyframe));
    }
  }
  result.b_in_world_a = result.b;
  for (int k = 0; k < n; ++k) {
    Keyframe& keyframe = result.b_in_world_a.keyframes[k];
    keyframe.world_from_camera = poses[1][k];
    for (AnchorDepth& entry : keyframe.anchor_depths) entry.depth *= scale;
  }

  const auto make_matches = [&](int frame_a, int frame_b) {
    AnchorMatchSet set;
    set.cameras = {camera, camera};
    set.image_sizes = {image_size, image_size};
    const std::array<const Se3Pose*, 2> frame_poses = {&poses[0][frame_a],
                                                       &poses[1][frame_b]};
    const std::array<int, 2> frame_index = {frame_a, frame_b};
    for (int f = 0; f < 2; ++f) {
      const Se3Pose own_from_world = frame_poses[f]->Inverse();
      const Se3Pose other_from_world = frame_poses[1 - f]->Inverse();
      for (const Eigen::Vector3d& world : anchor_points[f][frame_index[f]]) {
        set.correspondences[f].push_back(
            {Project(own_from_world * world, camera),
             Project(other_from_world * world, camera), 1.0});
      }
    }
    ApplyNoise(options.noise, set, rng);
    return set;
  };

  std::vector<std::pair<int, int>> covisible = {{n - 1, 0}, {n / 2, n / 2}, {0, n - 1}};
  std::sort(covisible.begin(), covisible.end());
  covisible.erase(std::unique(covisible.begin(), covisible.end()), covisible.end());
  for (const auto& [i, j] : covisible) {
    result.pairs.push_back({i, j, make_matches(i, j), true});
  }
  std::uniform_real_distribution<double> u(0.0, image_size.width);
  std::uniform_real_distribution<double> v(0.0, image_size.height);
  for (int d = 0; d < options.num_distractors; ++d) {
    const int i = d % n;
    const int j = (3 * d + 1) % n;
    AnchorMatchSet set = make_matches(i, j);
    for (auto& frame : set.correspondences) {
      for (AnchorMatch& c : frame) {
        c.match = Eigen::Vector2d(u(rng), v(rng));
        c.weight = 1.0;
      }
    }
    result.pairs.push_back({i, j, std::move(set), false});
  }

  Eigen::AlignedBox3d bounds(region.min, region.max);
  for (const auto& trajectory : poses) {
    for (const Se3Pose& pose : trajectory) bounds.extend(pose.translation);
  }
  result.scene_diameter = bounds.diagonal().norm();
  return result;
}

BaScene MakeBaScene(uint64_t seed, const BaSceneOptions& options) {
  if (options.num_frames < 2 || options.num_anchors < options.num_frames) {
    throw Error(ErrorCode::kInvalidArgument, "BA scene needs 2 frames and 1 anchor each");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Intrinsics camera = StandardCamera();
  const ImageSize size = StandardImageSize();

  BaScene scene;
  scene.graph = FactorGraph(camera);
  for (int f = 0; f < options.num_frames; ++f) {
    Se3Pose pose;
    pose.rotation =
        So3Exp(options.max_rotation_deg * kDegToRad * unit(rng) * RandomUnitVector(rng));
    pose.translation = Eigen::Vector3d(options.frame_spacing * f, 0.0, 0.0);
    scene.world_from_camera.push_back(pose);
    scene.graph.AddFrame(pose);
  }

  // Points 4 to 8 units ahead of the rig, retried until every frame sees them.
  std::vector<std::vector<BaObservation>> observations(
      options.num_frames * options.num_frames);
  for (int k = 0; k < options.num_anchors; ++k) {
    const int owner = k % options.num_frames;
    const Se3Pose& owner_pose = scene.world_from_camera[owner];
    Eigen::Vector2d pixel;
    double depth = 0.0;
    std::vector<Eigen::Vector2d> projections;
    for (int attempt = 0;; ++attempt) {
      if (attempt > 10000) {
        throw Error(ErrorCode::kVisibilityFailure, "BA scene point not visible");
      }
      pixel = Eigen::Vector2d(40.0 + unit(rng) * (size.width - 80.0),
                              40.0 + unit(rng) * (size.height - 80.0));
      depth = 4.0 + 4.0 * unit(rng);
      const Eigen::Vector3d world = owner_pose * Backproject(pixel, depth, camera);
      projections.assign(options.num_frames, Eigen::Vector2d::Zero());
      bool visible = true;
      for (int f = 0; f < options.num_frames && visible; ++f) {
        const Eigen::Vector3d p = scene.world_from_camera[f].Inverse() * world;
        visible = Visible(p, camera, size);
        if (visible) projections[f] = Project(p, camera);
      }
      if (visible) break;
    }
    const int anchor = scene.graph.AddAnchor(owner, pixel, depth);
    scene.depths.push_back(depth);
    for (int f = 0; f < options.num_frames; ++f) {
      if (f == owner) continue;
      observations[owner * options.num_frames + f].push_back(
          {anchor, projections[f], 1.0});
    }
  }
  for (int i = 0; i < options.num_frames; ++i) {
    for (int j = 0; j < options.num_frames; ++j) {
      if (i == j) continue;
      scene.graph.AddEdge(i, j, std::move(observations[i * options.num_frames + j]));
    }
  }
  return scene;
}

void PerturbBaScene(FactorGraph& graph, double rotation_deg, double depth_fraction,
                    double frame_spacing, std::mt19937_64& rng) {
  std::bernoulli_distribution sign(0.5);
  auto& frames = graph.mutable_frames();
  for (size_t f = 1; f < frames.size(); ++f) {
    Se3Pose& pose = frames[f].world_from_camera;
    pose.rotation = pose.rotation * So3Exp(rotation_deg * kDegToRad * RandomUnitVector(rng));
    pose.translation += 0.01 * rotation_deg * frame_spacing * RandomUnitVector(rng);
  }
  auto& anchors = graph.mutable_anchors();
  for (size_t k = 1; k < anchors.size(); ++k) {
    anchors[k].depth *= sign(rng) ? 1.0 + depth_fraction : 1.0 - depth_fraction;
  }
}

Sim3Transform RandomSim3(std::mt19937_64& rng, double min_scale,
                         double max_scale) {
  if (!(min_scale > 0.0 && max_scale >= min_scale)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid scale range");
  }
  std::uniform_real_distribution<double> log_scale(std::log(min_scale),
                                                   std::log(max_scale));
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  std::uniform_real_distribution<double> offset(-1.0, 1.0);
  Sim3Transform transform;
  transform.scale = std::exp(log_scale(rng));
  transform.rotation = So3Exp(angle(rng) * RandomUnitVector(rng));
  transform.translation = Eigen::Vector3d(offset(rng), offset(rng), offset(rng));
  return transform;
}

const char* BasinModeName(BasinMode mode) {
  return mode == BasinMode::kSedOnly ? "sed_only" : "preconditioned";
}

RelativePose PerturbPose(const RelativePose& pose, double angle,
                         std::mt19937_64& rng) {
  RelativePose perturbed;
  perturbed.rotation = So3Exp(angle * RandomUnitVector(rng)) * pose.rotation;
  const Eigen::Vector3d t = pose.translation_dir.normalized();
  Eigen::Vector3d axis;
  do {
    const Eigen::Vector3d v = RandomUnitVector(rng);
    axis = v - v.dot(t) * t;
  } while (axis.norm() < 1e-3);
  perturbed.translation_dir = So3Exp(angle * axis.normalized()) * t;
  return perturbed;
}

std::vector<BasinRow> RunBasinExperiment(std::span<const uint64_t> seeds,
                                         std::span<const double> init_deg_grid,
                                         BasinMode mode,
                                         const BasinOptions& options) {
  std::vector<SyntheticTwoView> scenes;
  scenes.reserve(seeds.size());
  for (const uint64_t seed : seeds) {
    scenes.push_back(MakeTwoView(seed, options.scene));
  }

  std::vector<BasinRow> rows;
  rows.reserve(seeds.size() * init_deg_grid.size());
  for (size_t g = 0; g < init_deg_grid.size(); ++g) {
    for (size_t s = 0; s < seeds.size(); ++s) {
      const SyntheticTwoView& scene = scenes[s];
      std::mt19937_64 rng(seeds[s] * 0x9E3779B97F4A7C15ULL + g + 1);
      const RelativePose init =
          PerturbPose(scene.gt_pose, init_deg_grid[g] * kDegToRad, rng);

      BasinRow row;
      row.init_deg = init_deg_grid[g];
      row.seed = seeds[s];
      row.mode = mode;
      try {
        const SedSolveReport report =
            mode == BasinMode::kSedOnly
                ? LmRefineSed(init, scene.matches, options.lm)
                : SolveTwoView(scene.matches, TwoViewOptions{options.lm});
        const PoseError error = ComputePoseError(report.pose, scene.gt_pose);
        row.final_rot_deg = error.rot_deg;
        row.final_trans_deg = error.trans_deg;
        row.converged = error.Max() < kBasinSuccessDeg;
      } catch (const Error&) {
        row.final_rot_deg = 180.0;
        row.final_trans_deg = 180.0;
        row.converged = false;
      }
      rows.push_back(row);
    }
  }
  return rows;
}

std::string BasinRowsToCsv(std::span<const BasinRow> rows) {
  std::string csv = "init_deg,seed,mode,final_rot_deg,final_trans_deg,converged\n";
  char line[256];
  for (const BasinRow& row : rows) {
    std::snprintf(line, sizeof(line), "%.6f,%" PRIu64 ",%s,%.9f,%.9f,%d\n",
                  row.init_deg, row.seed, BasinModeName(row.mode),
                  row.final_rot_deg, row.final_trans_deg, row.converged ? 1 : 0);
    csv += line;
  }
  return csv;
}

}  // namespace msslam

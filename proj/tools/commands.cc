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

#include "commands.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include <Eigen/Geometry>

#include "CLI11.hpp"
#include "formats.h"
#include "msslam/metrics.h"
#include "msslam/synthetic.h"

namespace msslam::cli {
namespace {

using nlohmann::ordered_json;

std::string Format(const char* format, double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), format, value);
  return buffer;
}

// Quaternion with non-negative w, so equal rotations print identically.
Eigen::Quaterniond CanonicalQuaternion(const Eigen::Matrix3d& rotation) {
  Eigen::Quaterniond q(rotation);
  q.normalize();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  return q;
}

ordered_json QuaternionJson(const Eigen::Matrix3d& rotation) {
  const Eigen::Quaterniond q = CanonicalQuaternion(rotation);
  return {q.w(), q.x(), q.y(), q.z()};
}

ordered_json VectorJson(const Eigen::Vector3d& v) {
  return {v.x(), v.y(), v.z()};
}

ordered_json Sim3TransformJson(const Sim3Transform& transform) {
  ordered_json j;
  j["scale"] = transform.scale;
  j["quaternion_wxyz"] = QuaternionJson(transform.rotation);
  j["translation"] = VectorJson(transform.translation);
  return j;
}

std::string Dump(const ordered_json& j) { return j.dump(2) + "\n"; }

std::string ToString(const AnchorMatchSet& set) {
  std::ostringstream stream;
  io::WriteMatchFile(stream, set);
  return stream.str();
}

std::string TumString(const Trajectory& trajectory) {
  std::ostringstream stream;
  io::WriteTum(stream, trajectory);
  return stream.str();
}

std::string DepthString(const Trajectory& trajectory) {
  std::ostringstream stream;
  io::WriteDepthSidecar(stream, trajectory);
  return stream.str();
}

NoiseModel MakeNoise(double sigma, double outliers, double outlier_weight,
                     bool uniform_weights) {
  NoiseModel noise;
  noise.gaussian_sigma = sigma;
  noise.outlier_fraction = outliers;
  noise.outlier_weight = outlier_weight;
  noise.weight_policy =
      uniform_weights ? WeightPolicy::kUniform : WeightPolicy::kOracle;
  noise.Validate();
  return noise;
}

// Options shared by every subcommand; each callback fills `status`.
struct Context {
  std::ostream& out;
  std::ostream& err;
  int status = kExitOk;
};

struct TwoViewArgs {
  std::string matches;
  std::string json;
  int max_iters = 50;
};

void CmdTwoView(const TwoViewArgs& args, Context& context) {
  const AnchorMatchSet set = io::ReadMatchFile(args.matches);
  TwoViewOptions options;
  options.lm.max_iterations = args.max_iters;
  const SedSolveReport report = SolveTwoView(set, options);
  context.out << FormatTwoViewReport(report);
  if (!args.json.empty()) io::WriteFile(args.json, Dump(TwoViewJson(report)));
}

struct BasinArgs {
  std::string mode = "sed_only";
  std::string grid = "0:90:10";
  int seeds = 100;
  uint64_t seed = 0;
  std::string out;
  int max_iters = 50;
};

void CmdBasin(const BasinArgs& args, Context& context) {
  BasinMode mode;
  if (args.mode == "sed_only") {
    mode = BasinMode::kSedOnly;
  } else if (args.mode == "preconditioned") {
    mode = BasinMode::kPreconditioned;
  } else {
    throw Error(ErrorCode::kInvalidArgument,
                "--mode must be sed_only or preconditioned");
  }
  if (args.seeds <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "--seeds must be positive");
  }
  const std::vector<double> grid = ParseGrid(args.grid);
  std::vector<uint64_t> seeds(args.seeds);
  std::iota(seeds.begin(), seeds.end(), args.seed);
  BasinOptions options;
  options.lm.max_iterations = args.max_iters;
  const std::vector<BasinRow> rows =
      RunBasinExperiment(seeds, grid, mode, options);
  io::WriteFile(args.out, BasinRowsToCsv(rows));

  // Success means both errors below half a degree.
  std::map<double, std::pair<int, int>> summary;
  for (const BasinRow& row : rows) {
    auto& [success, total] = summary[row.init_deg];
    ++total;
    if (std::max(row.final_rot_deg, row.final_trans_deg) < 0.5) ++success;
  }
  context.out << "init_deg success_rate\n";
  for (const auto& [angle, counts] : summary) {
    context.out << Format("%g", angle) << ' '
                << Format("%.4f", static_cast<double>(counts.first) / counts.second)
                << '\n';
  }
}

struct JoinArgs {
  std::string trajectory_a;
  std::string trajectory_b;
  std::string matches;
  std::string depths_a;
  std::string depths_b;
  int frame_a = 0;
  int frame_b = 0;
  std::string out;
  std::string sim3;
  double lambda = kDefaultScaleRatioBound;
  double inlier_thresh = kDefaultMinInlierFraction;
  int max_iters = 50;
};

void CmdJoin(const JoinArgs& args, Context& context) {
  Trajectory a = io::ReadTrajectory(args.trajectory_a);
  Trajectory b = io::ReadTrajectory(args.trajectory_b);
  io::ReadDepthSidecar(args.depths_a, a);
  io::ReadDepthSidecar(args.depths_b, b);
  const AnchorMatchSet matches = io::ReadMatchFile(args.matches);
  if (!(args.lambda > 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "--lambda must exceed 1");
  }
  JoinOptions options;
  options.two_view.lm.max_iterations = args.max_iters;
  options.lambda = args.lambda;
  options.min_inlier_fraction = args.inlier_thresh;
  const JoinResult result =
      JoinTrajectories(a, b, args.frame_a, args.frame_b, matches, options);
  io::WriteFile(args.out, TumString(result.merged));
  if (!args.sim3.empty()) io::WriteFile(args.sim3, Dump(JoinJson(result)));
  const Sim3Transform& s = result.world_a_from_world_b;
  const Eigen::Quaterniond q = CanonicalQuaternion(s.rotation);
  context.out << "scale " << Format("%.9f", s.scale) << '\n'
              << "quaternion_wxyz " << Format("%.9f", q.w()) << ' '
              << Format("%.9f", q.x()) << ' ' << Format("%.9f", q.y()) << ' '
              << Format("%.9f", q.z()) << '\n'
              << "translation " << Format("%.9f", s.translation.x()) << ' '
              << Format("%.9f", s.translation.y()) << ' '
              << Format("%.9f", s.translation.z()) << '\n'
              << "inlier_fraction_a " << Format("%.4f", result.scale_a.inlier_fraction)
              << '\n'
              << "inlier_fraction_b " << Format("%.4f", result.scale_b.inlier_fraction)
              << '\n'
              << "merged_keyframes " << result.merged.size() << '\n';
}

struct AteArgs {
  std::string estimate;
  std::string ground_truth;
  std::string mode = "sim3";
  double max_dt = kDefaultMaxTimeDifference;
};

void CmdAte(const AteArgs& args, Context& context) {
  const Trajectory estimate = io::ReadTrajectory(args.estimate);
  const Trajectory ground_truth = io::ReadTrajectory(args.ground_truth);
  AlignmentMode mode;
  if (args.mode == "sim3") {
    mode = AlignmentMode::kSim3;
  } else if (args.mode == "se3") {
    mode = AlignmentMode::kSe3;
  } else {
    throw Error(ErrorCode::kInvalidArgument, "--mode must be sim3 or se3");
  }
  const AteResult result = ComputeAte(estimate, ground_truth, mode, args.max_dt);
  context.out << Format("%.6f", result.rmse) << '\n';
}

struct SynthArgs {
  uint64_t seed = 0;
  std::string out;
  double noise = 0.0;
  double outliers = 0.0;
  double outlier_weight = 0.01;
  bool uniform_weights = false;
  int points = 100;
  int frames = 8;
  int anchors = 60;
  int distractors = 1;
  double scale = 0.0;
  double depth_noise = 0.0;
};

void CmdSynthTwoView(const SynthArgs& args, Context& context) {
  TwoViewSceneOptions options;
  options.num_points = args.points;
  options.noise =
      MakeNoise(args.noise, args.outliers, args.outlier_weight, args.uniform_weights);
  const SyntheticTwoView scene = MakeTwoView(args.seed, options);

  const std::string matches_path = args.out + ".matches.txt";
  const std::string gt_path = args.out + ".gt.json";
  ordered_json gt;
  gt["seed"] = args.seed;
  gt["num_points"] = args.points;
  gt["noise_sigma"] = args.noise;
  gt["outliers"] = args.outliers;
  gt["outlier_weight"] = args.outlier_weight;
  gt["weight_policy"] = args.uniform_weights ? "uniform" : "oracle";
  gt["rotation_quaternion_wxyz"] = QuaternionJson(scene.gt_pose.rotation);
  gt["translation_dir"] = VectorJson(scene.gt_pose.translation_dir);
  gt["baseline"] = scene.baseline;
  gt["matches"] = matches_path;
  ordered_json outlier_rows = ordered_json::array();
  for (int frame = 0; frame < 2; ++frame) {
    ordered_json rows = ordered_json::array();
    for (size_t k = 0; k < scene.is_outlier[frame].size(); ++k) {
      if (scene.is_outlier[frame][k]) rows.push_back(k);
    }
    outlier_rows.push_back(rows);
  }
  gt["outlier_indices_per_frame"] = outlier_rows;

  io::WriteFile(matches_path, ToString(scene.matches));
  io::WriteFile(gt_path, Dump(gt));
  context.out << matches_path << '\n' << gt_path << '\n';
}

void CmdSynthTrajPair(const SynthArgs& args, Context& context) {
  TrajectoryPairOptions options;
  options.num_frames = args.frames;
  options.anchors_per_frame = args.anchors;
  options.num_distractors = args.distractors;
  options.depth_noise = args.depth_noise;
  options.noise =
      MakeNoise(args.noise, args.outliers, args.outlier_weight, args.uniform_weights);
  // The similarity is drawn from its own stream so that --scale only pins
  // the scale.
  std::mt19937_64 rng(args.seed);
  options.world_a_from_world_b = RandomSim3(rng);
  if (args.scale != 0.0) {
    if (!(args.scale > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "--scale must be positive");
    }
    options.world_a_from_world_b.scale = args.scale;
  }
  const SyntheticTrajectoryPair pair = MakeTrajectoryPair(args.seed, options);

  std::vector<std::string> written;
  const auto write = [&](const std::string& path, const std::string& contents) {
    io::WriteFile(path, contents);
    written.push_back(path);
  };
  write(args.out + ".a.tum", TumString(pair.a));
  write(args.out + ".a.depth", DepthString(pair.a));
  write(args.out + ".b.tum", TumString(pair.b));
  write(args.out + ".b.depth", DepthString(pair.b));
  Sim3Transform identity;
  write(args.out + ".gt_merged.tum",
        TumString(MergeTrajectories(pair.a, pair.b_in_world_a, identity)));

  ordered_json gt;
  gt["seed"] = args.seed;
  gt["noise_sigma"] = args.noise;
  gt["outliers"] = args.outliers;
  gt["depth_noise"] = args.depth_noise;
  gt["world_a_from_world_b"] = Sim3TransformJson(pair.world_a_from_world_b);
  gt["scene_diameter"] = pair.scene_diameter;
  ordered_json pairs = ordered_json::array();
  for (size_t p = 0; p < pair.pairs.size(); ++p) {
    const CandidatePair& candidate = pair.pairs[p];
    const std::string path = args.out + ".pair" + std::to_string(p) + ".matches.txt";
    write(path, ToString(candidate.matches));
    ordered_json entry;
    entry["matches"] = path;
    entry["frame_a"] = candidate.frame_a;
    entry["frame_b"] = candidate.frame_b;
    entry["covisible"] = candidate.covisible;
    pairs.push_back(entry);
  }
  gt["pairs"] = pairs;
  write(args.out + ".gt.json", Dump(gt));
  for (const std::string& path : written) context.out << path << '\n';
}

// Runs `body`, translating every failure into a message and exit code.
template <typename Body>
void Guard(Context& context, Body&& body) {
  try {
    body();
  } catch (const io::ParseError& error) {
    context.err << "error: " << error.what() << '\n';
    context.status = kExitInput;
  } catch (const Error& error) {
    context.err << "error: " << error.what() << '\n';
    context.status = ExitCodeFor(error.code());
  } catch (const std::exception& error) {
    context.err << "error: " << error.what() << '\n';
    context.status = kExitInput;
  }
}

}  // namespace

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInsufficientInliers:
    case ErrorCode::kTooFewValidDepths:
      return kExitInsufficientInliers;
    case ErrorCode::kEmptyInput:
    case ErrorCode::kTooFewPairs:
    case ErrorCode::kTimestampCollision:
    case ErrorCode::kInvalidArgument:
      return kExitInput;
    default:
      return kExitSolver;
  }
}

std::vector<double> ParseGrid(const std::string& text) {
  std::vector<double> parts;
  std::stringstream stream(text);
  std::string field;
  while (std::getline(stream, field, ':')) {
    try {
      size_t consumed = 0;
      parts.push_back(std::stod(field, &consumed));
      if (consumed != field.size()) throw std::invalid_argument(field);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidArgument, "invalid grid '" + text + "'");
    }
  }
  if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0]) {
    throw Error(ErrorCode::kInvalidArgument,
                "grid must be start:stop:step with step > 0 and stop >= start");
  }
  const int count =
      static_cast<int>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9)) + 1;
  std::vector<double> grid(count);
  for (int i = 0; i < count; ++i) grid[i] = parts[0] + i * parts[2];
  return grid;
}

std::string FormatTwoViewReport(const SedSolveReport& report) {
  const Eigen::Quaterniond q = CanonicalQuaternion(report.pose.rotation);
  const Eigen::Vector3d& t = report.pose.translation_dir;
  std::ostringstream text;
  text << "rotation_quaternion_wxyz " << Format("%.12f", q.w()) << ' '
       << Format("%.12f", q.x()) << ' ' << Format("%.12f", q.y()) << ' '
       << Format("%.12f", q.z()) << '\n'
       << "translation_dir " << Format("%.12f", t.x()) << ' '
       << Format("%.12f", t.y()) << ' ' << Format("%.12f", t.z()) << '\n'
       << "sed_initial " << Format("%.9e", report.initial_cost) << '\n'
       << "sed_final " << Format("%.9e", report.final_cost) << '\n'
       << "candidate_index " << report.candidate_index << '\n'
       << "iterations " << report.iterations << '\n'
       << "converged " << (report.converged ? "true" : "false") << '\n';
  return text.str();
}

ordered_json TwoViewJson(const SedSolveReport& report) {
  ordered_json j;
  j["rotation_quaternion_wxyz"] = QuaternionJson(report.pose.rotation);
  j["translation_dir"] = VectorJson(report.pose.translation_dir);
  j["sed_initial"] = report.initial_cost;
  j["sed_final"] = report.final_cost;
  j["candidate_index"] = report.candidate_index;
  j["iterations"] = report.iterations;
  j["converged"] = report.converged;
  j["num_degenerate"] = report.num_degenerate;
  return j;
}

ordered_json JoinJson(const JoinResult& result) {
  ordered_json j = Sim3TransformJson(result.world_a_from_world_b);
  j["camera_a_from_camera_b"] = Sim3TransformJson(result.camera_a_from_camera_b);
  j["scale_a"] = result.scale_a.scale;
  j["scale_b"] = result.scale_b.scale;
  j["inlier_fraction_a"] = result.scale_a.inlier_fraction;
  j["inlier_fraction_b"] = result.scale_b.inlier_fraction;
  j["two_view"] = TwoViewJson(result.two_view);
  return j;
}

int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Two-view pose, basin sweeps and trajectory joins", "msslam"};
  app.require_subcommand(1);
  Context context{out, err};

  TwoViewArgs two_view;
  CLI::App* two_view_cmd =
      app.add_subcommand("two-view", "Relative pose from a match file");
  two_view_cmd->add_option("matches", two_view.matches, "Match file")
      ->required();
  two_view_cmd->add_option("--json", two_view.json, "Also write a JSON report");
  two_view_cmd->add_option("--max-iters", two_view.max_iters,
                           "Refinement iterations")
      ->capture_default_str();
  two_view_cmd->callback([&] { Guard(context, [&] { CmdTwoView(two_view, context); }); });

  BasinArgs basin;
  CLI::App* basin_cmd = app.add_subcommand(
      "basin", "Convergence sweep over initial pose error");
  basin_cmd->add_option("--mode", basin.mode, "sed_only or preconditioned")
      ->capture_default_str();
  basin_cmd->add_option("--grid", basin.grid, "start:stop:step in degrees")
      ->capture_default_str();
  basin_cmd->add_option("--seeds", basin.seeds, "Scenes per grid angle")
      ->capture_default_str();
  basin_cmd->add_option("--seed", basin.seed, "First scene seed")
      ->capture_default_str();
  basin_cmd->add_option("--out", basin.out, "CSV output")->required();
  basin_cmd->add_option("--max-iters", basin.max_iters, "Refinement iterations")
      ->capture_default_str();
  basin_cmd->callback([&] { Guard(context, [&] { CmdBasin(basin, context); }); });

  JoinArgs join;
  CLI::App* join_cmd =
      app.add_subcommand("join", "Align trajectory B to A and merge them");
  join_cmd->add_option("trajectory_a", join.trajectory_a, "Reference trajectory")
      ->required();
  join_cmd->add_option("trajectory_b", join.trajectory_b, "Query trajectory")
      ->required();
  join_cmd->add_option("matches", join.matches, "Match file of the frame pair")
      ->required();
  join_cmd->add_option("--depths-a", join.depths_a, "Depth sidecar of A")
      ->required();
  join_cmd->add_option("--depths-b", join.depths_b, "Depth sidecar of B")
      ->required();
  join_cmd->add_option("--frame-a", join.frame_a, "Keyframe index in A")
      ->capture_default_str();
  join_cmd->add_option("--frame-b", join.frame_b, "Keyframe index in B")
      ->capture_default_str();
  join_cmd->add_option("--out", join.out, "Merged trajectory output")->required();
  join_cmd->add_option("--sim3", join.sim3, "Transform JSON output");
  join_cmd->add_option("--lambda", join.lambda, "Scale ratio bound")
      ->capture_default_str();
  join_cmd->add_option("--inlier-thresh", join.inlier_thresh,
                       "Minimum scale inlier fraction")
      ->capture_default_str();
  join_cmd->add_option("--max-iters", join.max_iters, "Refinement iterations")
      ->capture_default_str();
  join_cmd->callback([&] { Guard(context, [&] { CmdJoin(join, context); }); });

  AteArgs ate;
  CLI::App* ate_cmd = app.add_subcommand("ate", "Absolute trajectory error RMSE");
  ate_cmd->add_option("estimate", ate.estimate, "Estimated trajectory")->required();
  ate_cmd->add_option("ground_truth", ate.ground_truth, "Ground truth (TUM or EuRoC)")
      ->required();
  ate_cmd->add_option("--mode", ate.mode, "sim3 or se3")->capture_default_str();
  ate_cmd->add_option("--max-dt", ate.max_dt, "Association window in seconds")
      ->capture_default_str();
  ate_cmd->callback([&] { Guard(context, [&] { CmdAte(ate, context); }); });

  SynthArgs synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Write synthetic fixtures");
  synth_cmd->require_subcommand(1);
  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
    cmd->add_option("--out", synth.out, "Output path prefix")->required();
    cmd->add_option("--noise", synth.noise, "Pixel noise sigma")
        ->capture_default_str();
    cmd->add_option("--outliers", synth.outliers, "Outlier fraction")
        ->capture_default_str();
    cmd->add_option("--outlier-weight", synth.outlier_weight,
                    "Weight given to outliers")
        ->capture_default_str();
    cmd->add_flag("--uniform-weights", synth.uniform_weights,
                  "Weight every match 1");
  };
  CLI::App* synth_two_view = synth_cmd->add_subcommand("two-view", "Two-view scene");
  add_common(synth_two_view);
  synth_two_view->add_option("--points", synth.points, "Number of matches")
      ->capture_default_str();
  synth_two_view->callback(
      [&] { Guard(context, [&] { CmdSynthTwoView(synth, context); }); });
  CLI::App* synth_pair =
      synth_cmd->add_subcommand("traj-pair", "Two trajectories over one scene");
  add_common(synth_pair);
  synth_pair->add_option("--frames", synth.frames, "Keyframes per trajectory")
      ->capture_default_str();
  synth_pair->add_option("--anchors", synth.anchors, "Anchors per keyframe")
      ->capture_default_str();
  synth_pair->add_option("--distractors", synth.distractors,
                         "Non-covisible candidate pairs")
      ->capture_default_str();
  synth_pair->add_option("--scale", synth.scale,
                         "Fix the scale of world A from world B")
      ->capture_default_str();
  synth_pair->add_option("--depth-noise", synth.depth_noise,
                         "Relative map depth noise")
      ->capture_default_str();
  synth_pair->callback(
      [&] { Guard(context, [&] { CmdSynthTrajPair(synth, context); }); });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& error) {
    const int code = app.exit(error, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }
  return context.status;
}

}  // namespace msslam::cli

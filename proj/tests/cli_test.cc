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

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "formats.h"
#include "json.hpp"
#include "msslam/metrics.h"
#include "msslam/two_view.h"
#include "oracles.h"

namespace msslam::cli {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun Invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = Run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string Slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

nlohmann::json ReadJson(const fs::path& path) {
  return nlohmann::json::parse(Slurp(path));
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("msslam_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string Path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(CliTest, SynthTwoViewIsDeterministicAndRecordsOutliers) {
  ASSERT_EQ(Invoke({"synth", "two-view", "--seed", "7", "--out", Path("a")}).code, 0);
  ASSERT_EQ(Invoke({"synth", "two-view", "--seed", "7", "--out", Path("b")}).code, 0);
  EXPECT_EQ(Slurp(Path("a.matches.txt")), Slurp(Path("b.matches.txt")));

  ASSERT_EQ(Invoke({"synth", "two-view", "--seed", "7", "--outliers", "0.3", "--noise",
                    "0.5", "--out", Path("o")})
                .code,
            0);
  const nlohmann::json gt = ReadJson(Path("o.gt.json"));
  EXPECT_EQ(gt["outliers"].get<double>(), 0.3);
  EXPECT_EQ(gt["outlier_indices_per_frame"][0].size() + gt["outlier_indices_per_frame"][1].size(),
            30u);
}

TEST_F(CliTest, TwoViewRecoversFixturePose) {
  ASSERT_EQ(Invoke({"synth", "two-view", "--seed", "7", "--out", Path("s")}).code, 0);
  const CliRun run = Invoke({"two-view", Path("s.matches.txt"), "--json", Path("r.json")});
  ASSERT_EQ(run.code, 0) << run.err;
  const nlohmann::json gt = ReadJson(Path("s.gt.json"));
  const nlohmann::json report = ReadJson(Path("r.json"));
  const auto quaternion = [](const nlohmann::json& q) {
    return Eigen::Quaterniond(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(),
                              q[3].get<double>())
        .toRotationMatrix();
  };
  const auto vector = [](const nlohmann::json& v) {
    return Eigen::Vector3d(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
  };
  EXPECT_LT(oracle::RotationErrorDeg(quaternion(report["rotation_quaternion_wxyz"]),
                                     quaternion(gt["rotation_quaternion_wxyz"])),
            0.01);
  EXPECT_LT(oracle::AngleDeg(vector(report["translation_dir"]), vector(gt["translation_dir"])),
            0.01);
  EXPECT_TRUE(report["converged"].get<bool>());
  EXPECT_NE(run.out.find("converged true"), std::string::npos);
}

// The command prints exactly what the library returns for the parsed file.
TEST_F(CliTest, TwoViewIsThinAdapter) {
  ASSERT_EQ(Invoke({"synth", "two-view", "--seed", "11", "--noise", "0.8", "--outliers",
                    "0.1", "--out", Path("s")})
                .code,
            0);
  const CliRun run = Invoke({"two-view", Path("s.matches.txt"), "--max-iters", "20"});
  ASSERT_EQ(run.code, 0);
  TwoViewOptions options;
  options.lm.max_iterations = 20;
  const SedSolveReport direct = SolveTwoView(io::ReadMatchFile(Path("s.matches.txt")), options);
  EXPECT_EQ(run.out, FormatTwoViewReport(direct));
}

TEST_F(CliTest, TwoViewInputErrors) {
  ASSERT_EQ(Invoke({"synth", "two-view", "--seed", "1", "--out", Path("s")}).code, 0);
  std::ifstream in(Path("s.matches.txt"));
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);

  // Header plus two cameras, then rows. Row 6 gets weight 1.5.
  std::ofstream bad(Path("bad.txt"));
  for (size_t i = 0; i < lines.size(); ++i) {
    if (i == 5) {
      bad << lines[i].substr(0, lines[i].rfind(' ')) << " 1.5\n";
    } else {
      bad << lines[i] << '\n';
    }
  }
  bad.close();
  const CliRun malformed = Invoke({"two-view", Path("bad.txt")});
  EXPECT_EQ(malformed.code, 1);
  EXPECT_NE(malformed.err.find("row 6"), std::string::npos) << malformed.err;

  std::ofstream few(Path("few.txt"));
  for (size_t i = 0; i < 3 + 7; ++i) few << lines[i] << '\n';
  few.close();
  const CliRun insufficient = Invoke({"two-view", Path("few.txt")});
  EXPECT_EQ(insufficient.code, 2);
  EXPECT_NE(insufficient.err.find("insufficient matches"), std::string::npos);

  EXPECT_EQ(Invoke({"two-view", Path("missing.txt")}).code, 1);
  EXPECT_EQ(Invoke({"no-such-command"}).code, 1);
}

TEST_F(CliTest, BasinRowCountAndDeterminism) {
  const std::vector<std::string> args = {"basin", "--mode", "sed_only", "--grid", "0:90:10",
                                         "--seeds", "50", "--out", Path("a.csv")};
  const CliRun first = Invoke(args);
  ASSERT_EQ(first.code, 0) << first.err;
  std::vector<std::string> again = args;
  again.back() = Path("b.csv");
  ASSERT_EQ(Invoke(again).code, 0);
  const std::string csv = Slurp(Path("a.csv"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 501);
  EXPECT_EQ(csv, Slurp(Path("b.csv")));
}

TEST_F(CliTest, BasinPreconditionedConverges) {
  const CliRun run = Invoke({"basin", "--mode", "preconditioned", "--grid", "0:90:30",
                             "--seeds", "25", "--out", Path("p.csv")});
  ASSERT_EQ(run.code, 0) << run.err;
  std::istringstream csv(Slurp(Path("p.csv")));
  std::string line;
  std::getline(csv, line);
  int rows = 0, converged = 0;
  while (std::getline(csv, line)) {
    ++rows;
    converged += line.back() == '1';
  }
  EXPECT_EQ(rows, 100);
  EXPECT_GE(converged, 99);
  EXPECT_EQ(Invoke({"basin", "--mode", "nope", "--out", Path("x.csv")}).code, 1);
  EXPECT_EQ(Invoke({"basin", "--grid", "5:1:1", "--out", Path("x.csv")}).code, 1);
}

class JoinCliTest : public CliTest {
 protected:
  void SetUp() override {
    CliTest::SetUp();
    ASSERT_EQ(Invoke({"synth", "traj-pair", "--seed", "3", "--scale", "2", "--out", Path("p")})
                  .code,
              0);
    gt_ = ReadJson(Path("p.gt.json"));
  }

  std::vector<std::string> JoinArgs(int pair, const std::string& out) {
    const auto& entry = gt_["pairs"][pair];
    return {"join",
            Path("p.a.tum"),
            Path("p.b.tum"),
            entry["matches"].get<std::string>(),
            "--depths-a",
            Path("p.a.depth"),
            "--depths-b",
            Path("p.b.depth"),
            "--frame-a",
            std::to_string(entry["frame_a"].get<int>()),
            "--frame-b",
            std::to_string(entry["frame_b"].get<int>()),
            "--out",
            Path(out + ".tum"),
            "--sim3",
            Path(out + ".json")};
  }

  nlohmann::json gt_;
};

TEST_F(JoinCliTest, RecoversScaleAndMergesTrajectories) {
  const CliRun run = Invoke(JoinArgs(0, "m"));
  ASSERT_EQ(run.code, 0) << run.err;
  const nlohmann::json sim3 = ReadJson(Path("m.json"));
  EXPECT_NEAR(sim3["scale"].get<double>(), 2.0, 0.1);
  const CliRun ate = Invoke({"ate", Path("m.tum"), Path("p.gt_merged.tum"), "--mode", "sim3"});
  EXPECT_EQ(ate.out, "0.000000\n");

  // Same bytes on a rerun.
  ASSERT_EQ(Invoke(JoinArgs(0, "n")).code, 0);
  EXPECT_EQ(Slurp(Path("m.tum")), Slurp(Path("n.tum")));
  EXPECT_EQ(Slurp(Path("m.json")), Slurp(Path("n.json")));
}

TEST_F(JoinCliTest, DistractorPairExitsWithRetryCode) {
  const int distractor = static_cast<int>(gt_["pairs"].size()) - 1;
  ASSERT_FALSE(gt_["pairs"][distractor]["covisible"].get<bool>());
  EXPECT_EQ(Invoke(JoinArgs(distractor, "d")).code, 3);
}

TEST_F(JoinCliTest, SelfJoinGivesIdentity) {
  // Every anchor of frame 0 matched onto itself, in both directions.
  AnchorMatchSet matches = io::ReadMatchFile(gt_["pairs"][0]["matches"].get<std::string>());
  matches.correspondences[1] = matches.correspondences[0];
  for (auto& side : matches.correspondences) {
    for (AnchorMatch& c : side) c.match = c.anchor;
  }
  std::ostringstream text;
  io::WriteMatchFile(text, matches);
  io::WriteFile(Path("self.txt"), text.str());
  const std::string frame = std::to_string(gt_["pairs"][0]["frame_a"].get<int>());
  const CliRun run = Invoke({"join", Path("p.a.tum"), Path("p.a.tum"), Path("self.txt"),
                             "--depths-a", Path("p.a.depth"), "--depths-b",
                             Path("p.a.depth"), "--frame-a", frame, "--frame-b", frame,
                             "--out", Path("self.tum"), "--sim3", Path("self.json")});
  ASSERT_EQ(run.code, 0) << run.err;
  const nlohmann::json sim3 = ReadJson(Path("self.json"));
  EXPECT_NEAR(sim3["scale"].get<double>(), 1.0, 1e-6);
  EXPECT_NEAR(std::abs(sim3["quaternion_wxyz"][0].get<double>()), 1.0, 1e-6);
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(sim3["translation"][i].get<double>(), 0.0, 1e-6);
  }
  const Trajectory merged = io::ReadTrajectory(Path("self.tum"));
  const Trajectory original = io::ReadTrajectory(Path("p.a.tum"));
  ASSERT_EQ(merged.size(), original.size());
  for (size_t k = 0; k < merged.size(); ++k) {
    EXPECT_EQ(merged.keyframes[k].timestamp, original.keyframes[k].timestamp);
    EXPECT_TRUE(merged.keyframes[k].world_from_camera.rotation.isApprox(
        original.keyframes[k].world_from_camera.rotation, 1e-12));
    EXPECT_TRUE(merged.keyframes[k].world_from_camera.translation.isApprox(
        original.keyframes[k].world_from_camera.translation, 1e-12));
  }
}

TEST_F(CliTest, AteIdentityAndGauge) {
  ASSERT_EQ(Invoke({"synth", "traj-pair", "--seed", "5", "--out", Path("p")}).code, 0);
  EXPECT_EQ(Invoke({"ate", Path("p.a.tum"), Path("p.a.tum")}).out, "0.000000\n");

  Trajectory t = io::ReadTrajectory(Path("p.a.tum"));
  Sim3Transform gauge;
  gauge.scale = 3.0;
  gauge.rotation = So3Exp(Eigen::Vector3d(0.5, 1.0, -0.2));
  gauge.translation = Eigen::Vector3d(10.0, 2.0, -3.0);
  std::ostringstream text;
  io::WriteTum(text, TransformTrajectory(t, gauge));
  io::WriteFile(Path("g.tum"), text.str());
  EXPECT_EQ(Invoke({"ate", Path("g.tum"), Path("p.a.tum"), "--mode", "sim3"}).out,
            "0.000000\n");
  EXPECT_NE(Invoke({"ate", Path("g.tum"), Path("p.a.tum"), "--mode", "se3"}).out,
            "0.000000\n");
  EXPECT_EQ(Invoke({"ate", Path("g.tum"), Path("p.b.tum")}).code, 1);
}

TEST_F(CliTest, AteAgainstEurocGroundTruth) {
  // 1000 poses on a random walk, 5 Hz, EuRoC nanosecond stamps.
  std::mt19937_64 rng(12);
  std::normal_distribution<double> step(0.0, 0.1);
  std::normal_distribution<double> noise(0.0, 0.01);
  std::ofstream gt(Path("gt.csv"));
  std::ofstream est(Path("est.tum"));
  gt << "#timestamp, p_x, p_y, p_z, q_w, q_x, q_y, q_z\n";
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  char line[256];
  for (int k = 0; k < 1000; ++k) {
    p += Eigen::Vector3d(step(rng), step(rng), step(rng));
    const long long ns = 1403636579000000000LL + 200000000LL * k;
    std::snprintf(line, sizeof(line), "%lld, %.9f, %.9f, %.9f, 1, 0, 0, 0\n", ns, p.x(),
                  p.y(), p.z());
    gt << line;
    const Eigen::Vector3d q = p + Eigen::Vector3d(noise(rng), noise(rng), noise(rng));
    std::snprintf(line, sizeof(line), "%.9f %.9f %.9f %.9f 0 0 0 1\n", ns * 1e-9, q.x(),
                  q.y(), q.z());
    est << line;
  }
  gt.close();
  est.close();
  const CliRun run = Invoke({"ate", Path("est.tum"), Path("gt.csv"), "--mode", "sim3"});
  ASSERT_EQ(run.code, 0) << run.err;
  EXPECT_NEAR(std::stod(run.out), 0.01 * std::sqrt(3.0), 0.1 * 0.01 * std::sqrt(3.0));
}

TEST_F(CliTest, SynthTrajPairIsDeterministic) {
  ASSERT_EQ(Invoke({"synth", "traj-pair", "--seed", "9", "--out", Path("a")}).code, 0);
  ASSERT_EQ(Invoke({"synth", "traj-pair", "--seed", "9", "--out", Path("b")}).code, 0);
  for (const std::string suffix :
       {".a.tum", ".a.depth", ".b.tum", ".b.depth", ".pair0.matches.txt", ".gt_merged.tum"}) {
    EXPECT_EQ(Slurp(Path("a" + suffix)), Slurp(Path("b" + suffix))) << suffix;
  }
}

TEST(ParseGrid, InclusiveStop) {
  EXPECT_EQ(ParseGrid("0:90:10").size(), 10u);
  EXPECT_EQ(ParseGrid("0:0.3:0.1").size(), 4u);
  EXPECT_EQ(ParseGrid("5:5:1"), std::vector<double>{5.0});
  EXPECT_THROW(ParseGrid("0:10"), Error);
  EXPECT_THROW(ParseGrid("0:10:0"), Error);
}

TEST(ExitCodes, StableMapping) {
  EXPECT_EQ(ExitCodeFor(ErrorCode::kInsufficientInliers), 3);
  EXPECT_EQ(ExitCodeFor(ErrorCode::kTooFewValidDepths), 3);
  EXPECT_EQ(ExitCodeFor(ErrorCode::kInsufficientMatches), 2);
  EXPECT_EQ(ExitCodeFor(ErrorCode::kRankDeficient), 2);
  EXPECT_EQ(ExitCodeFor(ErrorCode::kTooFewPairs), 1);
}

// The installed binary and the in-process entry point agree.
TEST_F(CliTest, ExecutableExitCode) {
  const std::string command = std::string(MSSLAM_CLI_PATH) + " two-view " +
                              Path("missing.txt") + " 2>/dev/null";
  const int status = std::system(command.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 1);
}

}  // namespace
}  // namespace msslam::cli

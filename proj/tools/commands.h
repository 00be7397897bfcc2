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

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "msslam/error.h"
#include "msslam/sim3_alignment.h"
#include "msslam/two_view.h"

namespace msslam::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitInput = 1,
  kExitSolver = 2,
  kExitInsufficientInliers = 3,
};

int ExitCodeFor(ErrorCode code);

// "start:stop:step", stop included when it lies on the grid.
std::vector<double> ParseGrid(const std::string& text);

// The text printed by `two-view` and the document written by --json.
std::string FormatTwoViewReport(const SedSolveReport& report);
nlohmann::ordered_json TwoViewJson(const SedSolveReport& report);

// world_a_from_world_b plus the inlier statistics of a join.
nlohmann::ordered_json JoinJson(const JoinResult& result);

// Runs the tool with `args` excluding the program name. Never throws.
int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace msslam::cli

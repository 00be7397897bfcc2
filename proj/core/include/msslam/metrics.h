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

#include <span>

#include "msslam/geometry.h"
#include "msslam/trajectory.h"

namespace msslam {

struct PoseError {
  double rot_deg = 0.0;
  double trans_deg = 0.0;

  double Max() const { return rot_deg > trans_deg ? rot_deg : trans_deg; }
};

// Geodesic rotation angle and translation-direction angle, in degrees.
PoseError ComputePoseError(const RelativePose& estimate,
                           const RelativePose& ground_truth);

// Area under the recall-vs-threshold curve on [0, threshold], normalized by
// the threshold and expressed in percent. The recall curve is the exact step
// function of the errors, so a single error e contributes
// max(0, threshold - e) / threshold.
double PoseAuc(std::span<const double> errors_deg, double threshold_deg);

enum class AlignmentMode { kSe3, kSim3 };

struct AteResult {
  double rmse = 0.0;
  int num_pairs = 0;
  Sim3Transform gt_from_estimate;
};

constexpr double kDefaultMaxTimeDifference = 0.02;

// Associates poses by nearest timestamp (within `max_time_difference`
// seconds), aligns estimate positions onto ground truth in closed form and
// returns the RMSE of the remaining position residuals. Throws kTooFewPairs
// for fewer than 3 associations.
AteResult ComputeAte(const Trajectory& estimate, const Trajectory& ground_truth,
                     AlignmentMode mode,
                     double max_time_difference = kDefaultMaxTimeDifference);

}  // namespace msslam

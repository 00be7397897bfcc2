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

#include <optional>
#include <vector>

#include "msslam/geometry.h"

namespace msslam {

struct AnchorDepth {
  int anchor_id = 0;
  double depth = 0.0;
};

struct Keyframe {
  double timestamp = 0.0;  // seconds
  Se3Pose world_from_camera;
  // Map depths of this keyframe's anchors, in trajectory units.
  std::vector<AnchorDepth> anchor_depths;

  std::optional<double> FindDepth(int anchor_id) const;
};

struct Trajectory {
  std::vector<Keyframe> keyframes;

  size_t size() const { return keyframes.size(); }
  bool empty() const { return keyframes.empty(); }

  // Throws kInvalidArgument unless timestamps strictly increase and all
  // depths are positive.
  void Validate() const;
};

// Maps every pose through `transform` and scales every depth by its scale.
Trajectory TransformTrajectory(const Trajectory& trajectory,
                               const Sim3Transform& transform);

}  // namespace msslam

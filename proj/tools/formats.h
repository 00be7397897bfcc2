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
#include <stdexcept>
#include <string>

#include "msslam/sim3_alignment.h"
#include "msslam/trajectory.h"
#include "msslam/two_view.h"

namespace msslam::io {

// Malformed input. `line` is 1-based, or 0 when the error is not tied to a
// line (e.g. the file cannot be opened).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, int line, const std::string& message);

  int line() const { return line_; }

 private:
  int line_;
};

// Match file:
//   # comment
//   camera <frame> <fx> <fy> <cx> <cy> <width> <height>    (frames 0 and 1)
//   <frame_id> <anchor_x> <anchor_y> <match_x> <match_y> <weight>
// Weights must lie in (0, 1]; anchors must lie inside their own image and
// matches inside the other image.
AnchorMatchSet ParseMatchFile(std::istream& in, const std::string& source);
AnchorMatchSet ReadMatchFile(const std::string& path);
void WriteMatchFile(std::ostream& out, const AnchorMatchSet& set);

// TUM trajectory: "timestamp tx ty tz qx qy qz qw" per line. Files whose data
// lines are comma separated are read as EuRoC ground truth instead:
// "timestamp_ns, px, py, pz, qw, qx, qy, qz, ...".
Trajectory ParseTrajectory(std::istream& in, const std::string& source);
Trajectory ReadTrajectory(const std::string& path);
void WriteTum(std::ostream& out, const Trajectory& trajectory);

// Depth sidecar: "timestamp anchor_id depth" per line. Timestamps must match
// a keyframe of `trajectory` to within 1 microsecond.
void ParseDepthSidecar(std::istream& in, const std::string& source,
                       Trajectory& trajectory);
void ReadDepthSidecar(const std::string& path, Trajectory& trajectory);
void WriteDepthSidecar(std::ostream& out, const Trajectory& trajectory);

// Writes `contents` to `path`, throwing std::runtime_error on I/O failure.
void WriteFile(const std::string& path, const std::string& contents);

}  // namespace msslam::io

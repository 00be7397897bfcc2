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

#include "formats.h"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include <Eigen/Geometry>

namespace msslam::io {
namespace {

std::ifstream OpenInput(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError(path, 0, "cannot open file");
  }
  return in;
}

bool IsBlankOrComment(const std::string& line) {
  const auto first = line.find_first_not_of(" \t\r");
  return first == std::string::npos || line[first] == '#';
}

std::vector<std::string> Split(const std::string& line, char separator) {
  std::vector<std::string> fields;
  if (separator == ' ') {
    std::istringstream stream(line);
    std::string field;
    while (stream >> field) fields.push_back(field);
    return fields;
  }
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, separator)) {
    const auto begin = field.find_first_not_of(" \t\r");
    const auto end = field.find_last_not_of(" \t\r");
    fields.push_back(begin == std::string::npos
                         ? std::string()
                         : field.substr(begin, end - begin + 1));
  }
  return fields;
}

double ToDouble(const std::string& field, const std::string& source, int line) {
  size_t consumed = 0;
  double value = 0.0;
  try {
    value = std::stod(field, &consumed);
  } catch (const std::exception&) {
    consumed = 0;
  }
  if (consumed != field.size() || field.empty() || !std::isfinite(value)) {
    throw ParseError(source, line, "invalid number '" + field + "'");
  }
  return value;
}

int ToInt(const std::string& field, const std::string& source, int line) {
  const double value = ToDouble(field, source, line);
  if (value != std::floor(value) || std::abs(value) > 2e9) {
    throw ParseError(source, line, "invalid integer '" + field + "'");
  }
  return static_cast<int>(value);
}

std::string FormatDouble(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

std::string FormatTimestamp(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.9f", value);
  return buffer;
}

bool InsideImage(const Eigen::Vector2d& p, const ImageSize& size) {
  return p.x() >= 0.0 && p.x() <= size.width && p.y() >= 0.0 &&
         p.y() <= size.height;
}

}  // namespace

ParseError::ParseError(const std::string& source, int line,
                       const std::string& message)
    : std::runtime_error(source + (line > 0 ? ":" + std::to_string(line) : "") +
                         ": " + message),
      line_(line) {}

AnchorMatchSet ParseMatchFile(std::istream& in, const std::string& source) {
  AnchorMatchSet set;
  bool have_camera[2] = {false, false};
  std::string text;
  int line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (IsBlankOrComment(text)) continue;
    const std::vector<std::string> fields = Split(text, ' ');
    if (fields[0] == "camera") {
      if (fields.size() != 8) {
        throw ParseError(source, line,
                         "camera line needs: camera frame fx fy cx cy width height");
      }
      const int frame = ToInt(fields[1], source, line);
      if (frame != 0 && frame != 1) {
        throw ParseError(source, line, "camera frame must be 0 or 1");
      }
      Intrinsics camera{ToDouble(fields[2], source, line),
                        ToDouble(fields[3], source, line),
                        ToDouble(fields[4], source, line),
                        ToDouble(fields[5], source, line)};
      if (!camera.IsValid()) {
        throw ParseError(source, line, "focal lengths must be positive");
      }
      const ImageSize size{ToInt(fields[6], source, line),
                           ToInt(fields[7], source, line)};
      if (size.width <= 0 || size.height <= 0) {
        throw ParseError(source, line, "image size must be positive");
      }
      set.cameras[frame] = camera;
      set.image_sizes[frame] = size;
      have_camera[frame] = true;
      continue;
    }

    if (!have_camera[0] || !have_camera[1]) {
      throw ParseError(source, line,
                       "both camera lines must precede the match rows");
    }
    if (fields.size() != 6) {
      throw ParseError(source, line,
                       "match row needs: frame_id anchor_x anchor_y match_x "
                       "match_y weight");
    }
    const int frame = ToInt(fields[0], source, line);
    if (frame != 0 && frame != 1) {
      throw ParseError(source, line, "frame_id must be 0 or 1");
    }
    AnchorMatch c;
    c.anchor = {ToDouble(fields[1], source, line),
                ToDouble(fields[2], source, line)};
    c.match = {ToDouble(fields[3], source, line),
               ToDouble(fields[4], source, line)};
    c.weight = ToDouble(fields[5], source, line);
    if (!(c.weight > 0.0 && c.weight <= 1.0)) {
      throw ParseError(source, line,
                       "weight " + fields[5] + " outside (0, 1] in row " +
                           std::to_string(line));
    }
    if (!InsideImage(c.anchor, set.image_sizes[frame]) ||
        !InsideImage(c.match, set.image_sizes[1 - frame])) {
      throw ParseError(source, line, "coordinates outside the image bounds");
    }
    set.correspondences[frame].push_back(c);
  }
  if (!have_camera[0] || !have_camera[1]) {
    throw ParseError(source, line, "missing camera line");
  }
  return set;
}

AnchorMatchSet ReadMatchFile(const std::string& path) {
  std::ifstream in = OpenInput(path);
  return ParseMatchFile(in, path);
}

void WriteMatchFile(std::ostream& out, const AnchorMatchSet& set) {
  out << "# frame_id anchor_x anchor_y match_x match_y weight\n";
  for (int frame = 0; frame < 2; ++frame) {
    const Intrinsics& k = set.cameras[frame];
    out << "camera " << frame << ' ' << FormatDouble(k.fx) << ' '
        << FormatDouble(k.fy) << ' ' << FormatDouble(k.cx) << ' '
        << FormatDouble(k.cy) << ' ' << set.image_sizes[frame].width << ' '
        << set.image_sizes[frame].height << '\n';
  }
  for (int frame = 0; frame < 2; ++frame) {
    for (const AnchorMatch& c : set.correspondences[frame]) {
      out << frame << ' ' << FormatDouble(c.anchor.x()) << ' '
          << FormatDouble(c.anchor.y()) << ' ' << FormatDouble(c.match.x())
          << ' ' << FormatDouble(c.match.y()) << ' ' << FormatDouble(c.weight)
          << '\n';
    }
  }
}

Trajectory ParseTrajectory(std::istream& in, const std::string& source) {
  Trajectory trajectory;
  std::string text;
  int line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (IsBlankOrComment(text)) continue;
    const bool euroc = text.find(',') != std::string::npos;
    const std::vector<std::string> fields = Split(text, euroc ? ',' : ' ');
    Keyframe keyframe;
    Eigen::Quaterniond q;
    if (euroc) {
      if (fields.size() < 8) {
        throw ParseError(source, line, "EuRoC row needs at least 8 columns");
      }
      keyframe.timestamp = ToDouble(fields[0], source, line) * 1e-9;
      keyframe.world_from_camera.translation = {
          ToDouble(fields[1], source, line), ToDouble(fields[2], source, line),
          ToDouble(fields[3], source, line)};
      q = Eigen::Quaterniond(
          ToDouble(fields[4], source, line), ToDouble(fields[5], source, line),
          ToDouble(fields[6], source, line), ToDouble(fields[7], source, line));
    } else {
      if (fields.size() != 8) {
        throw ParseError(source, line,
                         "TUM row needs: timestamp tx ty tz qx qy qz qw");
      }
      keyframe.timestamp = ToDouble(fields[0], source, line);
      keyframe.world_from_camera.translation = {
          ToDouble(fields[1], source, line), ToDouble(fields[2], source, line),
          ToDouble(fields[3], source, line)};
      q = Eigen::Quaterniond(
          ToDouble(fields[7], source, line), ToDouble(fields[4], source, line),
          ToDouble(fields[5], source, line), ToDouble(fields[6], source, line));
    }
    if (std::abs(q.norm() - 1.0) > 1e-6) {
      throw ParseError(source, line, "quaternion is not unit length");
    }
    keyframe.world_from_camera.rotation = q.normalized().toRotationMatrix();
    if (!trajectory.empty() &&
        !(keyframe.timestamp > trajectory.keyframes.back().timestamp)) {
      throw ParseError(source, line, "timestamps must strictly increase");
    }
    trajectory.keyframes.push_back(std::move(keyframe));
  }
  return trajectory;
}

Trajectory ReadTrajectory(const std::string& path) {
  std::ifstream in = OpenInput(path);
  return ParseTrajectory(in, path);
}

void WriteTum(std::ostream& out, const Trajectory& trajectory) {
  for (const Keyframe& keyframe : trajectory.keyframes) {
    Eigen::Quaterniond q(keyframe.world_from_camera.rotation);
    q.normalize();
    // Canonical sign keeps output stable.
    if (q.w() < 0.0) q.coeffs() = -q.coeffs();
    const Eigen::Vector3d& t = keyframe.world_from_camera.translation;
    out << FormatTimestamp(keyframe.timestamp) << ' ' << FormatDouble(t.x())
        << ' ' << FormatDouble(t.y()) << ' ' << FormatDouble(t.z()) << ' '
        << FormatDouble(q.x()) << ' ' << FormatDouble(q.y()) << ' '
        << FormatDouble(q.z()) << ' ' << FormatDouble(q.w()) << '\n';
  }
}

void ParseDepthSidecar(std::istream& in, const std::string& source,
                       Trajectory& trajectory) {
  std::string text;
  int line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (IsBlankOrComment(text)) continue;
    const std::vector<std::string> fields = Split(text, ' ');
    if (fields.size() != 3) {
      throw ParseError(source, line, "depth row needs: timestamp anchor_id depth");
    }
    const double timestamp = ToDouble(fields[0], source, line);
    const int anchor_id = ToInt(fields[1], source, line);
    const double depth = ToDouble(fields[2], source, line);
    if (!(depth > 0.0)) {
      throw ParseError(source, line, "depth must be positive");
    }
    auto it = std::lower_bound(
        trajectory.keyframes.begin(), trajectory.keyframes.end(),
        timestamp - 1e-6,
        [](const Keyframe& k, double t) { return k.timestamp < t; });
    if (it == trajectory.keyframes.end() ||
        std::abs(it->timestamp - timestamp) > 1e-6) {
      throw ParseError(source, line,
                       "timestamp " + fields[0] + " has no keyframe");
    }
    it->anchor_depths.push_back({anchor_id, depth});
  }
}

void ReadDepthSidecar(const std::string& path, Trajectory& trajectory) {
  std::ifstream in = OpenInput(path);
  ParseDepthSidecar(in, path, trajectory);
}

void WriteDepthSidecar(std::ostream& out, const Trajectory& trajectory) {
  for (const Keyframe& keyframe : trajectory.keyframes) {
    for (const AnchorDepth& entry : keyframe.anchor_depths) {
      out << FormatTimestamp(keyframe.timestamp) << ' ' << entry.anchor_id
          << ' ' << FormatDouble(entry.depth) << '\n';
    }
  }
}

void WriteFile(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error(path + ": cannot open for writing");
  }
  out << contents;
  if (!out) {
    throw std::runtime_error(path + ": write failed");
  }
}

}  // namespace msslam::io

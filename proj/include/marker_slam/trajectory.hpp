#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "marker_slam/se3.hpp"

namespace marker_slam {

// A timestamped pose sequence. Timestamps are strictly increasing.
struct TrajectoryRecord {
  std::vector<std::pair<double, Posed>> samples;

  // Appends a sample, enforcing the timestamp ordering invariant.
  void append(double timestamp, const Posed& pose);

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }

  // Polyline length of the translation track, in meters.
  double path_length() const;
};

// Text format, one sample per line: "timestamp tx ty tz qx qy qz qw",
// space-separated, '#' starts a comment. Numbers are written with 17
// significant digits so that save -> load -> save is byte-identical.
void save_trajectory(const TrajectoryRecord& traj, std::ostream& out);
void save_trajectory(const TrajectoryRecord& traj, const std::string& path);
TrajectoryRecord load_trajectory(std::istream& in);
TrajectoryRecord load_trajectory(const std::string& path);

}  // namespace marker_slam

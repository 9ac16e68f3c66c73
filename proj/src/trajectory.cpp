#include "marker_slam/trajectory.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "text_format.hpp"

namespace marker_slam {

void TrajectoryRecord::append(double timestamp, const Posed& pose) {
  if (!samples.empty() && timestamp <= samples.back().first) {
    throw std::invalid_argument("trajectory timestamps must be strictly increasing");
  }
  samples.emplace_back(timestamp, pose);
}

double TrajectoryRecord::path_length() const {
  double length = 0.0;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    length += (samples[i].second.translation - samples[i - 1].second.translation).norm();
  }
  return length;
}

void save_trajectory(const TrajectoryRecord& traj, std::ostream& out) {
  out << "# trajectory: timestamp tx ty tz qx qy qz qw\n";
  for (const auto& [t, pose] : traj.samples) {
    out << detail::fmt_g17(t) << ' ' << detail::pose_fields(pose) << '\n';
  }
}

void save_trajectory(const TrajectoryRecord& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  save_trajectory(traj, out);
}

TrajectoryRecord load_trajectory(std::istream& in) {
  TrajectoryRecord traj;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = detail::split_fields(line);
    if (fields.empty() || fields[0][0] == '#') continue;
    if (fields.size() != 8) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": expected 8 fields, got " +
                               std::to_string(fields.size()));
    }
    const double t = detail::parse_finite_double(fields[0], line_no, "timestamp");
    const Posed pose = detail::pose_from_fields(fields, 1, line_no);
    if (!traj.samples.empty() && t <= traj.samples.back().first) {
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": timestamps must be strictly increasing");
    }
    traj.samples.emplace_back(t, pose);
  }
  return traj;
}

TrajectoryRecord load_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return load_trajectory(in);
}

}  // namespace marker_slam

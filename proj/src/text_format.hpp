#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "marker_slam/se3.hpp"

// Shared helpers for the text file formats (trajectories, marker maps,
// detection logs). Numbers are written with 17 significant digits so a
// save -> load -> save cycle is byte-identical.

namespace marker_slam::detail {

inline std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string pose_fields(const Posed& p) {
  const auto& q = p.rotation;
  return fmt_g17(p.translation.x()) + ' ' + fmt_g17(p.translation.y()) + ' ' +
         fmt_g17(p.translation.z()) + ' ' + fmt_g17(q.x()) + ' ' +
         fmt_g17(q.y()) + ' ' + fmt_g17(q.z()) + ' ' + fmt_g17(q.w());
}

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline double parse_finite_double(const std::string& tok, int line_no,
                                  const char* what) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end != tok.c_str() + tok.size() || tok.empty()) {
    throw std::runtime_error("line " + std::to_string(line_no) + ": bad " +
                             what + " '" + tok + "'");
  }
  if (!std::isfinite(v)) {
    throw std::runtime_error("line " + std::to_string(line_no) +
                             ": non-finite " + what);
  }
  return v;
}

// Parses "tx ty tz qx qy qz qw" starting at fields[offset]. Quaternions
// within 1e-6 of unit norm are renormalized, anything further is rejected.
inline Posed pose_from_fields(const std::vector<std::string>& fields,
                              std::size_t offset, int line_no) {
  double v[7];
  static const char* names[7] = {"tx", "ty", "tz", "qx", "qy", "qz", "qw"};
  for (int k = 0; k < 7; ++k) {
    v[k] = parse_finite_double(fields[offset + k], line_no, names[k]);
  }
  const double norm = std::sqrt(v[3] * v[3] + v[4] * v[4] + v[5] * v[5] + v[6] * v[6]);
  if (std::abs(norm - 1.0) > 1e-6) {
    throw std::runtime_error("line " + std::to_string(line_no) +
                             ": quaternion norm " + fmt_g17(norm) +
                             " is not unit");
  }
  return Posed(Rotationd(v[6], v[3], v[4], v[5]), Vector3d(v[0], v[1], v[2]));
}

}  // namespace marker_slam::detail

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>

#include "marker_slam/se3.hpp"

namespace marker_slam {

// Marker id -> pose table; the "prior map" artifact. Entries are kept
// ordered by id so serialization is canonical.
struct MarkerMap {
  std::map<int, Posed> entries;
  std::string source_tag;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
  bool has(int id) const { return entries.count(id) != 0; }
};

// Map file format (.mmap): UTF-8 text, '#' comment lines, one marker per
// line as "id tx ty tz qx qy qz qw", single-space separated, positions in
// meters. Saved with 17 significant digits; save -> load -> save is
// byte-identical.
void save_map(const MarkerMap& map, std::ostream& out);
void save_map(const MarkerMap& map, const std::string& path);

// Throws std::runtime_error with a line number on duplicate ids, wrong
// field counts, non-finite numbers or quaternions further than 1e-6 from
// unit norm (closer ones are renormalized).
MarkerMap load_map(std::istream& in);
MarkerMap load_map(const std::string& path);

struct PerturbationConfig {
  double delta_p = 0.0;  // displacement magnitude, meters
  std::uint64_t seed = 0;
};

// Displaces every marker position by exactly delta_p along an independent
// uniformly random direction; orientations and ids are untouched.
MarkerMap perturb(const MarkerMap& map, const PerturbationConfig& cfg);

}  // namespace marker_slam

#include "marker_slam/map_store.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "marker_slam/rng.hpp"
#include "text_format.hpp"

namespace marker_slam {

void save_map(const MarkerMap& map, std::ostream& out) {
  out << "# marker-map v1: id tx ty tz qx qy qz qw\n";
  if (!map.source_tag.empty()) {
    out << "# source: " << map.source_tag << '\n';
  }
  for (const auto& [id, pose] : map.entries) {
    out << id << ' ' << detail::pose_fields(pose) << '\n';
  }
}

void save_map(const MarkerMap& map, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  save_map(map, out);
}

MarkerMap load_map(std::istream& in) {
  MarkerMap map;
  std::string line;
  int line_no = 0;
  bool have_source = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = detail::split_fields(line);
    if (fields.empty()) continue;
    if (fields[0][0] == '#') {
      static const std::string kSource = "# source: ";
      if (!have_source && line.rfind(kSource, 0) == 0) {
        map.source_tag = line.substr(kSource.size());
        have_source = true;
      }
      continue;
    }
    if (fields.size() != 8) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": expected 8 fields, got " +
                               std::to_string(fields.size()));
    }
    char* end = nullptr;
    const long id = std::strtol(fields[0].c_str(), &end, 10);
    if (end != fields[0].c_str() + fields[0].size()) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": bad marker id '" +
                               fields[0] + "'");
    }
    if (map.entries.count(static_cast<int>(id))) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": duplicate marker id " +
                               std::to_string(id));
    }
    map.entries[static_cast<int>(id)] = detail::pose_from_fields(fields, 1, line_no);
  }
  return map;
}

MarkerMap load_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return load_map(in);
}

MarkerMap perturb(const MarkerMap& map, const PerturbationConfig& cfg) {
  if (cfg.delta_p < 0.0) throw std::invalid_argument("perturb: delta_p must be >= 0");
  if (cfg.delta_p == 0.0) return map;
  MarkerMap out;
  out.source_tag = map.source_tag;
  Rng rng(cfg.seed);
  for (const auto& [id, pose] : map.entries) {
    Posed moved = pose;
    moved.translation += cfg.delta_p * rng.unit_sphere();
    out.entries[id] = moved;
  }
  return out;
}

}  // namespace marker_slam

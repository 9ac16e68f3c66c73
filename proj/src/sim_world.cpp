#include "marker_slam/sim_world.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "text_format.hpp"

namespace marker_slam {

namespace {

constexpr double kMaxRange = 6.0;
constexpr double kViewHalfAngleDeg = 70.0;  // frustum and incidence limit
constexpr double kMinMarkerSpacing = 0.5;
constexpr double kWallMargin = 0.3;
constexpr double kMarkerHeightLo = 0.5;
constexpr double kMarkerHeightHi = 2.0;

Matrix3d look_rotation(const Vector3d& forward) {
  // Optical frame: z forward, y down for a level camera.
  const Vector3d up(0.0, 0.0, 1.0);
  Vector3d x = forward.cross(up);
  if (x.norm() < 1e-9) x = forward.cross(Vector3d(1.0, 0.0, 0.0));
  x.normalize();
  const Vector3d y = forward.cross(x);
  Matrix3d r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = forward;
  return r;
}

}  // namespace

Environment make_environment(int n_markers, const Vector3d& room_half_extents,
                             std::uint64_t seed) {
  if (n_markers < 1) throw std::invalid_argument("make_environment: n_markers must be >= 1");
  Environment env;
  env.room_half_extents = room_half_extents;
  env.markers.source_tag = "ground-truth";

  const double hx = room_half_extents.x();
  const double hy = room_half_extents.y();
  const double height = 2.0 * room_half_extents.z();
  const double z_lo = kMarkerHeightLo;
  const double z_hi = std::min(kMarkerHeightHi, height - kWallMargin);
  if (z_hi <= z_lo) throw std::invalid_argument("make_environment: room too low for markers");

  Rng rng(seed);
  std::vector<Vector3d> placed;
  const long max_attempts = 2000L * n_markers + 2000L;
  long attempts = 0;
  for (int id = 0; id < n_markers;) {
    if (++attempts > max_attempts) {
      throw std::runtime_error("make_environment: cannot place " +
                               std::to_string(n_markers) + " markers " +
                               std::to_string(kMinMarkerSpacing) + " m apart on the walls");
    }
    const int wall = std::min(3, static_cast<int>(rng.uniform() * 4.0));
    const double along_max = (wall < 2 ? hy : hx) - kWallMargin;
    const double u = rng.uniform(-along_max, along_max);
    const double z = rng.uniform(z_lo, z_hi);

    Vector3d pos, normal;
    switch (wall) {
      case 0: pos = Vector3d(hx, u, z); normal = Vector3d(-1, 0, 0); break;
      case 1: pos = Vector3d(-hx, u, z); normal = Vector3d(1, 0, 0); break;
      case 2: pos = Vector3d(u, hy, z); normal = Vector3d(0, -1, 0); break;
      default: pos = Vector3d(u, -hy, z); normal = Vector3d(0, 1, 0); break;
    }
    const double roll = rng.uniform(0.0, 2.0 * M_PI);

    bool spaced = true;
    for (const auto& other : placed) {
      if ((other - pos).norm() < kMinMarkerSpacing) { spaced = false; break; }
    }
    if (!spaced) continue;

    // Marker frame: local z is the inward normal, with a random roll about it.
    Vector3d x_axis = Vector3d(0.0, 0.0, 1.0).cross(normal).normalized();
    Vector3d y_axis = normal.cross(x_axis);
    Matrix3d base;
    base.col(0) = x_axis;
    base.col(1) = y_axis;
    base.col(2) = normal;
    Matrix3d rot = base * Eigen::AngleAxisd(roll, Vector3d::UnitZ()).toRotationMatrix();

    env.markers.entries[id] = Posed(Rotationd::from_matrix(rot), pos);
    placed.push_back(pos);
    ++id;
  }
  return env;
}

Environment make_environment(std::uint64_t seed) {
  return make_environment(5, Vector3d(3.0, 3.0, 1.5), seed);
}

TrajectoryRecord make_trajectory(const SequenceSpec& spec, const Environment& env) {
  if (spec.duration_s <= 0.0 || spec.frame_rate_hz <= 0.0) {
    throw std::invalid_argument("make_trajectory: duration and rate must be positive");
  }
  const int n = static_cast<int>(std::lround(spec.duration_s * spec.frame_rate_hz));
  if (n < 2) throw std::invalid_argument("make_trajectory: sequence too short");

  Rng rng(spec.seed);
  static const int freq_pairs[4][2] = {{2, 3}, {3, 2}, {3, 4}, {4, 3}};
  const auto& freq = freq_pairs[std::min(3, static_cast<int>(rng.uniform() * 4.0))];
  const double phase_x = rng.uniform(0.0, 2.0 * M_PI);
  const double phase_y = rng.uniform(0.0, 2.0 * M_PI);
  const double z_mid = rng.uniform(1.0, 1.4);
  const double z_amp = rng.uniform(0.10, 0.25);
  const int z_freq = rng.uniform() < 0.5 ? 1 : 2;
  const double phase_z = rng.uniform(0.0, 2.0 * M_PI);

  // Unit-amplitude closed Lissajous figure; every amplitude scales together,
  // so the sampled polyline length is exactly linear in the scale.
  const auto shape = [&](int i) {
    const double theta = 2.0 * M_PI * static_cast<double>(i) / n;
    return Vector3d(std::sin(freq[0] * theta + phase_x),
                    std::sin(freq[1] * theta + phase_y),
                    z_amp * std::sin(z_freq * theta + phase_z));
  };
  double unit_length = 0.0;
  for (int i = 1; i < n; ++i) unit_length += (shape(i) - shape(i - 1)).norm();
  const double scale = spec.target_path_length_m / unit_length;

  const double clearance = 1.0;
  const double height = 2.0 * env.room_half_extents.z();
  if (scale > env.room_half_extents.x() - clearance ||
      scale > env.room_half_extents.y() - clearance ||
      z_mid + scale * z_amp > height - 0.4 || z_mid - scale * z_amp < 0.4) {
    throw std::runtime_error("make_trajectory: target length " +
                             std::to_string(spec.target_path_length_m) +
                             " m does not fit inside the room");
  }

  const Vector3d look_target(0.0, 0.0, 1.25);
  TrajectoryRecord traj;
  for (int i = 0; i < n; ++i) {
    const Vector3d s = shape(i);
    const Vector3d pos(scale * s.x(), scale * s.y(), z_mid + scale * s.z());
    const Vector3d forward = (look_target - pos).normalized();
    traj.append(static_cast<double>(i) / spec.frame_rate_hz,
                Posed(Rotationd::from_matrix(look_rotation(forward)), pos));
  }
  return traj;
}

bool visible(const Posed& camera, const Posed& marker, const Environment& env) {
  (void)env;
  const Vector3d delta = marker.translation - camera.translation;
  const double range = delta.norm();
  if (range > kMaxRange || range < 1e-9) return false;

  const double cos_limit = std::cos(kViewHalfAngleDeg * M_PI / 180.0);
  const Vector3d forward = camera.rotation * Vector3d(0.0, 0.0, 1.0);
  if (forward.dot(delta) < range * cos_limit) return false;

  const Vector3d normal = marker.rotation * Vector3d(0.0, 0.0, 1.0);
  if (normal.dot(-delta) < range * cos_limit) return false;
  return true;
}

FrameObservations observe(const Posed& camera, const Environment& env,
                          const NoiseConfig& noise, Rng& rng) {
  FrameObservations frame;
  frame.ground_truth_camera = camera;
  for (const auto& [id, marker] : env.markers.entries) {
    if (!visible(camera, marker, env)) continue;
    Posed z = between(camera, marker);
    if (!noise.is_zero()) {
      const double range = z.translation.norm();
      Twistd eta;
      eta.rotation = Vector3d(rng.normal(), rng.normal(), rng.normal()) *
                     noise.detection_sigma_rot_rad;
      eta.translation = Vector3d(rng.normal(), rng.normal(), rng.normal()) *
                        (noise.detection_sigma_trans_per_m * range);
      z = z * exp_map(eta);
    }
    frame.detections.push_back({id, z});
  }
  return frame;
}

Posed odometry_between(const Posed& gt_a, const Posed& gt_b,
                       const NoiseConfig& noise, Rng& rng) {
  const Posed u = between(gt_a, gt_b);
  if (noise.is_zero()) return u;
  Twistd eta;
  eta.rotation = Vector3d(rng.normal(), rng.normal(), rng.normal()) *
                 noise.odometry_sigma_rot_rad;
  eta.translation = Vector3d(rng.normal(), rng.normal(), rng.normal()) *
                    noise.odometry_sigma_trans_m;
  return u * exp_map(eta);
}

SimulatedSequence simulate_sequence(int id, const SequenceSpec& spec,
                                    const Environment& env,
                                    const NoiseConfig& noise) {
  SimulatedSequence seq;
  seq.id = id;
  seq.target_length_m = spec.target_path_length_m;
  seq.ground_truth = make_trajectory(spec, env);

  Rng det_rng(seed_mix(spec.seed, 0xD373C710ull));
  Rng odo_rng(seed_mix(spec.seed, 0x0D0337E9ull));
  for (std::size_t i = 0; i < seq.ground_truth.samples.size(); ++i) {
    const auto& [t, pose] = seq.ground_truth.samples[i];
    FrameObservations frame = observe(pose, env, noise, det_rng);
    frame.timestamp = t;
    seq.frames.push_back(std::move(frame));
    if (i == 0) {
      seq.odometry.emplace_back(std::nullopt);
    } else {
      seq.odometry.emplace_back(odometry_between(
          seq.ground_truth.samples[i - 1].second, pose, noise, odo_rng));
    }
  }
  return seq;
}

void save_detection_log(const SimulatedSequence& seq, std::ostream& out) {
  out << "# detections: timestamp marker_id tx ty tz qx qy qz qw\n";
  for (const auto& frame : seq.frames) {
    for (const auto& det : frame.detections) {
      out << detail::fmt_g17(frame.timestamp) << ' ' << det.marker_id << ' '
          << detail::pose_fields(det.marker_in_camera) << '\n';
    }
  }
}

void save_odometry_log(const SimulatedSequence& seq, std::ostream& out) {
  out << "# odometry since previous frame: timestamp tx ty tz qx qy qz qw\n";
  for (std::size_t i = 0; i < seq.odometry.size(); ++i) {
    if (!seq.odometry[i]) continue;
    out << detail::fmt_g17(seq.frames[i].timestamp) << ' '
        << detail::pose_fields(*seq.odometry[i]) << '\n';
  }
}

}  // namespace marker_slam

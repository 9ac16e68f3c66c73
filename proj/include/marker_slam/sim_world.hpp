#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "marker_slam/map_store.hpp"
#include "marker_slam/observations.hpp"
#include "marker_slam/rng.hpp"
#include "marker_slam/se3.hpp"
#include "marker_slam/trajectory.hpp"

namespace marker_slam {

// Rectangular room with markers mounted on the vertical walls. The floor is
// z = 0 and the ceiling z = 2 * half_extents.z().
struct Environment {
  MarkerMap markers;  // ground truth
  Vector3d room_half_extents = Vector3d(3.0, 3.0, 1.5);
  double marker_side_m = 0.2;
};

struct SequenceSpec {
  double duration_s = 30.0;
  double frame_rate_hz = 10.0;
  double target_path_length_m = 8.2;
  std::uint64_t seed = 0;
};

// Places n_markers on the walls at seeded-random positions, 0.5-2.0 m high,
// at least 0.5 m apart, facing the room interior. Throws when the walls
// cannot hold that many markers at the required spacing.
Environment make_environment(int n_markers, const Vector3d& room_half_extents,
                             std::uint64_t seed);
Environment make_environment(std::uint64_t seed = 0);  // 5 markers, default room

// Smooth closed Lissajous-style loop inside the room, sampled at the frame
// rate, heading steered toward the room center. The sampled polyline length
// matches the spec target within 5 percent (exactly, up to rounding, by
// construction). Throws when the target length cannot fit in the room.
TrajectoryRecord make_trajectory(const SequenceSpec& spec, const Environment& env);

// True when the marker center is within range, inside the camera frustum and
// seen at a workable incidence angle (70 degree limits, 6 m range).
bool visible(const Posed& camera, const Posed& marker, const Environment& env);

// Synthesizes the detections of one frame: for each visible marker,
// Z = between(camera, marker) * exp(eta) with eta a zero-mean Gaussian twist
// whose translation sigma scales with range. Zero noise yields exact
// relative poses.
FrameObservations observe(const Posed& camera, const Environment& env,
                          const NoiseConfig& noise, Rng& rng);

// Noisy relative motion between two ground-truth poses.
Posed odometry_between(const Posed& gt_a, const Posed& gt_b,
                       const NoiseConfig& noise, Rng& rng);

// A fully generated sequence: ground truth plus the measurement streams the
// estimator consumes. odometry[i] measures the motion from frame i-1 to
// frame i (odometry[0] is empty).
struct SimulatedSequence {
  int id = 0;
  TrajectoryRecord ground_truth;
  std::vector<FrameObservations> frames;
  std::vector<std::optional<Posed>> odometry;
  double target_length_m = 0.0;
};

// Deterministic per spec.seed: trajectory shape, detection noise and
// odometry noise all derive from it.
SimulatedSequence simulate_sequence(int id, const SequenceSpec& spec,
                                    const Environment& env,
                                    const NoiseConfig& noise);

// Detection log: one line per detection, "timestamp marker_id tx ty tz qx qy
// qz qw", '#' comments. Odometry log: one line per step, "timestamp tx ty tz
// qx qy qz qw" for the motion since the previous frame.
void save_detection_log(const SimulatedSequence& seq, std::ostream& out);
void save_odometry_log(const SimulatedSequence& seq, std::ostream& out);

}  // namespace marker_slam

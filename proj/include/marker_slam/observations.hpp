#pragma once

#include <vector>

#include "marker_slam/se3.hpp"

namespace marker_slam {

// Measurement noise model shared by the simulator (which draws from it) and
// the factor graph (which derives square-root information weights from it).
// Zero sigmas mean exact measurements.
struct NoiseConfig {
  double detection_sigma_trans_per_m = 0.005;            // m per meter of range
  double detection_sigma_rot_rad = 0.3 * M_PI / 180.0;   // rad
  double odometry_sigma_trans_m = 0.002;                 // m per step
  double odometry_sigma_rot_rad = 0.05 * M_PI / 180.0;   // rad per step

  bool is_zero() const {
    return detection_sigma_trans_per_m == 0.0 && detection_sigma_rot_rad == 0.0 &&
           odometry_sigma_trans_m == 0.0 && odometry_sigma_rot_rad == 0.0;
  }

  static NoiseConfig zero() {
    NoiseConfig n;
    n.detection_sigma_trans_per_m = 0.0;
    n.detection_sigma_rot_rad = 0.0;
    n.odometry_sigma_trans_m = 0.0;
    n.odometry_sigma_rot_rad = 0.0;
    return n;
  }
};

// One marker detection: the marker pose expressed in the camera frame.
struct Detection {
  int marker_id = 0;
  Posed marker_in_camera;
};

// Everything one processed frame contributes: the detections plus the
// ground-truth camera pose the simulator generated them from.
struct FrameObservations {
  double timestamp = 0.0;
  std::vector<Detection> detections;
  Posed ground_truth_camera;
};

}  // namespace marker_slam

#pragma once

#include <utility>
#include <vector>

#include "marker_slam/factor_graph.hpp"
#include "marker_slam/se3.hpp"
#include "marker_slam/trajectory.hpp"

namespace marker_slam {

// Greedy nearest-timestamp matching between two trajectories: candidate
// pairs are taken in order of increasing |dt|, each sample of either side is
// used at most once, pairs with |dt| > max_dt are discarded. Throws when
// fewer than 3 pairs survive (the alignment would be underdetermined).
std::vector<std::pair<int, int>> associate(const TrajectoryRecord& est,
                                           const TrajectoryRecord& ref,
                                           double max_dt);

// Closed-form least-squares rigid transform minimizing
// sum_i |q_i - (R p_i + t)|^2, via SVD of the centered cross-covariance with
// determinant-sign correction; always returns a proper rotation. Scale is
// fixed to 1. Throws on fewer than 3 points or collinear configurations.
std::pair<Matrix3d, Vector3d> umeyama_align(const std::vector<Vector3d>& p,
                                            const std::vector<Vector3d>& q);

struct AteResult {
  double rmse = 0.0;    // meters
  double mean = 0.0;
  double median = 0.0;
  double max = 0.0;
  Posed alignment;      // maps est into the ref frame
  int pair_count = 0;
};

// Absolute trajectory error: associates, rigidly aligns the translation
// tracks (unit scale) and reports translational RMSE statistics.
AteResult ate_rmse(const TrajectoryRecord& est, const TrajectoryRecord& ref,
                   double max_dt);

struct RuntimeStats {
  double mean_ms = 0.0;
  double median_ms = 0.0;
  double p95_ms = 0.0;
};

// Arithmetic statistics over the wall_time_ms fields. Throws on empty input.
RuntimeStats runtime_stats(const std::vector<OptimizationReport>& reports);

}  // namespace marker_slam

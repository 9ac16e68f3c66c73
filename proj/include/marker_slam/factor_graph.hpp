#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "marker_slam/map_store.hpp"
#include "marker_slam/observations.hpp"
#include "marker_slam/se3.hpp"
#include "marker_slam/trajectory.hpp"

namespace marker_slam {

// The three operational modes. Slam builds the marker map from scratch;
// SlamWithPrior seeds the marker estimates from a stored map but keeps them
// free; Localization keeps the stored map fixed and estimates only the
// camera.
enum class Mode { Slam, SlamWithPrior, Localization };

std::string to_string(Mode mode);

enum class VarKind : std::uint8_t { Keyframe, Marker };

struct VariableId {
  VarKind kind = VarKind::Keyframe;
  int index = 0;

  bool operator==(const VariableId&) const = default;
  bool operator<(const VariableId& rhs) const {
    if (kind != rhs.kind) return kind < rhs.kind;
    return index < rhs.index;
  }
};

std::string to_string(const VariableId& id);

struct Variable {
  VariableId id;
  Posed estimate;
  bool fixed = false;
};

enum class FactorKind : std::uint8_t { MarkerObservation, Odometry, PosePrior };

// MarkerObservation connects a keyframe (a) and a marker (b); Odometry
// connects two keyframes; PosePrior constrains a single variable (a).
struct Factor {
  FactorKind kind = FactorKind::MarkerObservation;
  VariableId a;
  VariableId b;
  Posed measurement;
  Matrix6d sqrt_information = Matrix6d::Identity();
};

enum class JacobianMode { NumericCentral, Analytic };

struct SolverConfig {
  double lambda_init = 1e-4;
  double lambda_factor = 10.0;
  double lambda_max = 1e10;
  double rel_tol = 1e-8;
  double grad_tol = 1e-10;
  int max_iterations = 50;
  JacobianMode jacobians = JacobianMode::NumericCentral;
  double fd_step = 1e-7;
};

struct OptimizationReport {
  int iterations = 0;  // accepted steps
  double initial_cost = 0.0;
  double final_cost = 0.0;
  double wall_time_ms = 0.0;
  bool converged = false;
  bool singular = false;  // a damped normal-equations factorization failed
};

// Thrown by process_frame when a frame cannot be attached to the graph
// (no detections and no odometry, or no usable detections on the first
// frame). Callers may skip such frames and continue.
class FrameRejected : public std::runtime_error {
 public:
  explicit FrameRejected(const std::string& what) : std::runtime_error(what) {}
};

// Residuals: right-invariant error log(Z^-1 * between(.)), rotational part
// first, paired with right-multiplicative updates X <- X * exp(delta).
Vector6d marker_residual(const Posed& keyframe, const Posed& marker,
                         const Posed& measurement);
Vector6d odometry_residual(const Posed& from, const Posed& to,
                           const Posed& measurement);
Vector6d prior_residual(const Posed& value, const Posed& measurement);

// Square-root information blocks derived from the generative noise model
// (inverse standard deviations per twist component). Zero sigmas fall back
// to unit weight. Detection translation noise scales with range.
Matrix6d detection_sqrt_information(const NoiseConfig& noise, double range_m);
Matrix6d odometry_sqrt_information(const NoiseConfig& noise);

// The marker pose graph. Single-owner mutable state; distinct graphs may be
// optimized in parallel by the caller.
class FactorGraph {
 public:
  explicit FactorGraph(Mode mode = Mode::Slam);

  // Sets the operating mode and (for the prior-map modes) inserts the map's
  // markers: free initial estimates for SlamWithPrior, fixed constants for
  // Localization. Must be called before any frame is processed. A prior map
  // is required for the prior-map modes and forbidden for Slam.
  void configure_mode(Mode mode, const MarkerMap* prior_map = nullptr);

  // Noise model used to weight factors created by process_frame.
  void set_noise_model(const NoiseConfig& noise) { noise_ = noise; }

  int add_keyframe(const Posed& initial, double timestamp, bool fixed = false);
  void add_marker(int marker_id, const Posed& initial, bool fixed = false);
  void add_factor(const Factor& factor);

  // Appends a keyframe for the frame, connects it with an odometry factor
  // (when given) and one marker factor per usable detection, then re-solves
  // the full graph. The report's wall time covers the optimize call only.
  OptimizationReport process_frame(const FrameObservations& frame,
                                   const std::optional<Posed>& odometry,
                                   const SolverConfig& cfg = {});

  // Levenberg-Marquardt on the manifold over the non-fixed variables.
  OptimizationReport optimize(const SolverConfig& cfg = {});

  // 1/2 * sum of squared weighted residuals at the current estimates.
  double total_cost() const;

  Mode mode() const { return mode_; }
  std::size_t num_keyframes() const { return keyframe_vars_.size(); }
  std::size_t num_markers() const { return marker_vars_.size(); }
  std::size_t num_factors() const { return factors_.size(); }
  const std::vector<Variable>& variables() const { return variables_; }
  const std::vector<Factor>& factors() const { return factors_; }

  const Variable& variable(const VariableId& id) const;
  const Posed& keyframe_estimate(int index) const;
  const Posed& marker_estimate(int marker_id) const;
  bool has_marker(int marker_id) const { return marker_vars_.count(marker_id) != 0; }

  // Detections dropped because they referenced markers absent from a fixed
  // prior map (Localization mode).
  int dropped_observations() const { return dropped_observations_; }

  // Current keyframe estimates as a timestamped trajectory.
  TrajectoryRecord trajectory() const;

  // Current marker estimates as a map artifact.
  MarkerMap marker_map(const std::string& source_tag) const;

 private:
  int variable_slot(const VariableId& id) const;  // -1 when absent
  int require_slot(const VariableId& id, const Factor& factor) const;
  Vector6d factor_residual(const Factor& factor,
                           const std::vector<Posed>& estimates) const;
  double cost_at(const std::vector<Posed>& estimates) const;
  Posed single_frame_localization(const std::vector<Detection>& usable,
                                  const SolverConfig& cfg) const;

  Mode mode_ = Mode::Slam;
  bool mode_configured_ = false;
  NoiseConfig noise_;
  std::vector<Variable> variables_;
  std::vector<int> keyframe_vars_;      // keyframe index -> slot in variables_
  std::vector<double> keyframe_times_;
  std::map<int, int> marker_vars_;      // marker id -> slot in variables_
  std::vector<Factor> factors_;
  int dropped_observations_ = 0;
};

}  // namespace marker_slam

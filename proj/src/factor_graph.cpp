#include "marker_slam/factor_graph.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>

namespace marker_slam {

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::Slam: return "slam";
    case Mode::SlamWithPrior: return "slam-prior";
    case Mode::Localization: return "localization";
  }
  return "unknown";
}

std::string to_string(const VariableId& id) {
  return (id.kind == VarKind::Keyframe ? "keyframe " : "marker ") +
         std::to_string(id.index);
}

namespace {

const char* kind_name(FactorKind kind) {
  switch (kind) {
    case FactorKind::MarkerObservation: return "marker-observation";
    case FactorKind::Odometry: return "odometry";
    case FactorKind::PosePrior: return "pose-prior";
  }
  return "unknown";
}

}  // namespace

Vector6d marker_residual(const Posed& keyframe, const Posed& marker,
                         const Posed& measurement) {
  return log_map(measurement.inverse() * between(keyframe, marker)).vector();
}

Vector6d odometry_residual(const Posed& from, const Posed& to,
                           const Posed& measurement) {
  return log_map(measurement.inverse() * between(from, to)).vector();
}

Vector6d prior_residual(const Posed& value, const Posed& measurement) {
  return log_map(measurement.inverse() * value).vector();
}

Matrix6d detection_sqrt_information(const NoiseConfig& noise, double range_m) {
  const double wr = noise.detection_sigma_rot_rad > 0.0
                        ? 1.0 / noise.detection_sigma_rot_rad
                        : 1.0;
  const double range = std::max(range_m, 0.1);
  const double wt = noise.detection_sigma_trans_per_m > 0.0
                        ? 1.0 / (noise.detection_sigma_trans_per_m * range)
                        : 1.0;
  Matrix6d s = Matrix6d::Zero();
  s.diagonal() << wr, wr, wr, wt, wt, wt;
  return s;
}

Matrix6d odometry_sqrt_information(const NoiseConfig& noise) {
  const double wr = noise.odometry_sigma_rot_rad > 0.0
                        ? 1.0 / noise.odometry_sigma_rot_rad
                        : 1.0;
  const double wt = noise.odometry_sigma_trans_m > 0.0
                        ? 1.0 / noise.odometry_sigma_trans_m
                        : 1.0;
  Matrix6d s = Matrix6d::Zero();
  s.diagonal() << wr, wr, wr, wt, wt, wt;
  return s;
}

FactorGraph::FactorGraph(Mode mode) : mode_(mode) {}

void FactorGraph::configure_mode(Mode mode, const MarkerMap* prior_map) {
  if (!variables_.empty() || !factors_.empty()) {
    throw std::logic_error("configure_mode: graph already holds variables");
  }
  mode_ = mode;
  if (mode == Mode::Slam) {
    if (prior_map != nullptr) {
      throw std::invalid_argument("configure_mode: slam mode takes no prior map");
    }
  } else {
    if (prior_map == nullptr) {
      throw std::invalid_argument("configure_mode: " + to_string(mode) +
                                  " mode requires a prior map");
    }
    for (const auto& [id, pose] : prior_map->entries) {
      add_marker(id, pose, /*fixed=*/mode == Mode::Localization);
    }
  }
  mode_configured_ = true;
}

int FactorGraph::add_keyframe(const Posed& initial, double timestamp, bool fixed) {
  const int index = static_cast<int>(keyframe_vars_.size());
  variables_.push_back({{VarKind::Keyframe, index}, initial, fixed});
  keyframe_vars_.push_back(static_cast<int>(variables_.size()) - 1);
  keyframe_times_.push_back(timestamp);
  return index;
}

void FactorGraph::add_marker(int marker_id, const Posed& initial, bool fixed) {
  if (marker_vars_.count(marker_id)) {
    throw std::invalid_argument("add_marker: duplicate marker " +
                                std::to_string(marker_id));
  }
  if (mode_ == Mode::Localization && !fixed) {
    throw std::invalid_argument("add_marker: markers are fixed in localization mode");
  }
  variables_.push_back({{VarKind::Marker, marker_id}, initial, fixed});
  marker_vars_[marker_id] = static_cast<int>(variables_.size()) - 1;
}

void FactorGraph::add_factor(const Factor& factor) {
  switch (factor.kind) {
    case FactorKind::MarkerObservation:
      if (factor.a.kind != VarKind::Keyframe || factor.b.kind != VarKind::Marker) {
        throw std::invalid_argument(
            "add_factor: marker observation must connect a keyframe and a marker");
      }
      break;
    case FactorKind::Odometry:
      if (factor.a.kind != VarKind::Keyframe || factor.b.kind != VarKind::Keyframe ||
          factor.a == factor.b) {
        throw std::invalid_argument(
            "add_factor: odometry must connect two distinct keyframes");
      }
      break;
    case FactorKind::PosePrior:
      break;
  }
  factors_.push_back(factor);
}

const Variable& FactorGraph::variable(const VariableId& id) const {
  const int slot = variable_slot(id);
  if (slot < 0) throw std::out_of_range("unknown variable " + to_string(id));
  return variables_[slot];
}

const Posed& FactorGraph::keyframe_estimate(int index) const {
  return variable({VarKind::Keyframe, index}).estimate;
}

const Posed& FactorGraph::marker_estimate(int marker_id) const {
  return variable({VarKind::Marker, marker_id}).estimate;
}

int FactorGraph::variable_slot(const VariableId& id) const {
  if (id.kind == VarKind::Keyframe) {
    if (id.index < 0 || id.index >= static_cast<int>(keyframe_vars_.size())) {
      return -1;
    }
    return keyframe_vars_[id.index];
  }
  const auto it = marker_vars_.find(id.index);
  return it == marker_vars_.end() ? -1 : it->second;
}

int FactorGraph::require_slot(const VariableId& id, const Factor& factor) const {
  const int slot = variable_slot(id);
  if (slot < 0) {
    const auto idx = static_cast<std::size_t>(&factor - factors_.data());
    throw std::runtime_error("factor " + std::to_string(idx) + " (" +
                             kind_name(factor.kind) + ") references missing " +
                             to_string(id));
  }
  return slot;
}

Vector6d FactorGraph::factor_residual(const Factor& factor,
                                      const std::vector<Posed>& estimates) const {
  const int sa = require_slot(factor.a, factor);
  switch (factor.kind) {
    case FactorKind::MarkerObservation:
      return marker_residual(estimates[sa], estimates[require_slot(factor.b, factor)],
                             factor.measurement);
    case FactorKind::Odometry:
      return odometry_residual(estimates[sa], estimates[require_slot(factor.b, factor)],
                               factor.measurement);
    case FactorKind::PosePrior:
      return prior_residual(estimates[sa], factor.measurement);
  }
  return Vector6d::Zero();
}

double FactorGraph::cost_at(const std::vector<Posed>& estimates) const {
  double cost = 0.0;
  for (const auto& factor : factors_) {
    cost += (factor.sqrt_information * factor_residual(factor, estimates)).squaredNorm();
  }
  return 0.5 * cost;
}

double FactorGraph::total_cost() const {
  std::vector<Posed> est(variables_.size());
  for (std::size_t i = 0; i < variables_.size(); ++i) est[i] = variables_[i].estimate;
  return cost_at(est);
}

namespace {

// Analytic Jacobians of the right-invariant residual under right-multiplicative
// perturbations of the endpoints. For r = log(Z^-1 A^-1 B):
//   dr/db = Jr_inv(r),  dr/da = -Jr_inv(r) * Ad(B^-1 A).
Matrix6d analytic_jacobian(const Factor& factor, int endpoint, const Posed& pa,
                           const Posed* pb) {
  if (factor.kind == FactorKind::PosePrior) {
    const Vector6d r = prior_residual(pa, factor.measurement);
    return se3_right_jacobian_inverse(Twistd::from_vector(r));
  }
  const Vector6d r = log_map(factor.measurement.inverse() * between(pa, *pb)).vector();
  const Matrix6d jr_inv = se3_right_jacobian_inverse(Twistd::from_vector(r));
  if (endpoint == 1) return jr_inv;
  return -jr_inv * adjoint(between(*pb, pa));
}

}  // namespace

OptimizationReport FactorGraph::optimize(const SolverConfig& cfg) {
  const auto t_start = std::chrono::steady_clock::now();
  OptimizationReport report;

  // Free-variable layout; fixed variables get no columns at all.
  std::vector<int> col_of_slot(variables_.size(), -1);
  std::vector<int> free_slots;
  for (int s = 0; s < static_cast<int>(variables_.size()); ++s) {
    if (!variables_[s].fixed) {
      col_of_slot[s] = 6 * static_cast<int>(free_slots.size());
      free_slots.push_back(s);
    }
  }

  // Resolve endpoints up front; throws on dangling references.
  struct Resolved {
    int sa = -1;
    int sb = -1;  // -1 for single-endpoint factors
  };
  std::vector<Resolved> resolved(factors_.size());
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    resolved[i].sa = require_slot(factors_[i].a, factors_[i]);
    if (factors_[i].kind != FactorKind::PosePrior) {
      resolved[i].sb = require_slot(factors_[i].b, factors_[i]);
    }
  }

  std::vector<Posed> est(variables_.size());
  for (std::size_t i = 0; i < variables_.size(); ++i) est[i] = variables_[i].estimate;

  const auto finish = [&](double final_cost) {
    report.final_cost = final_cost;
    for (const int s : free_slots) variables_[s].estimate = est[s];
    report.wall_time_ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - t_start)
                              .count();
    return report;
  };

  double cost = cost_at(est);
  report.initial_cost = cost;

  const int n = 6 * static_cast<int>(free_slots.size());
  if (n == 0) {
    report.converged = true;
    return finish(cost);
  }

  Eigen::MatrixXd h(n, n);
  Eigen::VectorXd grad(n);
  Eigen::MatrixXd h_damped(n, n);
  std::vector<Posed> trial = est;

  // Scratch for the numeric Jacobian of one factor w.r.t. one endpoint.
  const auto numeric_jacobian = [&](const Factor& factor, int slot) {
    Matrix6d j;
    const Posed saved = est[slot];
    Vector6d delta = Vector6d::Zero();
    for (int d = 0; d < 6; ++d) {
      delta[d] = cfg.fd_step;
      est[slot] = saved * exp_map(delta);
      const Vector6d r_plus = factor_residual(factor, est);
      delta[d] = -cfg.fd_step;
      est[slot] = saved * exp_map(delta);
      const Vector6d r_minus = factor_residual(factor, est);
      delta[d] = 0.0;
      j.col(d) = (r_plus - r_minus) / (2.0 * cfg.fd_step);
    }
    est[slot] = saved;
    return j;
  };

  double lambda = cfg.lambda_init;
  bool stop = false;

  while (!stop) {
    h.setZero();
    grad.setZero();
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      const Factor& factor = factors_[i];
      const Resolved& r = resolved[i];
      const Vector6d res_w = factor.sqrt_information * factor_residual(factor, est);

      int cols[2] = {col_of_slot[r.sa], r.sb >= 0 ? col_of_slot[r.sb] : -1};
      Matrix6d jw[2];
      for (int e = 0; e < 2; ++e) {
        if (cols[e] < 0) continue;
        const int slot = e == 0 ? r.sa : r.sb;
        if (cfg.jacobians == JacobianMode::Analytic) {
          jw[e] = factor.sqrt_information *
                  analytic_jacobian(factor, e, est[r.sa],
                                    r.sb >= 0 ? &est[r.sb] : nullptr);
        } else {
          jw[e] = factor.sqrt_information * numeric_jacobian(factor, slot);
        }
      }
      for (int e = 0; e < 2; ++e) {
        if (cols[e] < 0) continue;
        grad.segment<6>(cols[e]).noalias() += jw[e].transpose() * res_w;
        h.block<6, 6>(cols[e], cols[e]).noalias() += jw[e].transpose() * jw[e];
      }
      if (cols[0] >= 0 && cols[1] >= 0) {
        const Matrix6d cross = jw[0].transpose() * jw[1];
        h.block<6, 6>(cols[0], cols[1]).noalias() += cross;
        h.block<6, 6>(cols[1], cols[0]).noalias() += cross.transpose();
      }
    }

    if (grad.lpNorm<Eigen::Infinity>() < cfg.grad_tol) {
      report.converged = true;
      break;
    }
    if (report.iterations >= cfg.max_iterations) break;

    bool accepted = false;
    while (!accepted) {
      h_damped = h;
      for (int d = 0; d < n; ++d) {
        h_damped(d, d) += lambda * std::max(h(d, d), 1e-12);
      }
      Eigen::LLT<Eigen::MatrixXd> llt(h_damped);
      bool step_ok = llt.info() == Eigen::Success;
      Eigen::VectorXd delta;
      if (step_ok) {
        delta = llt.solve(-grad);
        step_ok = delta.allFinite();
      }
      if (!step_ok) report.singular = true;

      if (step_ok) {
        for (std::size_t f = 0; f < free_slots.size(); ++f) {
          const int s = free_slots[f];
          trial[s] = est[s] * exp_map<double>(delta.segment<6>(6 * static_cast<int>(f)));
        }
        const double trial_cost = cost_at(trial);
        if (std::isfinite(trial_cost) && trial_cost < cost) {
          for (const int s : free_slots) est[s] = trial[s];
          ++report.iterations;
          const double rel_decrease = (cost - trial_cost) / std::max(cost, 1e-300);
          cost = trial_cost;
          lambda = std::max(lambda / cfg.lambda_factor, 1e-15);
          accepted = true;
          if (rel_decrease < cfg.rel_tol) {
            report.converged = true;
            stop = true;
          }
          break;
        }
      }

      lambda *= cfg.lambda_factor;
      if (lambda > cfg.lambda_max) {
        stop = true;
        break;
      }
    }
    if (!accepted) break;
  }

  return finish(cost);
}

Posed FactorGraph::single_frame_localization(const std::vector<Detection>& usable,
                                             const SolverConfig& cfg) const {
  const Detection* best = nullptr;
  for (const auto& det : usable) {
    if (!has_marker(det.marker_id)) continue;
    if (best == nullptr || det.marker_in_camera.translation.norm() <
                               best->marker_in_camera.translation.norm()) {
      best = &det;
    }
  }
  if (best == nullptr) {
    throw FrameRejected(
        "single-frame localization: no detection references a known marker");
  }
  const Posed init =
      marker_estimate(best->marker_id) * best->marker_in_camera.inverse();

  // Refine against the known markers held fixed.
  FactorGraph local(Mode::Localization);
  local.set_noise_model(noise_);
  for (const auto& det : usable) {
    if (!has_marker(det.marker_id) || local.has_marker(det.marker_id)) continue;
    local.add_marker(det.marker_id, marker_estimate(det.marker_id), true);
  }
  const int kf = local.add_keyframe(init, 0.0, false);
  for (const auto& det : usable) {
    if (!local.has_marker(det.marker_id)) continue;
    Factor f;
    f.kind = FactorKind::MarkerObservation;
    f.a = {VarKind::Keyframe, kf};
    f.b = {VarKind::Marker, det.marker_id};
    f.measurement = det.marker_in_camera;
    f.sqrt_information =
        detection_sqrt_information(noise_, det.marker_in_camera.translation.norm());
    local.add_factor(f);
  }
  local.optimize(cfg);
  return local.keyframe_estimate(kf);
}

OptimizationReport FactorGraph::process_frame(const FrameObservations& frame,
                                              const std::optional<Posed>& odometry,
                                              const SolverConfig& cfg) {
  if (!keyframe_times_.empty() && frame.timestamp <= keyframe_times_.back()) {
    throw std::invalid_argument("process_frame: frames must arrive in timestamp order");
  }

  const bool first = keyframe_vars_.empty();

  std::vector<Detection> usable;
  usable.reserve(frame.detections.size());
  for (const auto& det : frame.detections) {
    if (mode_ == Mode::Localization && !has_marker(det.marker_id)) {
      ++dropped_observations_;
      continue;
    }
    usable.push_back(det);
  }

  if (usable.empty() && (first || !odometry)) {
    throw FrameRejected(first ? "process_frame: first frame has no usable detections"
                              : "process_frame: frame has no detections and no odometry");
  }

  Posed init;
  if (first) {
    if (mode_ == Mode::Slam) {
      init = Posed();  // gauge anchor at the identity
    } else {
      init = single_frame_localization(usable, cfg);
    }
  } else if (odometry) {
    init = keyframe_estimate(static_cast<int>(num_keyframes()) - 1) * (*odometry);
  } else {
    // No odometry: fall back to localizing against already-known markers.
    init = single_frame_localization(usable, cfg);
  }

  const bool fix_keyframe = first && mode_ != Mode::Localization;
  const int kf = add_keyframe(init, frame.timestamp, fix_keyframe);

  if (!first && odometry) {
    Factor f;
    f.kind = FactorKind::Odometry;
    f.a = {VarKind::Keyframe, kf - 1};
    f.b = {VarKind::Keyframe, kf};
    f.measurement = *odometry;
    f.sqrt_information = odometry_sqrt_information(noise_);
    add_factor(f);
  }

  for (const auto& det : usable) {
    if (!has_marker(det.marker_id)) {
      add_marker(det.marker_id, init * det.marker_in_camera, /*fixed=*/false);
    }
    Factor f;
    f.kind = FactorKind::MarkerObservation;
    f.a = {VarKind::Keyframe, kf};
    f.b = {VarKind::Marker, det.marker_id};
    f.measurement = det.marker_in_camera;
    f.sqrt_information =
        detection_sqrt_information(noise_, det.marker_in_camera.translation.norm());
    add_factor(f);
  }

  return optimize(cfg);
}

TrajectoryRecord FactorGraph::trajectory() const {
  TrajectoryRecord out;
  for (std::size_t i = 0; i < keyframe_vars_.size(); ++i) {
    out.append(keyframe_times_[i], variables_[keyframe_vars_[i]].estimate);
  }
  return out;
}

MarkerMap FactorGraph::marker_map(const std::string& source_tag) const {
  MarkerMap map;
  map.source_tag = source_tag;
  for (const auto& [id, slot] : marker_vars_) {
    map.entries[id] = variables_[slot].estimate;
  }
  return map;
}

}  // namespace marker_slam

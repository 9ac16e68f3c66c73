#pragma once

// Test-side oracles, independent of the library's exp/log/compose paths:
// 4x4 homogeneous matrix algebra, a truncated-series matrix exponential and
// an axis-angle + linear-solve matrix logarithm (via Eigen::AngleAxis, which
// the library does not use).

#include <Eigen/Dense>

#include <cmath>

#include "marker_slam/rng.hpp"
#include "marker_slam/se3.hpp"

namespace oracles {

using marker_slam::Matrix3d;
using marker_slam::Matrix4d;
using marker_slam::Posed;
using marker_slam::Rotationd;
using marker_slam::Twistd;
using marker_slam::Vector3d;
using marker_slam::Vector6d;

inline Matrix4d twist_hat4(const Vector6d& xi) {
  Matrix4d m = Matrix4d::Zero();
  m.topLeftCorner<3, 3>() = marker_slam::hat<double>(xi.head<3>());
  m.topRightCorner<3, 1>() = xi.tail<3>();
  return m;
}

// Matrix exponential by scaling-and-squaring plus a truncated series.
inline Matrix4d matrix_exp(const Matrix4d& a) {
  const double norm = a.cwiseAbs().maxCoeff();
  int squarings = 0;
  Matrix4d b = a;
  while (b.cwiseAbs().maxCoeff() > 0.25 && squarings < 60) {
    b *= 0.5;
    ++squarings;
  }
  (void)norm;
  Matrix4d result = Matrix4d::Identity();
  Matrix4d term = Matrix4d::Identity();
  for (int k = 1; k <= 40; ++k) {
    term = term * b / static_cast<double>(k);
    result += term;
    if (term.cwiseAbs().maxCoeff() < 1e-22) break;
  }
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result;
}

inline Matrix4d pose_matrix(const Posed& p) { return p.matrix(); }

inline Posed pose_from_matrix(const Matrix4d& m) {
  return Posed(Rotationd::from_matrix(m.topLeftCorner<3, 3>()),
               m.topRightCorner<3, 1>());
}

// Independent SE(3) log: rotation via Eigen::AngleAxis, translation by
// explicitly building V and solving V * rho = t.
inline Vector6d matrix_log(const Matrix4d& m) {
  const Eigen::AngleAxisd aa(Matrix3d(m.topLeftCorner<3, 3>()));
  Vector3d omega = aa.angle() * aa.axis();
  const double theta = omega.norm();
  const Matrix3d w = marker_slam::hat<double>(omega);
  double a, b;
  if (theta < 1e-6) {
    a = 0.5 - theta * theta / 24.0;
    b = 1.0 / 6.0 - theta * theta / 120.0;
  } else {
    a = (1.0 - std::cos(theta)) / (theta * theta);
    b = (theta - std::sin(theta)) / (theta * theta * theta);
  }
  const Matrix3d v = Matrix3d::Identity() + a * w + b * w * w;
  const Vector3d rho = v.fullPivLu().solve(Vector3d(m.topRightCorner<3, 1>()));
  Vector6d xi;
  xi << omega, rho;
  return xi;
}

inline Twistd random_twist(marker_slam::Rng& rng, double max_angle,
                           double trans_scale) {
  const Vector3d axis = rng.unit_sphere();
  const double angle = rng.uniform(0.0, max_angle);
  const Vector3d trans(rng.uniform(-trans_scale, trans_scale),
                       rng.uniform(-trans_scale, trans_scale),
                       rng.uniform(-trans_scale, trans_scale));
  return Twistd(angle * axis, trans);
}

inline Posed random_pose(marker_slam::Rng& rng, double max_angle = 3.0,
                         double trans_scale = 2.0) {
  return marker_slam::exp_map(random_twist(rng, max_angle, trans_scale));
}

// Uniform random rotation from a normalized Gaussian quaternion.
inline Matrix3d random_rotation(marker_slam::Rng& rng) {
  Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  q.normalize();
  return q.toRotationMatrix();
}

inline double alignment_cost(const Matrix3d& r, const Vector3d& t,
                             const std::vector<Vector3d>& p,
                             const std::vector<Vector3d>& q) {
  double cost = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    cost += (q[i] - (r * p[i] + t)).squaredNorm();
  }
  return cost;
}

// Optimal translation for a fixed rotation (the centroid condition).
inline Vector3d best_translation(const Matrix3d& r, const std::vector<Vector3d>& p,
                                 const std::vector<Vector3d>& q) {
  Vector3d pm = Vector3d::Zero(), qm = Vector3d::Zero();
  for (std::size_t i = 0; i < p.size(); ++i) {
    pm += p[i];
    qm += q[i];
  }
  pm /= static_cast<double>(p.size());
  qm /= static_cast<double>(q.size());
  return qm - r * pm;
}

inline double pose_distance(const Posed& a, const Posed& b) {
  return marker_slam::log_map(a.inverse() * b).vector().norm();
}

}  // namespace oracles

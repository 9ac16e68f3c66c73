#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <limits>

namespace marker_slam {

using Vector3d = Eigen::Vector3d;
using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix3d = Eigen::Matrix3d;
using Matrix4d = Eigen::Matrix4d;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> hat(const Eigen::Matrix<Scalar, 3, 1>& v) {
  Eigen::Matrix<Scalar, 3, 3> m;
  m << Scalar(0), -v.z(), v.y(),
       v.z(), Scalar(0), -v.x(),
       -v.y(), v.x(), Scalar(0);
  return m;
}

namespace detail {

// Coefficients of V = I + a*hat(w) + b*hat(w)^2, the translation coupling of
// the SE(3) exponential: a = (1-cos t)/t^2, b = (t-sin t)/t^3.
// a is evaluated through sin^2(t/2), which has no cancellation; b switches to
// a Taylor series below t = 0.1 where the direct form loses digits.
template <typename Scalar>
void translation_coupling_coeffs(Scalar theta, Scalar& a, Scalar& b) {
  const Scalar t2 = theta * theta;
  if (theta < Scalar(1e-8)) {
    a = Scalar(0.5) - t2 / Scalar(24);
  } else {
    const Scalar s = std::sin(theta / Scalar(2)) / theta;
    a = Scalar(2) * s * s;
  }
  if (theta < Scalar(0.1)) {
    b = Scalar(1) / Scalar(6) - t2 / Scalar(120) + t2 * t2 / Scalar(5040) -
        t2 * t2 * t2 / Scalar(362880);
  } else {
    b = (theta - std::sin(theta)) / (t2 * theta);
  }
}

// Coefficient c of V^-1 = I - hat(w)/2 + c*hat(w)^2, written with the
// half-angle cotangent so it stays finite up to theta = pi:
// c = (1 - (theta/2)*cot(theta/2)) / theta^2.
template <typename Scalar>
Scalar translation_coupling_inverse_coeff(Scalar theta) {
  const Scalar t2 = theta * theta;
  if (theta < Scalar(0.1)) {
    return Scalar(1) / Scalar(12) + t2 / Scalar(720) +
           t2 * t2 / Scalar(30240) + t2 * t2 * t2 / Scalar(1209600);
  }
  const Scalar half = theta / Scalar(2);
  const Scalar cot_half = std::cos(half) / std::sin(half);
  return (Scalar(1) - half * cot_half) / t2;
}

}  // namespace detail

// Unit quaternion kept in a canonical form: unit norm and w >= 0, with a
// w == 0 tie broken by making the first nonzero of (x, y, z) positive. The
// canonical form makes serialization stable under the quaternion double
// cover.
template <typename Scalar>
class Rotation {
 public:
  using Quaternion = Eigen::Quaternion<Scalar>;
  using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
  using Mat3 = Eigen::Matrix<Scalar, 3, 3>;

  Rotation() : q_(Scalar(1), Scalar(0), Scalar(0), Scalar(0)) {}
  explicit Rotation(const Quaternion& q) : q_(q) { canonicalize(); }
  Rotation(Scalar w, Scalar x, Scalar y, Scalar z) : q_(w, x, y, z) {
    canonicalize();
  }

  static Rotation from_matrix(const Mat3& m) { return Rotation(Quaternion(m)); }

  const Quaternion& quaternion() const { return q_; }
  Scalar x() const { return q_.x(); }
  Scalar y() const { return q_.y(); }
  Scalar z() const { return q_.z(); }
  Scalar w() const { return q_.w(); }

  Mat3 matrix() const { return q_.toRotationMatrix(); }

  Vec3 operator*(const Vec3& v) const { return q_ * v; }
  Rotation operator*(const Rotation& rhs) const {
    return Rotation(q_ * rhs.q_);
  }
  Rotation inverse() const { return Rotation(q_.conjugate()); }

 private:
  void canonicalize() {
    const Scalar n2 = q_.squaredNorm();
    constexpr Scalar eps = std::numeric_limits<Scalar>::epsilon();
    if (std::abs(n2 - Scalar(1)) > Scalar(4) * eps) {
      q_.coeffs() /= std::sqrt(n2);
    }
    bool flip = q_.w() < Scalar(0);
    if (q_.w() == Scalar(0)) {
      if (q_.x() != Scalar(0)) {
        flip = q_.x() < Scalar(0);
      } else if (q_.y() != Scalar(0)) {
        flip = q_.y() < Scalar(0);
      } else {
        flip = q_.z() < Scalar(0);
      }
    }
    if (flip) q_.coeffs() = -q_.coeffs();
  }

  Quaternion q_;
};

// Rigid transform: x_world = rotation * x_local + translation.
template <typename Scalar>
struct Pose {
  using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
  using Mat4 = Eigen::Matrix<Scalar, 4, 4>;

  Rotation<Scalar> rotation;
  Vec3 translation = Vec3::Zero();

  Pose() = default;
  Pose(const Rotation<Scalar>& r, const Vec3& t) : rotation(r), translation(t) {}

  Mat4 matrix() const {
    Mat4 m = Mat4::Identity();
    m.template topLeftCorner<3, 3>() = rotation.matrix();
    m.template topRightCorner<3, 1>() = translation;
    return m;
  }

  Pose inverse() const {
    const Rotation<Scalar> rinv = rotation.inverse();
    return Pose(rinv, -(rinv * translation));
  }

  Pose operator*(const Pose& rhs) const {
    return Pose(rotation * rhs.rotation,
                rotation * rhs.translation + translation);
  }

  Vec3 operator*(const Vec3& p) const { return rotation * p + translation; }
};

// Element of the se(3) Lie algebra, rotational part first.
template <typename Scalar>
struct Twist {
  using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
  using Vec6 = Eigen::Matrix<Scalar, 6, 1>;

  Vec3 rotation = Vec3::Zero();     // radians
  Vec3 translation = Vec3::Zero();  // meters

  Twist() = default;
  Twist(const Vec3& rot, const Vec3& trans) : rotation(rot), translation(trans) {}

  Vec6 vector() const {
    Vec6 v;
    v << rotation, translation;
    return v;
  }

  static Twist from_vector(const Vec6& v) {
    return Twist(v.template head<3>(), v.template tail<3>());
  }
};

// SE(3) exponential with the coupled translation (the V-matrix form).
template <typename Scalar>
Pose<Scalar> exp_map(const Twist<Scalar>& xi) {
  using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
  const auto& omega = xi.rotation;
  const Scalar theta2 = omega.squaredNorm();
  const Scalar theta = std::sqrt(theta2);

  Scalar qw, imag;  // quaternion (qw, imag * omega)
  if (theta < Scalar(1e-8)) {
    qw = Scalar(1) - theta2 / Scalar(8);
    imag = Scalar(0.5) - theta2 / Scalar(48);
  } else {
    qw = std::cos(theta / Scalar(2));
    imag = std::sin(theta / Scalar(2)) / theta;
  }
  const Rotation<Scalar> rot(qw, imag * omega.x(), imag * omega.y(),
                             imag * omega.z());

  Scalar a, b;
  detail::translation_coupling_coeffs(theta, a, b);
  const Mat3 omega_hat = hat<Scalar>(omega);
  const Mat3 v_mat = Mat3::Identity() + a * omega_hat + b * omega_hat * omega_hat;
  return Pose<Scalar>(rot, v_mat * xi.translation);
}

template <typename Scalar>
Pose<Scalar> exp_map(const Eigen::Matrix<Scalar, 6, 1>& xi) {
  return exp_map(Twist<Scalar>::from_vector(xi));
}

// Inverse of exp_map; the rotational part comes back with norm in [0, pi].
template <typename Scalar>
Twist<Scalar> log_map(const Pose<Scalar>& pose) {
  using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
  using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
  const auto& q = pose.rotation.quaternion();  // canonical: w >= 0
  const Vec3 vec = q.vec();
  const Scalar vn = vec.norm();

  Vec3 omega;
  if (vn < Scalar(1e-8)) {
    omega = vec * (Scalar(2) / q.w());
  } else {
    const Scalar theta = Scalar(2) * std::atan2(vn, q.w());
    omega = vec * (theta / vn);
  }

  const Scalar theta = omega.norm();
  const Scalar c = detail::translation_coupling_inverse_coeff(theta);
  const Mat3 omega_hat = hat<Scalar>(omega);
  const Mat3 v_inv = Mat3::Identity() - omega_hat / Scalar(2) +
                     c * omega_hat * omega_hat;
  return Twist<Scalar>(omega, v_inv * pose.translation);
}

template <typename Scalar>
Pose<Scalar> compose(const Pose<Scalar>& a, const Pose<Scalar>& b) {
  return a * b;
}

template <typename Scalar>
Pose<Scalar> inverse(const Pose<Scalar>& p) {
  return p.inverse();
}

// Relative pose of b expressed in the frame of a: inverse(a) * b.
template <typename Scalar>
Pose<Scalar> between(const Pose<Scalar>& a, const Pose<Scalar>& b) {
  return a.inverse() * b;
}

// Adjoint in the (rotation, translation) twist ordering:
// Ad(P) xi = [R w; hat(t) R w + R v].
template <typename Scalar>
Eigen::Matrix<Scalar, 6, 6> adjoint(const Pose<Scalar>& p) {
  const Eigen::Matrix<Scalar, 3, 3> r = p.rotation.matrix();
  Eigen::Matrix<Scalar, 6, 6> ad = Eigen::Matrix<Scalar, 6, 6>::Zero();
  ad.template topLeftCorner<3, 3>() = r;
  ad.template bottomRightCorner<3, 3>() = r;
  ad.template bottomLeftCorner<3, 3>() = hat<Scalar>(p.translation) * r;
  return ad;
}

namespace detail {

// Coefficients of the series behind Barfoot's Q matrix, with Taylor
// fallbacks where the closed forms cancel:
//   m1 = (t - sin t)/t^3
//   m2 = -(1 - t^2/2 - cos t)/t^4
//   m3 = -(t - sin t - t^3/6)/t^5
template <typename Scalar>
void q_matrix_coeffs(Scalar theta, Scalar& m1, Scalar& m2, Scalar& m3) {
  const Scalar t2 = theta * theta;
  if (theta < Scalar(0.1)) {
    m1 = Scalar(1) / Scalar(6) - t2 / Scalar(120) + t2 * t2 / Scalar(5040);
    m2 = Scalar(1) / Scalar(24) - t2 / Scalar(720) + t2 * t2 / Scalar(40320);
    m3 = Scalar(1) / Scalar(120) - t2 / Scalar(5040) + t2 * t2 / Scalar(362880);
  } else {
    const Scalar st = std::sin(theta);
    const Scalar ct = std::cos(theta);
    m1 = (theta - st) / (t2 * theta);
    m2 = -(Scalar(1) - t2 / Scalar(2) - ct) / (t2 * t2);
    m3 = -(theta - st - t2 * theta / Scalar(6)) / (t2 * t2 * theta);
  }
}

}  // namespace detail

// SO(3) left Jacobian inverse (equal to the inverse of the SE(3) V matrix).
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> so3_left_jacobian_inverse(
    const Eigen::Matrix<Scalar, 3, 1>& omega) {
  using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
  const Scalar theta = omega.norm();
  const Scalar c = detail::translation_coupling_inverse_coeff(theta);
  const Mat3 omega_hat = hat<Scalar>(omega);
  return Mat3::Identity() - omega_hat / Scalar(2) + c * omega_hat * omega_hat;
}

// Barfoot's Q matrix, the off-diagonal block of the SE(3) left Jacobian.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> se3_q_matrix(const Twist<Scalar>& xi) {
  using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
  const Mat3 w = hat<Scalar>(xi.rotation);
  const Mat3 r = hat<Scalar>(xi.translation);
  Scalar m1, m2, m3;
  detail::q_matrix_coeffs(xi.rotation.norm(), m1, m2, m3);
  const Mat3 wr = w * r;
  const Mat3 rw = r * w;
  const Mat3 wrw = wr * w;
  return r / Scalar(2) + m1 * (wr + rw + wrw) +
         m2 * (w * wr + rw * w - Scalar(3) * wrw) +
         (m2 - Scalar(3) * m3) / Scalar(2) * (wrw * w + w * wrw);
}

// SE(3) left Jacobian inverse in the (rotation, translation) ordering:
// log(exp(eps) * exp(xi)) ~= xi + Jl_inv(xi) * eps.
template <typename Scalar>
Eigen::Matrix<Scalar, 6, 6> se3_left_jacobian_inverse(const Twist<Scalar>& xi) {
  using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
  const Mat3 j_inv = so3_left_jacobian_inverse<Scalar>(xi.rotation);
  const Mat3 q = se3_q_matrix(xi);
  Eigen::Matrix<Scalar, 6, 6> out = Eigen::Matrix<Scalar, 6, 6>::Zero();
  out.template topLeftCorner<3, 3>() = j_inv;
  out.template bottomRightCorner<3, 3>() = j_inv;
  out.template bottomLeftCorner<3, 3>() = -j_inv * q * j_inv;
  return out;
}

// SE(3) right Jacobian inverse: log(exp(xi) * exp(eps)) ~= xi + Jr_inv(xi) * eps.
template <typename Scalar>
Eigen::Matrix<Scalar, 6, 6> se3_right_jacobian_inverse(const Twist<Scalar>& xi) {
  return se3_left_jacobian_inverse(Twist<Scalar>(-xi.rotation, -xi.translation));
}

using Rotationd = Rotation<double>;
using Posed = Pose<double>;
using Twistd = Twist<double>;

}  // namespace marker_slam

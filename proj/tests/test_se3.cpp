#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "marker_slam/rng.hpp"
#include "marker_slam/se3.hpp"
#include "oracles.hpp"

using namespace marker_slam;

TEST_CASE("exp_map of the zero twist is the identity") {
  const Posed p = exp_map(Twistd{});
  CHECK(p.rotation.w() == 1.0);
  CHECK(p.rotation.x() == 0.0);
  CHECK(p.rotation.y() == 0.0);
  CHECK(p.rotation.z() == 0.0);
  CHECK(p.translation == Vector3d::Zero());
}

TEST_CASE("exp_map of a quarter turn about z") {
  const Posed p = exp_map(Twistd(Vector3d(0, 0, M_PI / 2), Vector3d::Zero()));
  CHECK(p.rotation.z() == doctest::Approx(std::sin(M_PI / 4)).epsilon(1e-15));
  CHECK(p.rotation.w() == doctest::Approx(std::cos(M_PI / 4)).epsilon(1e-15));
  CHECK(p.rotation.x() == 0.0);
  CHECK(p.rotation.y() == 0.0);
  CHECK(p.translation.norm() == 0.0);
}

TEST_CASE("log_map of the identity is the zero twist") {
  const Twistd xi = log_map(Posed{});
  CHECK(xi.rotation == Vector3d::Zero());
  CHECK(xi.translation == Vector3d::Zero());
}

TEST_CASE("exp/log round trip over seeded twists") {
  Rng rng(42);
  for (int i = 0; i < 1000; ++i) {
    const Twistd xi = oracles::random_twist(rng, M_PI - 1e-3, 2.0);
    const Twistd back = log_map(exp_map(xi));
    CHECK((back.vector() - xi.vector()).norm() <= 1e-10);
  }
}

TEST_CASE("log_map inverts the matrix-exponential oracle") {
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    const Twistd xi = oracles::random_twist(rng, M_PI - 1e-2, 2.0);
    const Posed p = oracles::pose_from_matrix(oracles::matrix_exp(oracles::twist_hat4(xi.vector())));
    CHECK((log_map(p).vector() - xi.vector()).norm() <= 1e-10);
  }
}

TEST_CASE("exp_map matches the matrix-exponential oracle") {
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    const Twistd xi = oracles::random_twist(rng, M_PI - 1e-2, 2.0);
    const Matrix4d expected = oracles::matrix_exp(oracles::twist_hat4(xi.vector()));
    CHECK((exp_map(xi).matrix() - expected).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("exp_map(log_map(P)) = P for random poses") {
  Rng rng(9);
  for (int i = 0; i < 500; ++i) {
    const Posed p = oracles::random_pose(rng);
    CHECK(oracles::pose_distance(exp_map(log_map(p)), p) <= 1e-10);
  }
}

TEST_CASE("small-angle branch agrees with the series oracle at 1e-6") {
  Rng rng(10);
  for (int i = 0; i < 100; ++i) {
    Twistd xi(1e-6 * rng.unit_sphere(), Vector3d(rng.uniform(-1, 1),
                                                 rng.uniform(-1, 1),
                                                 rng.uniform(-1, 1)));
    const Matrix4d expected = oracles::matrix_exp(oracles::twist_hat4(xi.vector()));
    CHECK((exp_map(xi).matrix() - expected).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((log_map(exp_map(xi)).vector() - xi.vector()).norm() <= 1e-12);
  }
}

TEST_CASE("compose matches 4x4 matrix multiplication") {
  Rng rng(11);
  SUBCASE("identity is neutral") {
    const Posed p = oracles::random_pose(rng);
    CHECK(oracles::pose_distance(compose(Posed{}, p), p) == 0.0);
    CHECK(oracles::pose_distance(compose(p, Posed{}), p) <= 1e-15);
  }
  SUBCASE("random pairs") {
    for (int i = 0; i < 300; ++i) {
      const Posed a = oracles::random_pose(rng);
      const Posed b = oracles::random_pose(rng);
      const Matrix4d expected = a.matrix() * b.matrix();
      CHECK((compose(a, b).matrix() - expected).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("inverse matches 4x4 matrix inverse") {
  Rng rng(12);
  CHECK(oracles::pose_distance(inverse(Posed{}), Posed{}) == 0.0);
  for (int i = 0; i < 300; ++i) {
    const Posed p = oracles::random_pose(rng);
    const Matrix4d expected = p.matrix().inverse();
    CHECK((inverse(p).matrix() - expected).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(oracles::pose_distance(inverse(inverse(p)), p) <= 1e-12);
    CHECK(log_map(inverse(p) * p).vector().norm() <= 1e-10);
  }
}

TEST_CASE("between is inverse(a) * b") {
  Rng rng(13);
  for (int i = 0; i < 300; ++i) {
    const Posed a = oracles::random_pose(rng);
    const Posed b = oracles::random_pose(rng);
    CHECK(oracles::pose_distance(between(a, b), compose(inverse(a), b)) == 0.0);
    CHECK(log_map(between(a, a)).vector().norm() <= 1e-10);
  }
  const Posed p = oracles::random_pose(rng);
  CHECK(oracles::pose_distance(between(Posed{}, p), p) == 0.0);
}

TEST_CASE("composition is associative") {
  Rng rng(14);
  for (int i = 0; i < 300; ++i) {
    const Posed a = oracles::random_pose(rng, 3.0, 1.0);
    const Posed b = oracles::random_pose(rng, 3.0, 1.0);
    const Posed c = oracles::random_pose(rng, 3.0, 1.0);
    const Posed lhs = (a * b) * c;
    const Posed rhs = a * (b * c);
    CHECK(std::abs(lhs.rotation.x() - rhs.rotation.x()) <= 1e-12);
    CHECK(std::abs(lhs.rotation.y() - rhs.rotation.y()) <= 1e-12);
    CHECK(std::abs(lhs.rotation.z() - rhs.rotation.z()) <= 1e-12);
    CHECK(std::abs(lhs.rotation.w() - rhs.rotation.w()) <= 1e-12);
    CHECK((lhs.translation - rhs.translation).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("quaternion norm stays unit across a million compositions") {
  Rng rng(15);
  const Posed step = oracles::random_pose(rng, 0.01, 0.01);
  Posed chain;
  for (int i = 0; i < 1000000; ++i) chain = chain * step;
  const double norm = chain.rotation.quaternion().norm();
  CHECK(std::abs(norm - 1.0) <= 1e-9);
}

TEST_CASE("canonical form: w >= 0 with deterministic tie-break") {
  const Rotationd flipped(-0.5, 0.5, 0.5, 0.5);
  CHECK(flipped.w() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(flipped.x() == doctest::Approx(-0.5).epsilon(1e-15));

  // w == 0: first nonzero vector component is made positive.
  const Rotationd tie(0.0, -1.0, 0.0, 0.0);
  CHECK(tie.w() == 0.0);
  CHECK(tie.x() == 1.0);

  Rng rng(16);
  for (int i = 0; i < 200; ++i) {
    CHECK(oracles::random_pose(rng).rotation.w() >= 0.0);
  }
}

TEST_CASE("log_map at a half-turn returns a valid axis") {
  Rng rng(17);
  for (int i = 0; i < 50; ++i) {
    const Vector3d axis = rng.unit_sphere();
    const Posed p = exp_map(Twistd(M_PI * axis, Vector3d(0.1, -0.2, 0.3)));
    const Twistd xi = log_map(p);
    CHECK(xi.rotation.norm() == doctest::Approx(M_PI).epsilon(1e-9));
    CHECK(oracles::pose_distance(exp_map(xi), p) <= 1e-9);
  }
}

TEST_CASE("adjoint transports twists through conjugation") {
  Rng rng(18);
  for (int i = 0; i < 200; ++i) {
    const Posed p = oracles::random_pose(rng, 2.5, 1.5);
    const Twistd xi = oracles::random_twist(rng, 1.0, 1.0);
    const Posed lhs = exp_map<double>(adjoint(p) * xi.vector());
    const Posed rhs = p * exp_map(xi) * p.inverse();
    CHECK(oracles::pose_distance(lhs, rhs) <= 1e-9);
  }
}

TEST_CASE("twist vector layout is rotation-first") {
  const Twistd xi(Vector3d(1, 2, 3), Vector3d(4, 5, 6));
  const Vector6d v = xi.vector();
  CHECK(v[0] == 1.0);
  CHECK(v[2] == 3.0);
  CHECK(v[3] == 4.0);
  CHECK(v[5] == 6.0);
  const Twistd back = Twistd::from_vector(v);
  CHECK(back.rotation == xi.rotation);
  CHECK(back.translation == xi.translation);
}

TEST_CASE("se3 right Jacobian inverse matches finite differences") {
  Rng rng(19);
  for (int i = 0; i < 200; ++i) {
    const Twistd xi = oracles::random_twist(rng, 2.5, 1.5);
    const Matrix6d jr_inv = se3_right_jacobian_inverse(xi);
    const Posed base = exp_map(xi);
    const double h = 1e-6;
    Matrix6d fd;
    for (int d = 0; d < 6; ++d) {
      Vector6d eps = Vector6d::Zero();
      eps[d] = h;
      const Vector6d plus = log_map(base * exp_map<double>(eps)).vector();
      eps[d] = -h;
      const Vector6d minus = log_map(base * exp_map<double>(eps)).vector();
      fd.col(d) = (plus - minus) / (2.0 * h);
    }
    CHECK((jr_inv - fd).cwiseAbs().maxCoeff() <= 1e-7 * std::max(1.0, fd.cwiseAbs().maxCoeff()));
  }
}

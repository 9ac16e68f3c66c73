#include "marker_slam/evaluation.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace marker_slam {

std::vector<std::pair<int, int>> associate(const TrajectoryRecord& est,
                                           const TrajectoryRecord& ref,
                                           double max_dt) {
  if (est.empty() || ref.empty()) {
    throw std::invalid_argument("associate: empty trajectory");
  }

  struct Candidate {
    double abs_dt;
    int i, j;
  };
  std::vector<Candidate> candidates;
  for (int i = 0; i < static_cast<int>(est.size()); ++i) {
    for (int j = 0; j < static_cast<int>(ref.size()); ++j) {
      const double dt = std::abs(est.samples[i].first - ref.samples[j].first);
      if (dt <= max_dt) candidates.push_back({dt, i, j});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.abs_dt != b.abs_dt) return a.abs_dt < b.abs_dt;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });

  std::vector<char> est_used(est.size(), 0), ref_used(ref.size(), 0);
  std::vector<std::pair<int, int>> pairs;
  for (const auto& c : candidates) {
    if (est_used[c.i] || ref_used[c.j]) continue;
    est_used[c.i] = ref_used[c.j] = 1;
    pairs.emplace_back(c.i, c.j);
  }
  std::sort(pairs.begin(), pairs.end());

  if (pairs.size() < 3) {
    throw std::runtime_error("associate: only " + std::to_string(pairs.size()) +
                             " matched samples; alignment is underdetermined");
  }
  return pairs;
}

std::pair<Matrix3d, Vector3d> umeyama_align(const std::vector<Vector3d>& p,
                                            const std::vector<Vector3d>& q) {
  if (p.size() != q.size()) {
    throw std::invalid_argument("umeyama_align: point counts differ");
  }
  const std::size_t n = p.size();
  if (n < 3) throw std::invalid_argument("umeyama_align: need at least 3 points");

  Vector3d p_mean = Vector3d::Zero(), q_mean = Vector3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    p_mean += p[i];
    q_mean += q[i];
  }
  p_mean /= static_cast<double>(n);
  q_mean /= static_cast<double>(n);

  Matrix3d cov = Matrix3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    cov += (q[i] - q_mean) * (p[i] - p_mean).transpose();
  }
  cov /= static_cast<double>(n);

  Eigen::JacobiSVD<Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector3d sv = svd.singularValues();
  if (sv(1) <= 1e-12 * sv(0) + 1e-300) {
    throw std::runtime_error("umeyama_align: degenerate (collinear) point configuration");
  }

  Matrix3d d = Matrix3d::Identity();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) {
    d(2, 2) = -1.0;
  }
  const Matrix3d r = svd.matrixU() * d * svd.matrixV().transpose();
  const Vector3d t = q_mean - r * p_mean;
  return {r, t};
}

AteResult ate_rmse(const TrajectoryRecord& est, const TrajectoryRecord& ref,
                   double max_dt) {
  const auto pairs = associate(est, ref, max_dt);
  std::vector<Vector3d> p, q;
  p.reserve(pairs.size());
  q.reserve(pairs.size());
  for (const auto& [i, j] : pairs) {
    p.push_back(est.samples[i].second.translation);
    q.push_back(ref.samples[j].second.translation);
  }
  const auto [r, t] = umeyama_align(p, q);

  std::vector<double> errors(pairs.size());
  double sq_sum = 0.0, sum = 0.0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const double e = (q[k] - (r * p[k] + t)).norm();
    errors[k] = e;
    sq_sum += e * e;
    sum += e;
  }

  AteResult result;
  result.pair_count = static_cast<int>(pairs.size());
  result.rmse = std::sqrt(sq_sum / static_cast<double>(pairs.size()));
  result.mean = sum / static_cast<double>(pairs.size());
  std::sort(errors.begin(), errors.end());
  const std::size_t mid = errors.size() / 2;
  result.median = errors.size() % 2 == 1 ? errors[mid]
                                         : 0.5 * (errors[mid - 1] + errors[mid]);
  result.max = errors.back();
  result.alignment = Posed(Rotationd::from_matrix(r), t);
  return result;
}

RuntimeStats runtime_stats(const std::vector<OptimizationReport>& reports) {
  if (reports.empty()) throw std::invalid_argument("runtime_stats: no reports");
  std::vector<double> ms(reports.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    ms[i] = reports[i].wall_time_ms;
    sum += ms[i];
  }
  std::sort(ms.begin(), ms.end());
  RuntimeStats stats;
  stats.mean_ms = sum / static_cast<double>(ms.size());
  const std::size_t mid = ms.size() / 2;
  stats.median_ms = ms.size() % 2 == 1 ? ms[mid] : 0.5 * (ms[mid - 1] + ms[mid]);
  const std::size_t rank = static_cast<std::size_t>(
      std::ceil(0.95 * static_cast<double>(ms.size())));
  stats.p95_ms = ms[std::max<std::size_t>(rank, 1) - 1];
  return stats;
}

}  // namespace marker_slam

#include "maploc/eval.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "maploc/error.hpp"

namespace maploc {

void Trajectory::validate() const {
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (!(entries[i].timestamp > entries[i - 1].timestamp)) {
      throw Error(ErrorCode::kNonMonotonicTimestamps,
                  "trajectory entry " + std::to_string(i) + " does not advance in time");
    }
  }
}

PosePairs associate(const Trajectory& est, const Trajectory& ref, double max_dt) {
  PosePairs pairs;
  std::vector<bool> used(ref.size(), false);
  std::vector<double> ref_t(ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) ref_t[i] = ref.entries[i].timestamp;

  for (std::size_t e = 0; e < est.size(); ++e) {
    const double t = est.entries[e].timestamp;
    const auto mid = static_cast<std::size_t>(std::lower_bound(ref_t.begin(), ref_t.end(), t) - ref_t.begin());
    // Walk outward from the insertion point; the first unused hit on each side is the
    // nearest candidate on that side.
    std::size_t best = ref.size();
    double best_dt = std::numeric_limits<double>::infinity();
    for (std::size_t r = mid; r < ref.size() && ref_t[r] - t <= max_dt; ++r) {
      if (!used[r]) {
        best = r;
        best_dt = ref_t[r] - t;
        break;
      }
    }
    for (std::size_t r = mid; r-- > 0 && t - ref_t[r] <= max_dt;) {
      if (!used[r]) {
        const double dt = t - ref_t[r];
        if (dt <= best_dt) {
          best = r;
          best_dt = dt;
        }
        break;
      }
    }
    if (best < ref.size() && best_dt <= max_dt) {
      used[best] = true;
      pairs.emplace_back(e, best);
    }
  }
  if (pairs.empty()) throw Error(ErrorCode::kNoMatches, "no timestamps associate within max_dt");
  return pairs;
}

Pose align_se3(std::span<const Eigen::Vector3d> est, std::span<const Eigen::Vector3d> ref) {
  if (est.size() != ref.size() || est.size() < 3) {
    throw Error(ErrorCode::kDegenerateGeometry, "alignment needs at least three pairs");
  }
  const auto n = static_cast<double>(est.size());
  Eigen::Vector3d mu_e = Eigen::Vector3d::Zero();
  Eigen::Vector3d mu_r = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < est.size(); ++i) {
    mu_e += est[i];
    mu_r += ref[i];
  }
  mu_e /= n;
  mu_r /= n;

  Eigen::Matrix3d cross = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d spread = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < est.size(); ++i) {
    const Eigen::Vector3d de = est[i] - mu_e;
    cross += (ref[i] - mu_r) * de.transpose();
    spread += de * de.transpose();
  }
  const Eigen::JacobiSVD<Eigen::Matrix3d> shape(spread);
  const Eigen::Vector3d sv = shape.singularValues();
  if (!(sv[1] > 1e-12 * std::max(sv[0], 1e-300))) {
    throw Error(ErrorCode::kDegenerateGeometry, "estimated positions are collinear or coincident");
  }

  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d s = Eigen::Matrix3d::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) s(2, 2) = -1.0;
  const Eigen::Matrix3d r = svd.matrixU() * s * svd.matrixV().transpose();
  return {r, mu_r - r * mu_e};
}

AteResult ate(const Trajectory& est, const Trajectory& ref, const AteOptions& options) {
  const PosePairs pairs = associate(est, ref, options.max_dt);
  std::vector<Eigen::Vector3d> pe, pr;
  pe.reserve(pairs.size());
  pr.reserve(pairs.size());
  for (const auto& [e, r] : pairs) {
    pe.push_back(est.entries[e].pose.translation);
    pr.push_back(ref.entries[r].pose.translation);
  }
  AteResult out;
  out.pairs = pairs.size();
  if (options.align) out.alignment = align_se3(pe, pr);
  double sq = 0.0;
  for (std::size_t i = 0; i < pe.size(); ++i) sq += (out.alignment * pe[i] - pr[i]).squaredNorm();
  out.rmse_cm = 100.0 * std::sqrt(sq / static_cast<double>(pe.size()));
  return out;
}

namespace {

double relative_error(const Pose& e0, const Pose& e1, const Pose& r0, const Pose& r1) {
  const Pose rel_est = between(e0, e1);
  const Pose rel_ref = between(r0, r1);
  return log_map(between(rel_ref, rel_est)).trans.squaredNorm();
}

}  // namespace

double rpe(const Trajectory& est, const Trajectory& ref, std::size_t delta, double max_dt) {
  if (delta == 0) throw std::invalid_argument("rpe: delta must be >= 1");
  const PosePairs pairs = associate(est, ref, max_dt);
  if (pairs.size() < delta + 1) {
    throw Error(ErrorCode::kNoMatches, "not enough associated frames for the requested delta");
  }
  double sq = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k + delta < pairs.size(); ++k) {
    const auto& [e0, r0] = pairs[k];
    const auto& [e1, r1] = pairs[k + delta];
    sq += relative_error(est.entries[e0].pose, est.entries[e1].pose, ref.entries[r0].pose,
                         ref.entries[r1].pose);
    ++count;
  }
  return 100.0 * std::sqrt(sq / static_cast<double>(count));
}

double rpe_per_meter(const Trajectory& est, const Trajectory& ref, double distance, double max_dt) {
  const PosePairs pairs = associate(est, ref, max_dt);
  std::vector<double> path(pairs.size(), 0.0);
  for (std::size_t k = 1; k < pairs.size(); ++k) {
    path[k] = path[k - 1] + (ref.entries[pairs[k].second].pose.translation -
                             ref.entries[pairs[k - 1].second].pose.translation)
                                .norm();
  }
  double sq = 0.0;
  std::size_t count = 0;
  std::size_t j = 0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    j = std::max(j, k + 1);
    while (j < pairs.size() && path[j] - path[k] < distance) ++j;
    if (j >= pairs.size()) break;
    const double travelled = path[j] - path[k];
    const double err = std::sqrt(relative_error(est.entries[pairs[k].first].pose, est.entries[pairs[j].first].pose,
                                                ref.entries[pairs[k].second].pose, ref.entries[pairs[j].second].pose));
    const double per_m = err / travelled;
    sq += per_m * per_m;
    ++count;
  }
  if (count == 0) return 0.0;
  return 100.0 * std::sqrt(sq / static_cast<double>(count));
}

double map_accuracy(const PointCloud& est_map, const SpatialIndex& gt_index, double threshold) {
  const double t2 = threshold * threshold;
  double sum = 0.0;
  std::size_t inliers = 0;
  for (const auto& p : est_map.points) {
    const Neighbor nn = gt_index.nearest(p);
    if (nn.squared_distance <= t2) {
      sum += std::sqrt(nn.squared_distance);
      ++inliers;
    }
  }
  if (inliers == 0) throw Error(ErrorCode::kNoInliers, "no estimated point within threshold of ground truth");
  return 100.0 * sum / static_cast<double>(inliers);
}

double map_completeness(const SpatialIndex& est_index, const PointCloud& gt_map, double threshold) {
  if (gt_map.empty()) return 0.0;
  const double t2 = threshold * threshold;
  std::size_t matched = 0;
  for (const auto& p : gt_map.points) {
    if (est_index.nearest(p).squared_distance <= t2) ++matched;
  }
  return 100.0 * static_cast<double>(matched) / static_cast<double>(gt_map.size());
}

}  // namespace maploc

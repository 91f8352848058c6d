#pragma once

// Independent reference implementations for the evaluation and registration suites.

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "maploc/eval.hpp"
#include "maploc/registration.hpp"
#include "test_util.hpp"

namespace maploc::testing {

inline Trajectory random_traj(std::mt19937_64& rng, std::size_t n, double dt = 0.1) {
  Trajectory t;
  for (std::size_t i = 0; i < n; ++i) t.entries.push_back({static_cast<double>(i) * dt, random_pose(rng, 3.0, 10.0)});
  return t;
}

inline Trajectory transformed(const Trajectory& t, const Pose& q) {
  Trajectory out = t;
  for (auto& e : out.entries) e.pose = q * e.pose;
  return out;
}

// Horn's closed-form quaternion alignment: independent of the SVD path.
inline Pose horn(const std::vector<Eigen::Vector3d>& est, const std::vector<Eigen::Vector3d>& ref) {
  Eigen::Vector3d me = Eigen::Vector3d::Zero(), mr = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < est.size(); ++i) {
    me += est[i];
    mr += ref[i];
  }
  me /= static_cast<double>(est.size());
  mr /= static_cast<double>(est.size());
  Eigen::Matrix3d s = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < est.size(); ++i) s += (est[i] - me) * (ref[i] - mr).transpose();
  Eigen::Matrix4d n;
  n << s(0, 0) + s(1, 1) + s(2, 2), s(1, 2) - s(2, 1), s(2, 0) - s(0, 2), s(0, 1) - s(1, 0),
      s(1, 2) - s(2, 1), s(0, 0) - s(1, 1) - s(2, 2), s(0, 1) + s(1, 0), s(2, 0) + s(0, 2),
      s(2, 0) - s(0, 2), s(0, 1) + s(1, 0), -s(0, 0) + s(1, 1) - s(2, 2), s(1, 2) + s(2, 1),
      s(0, 1) - s(1, 0), s(2, 0) + s(0, 2), s(1, 2) + s(2, 1), -s(0, 0) - s(1, 1) + s(2, 2);
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(n);
  const Eigen::Vector4d v = eig.eigenvectors().col(3);
  const Eigen::Matrix3d r = Eigen::Quaterniond(v[0], v[1], v[2], v[3]).toRotationMatrix();
  return {r, mr - r * me};
}

inline double brute_ate(const Trajectory& est, const Trajectory& ref) {
  std::vector<Eigen::Vector3d> pe, pr;
  for (std::size_t i = 0; i < est.size(); ++i) {
    pe.push_back(est.entries[i].pose.translation);
    pr.push_back(ref.entries[i].pose.translation);
  }
  const Pose q = horn(pe, pr);
  double sq = 0.0;
  for (std::size_t i = 0; i < pe.size(); ++i) sq += (q * pe[i] - pr[i]).squaredNorm();
  return 100.0 * std::sqrt(sq / static_cast<double>(pe.size()));
}

inline double brute_rpe(const Trajectory& est, const Trajectory& ref, std::size_t delta) {
  double sq = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i + delta < est.size(); ++i) {
    const Pose re = est.entries[i].pose.inverse() * est.entries[i + delta].pose;
    const Pose rr = ref.entries[i].pose.inverse() * ref.entries[i + delta].pose;
    sq += log_map(rr.inverse() * re).trans.squaredNorm();
    ++n;
  }
  return 100.0 * std::sqrt(sq / static_cast<double>(n));
}

inline double brute_nn(const PointCloud& c, const Eigen::Vector3d& p) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& q : c.points) best = std::min(best, (q - p).norm());
  return best;
}

inline std::vector<Correspondence> random_correspondences(std::mt19937_64& rng, std::size_t n) {
  std::vector<Correspondence> corrs;
  for (std::size_t i = 0; i < n; ++i) {
    Correspondence c;
    c.source = random_vec(rng, 5.0);
    c.target = random_vec(rng, 5.0);
    c.normal = random_vec(rng).normalized();
    corrs.push_back(c);
  }
  return corrs;
}

}  // namespace maploc::testing

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <random>

#include "maploc/error.hpp"
#include "maploc/eval.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace maploc;
using namespace maploc::testing;

TEST(Associate, IdenticalTimestamps) {
  std::mt19937_64 rng(71);
  const Trajectory t = random_traj(rng, 20);
  const auto pairs = associate(t, t, 0.01);
  ASSERT_EQ(pairs.size(), 20u);
  for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ(pairs[i], std::make_pair(i, i));
}

TEST(Associate, ShiftedBeyondMaxDt) {
  std::mt19937_64 rng(72);
  const Trajectory t = random_traj(rng, 20);
  Trajectory s = t;
  for (auto& e : s.entries) e.timestamp += 0.02;
  try {
    associate(s, t, 0.01);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoMatches);
  }
}

TEST(Associate, JitterMatchesExhaustiveNearest) {
  std::mt19937_64 rng(73);
  std::uniform_real_distribution<double> jitter(-0.005, 0.005);
  for (int trial = 0; trial < 50; ++trial) {
    const Trajectory ref = random_traj(rng, 50);
    Trajectory est = ref;
    for (auto& e : est.entries) e.timestamp += jitter(rng);
    const auto pairs = associate(est, ref, 0.01);
    ASSERT_EQ(pairs.size(), 50u);
    for (const auto& [e, r] : pairs) {
      std::size_t best = 0;
      for (std::size_t k = 1; k < ref.size(); ++k) {
        if (std::abs(ref.entries[k].timestamp - est.entries[e].timestamp) <
            std::abs(ref.entries[best].timestamp - est.entries[e].timestamp)) {
          best = k;
        }
      }
      EXPECT_EQ(r, best);
    }
  }
}

TEST(AlignSe3, IdentityAndExactTransform) {
  std::mt19937_64 rng(74);
  std::vector<Eigen::Vector3d> a;
  for (int i = 0; i < 20; ++i) a.push_back(random_vec(rng, 5.0));
  EXPECT_LT(pose_distance(align_se3(a, a), Pose::identity()), 1e-9);
  const Pose q = random_pose(rng);
  std::vector<Eigen::Vector3d> b;
  for (const auto& p : a) b.push_back(q * p);
  // est = q^-1 applied to ref: the alignment maps est back onto ref.
  EXPECT_LT(pose_distance(align_se3(a, b), q), 1e-9);
  EXPECT_LT(pose_distance(align_se3(b, a), q.inverse()), 1e-9);
}

TEST(AlignSe3, NoisyMatchesIndependentSolver) {
  std::mt19937_64 rng(75);
  std::normal_distribution<double> n(0, 0.05);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Eigen::Vector3d> ref, est;
    const Pose q = random_pose(rng);
    for (int i = 0; i < 30; ++i) {
      ref.push_back(random_vec(rng, 5.0));
      est.push_back(q.inverse() * ref.back() + Eigen::Vector3d(n(rng), n(rng), n(rng)));
    }
    EXPECT_LT(pose_distance(align_se3(est, ref), horn(est, ref)), 1e-6);
  }
}

TEST(AlignSe3, Degenerate) {
  std::vector<Eigen::Vector3d> line{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
  try {
    align_se3(line, line);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateGeometry);
  }
}

TEST(Ate, IdentityAndRigidOffset) {
  std::mt19937_64 rng(76);
  const Trajectory t = random_traj(rng, 50);
  EXPECT_LT(ate(t, t).rmse_cm, 1e-9);
  EXPECT_LT(rpe(t, t), 1e-9);
  const Trajectory moved = transformed(t, random_pose(rng));
  EXPECT_LT(ate(moved, t).rmse_cm, 1e-9);
  EXPECT_LT(rpe(moved, t), 1e-9);
}

TEST(Ate, OneDisplacedPoseUnaligned) {
  std::mt19937_64 rng(77);
  const Trajectory t = random_traj(rng, 25);
  Trajectory d = t;
  d.entries[7].pose.translation += Eigen::Vector3d(0.06, 0.0, 0.08);
  AteOptions o;
  o.align = false;
  EXPECT_NEAR(ate(d, t, o).rmse_cm, 10.0 / std::sqrt(25.0), 1e-9);
}

TEST(Ate, InvariantUnderRigidTransform) {
  std::mt19937_64 rng(78);
  const Trajectory t = random_traj(rng, 40);
  Trajectory noisy = t;
  for (auto& e : noisy.entries) e.pose.translation += random_vec(rng, 0.1);
  const double base = ate(noisy, t).rmse_cm;
  EXPECT_NEAR(ate(transformed(noisy, random_pose(rng)), t).rmse_cm, base, 1e-9);
  EXPECT_NEAR(ate(noisy, transformed(t, random_pose(rng))).rmse_cm, base, 1e-9);
}

TEST(Metrics, AgreeWithBruteForce) {
  std::mt19937_64 rng(79);
  for (int trial = 0; trial < 20; ++trial) {
    const Trajectory ref = random_traj(rng, 100);
    Trajectory est = transformed(ref, random_pose(rng));
    for (auto& e : est.entries) e.pose = e.pose * exp_map(Twist(random_vec(rng, 0.02), random_vec(rng, 0.1)));
    EXPECT_NEAR(ate(est, ref).rmse_cm, brute_ate(est, ref), 1e-9);
    for (const std::size_t delta : {1u, 3u, 10u}) EXPECT_NEAR(rpe(est, ref, delta), brute_rpe(est, ref, delta), 1e-9);

    PointCloud gt, em;
    for (int i = 0; i < 500; ++i) gt.points.push_back(random_vec(rng, 2.0));
    for (int i = 0; i < 400; ++i) em.points.push_back(random_vec(rng, 2.3));
    double sum = 0.0;
    std::size_t in = 0, matched = 0;
    for (const auto& p : em.points) {
      const double d = brute_nn(gt, p);
      if (d <= 0.2) {
        sum += d;
        ++in;
      }
    }
    for (const auto& p : gt.points) matched += brute_nn(em, p) <= 0.2 ? 1 : 0;
    EXPECT_NEAR(map_accuracy(em, build_index(gt)), 100.0 * sum / static_cast<double>(in), 1e-9);
    EXPECT_NEAR(map_completeness(build_index(em), gt), 100.0 * static_cast<double>(matched) / 500.0, 1e-9);
  }
}

TEST(MapMetrics, IdentityCase) {
  std::mt19937_64 rng(80);
  PointCloud gt;
  for (int i = 0; i < 300; ++i) gt.points.push_back(random_vec(rng, 2.0));
  const SpatialIndex idx = build_index(gt);
  for (const double thr : {0.01, 0.2, 5.0}) {
    EXPECT_EQ(map_accuracy(gt, idx, thr), 0.0);
    EXPECT_EQ(map_completeness(idx, gt, thr), 100.0);
  }
}

TEST(MapMetrics, PlanarOffset) {
  PointCloud gt;
  for (int i = -50; i <= 50; ++i) {
    for (int j = -50; j <= 50; ++j) gt.points.emplace_back(0.02 * i, 0.02 * j, 0.0);
  }
  PointCloud est = gt;
  for (auto& p : est.points) p.z() += 0.05;
  EXPECT_NEAR(map_accuracy(est, build_index(gt)), 5.0, 1e-9);
}

TEST(MapMetrics, FarAwayAndHalf) {
  PointCloud gt;
  for (int i = 0; i < 100; ++i) gt.points.emplace_back(0.01 * i, 0, 0);
  PointCloud far = gt;
  for (auto& p : far.points) p.y() += 1.0;
  try {
    map_accuracy(far, build_index(gt));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoInliers);
  }
  EXPECT_EQ(map_completeness(build_index(far), gt), 0.0);
  PointCloud left(gt);
  left.points.resize(50);
  EXPECT_NEAR(map_completeness(build_index(left), gt, 0.005), 50.0, 1e-9);
}

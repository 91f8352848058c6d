#include <gtest/gtest.h>

#include <algorithm>
#include <numbers>
#include <random>

#include "maploc/error.hpp"
#include "maploc/geometry.hpp"
#include "maploc/point_cloud.hpp"
#include "maploc/spatial_index.hpp"
#include "test_util.hpp"

using namespace maploc;
using maploc::testing::pose_distance;
using maploc::testing::random_pose;
using maploc::testing::random_vec;

TEST(ExpMap, ZeroTwistIsIdentity) {
  const Pose p = exp_map(Twist());
  EXPECT_EQ(pose_distance(p, Pose::identity()), 0.0);
}

TEST(ExpMap, QuarterTurnAboutZ) {
  const Pose p = exp_map(Twist({0, 0, std::numbers::pi / 2}, {0, 0, 0}));
  const Eigen::Vector3d x = p * Eigen::Vector3d::UnitX();
  EXPECT_NEAR((x - Eigen::Vector3d::UnitY()).norm(), 0.0, 1e-12);
  Eigen::Matrix3d rz;
  rz << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  EXPECT_LT((p.rotation - rz).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ExpMap, LogRoundTripThousandPoses) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    const Pose p = random_pose(rng, std::numbers::pi - 1e-6);
    EXPECT_LT(pose_distance(exp_map(log_map(p)), p), 1e-9);
  }
}

TEST(ExpMap, SmallAngleSeries) {
  const Twist xi({1e-10, -2e-10, 3e-10}, {1, 2, 3});
  const Pose p = exp_map(xi);
  EXPECT_LT(p.orthonormality_error(), 1e-12);
  const Twist back = log_map(p);
  EXPECT_LT((back.vector() - xi.vector()).norm(), 1e-15);
}

TEST(LogMap, IdentityAndPureTranslation) {
  EXPECT_EQ(log_map(Pose::identity()).vector().norm(), 0.0);
  const Twist t = log_map(Pose(Eigen::Matrix3d::Identity(), {1, 2, 3}));
  EXPECT_EQ(t.rot.norm(), 0.0);
  EXPECT_LT((t.trans - Eigen::Vector3d(1, 2, 3)).norm(), 1e-15);
}

TEST(LogMap, HalfTurnAboutZ) {
  Eigen::Matrix3d r = Eigen::Vector3d(-1, -1, 1).asDiagonal();
  const Twist t = log_map(Pose(r, Eigen::Vector3d::Zero()));
  EXPECT_LT((t.rot - Eigen::Vector3d(0, 0, std::numbers::pi)).norm(), 1e-12);
}

TEST(LogMap, HalfTurnPositiveLeadingComponent) {
  const Eigen::Vector3d axis = Eigen::Vector3d(-1, 2, 0.5).normalized();
  const Pose p(so3_exp(axis * std::numbers::pi), Eigen::Vector3d::Zero());
  const Eigen::Vector3d rot = log_map(p).rot;
  EXPECT_NEAR(rot.norm(), std::numbers::pi, 1e-9);
  EXPECT_GT(rot.x(), 0.0);
  EXPECT_LT(pose_distance(exp_map(log_map(p)), p), 1e-9);
}

TEST(Compose, InverseAndBetween) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 200; ++i) {
    const Pose a = random_pose(rng), b = random_pose(rng), c = random_pose(rng);
    EXPECT_LT(pose_distance(compose(a, inverse(a)), Pose::identity()), 1e-9);
    EXPECT_LT(pose_distance(between(a, a), Pose::identity()), 1e-9);
    EXPECT_LT(pose_distance(compose(compose(a, b), c), compose(a, compose(b, c))), 1e-9);
    EXPECT_LT(pose_distance(between(a, compose(a, b)), b), 1e-9);
  }
}

TEST(Adjoint, ConjugationIdentity) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    const Pose t = random_pose(rng);
    const Twist xi(random_vec(rng, 0.5), random_vec(rng));
    const Pose lhs = t * exp_map(xi) * t.inverse();
    const Pose rhs = exp_map(Twist(Vector6d(adjoint(t) * xi.vector())));
    EXPECT_LT(pose_distance(lhs, rhs), 1e-9);
  }
}

TEST(Jacobians, LeftJacobianFirstOrder) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 50; ++i) {
    const Twist xi(random_vec(rng, 1.0), random_vec(rng));
    const Vector6d d = Vector6d::Constant(1e-6).cwiseProduct(Vector6d::Random());
    const Pose lhs = exp_map(Twist(Vector6d(xi.vector() + d)));
    const Pose rhs = exp_map(Twist(Vector6d(se3_left_jacobian(xi) * d))) * exp_map(xi);
    EXPECT_LT(pose_distance(lhs, rhs), 1e-10);
    EXPECT_LT((se3_left_jacobian(xi) * se3_left_jacobian_inverse(xi) - Matrix6d::Identity()).norm(), 1e-9);
  }
}

TEST(Retract, StaysOrthonormal) {
  std::mt19937_64 rng(5);
  Pose p = random_pose(rng);
  for (int i = 0; i < 10000; ++i) {
    Vector6d d;
    d << random_vec(rng, 0.3), random_vec(rng, 0.3);
    p = retract(p, d);
  }
  EXPECT_LT(p.orthonormality_error(), 1e-9);
}

namespace {

std::vector<Neighbor> brute_knn(const PointCloud& cloud, const Eigen::Vector3d& q, std::size_t k) {
  std::vector<Neighbor> all;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    all.push_back({static_cast<std::uint32_t>(i), (cloud.points[i] - q).squaredNorm()});
  }
  std::sort(all.begin(), all.end());
  all.resize(std::min(k, all.size()));
  return all;
}

}  // namespace

TEST(SpatialIndex, EmptyCloudThrows) {
  try {
    build_index(PointCloud{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyCloud);
  }
}

TEST(SpatialIndex, SinglePoint) {
  PointCloud c;
  c.points.push_back({1, 2, 3});
  const SpatialIndex idx = build_index(c);
  EXPECT_EQ(idx.nearest({-50, 7, 100}).index, 0u);
}

TEST(SpatialIndex, KnnMatchesLinearScan) {
  std::mt19937_64 rng(6);
  PointCloud c;
  for (int i = 0; i < 10000; ++i) c.points.push_back(random_vec(rng, 10.0));
  const SpatialIndex idx = build_index(c);
  for (int q = 0; q < 100; ++q) {
    const Eigen::Vector3d query = random_vec(rng, 12.0);
    EXPECT_EQ(idx.knn(query, 5), brute_knn(c, query, 5));
  }
}

TEST(SpatialIndex, HundredRandomCloudsWithTies) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> grid(-3, 3);
  for (int trial = 0; trial < 100; ++trial) {
    PointCloud c;
    // Integer lattice with duplicates produces many exact ties.
    for (int i = 0; i < 300; ++i) c.points.emplace_back(grid(rng), grid(rng), grid(rng));
    const SpatialIndex idx = build_index(c);
    for (int q = 0; q < 10; ++q) {
      const Eigen::Vector3d query(grid(rng) * 0.5, grid(rng) * 0.5, grid(rng) * 0.5);
      EXPECT_EQ(idx.knn(query, 7), brute_knn(c, query, 7));
      EXPECT_EQ(idx.nearest(query), brute_knn(c, query, 1)[0]);
    }
  }
}

TEST(SpatialIndex, RadiusZero) {
  PointCloud c;
  c.points = {{0, 0, 0}, {1, 0, 0}, {1, 0, 0}};
  const SpatialIndex idx = build_index(c);
  EXPECT_TRUE(idx.radius({0.5, 0, 0}, 0.0).empty());
  const auto hit = idx.radius({1, 0, 0}, 0.0);
  ASSERT_EQ(hit.size(), 2u);
  EXPECT_EQ(hit[0].index, 1u);
  EXPECT_EQ(hit[1].index, 2u);
}

TEST(SpatialIndex, RadiusMatchesLinearScan) {
  std::mt19937_64 rng(8);
  PointCloud c;
  for (int i = 0; i < 2000; ++i) c.points.push_back(random_vec(rng, 5.0));
  const SpatialIndex idx = build_index(c);
  for (int q = 0; q < 50; ++q) {
    const Eigen::Vector3d query = random_vec(rng, 5.0);
    auto expect = brute_knn(c, query, c.size());
    expect.erase(std::remove_if(expect.begin(), expect.end(), [](const Neighbor& n) { return n.squared_distance > 1.0; }),
                 expect.end());
    EXPECT_EQ(idx.radius(query, 1.0), expect);
  }
}

TEST(Normals, PlaneZ) {
  std::mt19937_64 rng(9);
  PointCloud c;
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 500; ++i) c.points.emplace_back(u(rng), u(rng), 0.0);
  const NormalEstimate est = estimate_normals(c);
  EXPECT_EQ(est.valid_count(), c.size());
  for (const auto& n : est.cloud.normals) EXPECT_LT((n - Eigen::Vector3d::UnitZ()).norm(), 1e-6);
}

TEST(Normals, PlaneX5) {
  std::mt19937_64 rng(10);
  PointCloud c;
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 500; ++i) c.points.emplace_back(5.0, u(rng), u(rng));
  const NormalEstimate est = estimate_normals(c);
  for (const auto& n : est.cloud.normals) EXPECT_LT((n - Eigen::Vector3d::UnitX()).norm(), 1e-6);
}

TEST(Normals, TiltedPlaneAngularError) {
  std::mt19937_64 rng(11);
  const Eigen::Vector3d normal = Eigen::Vector3d(0.3, -0.5, 0.8).normalized();
  const Eigen::Vector3d u = normal.unitOrthogonal();
  const Eigen::Vector3d v = normal.cross(u);
  std::uniform_real_distribution<double> d(-2, 2);
  PointCloud c;
  for (int i = 0; i < 400; ++i) c.points.push_back(u * d(rng) + v * d(rng) + normal * 1.5);
  const NormalEstimate est = estimate_normals(c);
  for (const auto& n : est.cloud.normals) {
    EXPECT_LT(std::acos(std::min(1.0, std::abs(n.dot(normal)))), 1e-6);
    EXPECT_NEAR(n.norm(), 1.0, 1e-9);
  }
}

TEST(Normals, CollinearIsDegenerate) {
  PointCloud c;
  c.points = {{0, 0, 0}, {1, 1, 1}, {2, 2, 2}};
  NormalParams p;
  p.k = 3;
  const NormalEstimate est = estimate_normals(c, p);
  for (const auto s : est.status) EXPECT_EQ(s, NormalStatus::kDegenerateNeighborhood);
  EXPECT_FALSE(est.cloud.has_valid_normal(0));
}

TEST(Normals, ThreadCountIndependent) {
  std::mt19937_64 rng(12);
  PointCloud c = maploc::testing::box_surface({-2, -2, -1}, {2, 2, 1}, 0.1);
  NormalParams p1, p8;
  p8.threads = 8;
  const auto a = estimate_normals(c, p1), b = estimate_normals(c, p8);
  ASSERT_EQ(a.cloud.normals.size(), b.cloud.normals.size());
  for (std::size_t i = 0; i < a.cloud.normals.size(); ++i) EXPECT_EQ(a.cloud.normals[i], b.cloud.normals[i]);
}

TEST(Voxel, SingleVoxelCentroid) {
  PointCloud c;
  for (int i = 0; i < 8; ++i) c.points.emplace_back(i & 1, (i >> 1) & 1, (i >> 2) & 1);
  const PointCloud v = voxel_downsample(c, 10.0);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_LT((v.points[0] - Eigen::Vector3d(0.5, 0.5, 0.5)).norm(), 1e-15);
}

#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "fd_check.hpp"
#include "maploc/error.hpp"
#include "maploc/factors.hpp"

using namespace maploc;
using maploc::testing::random_pose;
using maploc::testing::random_state;
using maploc::testing::random_vec;

TEST(Jacobians, EveryFactorMatchesFiniteDifferences) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<StateNode> states;
    Eigen::Vector3d gravity;
    const auto factors = maploc::testing::random_factors(rng, states, gravity);
    for (const auto& f : factors) {
      EXPECT_LT(maploc::testing::factor_jacobian_error(f, states, gravity), 1e-5) << to_string(f.kind());
      EXPECT_EQ(f.linearize(states, gravity).residual.size(), f.dimension());
      EXPECT_EQ(f.information.rows(), f.dimension());
    }
  }
}

TEST(Odometry, ExactIsZero) {
  std::mt19937_64 rng(42);
  StateNode a = random_state(rng), b = random_state(rng);
  EXPECT_LT(odometry_error(a, b, between(a.pose, b.pose)).norm(), 1e-12);
}

TEST(Odometry, TranslationInFrameI) {
  std::mt19937_64 rng(43);
  StateNode a = random_state(rng), b = random_state(rng);
  const Pose z = between(a.pose, b.pose);
  b.pose = a.pose * Pose(Eigen::Matrix3d::Identity(), {0.1, 0, 0}) * z;
  // Perturb in frame i: between = Translate(0.1) * z, so residual = log(z^-1 Translate z).
  const Vector6d r = odometry_error(a, b, z);
  EXPECT_LT(r.head<3>().norm(), 1e-9);
  EXPECT_NEAR(r.tail<3>().norm(), 0.1, 1e-9);
  StateNode c = a;
  c.pose = a.pose * Pose(Eigen::Matrix3d::Identity(), {0.1, 0, 0});
  const Vector6d r2 = odometry_error(a, c, Pose::identity());
  EXPECT_LT((r2 - (Vector6d() << 0, 0, 0, 0.1, 0, 0).finished()).norm(), 1e-9);
}

TEST(MapError, ZeroAtMapPose) {
  std::mt19937_64 rng(44);
  StateNode s = random_state(rng);
  EXPECT_LT(map_error(s, s.pose, {}).norm(), 1e-12);
  EXPECT_EQ(map_error(s, s.pose, {}).size(), 6);
}

TEST(MapError, MaskedAxisProjectedOut) {
  std::mt19937_64 rng(45);
  const Pose m = random_pose(rng);
  StateNode s;
  s.pose = m * Pose(Eigen::Matrix3d::Identity(), {0.3, 0, 0});
  const auto r = map_error(s, m, {true, false, false});
  EXPECT_EQ(r.size(), 5);
  EXPECT_LT(r.norm(), 1e-9);
  s.pose = m * Pose(Eigen::Matrix3d::Identity(), {0, 0.3, 0});
  const auto ry = map_error(s, m, {true, false, false});
  EXPECT_NEAR(ry[3], 0.3, 1e-9);
}

TEST(MapError, FullMaskKeepsRotation) {
  std::mt19937_64 rng(46);
  StateNode s = random_state(rng);
  const auto r = map_error(s, random_pose(rng), {true, true, true});
  EXPECT_EQ(r.size(), 3);
  EXPECT_GT(r.norm(), 0.0);
}

TEST(MapFactor, InformationRowsDeleted) {
  std::mt19937_64 rng(47);
  Eigen::Matrix<double, 6, 6> a = Eigen::Matrix<double, 6, 6>::Random();
  const Matrix6d h = a * a.transpose() + Matrix6d::Identity();
  const Factor f = make_map_factor(0, random_pose(rng), h, {false, true, false});
  EXPECT_EQ(f.information.rows(), 5);
  EXPECT_LT((f.information - f.information.transpose()).norm(), 1e-12);
  EXPECT_GT(Eigen::LLT<Eigen::MatrixXd>(f.information).info() == Eigen::Success, 0);
}

TEST(Gravity, AlignedUnitCase) {
  StateNode s;
  const Eigen::Vector4d e = gravity_error(s, {0, 0, -1}, {0, 0, 1});
  EXPECT_LT(e.norm(), 1e-15);
}

TEST(Gravity, DoubleNorm) {
  StateNode s;
  const Eigen::Vector4d e = gravity_error(s, {0, 0, -2}, {0, 0, 1});
  EXPECT_LT((e - Eigen::Vector4d(0, 0, -1, 1)).norm(), 1e-15);
}

TEST(Gravity, RotatedMeasurement) {
  StateNode s;
  s.pose.rotation = so3_exp({-std::numbers::pi / 2, 0, 0});
  const Eigen::Vector4d e = gravity_error(s, {0, 0, -1}, {0, -1, 0});
  EXPECT_LT(e.norm(), 1e-12);
}

TEST(Gravity, ZeroAccelerationThrows) {
  try {
    gravity_error(StateNode{}, {0, 0, -1}, {0.1, 0, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kZeroAcceleration);
  }
}

TEST(Gravity, InvariantUnderJointRotation) {
  std::mt19937_64 rng(48);
  for (int i = 0; i < 20; ++i) {
    StateNode s = random_state(rng);
    const Eigen::Vector3d a = random_vec(rng, 3.0) + Eigen::Vector3d(0, 0, 9.81);
    const Eigen::Vector3d g = random_vec(rng);
    const Eigen::Matrix3d q = random_pose(rng).rotation;
    StateNode t = s;
    t.pose.rotation = s.pose.rotation * q.transpose();
    EXPECT_LT((gravity_error(s, g, a) - gravity_error(t, g, q * a)).norm(), 1e-12);
  }
}

TEST(ZeroVelocityNoMotion, Examples) {
  StateNode s;
  EXPECT_EQ(zero_velocity_error(s).norm(), 0.0);
  s.velocity = {0.1, 0, 0};
  EXPECT_EQ(zero_velocity_error(s), Eigen::Vector3d(0.1, 0, 0));
  std::mt19937_64 rng(49);
  StateNode a = random_state(rng);
  EXPECT_LT(no_motion_error(a, a).norm(), 1e-12);
}

namespace {

std::vector<ImuSample> constant_imu(const Eigen::Vector3d& w, const Eigen::Vector3d& a, double duration, double rate) {
  std::vector<ImuSample> out;
  const int n = static_cast<int>(std::lround(duration * rate));
  for (int i = 0; i <= n; ++i) out.push_back({i / rate, w, a});
  return out;
}

}  // namespace

TEST(Preintegrate, Stationary) {
  const auto s = constant_imu({0, 0, 0}, {0, 0, 9.81}, 1.0, 200.0);
  const auto p = preintegrate(s, Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(), {0, 0, -9.81});
  EXPECT_LT((p.delta_rotation - Eigen::Matrix3d::Identity()).norm(), 1e-12);
  EXPECT_LT(p.delta_velocity.norm(), 1e-12);
  EXPECT_LT(p.delta_position.norm(), 1e-12);
  EXPECT_NEAR(p.dt, 1.0, 1e-12);
}

TEST(Preintegrate, ConstantAcceleration) {
  const auto s = constant_imu({0, 0, 0}, {1, 0, 9.81}, 1.0, 200.0);
  const auto p = preintegrate(s, Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(), {0, 0, -9.81});
  EXPECT_LT((p.delta_velocity - Eigen::Vector3d(1, 0, 0)).norm(), 1e-12);
  EXPECT_LT((p.delta_position - Eigen::Vector3d(0.5, 0, 0)).norm(), 1e-12);
}

TEST(Preintegrate, ConstantYawRate) {
  const auto s = constant_imu({0, 0, std::numbers::pi / 2}, {0, 0, 9.81}, 1.0, 200.0);
  const auto p = preintegrate(s, Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(), {0, 0, -9.81});
  EXPECT_LT((p.delta_rotation - so3_exp({0, 0, std::numbers::pi / 2})).norm(), 1e-4);
}

TEST(Preintegrate, NonMonotonicThrows) {
  auto s = constant_imu({0, 0, 0}, {0, 0, 9.81}, 0.1, 200.0);
  s[5].timestamp = s[4].timestamp;
  try {
    preintegrate(s, Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(), {0, 0, -9.81});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonMonotonicTimestamps);
  }
}

TEST(Preintegrate, BiasConsistency) {
  std::mt19937_64 rng(50);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = maploc::testing::random_imu(rng, 0.5);
    const Eigen::Vector3d ba = random_vec(rng, 0.1), bg = random_vec(rng, 0.01);
    const auto base = preintegrate(s, ba, bg, {0, 0, -9.81});
    double prev = 0.0;
    for (const double scale : {1e-2, 1e-3}) {
      const Eigen::Vector3d da = random_vec(rng, scale), dg = random_vec(rng, scale * 0.1);
      const auto re = preintegrate(s, ba + da, bg + dg, {0, 0, -9.81});
      const double err = (re.raw_velocity - base.corrected_velocity(ba + da, bg + dg)).norm() +
                         (re.raw_position - base.corrected_position(ba + da, bg + dg)).norm() +
                         so3_log(re.delta_rotation.transpose() * base.corrected_rotation(bg + dg)).norm();
      const double d2 = da.squaredNorm() + dg.squaredNorm();
      EXPECT_LT(err, 10.0 * d2 + 1e-12);
      if (prev > 0.0) EXPECT_LT(err, prev);
      prev = err;
    }
  }
}

TEST(Zupt, ConstantIsStationary) {
  EXPECT_TRUE(detect_zupt(constant_imu({0, 0, 0}, {0, 0, 9.81}, 0.5, 200.0)));
}

TEST(Zupt, RotatingIsNot) {
  EXPECT_FALSE(detect_zupt(constant_imu({0, 0, 1}, {0, 0, 9.81}, 0.5, 200.0)));
}

TEST(Zupt, ShortWindowThrows) {
  try {
    detect_zupt(constant_imu({0, 0, 0}, {0, 0, 9.81}, 0.2, 200.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kWindowTooShort);
  }
}

TEST(Zupt, NoisyStationaryMonteCarlo) {
  std::mt19937_64 rng(51);
  std::normal_distribution<double> na(0.0, 0.01), nw(0.0, 0.001);
  for (int draw = 0; draw < 100; ++draw) {
    auto s = constant_imu({0, 0, 0}, {0, 0, 9.81}, 0.5, 200.0);
    for (auto& x : s) {
      x.accel += Eigen::Vector3d(na(rng), na(rng), na(rng));
      x.gyro += Eigen::Vector3d(nw(rng), nw(rng), nw(rng));
    }
    EXPECT_TRUE(detect_zupt(s));
  }
}

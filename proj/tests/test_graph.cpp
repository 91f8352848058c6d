#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "maploc/error.hpp"
#include "maploc/graph.hpp"
#include "test_util.hpp"

using namespace maploc;
using maploc::testing::pose_distance;
using maploc::testing::random_pose;
using maploc::testing::random_vec;

namespace {

std::vector<Pose> smooth_path(std::mt19937_64& rng, std::size_t n) {
  std::vector<Pose> out{random_pose(rng, 0.5, 1.0)};
  for (std::size_t i = 1; i < n; ++i) {
    Vector6d d;
    d << random_vec(rng, 0.05), Eigen::Vector3d(0.5, 0, 0) + random_vec(rng, 0.05);
    out.push_back(out.back() * exp_map(Twist(d)));
  }
  return out;
}

Pose noisy(std::mt19937_64& rng, const Pose& p, double rot, double trans) {
  std::normal_distribution<double> nr(0, rot), nt(0, trans);
  Vector6d d;
  d << nr(rng), nr(rng), nr(rng), nt(rng), nt(rng), nt(rng);
  return p * exp_map(Twist(d));
}

// Chain with odometry between consecutive states, initialized by dead reckoning.
FactorGraph chain(const std::vector<Pose>& gt, const std::vector<Pose>& odom) {
  FactorGraph g;
  Pose cur = gt[0];
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (i > 0) cur = cur * between(odom[i - 1], odom[i]);
    StateNode s;
    s.pose = cur;
    s.timestamp = static_cast<double>(i);
    g.add_state(s);
    if (i > 0) g.add_factor(make_odometry_factor(i - 1, i, between(odom[i - 1], odom[i]), pose_information(0.01, 0.05)));
  }
  g.add_factor(make_prior_factor(0, gt[0], pose_information(1e-4, 1e-4)));
  return g;
}

double ate_of(const std::vector<StateNode>& s, const std::vector<Pose>& gt) {
  double sq = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) sq += (s[i].pose.translation - gt[i].translation).squaredNorm();
  return std::sqrt(sq / static_cast<double>(gt.size()));
}

}  // namespace

TEST(Graph, AddStateAndRange) {
  FactorGraph g;
  EXPECT_EQ(g.add_state({}), 0u);
  g.add_state({});
  try {
    g.add_factor(make_odometry_factor(0, 5, Pose::identity(), Matrix6d::Identity()));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIndexOutOfRange);
  }
}

TEST(Graph, HundredStateChainAccepted) {
  FactorGraph g;
  for (int i = 0; i < 100; ++i) g.add_state({});
  for (std::size_t i = 1; i < 100; ++i) g.add_factor(make_odometry_factor(i - 1, i, Pose::identity(), Matrix6d::Identity()));
  EXPECT_EQ(g.factors().size(), 99u);
}

TEST(Graph, NotAnchoredThrows) {
  FactorGraph g;
  g.add_state({});
  g.add_state({});
  g.add_factor(make_odometry_factor(0, 1, Pose::identity(), Matrix6d::Identity()));
  try {
    optimize(g, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotAnchored);
  }
}

TEST(Graph, ExactChainRecoversTruth) {
  std::mt19937_64 rng(61);
  const auto gt = smooth_path(rng, 10);
  FactorGraph g = chain(gt, gt);
  // Start away from the solution.
  for (auto& s : g.mutable_states()) s.pose = noisy(rng, s.pose, 0.05, 0.2);
  const auto r = optimize(g, {});
  for (std::size_t i = 0; i < gt.size(); ++i) EXPECT_LT(pose_distance(r.states[i].pose, gt[i]), 1e-8);
  EXPECT_LT(r.final_cost, 1e-16);
  double prev = r.initial_cost;
  for (const auto& it : r.log) {
    if (!it.accepted) continue;
    EXPECT_LE(it.cost, prev);
    prev = it.cost;
  }
}

TEST(Graph, MapFactorsBeatDeadReckoning) {
  std::mt19937_64 rng(62);
  for (int trial = 0; trial < 10; ++trial) {
    const auto gt = smooth_path(rng, 50);
    std::vector<Pose> odom{gt[0]};
    for (std::size_t i = 1; i < gt.size(); ++i) odom.push_back(odom.back() * noisy(rng, between(gt[i - 1], gt[i]), 0.005, 0.02));
    FactorGraph dr = chain(gt, odom);
    FactorGraph g = chain(gt, odom);
    for (std::size_t i = 0; i < gt.size(); i += 5) g.add_factor(make_map_factor(i, gt[i], Matrix6d::Identity(), {}, 1e4));
    optimize(dr, {});
    optimize(g, {});
    EXPECT_LT(ate_of(g.states(), gt), ate_of(dr.states(), gt));
  }
}

TEST(Graph, NoMapFactorsEqualsDeadReckoning) {
  std::mt19937_64 rng(63);
  const auto gt = smooth_path(rng, 30);
  std::vector<Pose> odom{random_pose(rng)};
  for (std::size_t i = 1; i < gt.size(); ++i) odom.push_back(odom.back() * between(gt[i - 1], gt[i]));
  FactorGraph g = chain(gt, odom);
  const auto init = g.states();
  optimize(g, {});
  for (std::size_t i = 0; i < gt.size(); ++i) EXPECT_LT(pose_distance(g.states()[i].pose, init[i].pose), 1e-9);
}

TEST(Graph, GravityConvergesToUnitDirection) {
  FactorGraph g;
  StateNode s;
  s.pose.rotation = so3_exp({0.1, -0.2, 0.3});
  g.add_state(s);
  g.add_factor(make_prior_factor(0, s.pose, pose_information(1e-6, 1e-6)));
  const Eigen::Vector3d a(0.3, -0.2, 9.7);
  g.add_factor(make_gravity_factor(0, a, Eigen::Matrix3d::Identity() * 1e4));
  g.set_gravity({0.2, 0.1, -1.5});
  const auto r = optimize(g, {});
  const Eigen::Vector3d expect = -(s.pose.rotation * a).normalized();
  EXPECT_LT(std::abs(r.gravity.norm() - 1.0), 1e-6);
  EXPECT_LT(std::acos(std::min(1.0, r.gravity.normalized().dot(expect))), 1e-6);
}

TEST(Graph, WindowCoversAllEqualsBatch) {
  std::mt19937_64 rng(64);
  const auto gt = smooth_path(rng, 20);
  std::vector<Pose> odom{gt[0]};
  for (std::size_t i = 1; i < gt.size(); ++i) odom.push_back(odom.back() * noisy(rng, between(gt[i - 1], gt[i]), 0.005, 0.02));
  FactorGraph a = chain(gt, odom), b = chain(gt, odom);
  for (std::size_t i = 0; i < gt.size(); i += 4) {
    a.add_factor(make_map_factor(i, gt[i], Matrix6d::Identity(), {}, 1e3));
    b.add_factor(make_map_factor(i, gt[i], Matrix6d::Identity(), {}, 1e3));
  }
  // Split the last state off; re-add it through the incremental path and directly.
  FactorGraph inc;
  for (std::size_t i = 0; i + 1 < gt.size(); ++i) inc.add_state(a.states()[i]);
  std::vector<Factor> last;
  for (const auto& f : a.factors()) {
    const bool touches_last = std::find(f.states.begin(), f.states.end(), gt.size() - 1) != f.states.end();
    if (touches_last) {
      last.push_back(f);
    } else {
      inc.add_factor(f);
    }
  }
  optimize(inc, {});
  FactorGraph direct = inc;
  solve_incremental(inc, a.states().back(), last, 100, {});
  direct.add_state(a.states().back());
  for (const auto& f : last) direct.add_factor(f);
  optimize(direct, {});
  for (std::size_t i = 0; i < gt.size(); ++i) EXPECT_LT(pose_distance(inc.states()[i].pose, direct.states()[i].pose), 1e-9);
  // And the batch from dead reckoning lands on the same optimum to solver precision.
  optimize(b, {});
  for (std::size_t i = 0; i < gt.size(); ++i) EXPECT_LT(pose_distance(inc.states()[i].pose, b.states()[i].pose), 1e-6);
}

TEST(Graph, WindowedNoiselessChainEqualsBatch) {
  std::mt19937_64 rng(65);
  const auto gt = smooth_path(rng, 100);
  FactorGraph inc;
  StateNode s0;
  s0.pose = gt[0];
  inc.add_state(s0);
  inc.add_factor(make_prior_factor(0, gt[0], pose_information(1e-4, 1e-4)));
  optimize(inc, {});
  for (std::size_t i = 1; i < gt.size(); ++i) {
    StateNode s;
    s.pose = inc.states().back().pose * between(gt[i - 1], gt[i]);
    solve_incremental(inc, s, {make_odometry_factor(i - 1, i, between(gt[i - 1], gt[i]), Matrix6d::Identity())}, 10, {});
  }
  FactorGraph batch = chain(gt, gt);
  optimize(batch, {});
  for (std::size_t i = 0; i < gt.size(); ++i) EXPECT_LT(pose_distance(inc.states()[i].pose, batch.states()[i].pose), 1e-9);
}

TEST(Graph, IncrementalCostCloseToBatch) {
  std::mt19937_64 rng(66);
  const auto gt = smooth_path(rng, 60);
  std::vector<Pose> odom{gt[0]};
  for (std::size_t i = 1; i < gt.size(); ++i) odom.push_back(odom.back() * noisy(rng, between(gt[i - 1], gt[i]), 0.002, 0.01));
  std::vector<Pose> meas;
  for (const auto& p : gt) meas.push_back(noisy(rng, p, 0.002, 0.01));

  FactorGraph inc;
  StateNode s0;
  s0.pose = gt[0];
  inc.add_state(s0);
  inc.add_factor(make_prior_factor(0, gt[0], pose_information(1e-4, 1e-4)));
  for (std::size_t i = 1; i < gt.size(); ++i) {
    StateNode s;
    s.pose = inc.states().back().pose * between(odom[i - 1], odom[i]);
    std::vector<Factor> f{make_odometry_factor(i - 1, i, between(odom[i - 1], odom[i]), pose_information(0.002, 0.01))};
    if (i % 3 == 0) f.push_back(make_map_factor(i, meas[i], pose_information(0.002, 0.01), {}));
    solve_incremental(inc, s, std::move(f), 10, {});
  }
  FactorGraph batch = inc;
  const double windowed_cost = inc.cost();
  optimize(batch, {});
  EXPECT_GE(windowed_cost, batch.cost() - 1e-12);
  EXPECT_LT(windowed_cost, 1.05 * batch.cost());
}

TEST(Graph, GaugeConsistency) {
  std::mt19937_64 rng(67);
  const auto gt = smooth_path(rng, 15);
  std::vector<Pose> odom{gt[0]};
  for (std::size_t i = 1; i < gt.size(); ++i) odom.push_back(odom.back() * noisy(rng, between(gt[i - 1], gt[i]), 0.005, 0.02));
  const Pose q = random_pose(rng);
  auto build = [&](const Pose& w) {
    FactorGraph g;
    Pose cur = w * gt[0];
    for (std::size_t i = 0; i < gt.size(); ++i) {
      if (i > 0) cur = cur * between(odom[i - 1], odom[i]);
      StateNode s;
      s.pose = cur;
      g.add_state(s);
      if (i > 0) g.add_factor(make_odometry_factor(i - 1, i, between(odom[i - 1], odom[i]), pose_information(0.01, 0.05)));
      // A world-frame Hessian transforms with the world: H' = Ad(w^-1)^T H Ad(w^-1).
      const Matrix6d ad = adjoint(w.inverse());
      const Matrix6d h = ad.transpose() * pose_information(0.01, 0.02) * ad;
      if (i % 4 == 2) g.add_factor(make_map_factor(i, w * gt[i], h, {i % 8 == 2, false, false}));
    }
    g.add_factor(make_prior_factor(0, w * gt[0], pose_information(1e-3, 1e-3)));
    OptimizerParams p;
    p.relative_tolerance = 1e-15;
    optimize(g, p);
    return g.states();
  };
  const auto a = build(Pose::identity());
  const auto b = build(q);
  for (std::size_t i = 0; i < gt.size(); ++i) EXPECT_LT(pose_distance(q * a[i].pose, b[i].pose), 1e-8);
}

TEST(Graph, ZeroInformationFactorIsInert) {
  std::mt19937_64 rng(68);
  const auto gt = smooth_path(rng, 10);
  std::vector<Pose> odom{gt[0]};
  for (std::size_t i = 1; i < gt.size(); ++i) odom.push_back(odom.back() * noisy(rng, between(gt[i - 1], gt[i]), 0.005, 0.02));
  FactorGraph a = chain(gt, odom), b = chain(gt, odom);
  a.add_factor(make_map_factor(3, gt[3], pose_information(0.01, 0.01), {}));
  b.add_factor(make_map_factor(3, gt[3], pose_information(0.01, 0.01), {}));
  b.add_factor(make_map_factor(5, random_pose(rng), Matrix6d::Zero(), {}));
  OptimizerParams p;
  p.relative_tolerance = 1e-15;
  optimize(a, p);
  optimize(b, p);
  for (std::size_t i = 0; i < gt.size(); ++i) EXPECT_LT(pose_distance(a.states()[i].pose, b.states()[i].pose), 1e-10);
}

TEST(Graph, IterationLogCsv) {
  std::mt19937_64 rng(69);
  const auto gt = smooth_path(rng, 5);
  FactorGraph g = chain(gt, gt);
  for (auto& s : g.mutable_states()) s.pose = noisy(rng, s.pose, 0.05, 0.2);
  const auto r = optimize(g, {});
  std::ostringstream os;
  write_iteration_log(os, r.log);
  EXPECT_EQ(os.str().rfind("iteration,cost,damping,step_norm,accepted\n", 0), 0u);
}

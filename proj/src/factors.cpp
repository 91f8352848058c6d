#include "maploc/factors.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <stdexcept>

#include "maploc/error.hpp"

namespace maploc {

// ---- preintegration ------------------------------------------------------------------------

Eigen::Matrix3d Preintegration::corrected_rotation(const Eigen::Vector3d& bg) const {
  return delta_rotation * so3_exp(d_rotation_d_gyro_bias * (bg - gyro_bias));
}

Eigen::Vector3d Preintegration::corrected_velocity(const Eigen::Vector3d& ba, const Eigen::Vector3d& bg) const {
  return raw_velocity + d_velocity_d_accel_bias * (ba - accel_bias) +
         d_velocity_d_gyro_bias * (bg - gyro_bias);
}

Eigen::Vector3d Preintegration::corrected_position(const Eigen::Vector3d& ba, const Eigen::Vector3d& bg) const {
  return raw_position + d_position_d_accel_bias * (ba - accel_bias) +
         d_position_d_gyro_bias * (bg - gyro_bias);
}

Preintegration preintegrate(std::span<const ImuSample> samples, const Eigen::Vector3d& accel_bias,
                            const Eigen::Vector3d& gyro_bias, const Eigen::Vector3d& gravity_start,
                            const ImuNoise& noise) {
  if (samples.size() < 2) throw std::invalid_argument("preintegrate: need at least two samples");
  for (std::size_t k = 1; k < samples.size(); ++k) {
    if (!(samples[k].timestamp > samples[k - 1].timestamp)) {
      throw Error(ErrorCode::kNonMonotonicTimestamps,
                  "IMU sample " + std::to_string(k) + " does not advance in time");
    }
  }

  Preintegration pim;
  pim.accel_bias = accel_bias;
  pim.gyro_bias = gyro_bias;
  const Eigen::Matrix3d eye = Eigen::Matrix3d::Identity();

  for (std::size_t k = 0; k + 1 < samples.size(); ++k) {
    const double dt = samples[k + 1].timestamp - samples[k].timestamp;
    const Eigen::Vector3d a0 = samples[k].accel - accel_bias;
    const Eigen::Vector3d a1 = samples[k + 1].accel - accel_bias;
    const Eigen::Vector3d theta = (0.5 * (samples[k].gyro + samples[k + 1].gyro) - gyro_bias) * dt;
    const Eigen::Matrix3d step = so3_exp(theta);
    const Eigen::Matrix3d jr = so3_right_jacobian(theta);

    const Eigen::Matrix3d r0 = pim.delta_rotation;
    const Eigen::Matrix3d r1 = r0 * step;
    const Eigen::Matrix3d jr0 = pim.d_rotation_d_gyro_bias;
    const Eigen::Matrix3d jr1 = step.transpose() * jr0 - jr * dt;

    const Eigen::Vector3d a_mid = 0.5 * (r0 * a0 + r1 * a1);
    const Eigen::Matrix3d da_dba = -0.5 * (r0 + r1);
    const Eigen::Matrix3d da_dbg = -0.5 * (r0 * skew(a0) * jr0 + r1 * skew(a1) * jr1);

    // Covariance of [dphi; dv; dp] (first order, start-of-step linearization).
    Matrix9d a = Matrix9d::Identity();
    a.block<3, 3>(0, 0) = step.transpose();
    a.block<3, 3>(3, 0) = -r0 * skew(a0) * dt;
    a.block<3, 3>(6, 0) = -0.5 * r0 * skew(a0) * dt * dt;
    a.block<3, 3>(6, 3) = eye * dt;
    Eigen::Matrix<double, 9, 6> b = Eigen::Matrix<double, 9, 6>::Zero();
    b.block<3, 3>(0, 0) = jr * dt;
    b.block<3, 3>(3, 3) = r0 * dt;
    b.block<3, 3>(6, 3) = 0.5 * r0 * dt * dt;
    Eigen::Matrix<double, 6, 6> q = Eigen::Matrix<double, 6, 6>::Zero();
    q.topLeftCorner<3, 3>() = eye * (noise.gyro_density * noise.gyro_density / dt);
    q.bottomRightCorner<3, 3>() = eye * (noise.accel_density * noise.accel_density / dt);
    pim.covariance = a * pim.covariance * a.transpose() + b * q * b.transpose();

    pim.raw_position += pim.raw_velocity * dt + 0.5 * a_mid * dt * dt;
    pim.raw_velocity += a_mid * dt;
    pim.d_position_d_accel_bias += pim.d_velocity_d_accel_bias * dt + 0.5 * da_dba * dt * dt;
    pim.d_position_d_gyro_bias += pim.d_velocity_d_gyro_bias * dt + 0.5 * da_dbg * dt * dt;
    pim.d_velocity_d_accel_bias += da_dba * dt;
    pim.d_velocity_d_gyro_bias += da_dbg * dt;
    pim.delta_rotation = r1;
    pim.d_rotation_d_gyro_bias = jr1;
    pim.dt += dt;
  }

  pim.delta_velocity = pim.raw_velocity + gravity_start * pim.dt;
  pim.delta_position = pim.raw_position + 0.5 * gravity_start * pim.dt * pim.dt;
  return pim;
}

bool detect_zupt(std::span<const ImuSample> window, const ZuptParams& params) {
  if (window.size() < 2 || window.back().timestamp - window.front().timestamp < params.window - 1e-9) {
    throw Error(ErrorCode::kWindowTooShort, "ZUPT window shorter than " + std::to_string(params.window) + " s");
  }
  const auto n = static_cast<double>(window.size());
  double sum = 0.0;
  double sum_sq = 0.0;
  double gyro = 0.0;
  for (const auto& s : window) {
    const double a = s.accel.norm();
    sum += a;
    sum_sq += a * a;
    gyro += s.gyro.norm();
  }
  const double mean = sum / n;
  const double var = std::max(0.0, sum_sq / n - mean * mean);
  return std::sqrt(var) < params.accel_std_max && gyro / n < params.gyro_mean_max;
}

// ---- residuals -----------------------------------------------------------------------------

Vector6d odometry_error(const StateNode& si, const StateNode& sj, const Pose& measured,
                        Matrix6d* d_pose_i, Matrix6d* d_pose_j) {
  const Twist r = log_map(measured.inverse() * between(si.pose, sj.pose));
  if (d_pose_i || d_pose_j) {
    const Matrix6d j = se3_right_jacobian_inverse(r) * adjoint(sj.pose.inverse());
    if (d_pose_i) *d_pose_i = -j;
    if (d_pose_j) *d_pose_j = j;
  }
  return r.vector();
}

Vector6d pose_prior_error(const StateNode& s, const Pose& prior, Matrix6d* d_pose) {
  const Twist r = log_map(prior.inverse() * s.pose);
  if (d_pose) *d_pose = se3_right_jacobian_inverse(r) * adjoint(s.pose.inverse());
  return r.vector();
}

namespace {

std::vector<int> kept_rows(const std::array<bool, 3>& mask) {
  std::vector<int> rows{0, 1, 2};
  for (int a = 0; a < 3; ++a) {
    if (!mask[static_cast<std::size_t>(a)]) rows.push_back(3 + a);
  }
  return rows;
}

}  // namespace

Eigen::VectorXd map_error(const StateNode& s, const Pose& map_pose, const std::array<bool, 3>& mask,
                          Eigen::MatrixXd* d_pose) {
  Matrix6d full_jac;
  const Vector6d full = pose_prior_error(s, map_pose, d_pose ? &full_jac : nullptr);
  const auto rows = kept_rows(mask);
  Eigen::VectorXd r(rows.size());
  if (d_pose) d_pose->resize(static_cast<Eigen::Index>(rows.size()), 6);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    r[static_cast<Eigen::Index>(k)] = full[rows[k]];
    if (d_pose) d_pose->row(static_cast<Eigen::Index>(k)) = full_jac.row(rows[k]);
  }
  return r;
}

Eigen::Vector4d gravity_error(const StateNode& s, const Eigen::Vector3d& gravity,
                              const Eigen::Vector3d& accel_mean, Eigen::Matrix<double, 4, 6>* d_pose,
                              Eigen::Matrix<double, 4, 3>* d_gravity) {
  if (accel_mean.norm() < 0.5) {
    throw Error(ErrorCode::kZeroAcceleration, "mean specific force too small to normalize");
  }
  const Eigen::Vector3d a_world = s.pose.rotation * accel_mean;
  const Eigen::Vector3d u = a_world / a_world.norm();
  const double g_norm = gravity.norm();
  Eigen::Vector4d e;
  e << u + gravity, g_norm - 1.0;
  if (d_pose) {
    d_pose->setZero();
    d_pose->block<3, 3>(0, 0) = -skew(u);
  }
  if (d_gravity) {
    d_gravity->setZero();
    d_gravity->block<3, 3>(0, 0) = Eigen::Matrix3d::Identity();
    if (g_norm > 0.0) d_gravity->row(3) = gravity.transpose() / g_norm;
  }
  return e;
}

Vector6d no_motion_error(const StateNode& si, const StateNode& sj, Matrix6d* d_pose_i, Matrix6d* d_pose_j) {
  return odometry_error(si, sj, Pose::identity(), d_pose_i, d_pose_j);
}

Vector9d imu_error(const StateNode& si, const StateNode& sj, const Eigen::Vector3d& gravity,
                   const Preintegration& pim, double gravity_magnitude, ImuJacobians* jac) {
  const double dt = pim.dt;
  const Eigen::Matrix3d& ri = si.pose.rotation;
  const Eigen::Matrix3d& rj = sj.pose.rotation;
  const Eigen::Matrix3d rit = ri.transpose();
  const Eigen::Vector3d g = gravity_magnitude * gravity;

  const Eigen::Vector3d d_bg = si.gyro_bias - pim.gyro_bias;
  const Eigen::Vector3d bias_rot = pim.d_rotation_d_gyro_bias * d_bg;
  const Eigen::Matrix3d c = pim.delta_rotation.transpose() * rit * rj;
  const Eigen::Vector3d r_rot = so3_log(so3_exp(-bias_rot) * c);

  const Eigen::Vector3d w_v = sj.velocity - si.velocity - g * dt;
  const Eigen::Vector3d w_p = sj.pose.translation - si.pose.translation - si.velocity * dt - 0.5 * g * dt * dt;
  const Eigen::Vector3d r_vel = rit * w_v - pim.corrected_velocity(si.accel_bias, si.gyro_bias);
  const Eigen::Vector3d r_pos = rit * w_p - pim.corrected_position(si.accel_bias, si.gyro_bias);

  if (jac) {
    const Eigen::Matrix3d jr_inv = so3_right_jacobian_inverse(r_rot);
    jac->pose_i.setZero();
    jac->pose_j.setZero();
    jac->velocity_i.setZero();
    jac->velocity_j.setZero();
    jac->accel_bias_i.setZero();
    jac->gyro_bias_i.setZero();
    jac->gravity.setZero();

    jac->pose_i.block<3, 3>(0, 0) = -jr_inv * rj.transpose();
    jac->pose_j.block<3, 3>(0, 0) = jr_inv * rj.transpose();
    jac->gyro_bias_i.block<3, 3>(0, 0) =
        -jr_inv * c.transpose() * so3_right_jacobian(-bias_rot) * pim.d_rotation_d_gyro_bias;

    jac->pose_i.block<3, 3>(3, 0) = rit * skew(w_v);
    jac->velocity_i.block<3, 3>(3, 0) = -rit;
    jac->velocity_j.block<3, 3>(3, 0) = rit;
    jac->gravity.block<3, 3>(3, 0) = -gravity_magnitude * dt * rit;
    jac->accel_bias_i.block<3, 3>(3, 0) = -pim.d_velocity_d_accel_bias;
    jac->gyro_bias_i.block<3, 3>(3, 0) = -pim.d_velocity_d_gyro_bias;

    jac->pose_i.block<3, 3>(6, 0) = rit * (skew(w_p) + skew(si.pose.translation));
    jac->pose_i.block<3, 3>(6, 3) = -rit;
    jac->pose_j.block<3, 3>(6, 0) = -rit * skew(sj.pose.translation);
    jac->pose_j.block<3, 3>(6, 3) = rit;
    jac->velocity_i.block<3, 3>(6, 0) = -rit * dt;
    jac->gravity.block<3, 3>(6, 0) = -0.5 * gravity_magnitude * dt * dt * rit;
    jac->accel_bias_i.block<3, 3>(6, 0) = -pim.d_position_d_accel_bias;
    jac->gyro_bias_i.block<3, 3>(6, 0) = -pim.d_position_d_gyro_bias;
  }

  Vector9d r;
  r << r_rot, r_vel, r_pos;
  return r;
}

// ---- factors -------------------------------------------------------------------------------

const char* to_string(FactorKind kind) {
  switch (kind) {
    case FactorKind::kOdometry: return "odometry";
    case FactorKind::kImu: return "imu";
    case FactorKind::kBiasWalk: return "bias_walk";
    case FactorKind::kBiasPrior: return "bias_prior";
    case FactorKind::kZeroVelocity: return "zero_velocity";
    case FactorKind::kNoMotion: return "no_motion";
    case FactorKind::kGravity: return "gravity";
    case FactorKind::kMap: return "map";
    case FactorKind::kPrior: return "prior";
  }
  return "unknown";
}

int Factor::dimension() const {
  switch (kind()) {
    case FactorKind::kOdometry:
    case FactorKind::kNoMotion:
    case FactorKind::kPrior:
    case FactorKind::kBiasWalk:
    case FactorKind::kBiasPrior:
      return 6;
    case FactorKind::kImu: return 9;
    case FactorKind::kZeroVelocity: return 3;
    case FactorKind::kGravity: return 4;
    case FactorKind::kMap: {
      const auto& m = std::get<MapMeasurement>(measurement);
      return 3 + static_cast<int>(!m.mask[0]) + static_cast<int>(!m.mask[1]) + static_cast<int>(!m.mask[2]);
    }
  }
  return 0;
}

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

Linearization Factor::linearize(std::span<const StateNode> nodes, const Eigen::Vector3d& gravity) const {
  Linearization lin;
  auto add = [&](std::size_t state, Block block, Eigen::MatrixXd j) {
    lin.jacobians.push_back({state, block, std::move(j)});
  };

  std::visit(
      Overloaded{
          [&](const OdometryMeasurement& m) {
            Matrix6d ji, jj;
            lin.residual = odometry_error(nodes[states[0]], nodes[states[1]], m.relative, &ji, &jj);
            add(states[0], Block::kPose, ji);
            add(states[1], Block::kPose, jj);
          },
          [&](const ImuMeasurement& m) {
            ImuJacobians j;
            lin.residual = imu_error(nodes[states[0]], nodes[states[1]], gravity, *m.preintegration,
                                     m.gravity_magnitude, &j);
            add(states[0], Block::kPose, j.pose_i);
            add(states[0], Block::kVelocity, j.velocity_i);
            add(states[0], Block::kAccelBias, j.accel_bias_i);
            add(states[0], Block::kGyroBias, j.gyro_bias_i);
            add(states[1], Block::kPose, j.pose_j);
            add(states[1], Block::kVelocity, j.velocity_j);
            add(0, Block::kGravity, j.gravity);
          },
          [&](const BiasWalkMeasurement&) {
            const StateNode& a = nodes[states[0]];
            const StateNode& b = nodes[states[1]];
            Vector6d r;
            r << b.accel_bias - a.accel_bias, b.gyro_bias - a.gyro_bias;
            lin.residual = r;
            Eigen::MatrixXd top = Eigen::MatrixXd::Zero(6, 3);
            Eigen::MatrixXd bottom = Eigen::MatrixXd::Zero(6, 3);
            top.topRows(3) = Eigen::Matrix3d::Identity();
            bottom.bottomRows(3) = Eigen::Matrix3d::Identity();
            add(states[0], Block::kAccelBias, -top);
            add(states[0], Block::kGyroBias, -bottom);
            add(states[1], Block::kAccelBias, top);
            add(states[1], Block::kGyroBias, bottom);
          },
          [&](const BiasPriorMeasurement& m) {
            const StateNode& s = nodes[states[0]];
            Vector6d r;
            r << s.accel_bias - m.accel_bias, s.gyro_bias - m.gyro_bias;
            lin.residual = r;
            Eigen::MatrixXd top = Eigen::MatrixXd::Zero(6, 3);
            Eigen::MatrixXd bottom = Eigen::MatrixXd::Zero(6, 3);
            top.topRows(3) = Eigen::Matrix3d::Identity();
            bottom.bottomRows(3) = Eigen::Matrix3d::Identity();
            add(states[0], Block::kAccelBias, top);
            add(states[0], Block::kGyroBias, bottom);
          },
          [&](const ZeroVelocityMeasurement&) {
            lin.residual = zero_velocity_error(nodes[states[0]]);
            add(states[0], Block::kVelocity, Eigen::Matrix3d::Identity());
          },
          [&](const NoMotionMeasurement&) {
            Matrix6d ji, jj;
            lin.residual = no_motion_error(nodes[states[0]], nodes[states[1]], &ji, &jj);
            add(states[0], Block::kPose, ji);
            add(states[1], Block::kPose, jj);
          },
          [&](const GravityMeasurement& m) {
            Eigen::Matrix<double, 4, 6> jp;
            Eigen::Matrix<double, 4, 3> jg;
            lin.residual = gravity_error(nodes[states[0]], gravity, m.accel_mean, &jp, &jg);
            add(states[0], Block::kPose, jp);
            add(0, Block::kGravity, jg);
          },
          [&](const MapMeasurement& m) {
            Eigen::MatrixXd jp;
            lin.residual = map_error(nodes[states[0]], m.map_pose, m.mask, &jp);
            add(states[0], Block::kPose, jp);
          },
          [&](const PriorMeasurement& m) {
            Matrix6d jp;
            lin.residual = pose_prior_error(nodes[states[0]], m.pose, &jp);
            add(states[0], Block::kPose, jp);
          },
      },
      measurement);
  return lin;
}

Matrix6d pose_information(double rot_sigma, double trans_sigma) {
  Vector6d d;
  d << Eigen::Vector3d::Constant(1.0 / (rot_sigma * rot_sigma)),
      Eigen::Vector3d::Constant(1.0 / (trans_sigma * trans_sigma));
  return d.asDiagonal();
}

Factor make_odometry_factor(std::size_t i, std::size_t j, const Pose& relative, const Matrix6d& information) {
  return {{i, j}, OdometryMeasurement{relative}, information};
}

Factor make_imu_factor(std::size_t i, std::size_t j, Preintegration pim, double gravity_magnitude) {
  Matrix9d cov = 0.5 * (pim.covariance + pim.covariance.transpose());
  cov.diagonal().array() += 1e-12;
  Matrix9d info = cov.ldlt().solve(Matrix9d::Identity());
  info = 0.5 * (info + info.transpose()).eval();
  return {{i, j},
          ImuMeasurement{std::make_shared<const Preintegration>(std::move(pim)), gravity_magnitude},
          info};
}

Factor make_bias_walk_factor(std::size_t i, std::size_t j, double dt, const ImuNoise& noise) {
  Vector6d d;
  const double va = noise.accel_bias_walk * noise.accel_bias_walk * std::max(dt, 1e-6);
  const double vg = noise.gyro_bias_walk * noise.gyro_bias_walk * std::max(dt, 1e-6);
  d << Eigen::Vector3d::Constant(1.0 / va), Eigen::Vector3d::Constant(1.0 / vg);
  return {{i, j}, BiasWalkMeasurement{}, Eigen::MatrixXd(d.asDiagonal())};
}

Factor make_bias_prior_factor(std::size_t i, const Eigen::Vector3d& accel_bias, const Eigen::Vector3d& gyro_bias,
                              double accel_sigma, double gyro_sigma) {
  Vector6d d;
  d << Eigen::Vector3d::Constant(1.0 / (accel_sigma * accel_sigma)),
      Eigen::Vector3d::Constant(1.0 / (gyro_sigma * gyro_sigma));
  return {{i}, BiasPriorMeasurement{accel_bias, gyro_bias}, Eigen::MatrixXd(d.asDiagonal())};
}

Factor make_zero_velocity_factor(std::size_t i, double sigma) {
  return {{i}, ZeroVelocityMeasurement{}, Eigen::MatrixXd(Eigen::Matrix3d::Identity() / (sigma * sigma))};
}

Factor make_no_motion_factor(std::size_t i, std::size_t j, double rot_sigma, double trans_sigma) {
  return {{i, j}, NoMotionMeasurement{}, Eigen::MatrixXd(pose_information(rot_sigma, trans_sigma))};
}

Factor make_gravity_factor(std::size_t i, const Eigen::Vector3d& accel_mean,
                           const Eigen::Matrix3d& direction_information, double magnitude_weight) {
  Eigen::Matrix4d info = Eigen::Matrix4d::Zero();
  info.topLeftCorner<3, 3>() = direction_information;
  info(3, 3) = magnitude_weight;
  return {{i}, GravityMeasurement{accel_mean}, Eigen::MatrixXd(info)};
}

Factor make_map_factor(std::size_t i, const Pose& map_pose, const Matrix6d& world_hessian,
                       const std::array<bool, 3>& mask, double information_scale) {
  const Matrix6d ad = adjoint(map_pose);
  Matrix6d body = information_scale * ad.transpose() * world_hessian * ad;
  body = 0.5 * (body + body.transpose()).eval();
  const auto rows = kept_rows(mask);
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd info(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) info(r, c) = body(rows[static_cast<std::size_t>(r)], rows[static_cast<std::size_t>(c)]);
  }
  return {{i}, MapMeasurement{map_pose, mask}, info};
}

Factor make_prior_factor(std::size_t i, const Pose& pose, const Matrix6d& information) {
  return {{i}, PriorMeasurement{pose}, information};
}

}  // namespace maploc

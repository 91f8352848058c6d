#pragma once

#include <Eigen/Core>
#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "maploc/geometry.hpp"

namespace maploc {

using Vector9d = Eigen::Matrix<double, 9, 1>;
using Matrix9d = Eigen::Matrix<double, 9, 9>;

/// Per-timestamp estimation variable: pose (world <- body), world-frame velocity and IMU
/// biases. Gravity is a single shared variable owned by the graph.
struct StateNode {
  Pose pose;
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  Eigen::Vector3d accel_bias = Eigen::Vector3d::Zero();
  Eigen::Vector3d gyro_bias = Eigen::Vector3d::Zero();
  double timestamp = 0.0;
};

struct ImuSample {
  double timestamp = 0.0;
  Eigen::Vector3d gyro = Eigen::Vector3d::Zero();   // rad/s, body
  Eigen::Vector3d accel = Eigen::Vector3d::Zero();  // m/s^2 specific force, body
};

struct ImuNoise {
  double gyro_density = 1e-3;       // rad/s/sqrt(Hz)
  double accel_density = 1e-2;      // m/s^2/sqrt(Hz)
  double gyro_bias_walk = 1e-5;     // rad/s^2/sqrt(Hz)
  double accel_bias_walk = 1e-4;    // m/s^3/sqrt(Hz)
  double gravity_magnitude = 9.81;  // m/s^2
};

/// Bias-corrected midpoint integration between two states, with first-order bias Jacobians
/// and covariance of [rotation; velocity; position] increments.
struct Preintegration {
  double dt = 0.0;
  Eigen::Vector3d accel_bias = Eigen::Vector3d::Zero();  // linearization point
  Eigen::Vector3d gyro_bias = Eigen::Vector3d::Zero();

  // Gravity-free increments, expressed in the start frame.
  Eigen::Matrix3d delta_rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d raw_velocity = Eigen::Vector3d::Zero();
  Eigen::Vector3d raw_position = Eigen::Vector3d::Zero();

  // Increments with the supplied start-frame gravity applied (raw + g dt, raw + g dt^2 / 2).
  Eigen::Vector3d delta_velocity = Eigen::Vector3d::Zero();
  Eigen::Vector3d delta_position = Eigen::Vector3d::Zero();

  Eigen::Matrix3d d_rotation_d_gyro_bias = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d d_velocity_d_accel_bias = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d d_velocity_d_gyro_bias = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d d_position_d_accel_bias = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d d_position_d_gyro_bias = Eigen::Matrix3d::Zero();

  Matrix9d covariance = Matrix9d::Zero();

  /// First-order corrected increments for a new bias estimate.
  Eigen::Matrix3d corrected_rotation(const Eigen::Vector3d& gyro_bias) const;
  Eigen::Vector3d corrected_velocity(const Eigen::Vector3d& accel_bias, const Eigen::Vector3d& gyro_bias) const;
  Eigen::Vector3d corrected_position(const Eigen::Vector3d& accel_bias, const Eigen::Vector3d& gyro_bias) const;
};

/// Throws Error(kNonMonotonicTimestamps) unless timestamps strictly increase, and
/// std::invalid_argument for fewer than two samples. `gravity_start` is the gravity vector
/// (m/s^2) in the body frame of the first sample.
Preintegration preintegrate(std::span<const ImuSample> samples, const Eigen::Vector3d& accel_bias,
                            const Eigen::Vector3d& gyro_bias, const Eigen::Vector3d& gravity_start,
                            const ImuNoise& noise = {});

struct ZuptParams {
  double window = 0.5;           // s
  double accel_std_max = 0.05;   // m/s^2, stddev of |a|
  double gyro_mean_max = 0.02;   // rad/s, mean of |w|
};

/// Throws Error(kWindowTooShort) if the samples span less than params.window.
bool detect_zupt(std::span<const ImuSample> window, const ZuptParams& params = {});

// ---- residuals -----------------------------------------------------------------------------
// Pose Jacobians are with respect to the left perturbation exp(d) * T, d = [rot; trans].

/// log(Z^-1 * T_i^-1 * T_j)
Vector6d odometry_error(const StateNode& si, const StateNode& sj, const Pose& measured,
                        Matrix6d* d_pose_i = nullptr, Matrix6d* d_pose_j = nullptr);

/// log(P^-1 * T)
Vector6d pose_prior_error(const StateNode& s, const Pose& prior, Matrix6d* d_pose = nullptr);

/// Rows of log(M^-1 * T) kept by the mask: three rotation rows, then the unmasked translation
/// axes (map_pose frame) in x, y, z order.
Eigen::VectorXd map_error(const StateNode& s, const Pose& map_pose, const std::array<bool, 3>& mask,
                          Eigen::MatrixXd* d_pose = nullptr);

/// [R a / |R a| + g ; |g| - 1]. Throws Error(kZeroAcceleration) if |a_mean| < 0.5 m/s^2.
Eigen::Vector4d gravity_error(const StateNode& s, const Eigen::Vector3d& gravity,
                              const Eigen::Vector3d& accel_mean,
                              Eigen::Matrix<double, 4, 6>* d_pose = nullptr,
                              Eigen::Matrix<double, 4, 3>* d_gravity = nullptr);

inline Eigen::Vector3d zero_velocity_error(const StateNode& s) { return s.velocity; }

/// log(T_i^-1 * T_j)
Vector6d no_motion_error(const StateNode& si, const StateNode& sj, Matrix6d* d_pose_i = nullptr,
                         Matrix6d* d_pose_j = nullptr);

/// Jacobians of the 9-dim IMU residual [rotation; velocity; position].
struct ImuJacobians {
  Eigen::Matrix<double, 9, 6> pose_i, pose_j;
  Eigen::Matrix<double, 9, 3> velocity_i, velocity_j, accel_bias_i, gyro_bias_i, gravity;
};

/// Residual comparing the preintegrated increments with the states, using gravity
/// direction * magnitude and the biases of state i.
Vector9d imu_error(const StateNode& si, const StateNode& sj, const Eigen::Vector3d& gravity,
                   const Preintegration& pim, double gravity_magnitude, ImuJacobians* jac = nullptr);

// ---- graph factors -------------------------------------------------------------------------

enum class FactorKind {
  kOdometry,
  kImu,
  kBiasWalk,
  kBiasPrior,
  kZeroVelocity,
  kNoMotion,
  kGravity,
  kMap,
  kPrior,
};

const char* to_string(FactorKind kind);

/// Variable blocks of a state, in their fixed order inside the state's 15-dim tangent.
enum class Block { kPose, kVelocity, kAccelBias, kGyroBias, kGravity };
inline int block_offset(Block b) {
  switch (b) {
    case Block::kPose: return 0;
    case Block::kVelocity: return 6;
    case Block::kAccelBias: return 9;
    case Block::kGyroBias: return 12;
    case Block::kGravity: return 0;
  }
  return 0;
}
inline int block_size(Block b) { return b == Block::kPose ? 6 : 3; }
inline constexpr int kStateDim = 15;

struct JacobianBlock {
  std::size_t state = 0;  // ignored for Block::kGravity
  Block block = Block::kPose;
  Eigen::MatrixXd jacobian;
};

struct Linearization {
  Eigen::VectorXd residual;
  std::vector<JacobianBlock> jacobians;
};

struct OdometryMeasurement { Pose relative; };
struct ImuMeasurement { std::shared_ptr<const Preintegration> preintegration; double gravity_magnitude = 9.81; };
struct BiasWalkMeasurement {};
struct BiasPriorMeasurement { Eigen::Vector3d accel_bias = Eigen::Vector3d::Zero(); Eigen::Vector3d gyro_bias = Eigen::Vector3d::Zero(); };
struct ZeroVelocityMeasurement {};
struct NoMotionMeasurement {};
struct GravityMeasurement { Eigen::Vector3d accel_mean = Eigen::Vector3d::Zero(); };
struct MapMeasurement { Pose map_pose; std::array<bool, 3> mask{}; };
struct PriorMeasurement { Pose pose; };

using Measurement = std::variant<OdometryMeasurement, ImuMeasurement, BiasWalkMeasurement,
                                 BiasPriorMeasurement, ZeroVelocityMeasurement, NoMotionMeasurement,
                                 GravityMeasurement, MapMeasurement, PriorMeasurement>;

/// A typed constraint over one or two states (and possibly gravity) with its information
/// matrix (inverse covariance, dimension = residual dimension).
struct Factor {
  std::vector<std::size_t> states;
  Measurement measurement;
  Eigen::MatrixXd information;

  FactorKind kind() const { return static_cast<FactorKind>(measurement.index()); }
  int dimension() const;
  Linearization linearize(std::span<const StateNode> nodes, const Eigen::Vector3d& gravity) const;
};

Factor make_odometry_factor(std::size_t i, std::size_t j, const Pose& relative, const Matrix6d& information);
Factor make_imu_factor(std::size_t i, std::size_t j, Preintegration pim, double gravity_magnitude);
Factor make_bias_walk_factor(std::size_t i, std::size_t j, double dt, const ImuNoise& noise);
Factor make_bias_prior_factor(std::size_t i, const Eigen::Vector3d& accel_bias, const Eigen::Vector3d& gyro_bias,
                              double accel_sigma, double gyro_sigma);
Factor make_zero_velocity_factor(std::size_t i, double sigma);
Factor make_no_motion_factor(std::size_t i, std::size_t j, double rot_sigma, double trans_sigma);
Factor make_gravity_factor(std::size_t i, const Eigen::Vector3d& accel_mean, const Eigen::Matrix3d& direction_information,
                           double magnitude_weight = 1e6);
/// Information is the registration Hessian (world-frame perturbation, [rot; trans]) moved into
/// the map_pose frame, with masked translation rows and columns deleted.
Factor make_map_factor(std::size_t i, const Pose& map_pose, const Matrix6d& world_hessian,
                       const std::array<bool, 3>& mask, double information_scale = 1.0);
Factor make_prior_factor(std::size_t i, const Pose& pose, const Matrix6d& information);

/// Diagonal [rot; trans] information from standard deviations.
Matrix6d pose_information(double rot_sigma, double trans_sigma);

}  // namespace maploc

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace maploc {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

/// Rigid transform on SE(3). Maps body coordinates into the parent frame: x_parent = R x + t.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Pose() = default;
  Pose(const Eigen::Matrix3d& r, const Eigen::Vector3d& t) : rotation(r), translation(t) {}

  static Pose identity() { return {}; }
  static Pose from_quaternion(const Eigen::Quaterniond& q, const Eigen::Vector3d& t) {
    return {q.normalized().toRotationMatrix(), t};
  }

  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const { return rotation * p + translation; }
  Pose operator*(const Pose& other) const {
    return {rotation * other.rotation, rotation * other.translation + translation};
  }

  Pose inverse() const {
    const Eigen::Matrix3d rt = rotation.transpose();
    return {rt, -(rt * translation)};
  }

  Eigen::Quaterniond quaternion() const { return Eigen::Quaterniond(rotation); }

  /// Max elementwise deviation from orthonormality and unit determinant.
  double orthonormality_error() const;
};

/// Tangent coordinate on SE(3); vector ordering is [rotation; translation].
struct Twist {
  Eigen::Vector3d rot = Eigen::Vector3d::Zero();
  Eigen::Vector3d trans = Eigen::Vector3d::Zero();

  Twist() = default;
  Twist(const Eigen::Vector3d& r, const Eigen::Vector3d& t) : rot(r), trans(t) {}
  explicit Twist(const Vector6d& v) : rot(v.head<3>()), trans(v.tail<3>()) {}

  Vector6d vector() const {
    Vector6d v;
    v << rot, trans;
    return v;
  }
};

Eigen::Matrix3d skew(const Eigen::Vector3d& v);

// SO(3)
Eigen::Matrix3d so3_exp(const Eigen::Vector3d& phi);
Eigen::Vector3d so3_log(const Eigen::Matrix3d& rotation);
Eigen::Matrix3d so3_left_jacobian(const Eigen::Vector3d& phi);
Eigen::Matrix3d so3_left_jacobian_inverse(const Eigen::Vector3d& phi);
inline Eigen::Matrix3d so3_right_jacobian(const Eigen::Vector3d& phi) {
  return so3_left_jacobian(-phi);
}
inline Eigen::Matrix3d so3_right_jacobian_inverse(const Eigen::Vector3d& phi) {
  return so3_left_jacobian_inverse(-phi);
}

// SE(3)
Pose exp_map(const Twist& xi);
Twist log_map(const Pose& pose);

inline Pose compose(const Pose& a, const Pose& b) { return a * b; }
inline Pose inverse(const Pose& a) { return a.inverse(); }
/// inverse(a) * b: the pose of b expressed in a's frame.
inline Pose between(const Pose& a, const Pose& b) { return a.inverse() * b; }

/// Adjoint with T exp(xi) T^-1 = exp(Ad_T xi).
Matrix6d adjoint(const Pose& pose);

/// Left Jacobian: exp(xi + d) ~= exp(J_l(xi) d) exp(xi).
Matrix6d se3_left_jacobian(const Twist& xi);
Matrix6d se3_left_jacobian_inverse(const Twist& xi);
/// Right Jacobian: exp(xi + d) ~= exp(xi) exp(J_r(xi) d).
inline Matrix6d se3_right_jacobian_inverse(const Twist& xi) {
  return se3_left_jacobian_inverse(Twist(-xi.rot, -xi.trans));
}

/// Nearest rotation in Frobenius norm (polar decomposition via SVD).
Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& m);

/// Left-multiplicative retraction used by every optimizer in the library.
inline Pose retract(const Pose& pose, const Vector6d& delta) {
  Pose out = exp_map(Twist(delta)) * pose;
  out.rotation = orthonormalize(out.rotation);
  return out;
}

}  // namespace maploc

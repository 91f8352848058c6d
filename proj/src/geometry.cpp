#include "maploc/geometry.hpp"

#include <Eigen/SVD>
#include <cmath>

namespace maploc {

namespace {

constexpr double kSmallAngle = 1e-8;
constexpr double kSeriesAngle = 1e-5;
constexpr double kNearPi = 1e-3;

// (1 - cos t) / t^2 and (t - sin t) / t^3 with series near zero.
double coeff_b(double theta) {
  if (theta < kSeriesAngle) return 0.5 - theta * theta / 24.0;
  const double s = std::sin(0.5 * theta);
  return 2.0 * s * s / (theta * theta);
}

double coeff_c(double theta) {
  if (theta < kSeriesAngle) return 1.0 / 6.0 - theta * theta / 120.0;
  return (theta - std::sin(theta)) / (theta * theta * theta);
}

}  // namespace

double Pose::orthonormality_error() const {
  const Eigen::Matrix3d gram = rotation.transpose() * rotation - Eigen::Matrix3d::Identity();
  return std::max(gram.cwiseAbs().maxCoeff(), std::abs(rotation.determinant() - 1.0));
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& phi) {
  const double theta = phi.norm();
  const Eigen::Matrix3d w = skew(phi);
  if (theta < kSmallAngle) {
    return Eigen::Matrix3d::Identity() + w + 0.5 * w * w;
  }
  const double a = std::sin(theta) / theta;
  return Eigen::Matrix3d::Identity() + a * w + coeff_b(theta) * w * w;
}

Eigen::Vector3d so3_log(const Eigen::Matrix3d& r) {
  const Eigen::Vector3d vee(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  const double sin_theta = 0.5 * vee.norm();
  const double cos_theta = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
  const double theta = std::atan2(sin_theta, cos_theta);

  if (theta < kSmallAngle) {
    return 0.5 * vee;
  }
  if (M_PI - theta > kNearPi) {
    return (0.5 * theta / sin_theta) * vee;
  }

  // Near pi: (R + R^T)/2 - cos(theta) I = (1 - cos(theta)) a a^T.
  const Eigen::Matrix3d b =
      0.5 * (r + r.transpose()) - cos_theta * Eigen::Matrix3d::Identity();
  Eigen::Index col = 0;
  b.diagonal().maxCoeff(&col);
  Eigen::Vector3d axis = b.col(col).normalized();
  const double dir = axis.dot(vee);
  if (std::abs(dir) > 1e-12) {
    if (dir < 0.0) axis = -axis;
  } else {
    for (int i = 0; i < 3; ++i) {
      if (std::abs(axis[i]) > 1e-12) {
        if (axis[i] < 0.0) axis = -axis;
        break;
      }
    }
  }
  return theta * axis;
}

Eigen::Matrix3d so3_left_jacobian(const Eigen::Vector3d& phi) {
  const double theta = phi.norm();
  const Eigen::Matrix3d w = skew(phi);
  return Eigen::Matrix3d::Identity() + coeff_b(theta) * w + coeff_c(theta) * w * w;
}

Eigen::Matrix3d so3_left_jacobian_inverse(const Eigen::Vector3d& phi) {
  const double theta = phi.norm();
  const Eigen::Matrix3d w = skew(phi);
  double c;
  if (theta < kSeriesAngle) {
    c = 1.0 / 12.0 + theta * theta / 720.0;
  } else {
    c = (1.0 - theta * std::sin(theta) / (2.0 * (1.0 - std::cos(theta)))) / (theta * theta);
  }
  return Eigen::Matrix3d::Identity() - 0.5 * w + c * w * w;
}

Pose exp_map(const Twist& xi) {
  return {so3_exp(xi.rot), so3_left_jacobian(xi.rot) * xi.trans};
}

Twist log_map(const Pose& pose) {
  const Eigen::Vector3d phi = so3_log(pose.rotation);
  return {phi, so3_left_jacobian_inverse(phi) * pose.translation};
}

Matrix6d adjoint(const Pose& pose) {
  Matrix6d ad = Matrix6d::Zero();
  ad.topLeftCorner<3, 3>() = pose.rotation;
  ad.bottomRightCorner<3, 3>() = pose.rotation;
  ad.bottomLeftCorner<3, 3>() = skew(pose.translation) * pose.rotation;
  return ad;
}

namespace {

Eigen::Matrix3d se3_q_block(const Twist& xi) {
  const Eigen::Vector3d& phi = xi.rot;
  const double theta = phi.norm();
  const Eigen::Matrix3d p = skew(phi);
  const Eigen::Matrix3d r = skew(xi.trans);

  double c1, c2, c3;
  if (theta < kSeriesAngle) {
    const double t2 = theta * theta;
    c1 = 1.0 / 6.0 - t2 / 120.0;
    c2 = 1.0 / 24.0 - t2 / 720.0;
    c3 = 1.0 / 120.0 - t2 / 2520.0;
  } else {
    const double t2 = theta * theta;
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    c1 = (theta - s) / (t2 * theta);
    c2 = (t2 + 2.0 * c - 2.0) / (2.0 * t2 * t2);
    c3 = (2.0 * theta - 3.0 * s + theta * c) / (2.0 * t2 * t2 * theta);
  }
  const Eigen::Matrix3d pr = p * r;
  const Eigen::Matrix3d rp = r * p;
  const Eigen::Matrix3d prp = pr * p;
  return 0.5 * r + c1 * (pr + rp + prp) + c2 * (p * pr + rp * p - 3.0 * prp) +
         c3 * (prp * p + p * prp);
}

}  // namespace

Matrix6d se3_left_jacobian(const Twist& xi) {
  Matrix6d j = Matrix6d::Zero();
  const Eigen::Matrix3d jl = so3_left_jacobian(xi.rot);
  j.topLeftCorner<3, 3>() = jl;
  j.bottomRightCorner<3, 3>() = jl;
  j.bottomLeftCorner<3, 3>() = se3_q_block(xi);
  return j;
}

Matrix6d se3_left_jacobian_inverse(const Twist& xi) {
  Matrix6d j = Matrix6d::Zero();
  const Eigen::Matrix3d jl_inv = so3_left_jacobian_inverse(xi.rot);
  j.topLeftCorner<3, 3>() = jl_inv;
  j.bottomRightCorner<3, 3>() = jl_inv;
  j.bottomLeftCorner<3, 3>() = -jl_inv * se3_q_block(xi) * jl_inv;
  return j;
}

Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& m) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU();
  const Eigen::Matrix3d v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) = -u.col(2);
  return u * v.transpose();
}

}  // namespace maploc

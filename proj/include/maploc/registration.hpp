#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

#include "maploc/geometry.hpp"
#include "maploc/point_cloud.hpp"
#include "maploc/prior_map.hpp"
#include "maploc/spatial_index.hpp"

namespace maploc {

/// Point-to-plane association. residual = normal . (T * source - target) at the pose it was
/// computed for.
struct Correspondence {
  Eigen::Vector3d source = Eigen::Vector3d::Zero();  // body frame
  Eigen::Vector3d target = Eigen::Vector3d::Zero();  // world frame
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  double residual = 0.0;
  std::uint32_t source_index = 0;
  std::uint32_t target_index = 0;
};

struct RegistrationParams {
  double max_correspondence_distance = 1.0;
  int max_iterations = 30;
  double convergence_threshold = 1e-6;  // on the twist-update norm
  double kernel_width = 0.1;            // Huber
  double initial_damping = 1e-6;        // relative to mean diagonal of H
  int threads = 1;
};

struct AlignResult {
  Pose pose;                                  // world <- body
  Matrix6d hessian = Matrix6d::Zero();        // unit-weight J^T J at the final pose, [rot; trans]
  double residual_rms = 0.0;
  std::vector<Correspondence> correspondences;
  int iterations = 0;
  bool converged = false;
  std::vector<double> cost_history;           // accepted steps only
};

/// Gauss-Newton system of the Huber point-to-plane cost under the perturbation exp(xi) * T.
struct NormalEquations {
  Matrix6d hessian = Matrix6d::Zero();
  Vector6d gradient = Vector6d::Zero();
  double cost = 0.0;
};

/// Huber loss and IRLS weight; width <= 0 selects the plain quadratic.
double huber_cost(double residual, double width);
double huber_weight(double residual, double width);

/// One correspondence per scan point whose nearest map point is within max_dist and carries a
/// valid normal, in scan order. Throws Error(kNoCorrespondences) when nothing matches.
std::vector<Correspondence> find_correspondences(const PointCloud& scan, const SpatialIndex& map_index,
                                                 const Pose& pose, double max_dist, int threads = 1);

/// J_i = [ (T p_i x n_i)^T, n_i^T ]; H = sum w J^T J, gradient = sum w J^T r.
NormalEquations assemble_system(std::span<const Correspondence> corrs, const Pose& pose,
                                double kernel_width);

/// Scan-to-map alignment by damped Gauss-Newton with re-association every iteration.
AlignResult align(const PointCloud& scan, const PriorMap& map, const Pose& init,
                  const RegistrationParams& params);

}  // namespace maploc

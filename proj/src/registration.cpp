#include "maploc/registration.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <optional>

#include "maploc/error.hpp"
#include "maploc/parallel.hpp"

namespace maploc {

double huber_cost(double r, double width) {
  const double a = std::abs(r);
  if (width <= 0.0 || a <= width) return 0.5 * r * r;
  return width * (a - 0.5 * width);
}

double huber_weight(double r, double width) {
  const double a = std::abs(r);
  if (width <= 0.0 || a <= width) return 1.0;
  return width / a;
}

std::vector<Correspondence> find_correspondences(const PointCloud& scan, const SpatialIndex& map_index,
                                                 const Pose& pose, double max_dist, int threads) {
  const PointCloud& map = map_index.cloud();
  const double max_d2 = max_dist * max_dist;
  std::vector<std::optional<Correspondence>> slots(scan.size());

  parallel_for(scan.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Eigen::Vector3d world = pose * scan.points[i];
      const Neighbor nn = map_index.nearest(world);
      if (nn.squared_distance > max_d2 || !map.has_valid_normal(nn.index)) continue;
      Correspondence c;
      c.source = scan.points[i];
      c.target = map.points[nn.index];
      c.normal = map.normals[nn.index];
      c.residual = c.normal.dot(world - c.target);
      c.source_index = static_cast<std::uint32_t>(i);
      c.target_index = nn.index;
      slots[i] = c;
    }
  });

  std::vector<Correspondence> out;
  out.reserve(scan.size());
  for (auto& s : slots) {
    if (s) out.push_back(*s);
  }
  if (out.empty()) {
    throw Error(ErrorCode::kNoCorrespondences, "no scan point within max correspondence distance");
  }
  return out;
}

NormalEquations assemble_system(std::span<const Correspondence> corrs, const Pose& pose,
                                double kernel_width) {
  NormalEquations sys;
  Eigen::Matrix<double, 1, 6> row;
  for (const auto& c : corrs) {
    const Eigen::Vector3d world = pose * c.source;
    const double r = c.normal.dot(world - c.target);
    row << world.cross(c.normal).transpose(), c.normal.transpose();
    const double w = huber_weight(r, kernel_width);
    sys.hessian.noalias() += w * row.transpose() * row;
    sys.gradient.noalias() += w * r * row.transpose();
    sys.cost += huber_cost(r, kernel_width);
  }
  // Exact symmetry regardless of accumulation rounding.
  sys.hessian = 0.5 * (sys.hessian + sys.hessian.transpose()).eval();
  return sys;
}

namespace {

// Huber cost over matched points plus a constant charge for every unmatched one, so costs stay
// comparable when re-association changes the matched set.
double total_cost(const std::vector<Correspondence>& corrs, std::size_t scan_size,
                  const RegistrationParams& params) {
  double cost = 0.0;
  for (const auto& c : corrs) cost += huber_cost(c.residual, params.kernel_width);
  const double unmatched = static_cast<double>(scan_size - corrs.size());
  return cost + unmatched * huber_cost(params.max_correspondence_distance, params.kernel_width);
}

}  // namespace

AlignResult align(const PointCloud& scan, const PriorMap& map, const Pose& init,
                  const RegistrationParams& params) {
  const SpatialIndex& index = *map.index;
  AlignResult result;
  Pose pose = init;
  auto corrs = find_correspondences(scan, index, pose, params.max_correspondence_distance, params.threads);
  double cost = total_cost(corrs, scan.size(), params);
  result.cost_history.push_back(cost);

  double damping = params.initial_damping;
  while (result.iterations < params.max_iterations) {
    ++result.iterations;
    const NormalEquations sys = assemble_system(corrs, pose, params.kernel_width);
    const double scale = std::max(sys.hessian.trace() / 6.0, 1e-12);
    Matrix6d damped = sys.hessian;
    damped.diagonal().array() += damping * scale;
    const Vector6d delta = damped.ldlt().solve(-sys.gradient);
    if (!delta.allFinite()) break;

    const Pose candidate = retract(pose, delta);
    std::optional<std::vector<Correspondence>> cand_corrs;
    try {
      cand_corrs = find_correspondences(scan, index, candidate, params.max_correspondence_distance,
                                        params.threads);
    } catch (const Error&) {
      cand_corrs.reset();
    }
    const double cand_cost =
        cand_corrs ? total_cost(*cand_corrs, scan.size(), params) : std::numeric_limits<double>::infinity();

    if (cand_cost <= cost) {
      pose = candidate;
      corrs = std::move(*cand_corrs);
      cost = cand_cost;
      result.cost_history.push_back(cost);
      damping = std::max(damping * 0.1, 1e-12);
      if (delta.norm() < params.convergence_threshold) {
        result.converged = true;
        break;
      }
    } else {
      if (delta.norm() < params.convergence_threshold) {
        result.converged = true;
        break;
      }
      damping = std::min(damping * 10.0, 1e6);
    }
  }

  result.pose = pose;
  result.hessian = assemble_system(corrs, pose, 0.0).hessian;
  double sq = 0.0;
  for (const auto& c : corrs) sq += c.residual * c.residual;
  result.residual_rms = std::sqrt(sq / static_cast<double>(corrs.size()));
  result.correspondences = std::move(corrs);
  return result;
}

}  // namespace maploc

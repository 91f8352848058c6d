#include "maploc/point_cloud.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <numeric>
#include <stdexcept>

#include "maploc/error.hpp"
#include "maploc/parallel.hpp"
#include "maploc/spatial_index.hpp"

namespace maploc {

std::size_t NormalEstimate::valid_count() const {
  return static_cast<std::size_t>(
      std::count(status.begin(), status.end(), NormalStatus::kValid));
}

NormalEstimate estimate_normals(const PointCloud& cloud, const NormalParams& params) {
  if (params.k < 3) throw std::invalid_argument("estimate_normals: k must be >= 3");

  NormalEstimate out;
  out.cloud = cloud;
  out.cloud.normals.assign(cloud.size(), Eigen::Vector3d::Zero());
  out.status.assign(cloud.size(), NormalStatus::kDegenerateNeighborhood);
  if (cloud.size() < 3) return out;

  const SpatialIndex index(std::make_shared<const PointCloud>(PointCloud{cloud.points, {}, {}}));
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(params.k), cloud.size());

  parallel_for(cloud.size(), params.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto nbrs = index.knn(cloud.points[i], k);
      Eigen::Vector3d mean = Eigen::Vector3d::Zero();
      for (const auto& n : nbrs) mean += cloud.points[n.index];
      mean /= static_cast<double>(nbrs.size());
      Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
      for (const auto& n : nbrs) {
        const Eigen::Vector3d d = cloud.points[n.index] - mean;
        cov.noalias() += d * d.transpose();
      }
      cov /= static_cast<double>(nbrs.size());

      const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
      const Eigen::Vector3d lambda = eig.eigenvalues();  // ascending
      const double scale = std::max(lambda[2], std::numeric_limits<double>::min());
      if (lambda[1] <= 1e-12 * scale || lambda[2] <= 0.0) {
        out.status[i] = NormalStatus::kDegenerateNeighborhood;
        continue;
      }
      if (lambda[0] / lambda[1] >= params.flatness_ratio) {
        out.status[i] = NormalStatus::kNotPlanar;
        continue;
      }
      Eigen::Vector3d n = eig.eigenvectors().col(0).normalized();
      Eigen::Index lead = 0;
      n.cwiseAbs().maxCoeff(&lead);
      if (n[lead] < 0.0) n = -n;
      out.cloud.normals[i] = n;
      out.status[i] = NormalStatus::kValid;
    }
  });
  return out;
}

PointCloud voxel_downsample(const PointCloud& cloud, double resolution) {
  if (!(resolution > 0.0)) throw std::invalid_argument("voxel_downsample: resolution must be > 0");
  using Key = std::array<std::int64_t, 3>;
  std::vector<std::pair<Key, std::uint32_t>> keyed(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Eigen::Vector3d& p = cloud.points[i];
    keyed[i] = {Key{static_cast<std::int64_t>(std::floor(p.x() / resolution)),
                    static_cast<std::int64_t>(std::floor(p.y() / resolution)),
                    static_cast<std::int64_t>(std::floor(p.z() / resolution))},
                static_cast<std::uint32_t>(i)};
  }
  std::stable_sort(keyed.begin(), keyed.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  PointCloud out;
  for (std::size_t i = 0; i < keyed.size();) {
    std::size_t j = i;
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    while (j < keyed.size() && keyed[j].first == keyed[i].first) {
      sum += cloud.points[keyed[j].second];
      ++j;
    }
    out.points.push_back(sum / static_cast<double>(j - i));
    i = j;
  }
  return out;
}

PointCloud transform_cloud(const PointCloud& cloud, const Pose& pose) {
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const auto& p : cloud.points) out.points.push_back(pose * p);
  if (cloud.has_normals()) {
    out.normals.reserve(cloud.size());
    for (const auto& n : cloud.normals) out.normals.push_back(pose.rotation * n);
  }
  out.timestamps = cloud.timestamps;
  return out;
}

}  // namespace maploc

#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <vector>

#include "maploc/geometry.hpp"

namespace maploc {

/// Points in meters. `normals` is empty or parallel to `points`; a zero normal marks a point
/// whose neighborhood could not support a plane fit.
struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  std::vector<Eigen::Vector3d> normals;
  std::vector<double> timestamps;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_normals() const { return !normals.empty() && normals.size() == points.size(); }
  bool has_valid_normal(std::size_t i) const {
    return has_normals() && normals[i].squaredNorm() > 0.0;
  }
};

enum class NormalStatus {
  kValid,
  kDegenerateNeighborhood,  // collinear or coincident neighbors
  kNotPlanar,               // failed the flatness gate
};

struct NormalParams {
  int k = 10;
  double flatness_ratio = 0.1;  // lambda_min / lambda_mid must stay below this
  int threads = 1;
};

struct NormalEstimate {
  PointCloud cloud;
  std::vector<NormalStatus> status;

  std::size_t valid_count() const;
};

/// Plane-fit normals from the k nearest neighbors (the point itself included). The normal is
/// the smallest-eigenvalue eigenvector, signed so its largest-magnitude component is positive.
NormalEstimate estimate_normals(const PointCloud& cloud, const NormalParams& params = {});

/// Centroid per occupied voxel, emitted in lexicographic voxel-key order.
PointCloud voxel_downsample(const PointCloud& cloud, double resolution);

PointCloud transform_cloud(const PointCloud& cloud, const Pose& pose);

}  // namespace maploc

#pragma once

#include <memory>
#include <string>

#include "maploc/point_cloud.hpp"
#include "maploc/spatial_index.hpp"

namespace maploc {

/// Globally referenced localization target: a voxelized cloud with normals and an index over
/// its plane-supported points.
struct PriorMap {
  std::shared_ptr<const PointCloud> cloud;
  std::shared_ptr<const SpatialIndex> index;
  double resolution = 0.0;
  std::string frame = "world";
};

/// Voxelizes (when resolution > 0) and estimates normals. `cloud` keeps every voxel; `index`
/// covers the points with a valid normal.
PriorMap make_prior_map(const PointCloud& raw, double resolution, const NormalParams& normals = {});

}  // namespace maploc

#include "maploc/prior_map.hpp"

#include "maploc/error.hpp"

namespace maploc {

PriorMap make_prior_map(const PointCloud& raw, double resolution, const NormalParams& normals) {
  if (raw.empty()) throw Error(ErrorCode::kEmptyCloud, "prior map has no points");
  PointCloud base = resolution > 0.0 ? voxel_downsample(raw, resolution) : PointCloud{raw.points, {}, {}};
  auto estimate = estimate_normals(base, normals);

  // Only points with a usable normal are indexed, so a nearest-neighbor hit is always a valid
  // plane. A map without any (e.g. a single voxel) keeps everything and simply never matches.
  PointCloud indexed;
  for (std::size_t i = 0; i < estimate.cloud.size(); ++i) {
    if (!estimate.cloud.has_valid_normal(i)) continue;
    indexed.points.push_back(estimate.cloud.points[i]);
    indexed.normals.push_back(estimate.cloud.normals[i]);
  }

  PriorMap map;
  map.cloud = std::make_shared<const PointCloud>(std::move(estimate.cloud));
  map.index = indexed.empty() ? std::make_shared<const SpatialIndex>(map.cloud)
                              : std::make_shared<const SpatialIndex>(std::make_shared<const PointCloud>(std::move(indexed)));
  map.resolution = resolution;
  return map;
}

}  // namespace maploc

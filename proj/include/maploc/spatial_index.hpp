#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <vector>

#include "maploc/point_cloud.hpp"

namespace maploc {

struct Neighbor {
  std::uint32_t index = 0;
  double squared_distance = 0.0;

  friend bool operator<(const Neighbor& a, const Neighbor& b) {
    return a.squared_distance < b.squared_distance ||
           (a.squared_distance == b.squared_distance && a.index < b.index);
  }
  friend bool operator==(const Neighbor& a, const Neighbor& b) {
    return a.index == b.index && a.squared_distance == b.squared_distance;
  }
};

/// Static kd-tree over an immutable cloud. Query results are ordered by (distance, index) and
/// are identical to an exhaustive scan, including ties.
class SpatialIndex {
 public:
  explicit SpatialIndex(std::shared_ptr<const PointCloud> cloud, int leaf_size = 12);

  const PointCloud& cloud() const { return *cloud_; }
  std::shared_ptr<const PointCloud> cloud_ptr() const { return cloud_; }
  std::size_t size() const { return cloud_->size(); }

  Neighbor nearest(const Eigen::Vector3d& query) const;
  std::vector<Neighbor> knn(const Eigen::Vector3d& query, std::size_t k) const;
  std::vector<Neighbor> radius(const Eigen::Vector3d& query, double radius) const;

 private:
  struct Node {
    Eigen::Vector3d lo;
    Eigen::Vector3d hi;
    std::uint32_t begin = 0;  // range into order_ for leaves
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    bool leaf() const { return left < 0; }
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  static double box_distance(const Node& node, const Eigen::Vector3d& q);

  std::shared_ptr<const PointCloud> cloud_;
  int leaf_size_;
  std::vector<std::uint32_t> order_;
  std::vector<Eigen::Vector3d> ordered_points_;
  std::vector<Node> nodes_;
};

/// Throws Error(kEmptyCloud) for an empty cloud.
SpatialIndex build_index(std::shared_ptr<const PointCloud> cloud);
SpatialIndex build_index(PointCloud cloud);

}  // namespace maploc

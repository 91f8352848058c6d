#include "maploc/spatial_index.hpp"

#include <algorithm>
#include <limits>

#include "maploc/error.hpp"

namespace maploc {

SpatialIndex::SpatialIndex(std::shared_ptr<const PointCloud> cloud, int leaf_size)
    : cloud_(std::move(cloud)), leaf_size_(std::max(1, leaf_size)) {
  if (!cloud_ || cloud_->empty()) {
    throw Error(ErrorCode::kEmptyCloud, "cannot index an empty cloud");
  }
  const auto n = static_cast<std::uint32_t>(cloud_->size());
  order_.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) order_[i] = i;
  nodes_.reserve(2 * (n / static_cast<std::uint32_t>(leaf_size_) + 1));
  build(0, n);
  ordered_points_.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) ordered_points_[i] = cloud_->points[order_[i]];
}

std::int32_t SpatialIndex::build(std::uint32_t begin, std::uint32_t end) {
  const auto& pts = cloud_->points;
  Node node;
  node.lo = pts[order_[begin]];
  node.hi = node.lo;
  for (std::uint32_t i = begin + 1; i < end; ++i) {
    node.lo = node.lo.cwiseMin(pts[order_[i]]);
    node.hi = node.hi.cwiseMax(pts[order_[i]]);
  }
  node.begin = begin;
  node.end = end;
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(node);

  if (end - begin <= static_cast<std::uint32_t>(leaf_size_)) return id;

  int axis = 0;
  (node.hi - node.lo).maxCoeff(&axis);
  if (node.hi[axis] == node.lo[axis]) return id;  // all coincident

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double va = pts[a][axis];
                     const double vb = pts[b][axis];
                     return va < vb || (va == vb && a < b);
                   });
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

double SpatialIndex::box_distance(const Node& node, const Eigen::Vector3d& q) {
  double d2 = 0.0;
  for (int a = 0; a < 3; ++a) {
    double d = 0.0;
    if (q[a] < node.lo[a]) {
      d = node.lo[a] - q[a];
    } else if (q[a] > node.hi[a]) {
      d = q[a] - node.hi[a];
    }
    d2 += d * d;
  }
  return d2;
}

Neighbor SpatialIndex::nearest(const Eigen::Vector3d& query) const {
  Neighbor best{std::numeric_limits<std::uint32_t>::max(), std::numeric_limits<double>::infinity()};
  std::int32_t stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (box_distance(node, query) > best.squared_distance) continue;
    if (node.leaf()) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const Neighbor cand{order_[i], (ordered_points_[i] - query).squaredNorm()};
        if (cand < best) best = cand;
      }
      continue;
    }
    const double dl = box_distance(nodes_[node.left], query);
    const double dr = box_distance(nodes_[node.right], query);
    // Push the farther child first so the closer one is popped next.
    if (dl <= dr) {
      stack[top++] = node.right;
      stack[top++] = node.left;
    } else {
      stack[top++] = node.left;
      stack[top++] = node.right;
    }
  }
  return best;
}

std::vector<Neighbor> SpatialIndex::knn(const Eigen::Vector3d& query, std::size_t k) const {
  std::vector<Neighbor> best;
  if (k == 0) return best;
  k = std::min(k, size());
  best.reserve(k + 1);
  auto worst = [&] {
    return best.size() < k ? std::numeric_limits<double>::infinity() : best.back().squared_distance;
  };

  std::int32_t stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (box_distance(node, query) > worst()) continue;
    if (node.leaf()) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const Neighbor cand{order_[i], (ordered_points_[i] - query).squaredNorm()};
        if (best.size() == k && !(cand < best.back())) continue;
        best.insert(std::upper_bound(best.begin(), best.end(), cand), cand);
        if (best.size() > k) best.pop_back();
      }
      continue;
    }
    const double dl = box_distance(nodes_[node.left], query);
    const double dr = box_distance(nodes_[node.right], query);
    if (dl <= dr) {
      stack[top++] = node.right;
      stack[top++] = node.left;
    } else {
      stack[top++] = node.left;
      stack[top++] = node.right;
    }
  }
  return best;
}

std::vector<Neighbor> SpatialIndex::radius(const Eigen::Vector3d& query, double radius) const {
  std::vector<Neighbor> out;
  if (radius < 0.0) return out;
  const double r2 = radius * radius;
  std::vector<std::int32_t> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    if (box_distance(node, query) > r2) continue;
    if (node.leaf()) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const double d2 = (ordered_points_[i] - query).squaredNorm();
        if (d2 <= r2) out.push_back({order_[i], d2});
      }
      continue;
    }
    stack.push_back(node.left);
    stack.push_back(node.right);
  }
  std::sort(out.begin(), out.end());
  return out;
}

SpatialIndex build_index(std::shared_ptr<const PointCloud> cloud) {
  return SpatialIndex(std::move(cloud));
}

SpatialIndex build_index(PointCloud cloud) {
  return SpatialIndex(std::make_shared<const PointCloud>(std::move(cloud)));
}

}  // namespace maploc

#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "maploc/geometry.hpp"
#include "maploc/point_cloud.hpp"
#include "maploc/spatial_index.hpp"

namespace maploc {

struct TrajectoryEntry {
  double timestamp = 0.0;
  Pose pose;
};

/// Timestamped poses with strictly increasing timestamps.
struct Trajectory {
  std::vector<TrajectoryEntry> entries;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
  /// Throws Error(kNonMonotonicTimestamps) on a violation.
  void validate() const;
};

/// Index pairs (est, ref).
using PosePairs = std::vector<std::pair<std::size_t, std::size_t>>;

/// Greedy in estimate time order: each estimate takes the nearest unused reference within
/// max_dt (ties go to the earlier reference). Throws Error(kNoMatches) if nothing pairs.
PosePairs associate(const Trajectory& est, const Trajectory& ref, double max_dt);

/// Rigid Q minimizing sum |Q est_i - ref_i|^2 (no scale). Throws Error(kDegenerateGeometry)
/// for fewer than three pairs or collinear/coincident estimates.
Pose align_se3(std::span<const Eigen::Vector3d> est, std::span<const Eigen::Vector3d> ref);

struct AteOptions {
  double max_dt = 0.01;
  bool align = true;
};

struct AteResult {
  double rmse_cm = 0.0;
  Pose alignment;
  std::size_t pairs = 0;
};

AteResult ate(const Trajectory& est, const Trajectory& ref, const AteOptions& options = {});

/// RMSE (cm) of the translational part of log(between(rel_ref, rel_est)) over all windows of
/// `delta` associated frames.
double rpe(const Trajectory& est, const Trajectory& ref, std::size_t delta = 1, double max_dt = 0.01);

/// Same error, but windows span the first reference frame at least `distance` meters of path
/// further on; normalized per meter travelled (cm/m).
double rpe_per_meter(const Trajectory& est, const Trajectory& ref, double distance = 1.0, double max_dt = 0.01);

inline constexpr double kDefaultMapThreshold = 0.20;  // m

/// Mean distance (cm) from estimated points to their nearest ground-truth point, over the
/// estimated points within threshold. Throws Error(kNoInliers) if none qualify.
double map_accuracy(const PointCloud& est_map, const SpatialIndex& gt_index,
                    double threshold = kDefaultMapThreshold);

/// Percentage of ground-truth points whose nearest estimated point is within threshold.
double map_completeness(const SpatialIndex& est_index, const PointCloud& gt_map,
                        double threshold = kDefaultMapThreshold);

struct MetricsReport {
  double ate_rmse_cm = 0.0;
  double rpe_rmse_cm = 0.0;
  std::size_t rpe_delta = 1;
  double rpe_per_meter_cm = 0.0;
  bool has_map_metrics = false;
  double map_acc_cm = 0.0;
  double map_com_percent = 0.0;
  double map_threshold = kDefaultMapThreshold;
  std::size_t matched_pairs = 0;
  Pose alignment;
};

}  // namespace maploc

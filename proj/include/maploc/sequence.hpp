#pragma once

#include <vector>

#include "maploc/eval.hpp"
#include "maploc/factors.hpp"
#include "maploc/point_cloud.hpp"

namespace maploc {

/// One undistorted scan in the body (sensor) frame. The LiDAR, IMU and body frames coincide.
struct ScanFrame {
  double timestamp = 0.0;
  PointCloud cloud;
};

/// Everything the pipeline consumes besides the map. `odometry` is the front-end trajectory
/// in its own frame; `initial_pose` places the first scan in the map (world) frame.
struct SequenceInput {
  std::vector<ScanFrame> scans;
  Trajectory odometry;
  std::vector<ImuSample> imu;
  Pose initial_pose;
  bool has_initial_pose = false;
};

}  // namespace maploc

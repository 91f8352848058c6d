#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "maploc/config.hpp"
#include "maploc/degeneracy.hpp"
#include "maploc/eval.hpp"
#include "maploc/graph.hpp"
#include "maploc/prior_map.hpp"
#include "maploc/sequence.hpp"

namespace maploc {

/// Reads a PCD or PLY map, voxelizes it and estimates normals. Throws ParseError, EmptyCloud.
PriorMap load_map(const std::filesystem::path& path, double voxel, const NormalParams& normals = {});

/// Scans from `dir` (every *.pcd, named by timestamp in seconds), odometry and IMU files.
/// The initial pose is the first odometry pose.
SequenceInput load_sequence(const std::filesystem::path& scans_dir, const std::filesystem::path& odom,
                            const std::filesystem::path& imu);

inline constexpr double kScanAssociationTolerance = 0.01;  // s

struct GroundTruth {
  std::optional<Trajectory> trajectory;
  std::optional<PointCloud> map;
};

struct FrameReport {
  std::size_t index = 0;  // position in the input scan list
  double timestamp = 0.0;
  std::string status = "ok";
  bool registered = false;
  bool map_factor = false;
  bool zupt = false;
  double residual_rms = 0.0;
  std::size_t correspondences = 0;
  std::optional<DegeneracyReport> degeneracy;
};

struct RunSummary {
  std::size_t scans = 0;
  std::size_t dropped_scans = 0;
  std::size_t keyframes = 0;
  std::size_t map_factors = 0;
  std::size_t stage1_rejects = 0;
  std::size_t degenerate_frames = 0;
  std::size_t zupt_frames = 0;
  std::size_t failed_frames = 0;
  double final_cost = 0.0;
  std::size_t iterations = 0;
  Eigen::Vector3d gravity = Eigen::Vector3d(0.0, 0.0, -1.0);
};

struct RunResult {
  Trajectory trajectory;  // optimized keyframe poses, world <- body
  std::vector<StateNode> states;
  PointCloud map;         // optimized scans merged on the output voxel grid
  std::vector<FrameReport> frames;
  std::optional<MetricsReport> metrics;
  RunSummary summary;
  std::vector<IterationRecord> optimizer_log;  // final batch solve
  std::vector<std::string> warnings;
};

/// Localizes the sequence against the map. Per-frame failures are recorded and skipped.
/// Throws Error(kInitializationFailure) when the first frame does not register at the initial
/// pose within config.registration.sanity_rms.
RunResult run(const RunConfig& config, const SequenceInput& input, const PriorMap& map,
              const GroundTruth& truth = {});

MetricsReport compute_metrics(const Trajectory& est, const Trajectory& ref, const PointCloud* est_map,
                              const PointCloud* gt_map, const RunConfig::Eval& eval);

/// JSON text of the degeneracy reports, summary and metrics; conforms to report_schema().
std::string format_report(const RunResult& result);
/// timestamp,d_e,n_x,n_y,n_z,mask_bits,residual_rms,stage1_reject,map_factor,zupt
std::string format_frame_csv(const RunResult& result);

/// Writes trajectory.tum, map.pcd, report.json, frames.csv and optimizer.csv. Throws IoError.
void emit_reports(const RunResult& result, const std::filesystem::path& dir,
                  PcdPrecision map_precision = PcdPrecision::kFloat32);

}  // namespace maploc

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "maploc/sequence.hpp"

namespace maploc {

enum class SceneKind { kCubeRoom, kCorridor, kLCorridor, kPlaneOnly };

const char* to_string(SceneKind kind);

/// Spinning multi-ring sensor; rings are spaced evenly in elevation.
struct SensorModel {
  int columns = 360;
  int rings = 32;
  double fov_up_deg = 75.0;
  double fov_down_deg = -75.0;
  double min_range = 0.3;
  double max_range = 40.0;
  double range_noise = 0.0;  // m, Gaussian along the ray
  double scan_rate = 10.0;   // Hz
};

struct ImuSynthesis {
  double rate = 200.0;        // Hz
  double accel_noise = 0.0;   // m/s^2 per sample
  double gyro_noise = 0.0;    // rad/s per sample
  Eigen::Vector3d accel_bias = Eigen::Vector3d::Zero();
  Eigen::Vector3d gyro_bias = Eigen::Vector3d::Zero();
};

/// Front-end model: per-frame relative-motion noise accumulated along the chain, plus a
/// deterministic world-z drift growing linearly with the frame index.
struct OdometrySynthesis {
  double rot_noise = 0.0;    // rad per frame
  double trans_noise = 0.0;  // m per frame
  double z_drift_per_frame = 0.0;
};

/// Straight legs between waypoints with smoothstep timing, a dwell at every waypoint and a
/// yaw that oscillates with travelled distance.
struct TrajectorySpec {
  std::vector<Eigen::Vector3d> waypoints;
  double speed = 1.0;          // mean speed along each leg, m/s
  std::vector<double> dwell;   // s at each waypoint (empty = none, one value = all)
  double yaw = 0.0;            // rad
  double yaw_amplitude = 0.0;  // rad
  double yaw_wavelength = 4.0; // m of travel per yaw period
};

struct SceneSpec {
  SceneKind kind = SceneKind::kCubeRoom;
  Eigen::Vector3d dimensions = Eigen::Vector3d::Ones();
  double density = 1000.0;  // surface samples per m^2
  TrajectorySpec trajectory;
  SensorModel sensor;
  ImuSynthesis imu;
  OdometrySynthesis odometry;
  std::uint64_t seed = 0;
  bool end_walls = true;  // corridor only: keep the two x-facing end walls
};

/// Parses and validates a JSON scene spec. Throws Error(kInvalidSpec).
SceneSpec parse_scene_spec(const std::string& json);
void validate(const SceneSpec& spec);

/// Free space as a union of axis-aligned boxes (room interiors), or a single bounded
/// horizontal plane at z = 0.
class SceneGeometry {
 public:
  explicit SceneGeometry(const SceneSpec& spec);

  /// Distance to the first surface along a unit direction, if any within max_range.
  std::optional<double> raycast(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir, double max_range) const;
  /// Uniform random samples over every surface at the given density.
  PointCloud sample_surfaces(double density, std::uint64_t seed, std::uint64_t stream) const;
  bool inside(const Eigen::Vector3d& p) const;

 private:
  struct Box {
    Eigen::Vector3d lo, hi;
  };
  std::vector<Box> boxes_;
  bool plane_ = false;
  Eigen::Vector2d plane_half_extent_ = Eigen::Vector2d::Zero();
  bool end_walls_ = true;
};

/// Analytic sensor trajectory.
class SyntheticMotion {
 public:
  explicit SyntheticMotion(const TrajectorySpec& spec);

  double duration() const { return duration_; }
  Pose pose(double t) const;
  /// World-frame linear velocity and acceleration, body-frame angular rate.
  Eigen::Vector3d velocity(double t) const;
  Eigen::Vector3d acceleration(double t) const;
  Eigen::Vector3d angular_rate(double t) const;
  /// True when t falls inside a dwell.
  bool stationary(double t) const;
  /// [begin, end) of every dwell.
  std::vector<std::pair<double, double>> dwell_intervals() const;

 private:
  struct Leg {
    double t0, t1;   // moving interval
    double arc0;     // distance travelled before the leg
    Eigen::Vector3d a, b;
  };
  struct Kinematics {
    Eigen::Vector3d p, v, acc;
    double arc, arc_rate;
  };
  Kinematics evaluate(double t) const;
  double yaw(double arc) const;

  TrajectorySpec spec_;
  std::vector<Leg> legs_;
  std::vector<std::pair<double, double>> dwells_;
  double duration_ = 0.0;
};

struct SyntheticScene {
  PointCloud map_source;   // prior-map raw samples (world frame)
  PointCloud gt_map;       // independent dense samples of the same surfaces
  Trajectory ground_truth; // world <- body at every scan time
  SequenceInput input;
};

SyntheticScene synthesize(const SceneSpec& spec);

/// Fixed registration workload: a cube room sampled with `map_points` surface points and one
/// scan of roughly `scan_points` returns taken at `truth`.
struct RegistrationCase {
  PointCloud map_source;
  PointCloud scan;
  Pose truth;
};
RegistrationCase make_registration_case(std::size_t map_points, std::size_t scan_points, std::uint64_t seed);

/// `%.9f.pcd` of the timestamp.
std::string scan_filename(double timestamp);

/// Writes map.pcd, gt_map.pcd, gt.tum, odom.tum, imu.csv and scans/<timestamp>.pcd.
void write_scene(const SyntheticScene& scene, const std::filesystem::path& dir);

}  // namespace maploc

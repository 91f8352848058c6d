#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "maploc/degeneracy.hpp"
#include "maploc/factors.hpp"
#include "maploc/graph.hpp"
#include "maploc/io.hpp"
#include "maploc/point_cloud.hpp"
#include "maploc/registration.hpp"

namespace maploc {

/// Everything `localize` reads from its JSON config. Defaults apply to absent keys.
struct RunConfig {
  int threads = 1;
  std::size_t keyframe_stride = 1;
  std::size_t map_factor_stride = 1;
  std::size_t window = 10;  // states re-optimized per frame; 0 = batch only
  std::string output_dir;
  std::optional<Pose> initial_pose;  // overrides the sequence's own initial pose

  struct Map {
    double voxel = 0.1;
    NormalParams normals;
  } map;

  struct Registration {
    RegistrationParams params;
    double scan_voxel = 0.0;  // 0 keeps every scan point
    double sanity_rms = 0.5;  // m, gate on the first frame
  } registration;

  struct Degeneracy {
    bool enabled = true;
    DegeneracyParams params;
  } degeneracy;

  struct MapFactor {
    bool enabled = true;
    double sigma = 0.05;  // m, point-to-plane noise used to scale the registration Hessian
  } map_factor;

  struct Sigmas {
    double rot_sigma;
    double trans_sigma;
  };
  Sigmas odometry{0.01, 0.02};
  Sigmas prior{1e-3, 1e-3};

  struct Imu {
    bool enabled = true;
    ImuNoise noise;
    double bias_prior_accel = 0.1;
    double bias_prior_gyro = 0.01;
  } imu;

  struct Zupt {
    bool enabled = true;
    ZuptParams params;
    double velocity_sigma = 1e-3;
    double rot_sigma = 1e-4;
    double trans_sigma = 1e-4;
    double gravity_min_sigma = 1e-3;  // floor on the gravity direction sigma
    /// IMU statistics cannot tell rest from steady motion; odometry must agree.
    double max_odom_speed = 0.05;  // m/s
  } zupt;

  struct Optimizer {
    OptimizerParams params;
    int final_max_iterations = 100;
  } optimizer;

  struct Output {
    double voxel = 0.05;
    PcdPrecision map_precision = PcdPrecision::kFloat32;
  } output;

  struct Eval {
    std::string gt_trajectory;
    std::string gt_map;
    std::size_t rpe_delta = 1;
    double map_threshold = 0.20;
    double max_dt = 0.01;
  } eval;
};

/// Shipped JSON schemas (draft-04).
std::string_view config_schema();
std::string_view report_schema();

/// Returns one message per violation; empty when the document conforms.
std::vector<std::string> schema_violations(const std::string& json_text, std::string_view schema);

/// Applies `a.b.c=value` overrides (value parsed as JSON, else taken as a string), validates
/// against the config schema and fills a RunConfig. Throws Error(kInvalidConfig).
RunConfig parse_run_config(const std::string& json_text, const std::vector<std::string>& overrides = {});

/// The effective configuration, every key present.
std::string config_to_json(const RunConfig& config);

}  // namespace maploc

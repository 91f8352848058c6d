// maploc command-line front end.
#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <json.hpp>

#include "maploc/config.hpp"
#include "maploc/error.hpp"
#include "maploc/io.hpp"
#include "maploc/pipeline.hpp"
#include "maploc/synth.hpp"

namespace {

using namespace maploc;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSingularSystem:
    case ErrorCode::kNotSymmetric:
    case ErrorCode::kDegenerateGeometry:
    case ErrorCode::kNotAnchored:
      return kExitNumerical;
    default:
      return kExitData;
  }
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

int localize(const std::string& map_path, const std::string& scans, const std::string& odom, const std::string& imu,
             const std::string& config_path, std::string out, const std::vector<std::string>& sets) {
  const RunConfig config = parse_run_config(config_path.empty() ? std::string() : read_file(config_path), sets);
  if (out.empty()) out = config.output_dir;
  if (out.empty()) {
    std::cerr << "localize: --out is required (or output_dir in the config)\n";
    return kExitUsage;
  }
  const PriorMap map = load_map(map_path, config.map.voxel, config.map.normals);
  const SequenceInput input = load_sequence(scans, odom, imu);

  GroundTruth truth;
  if (!config.eval.gt_trajectory.empty()) truth.trajectory = read_tum(config.eval.gt_trajectory);
  if (!config.eval.gt_map.empty()) truth.map = read_cloud(config.eval.gt_map);

  const RunResult result = run(config, input, map, truth);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
  emit_reports(result, out, config.output.map_precision);

  const auto& s = result.summary;
  std::cout << "keyframes " << s.keyframes << "  map_factors " << s.map_factors << "  degenerate " << s.degenerate_frames
            << "  stage1_rejects " << s.stage1_rejects << "  zupt " << s.zupt_frames << "  failed " << s.failed_frames
            << '\n';
  if (result.metrics) {
    const auto& m = *result.metrics;
    std::cout << "ate_rmse_cm " << fmt(m.ate_rmse_cm) << "\nrpe_rmse_cm " << fmt(m.rpe_rmse_cm) << '\n';
    if (m.has_map_metrics) {
      std::cout << "map_acc_cm " << fmt(m.map_acc_cm) << "\nmap_com_percent " << fmt(m.map_com_percent) << '\n';
    }
  }
  return kExitOk;
}

int synth(const std::string& spec_path, const std::string& out) {
  const SceneSpec spec = parse_scene_spec(read_file(spec_path));
  const SyntheticScene scene = synthesize(spec);
  write_scene(scene, out);
  std::cout << to_string(spec.kind) << ": " << scene.input.scans.size() << " scans, " << scene.map_source.size()
            << " map points, " << scene.input.imu.size() << " IMU samples\n";
  return kExitOk;
}

int eval_traj(const std::string& est_path, const std::string& ref_path, std::size_t delta) {
  const Trajectory est = read_tum(est_path);
  const Trajectory ref = read_tum(ref_path);
  const AteResult a = ate(est, ref);
  std::cout << "pairs " << a.pairs << "\nate_rmse_cm " << fmt(a.rmse_cm) << "\nrpe_rmse_cm "
            << fmt(rpe(est, ref, delta)) << "\nrpe_delta " << delta << "\nrpe_per_meter_cm "
            << fmt(rpe_per_meter(est, ref)) << '\n';
  return kExitOk;
}

int eval_map(const std::string& est_path, const std::string& ref_path, double threshold) {
  auto est = std::make_shared<const PointCloud>(PointCloud{read_cloud(est_path).points, {}, {}});
  auto ref = std::make_shared<const PointCloud>(PointCloud{read_cloud(ref_path).points, {}, {}});
  if (est->empty() || ref->empty()) throw Error(ErrorCode::kEmptyCloud, "map has no points");
  std::cout << "map_acc_cm " << fmt(map_accuracy(*est, SpatialIndex(ref), threshold)) << "\nmap_com_percent "
            << fmt(map_completeness(SpatialIndex(est), *ref, threshold)) << "\nthreshold_m " << threshold << '\n';
  return kExitOk;
}

int degeneracy_report(const std::string& map_path, const std::string& scan_path, const std::vector<double>& pose7,
                      double voxel, double de_threshold, double s_thres) {
  const Pose pose = parse_pose7(pose7);
  const PriorMap map = load_map(map_path, voxel);
  const PointCloud scan = read_cloud(scan_path);
  const AlignResult r = align(PointCloud{scan.points, {}, {}}, map, pose, {});
  DegeneracyParams params;
  params.de_threshold = de_threshold > 0.0 ? de_threshold : kInfiniteMetric;
  params.s_thres = s_thres;
  const DegeneracyReport d = detect(r, spectrum(reference_hessian(r.correspondences)), params);
  const Spectrum s = spectrum(r.hessian);

  auto maybe = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
  const auto q = r.pose.quaternion();
  nlohmann::json j = {{"pose", {r.pose.translation.x(), r.pose.translation.y(), r.pose.translation.z(), q.x(), q.y(), q.z(), q.w()}},
                      {"residual_rms", r.residual_rms},
                      {"correspondences", r.correspondences.size()},
                      {"eigenvalues", std::vector<double>(s.eigenvalues.data(), s.eigenvalues.data() + 6)},
                      {"d_e", maybe(d.d_e)},
                      {"threshold", maybe(d.threshold)},
                      {"stage1_reject", d.stage1_reject},
                      {"axis_counts", d.axis_counts},
                      {"ratios", {maybe(d.ratios[0]), maybe(d.ratios[1]), maybe(d.ratios[2])}},
                      {"degenerate", {{"x", d.degenerate[0]}, {"y", d.degenerate[1]}, {"z", d.degenerate[2]}}}};
  std::cout << j.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prior-map LiDAR localization with degeneracy-aware map factors"};
  app.require_subcommand(1);

  std::string map, scans, odom, imu, config, out, spec, est, ref, scan;
  std::vector<std::string> sets;
  std::size_t delta = 1;
  double threshold = kDefaultMapThreshold, voxel = 0.1, de_threshold = 0.0, s_thres = 3.0;
  std::vector<double> pose;

  auto* loc = app.add_subcommand("localize", "Localize a scan sequence against a prior map");
  loc->add_option("--map", map, "Prior map (PCD or PLY)")->required();
  loc->add_option("--scans", scans, "Directory of <timestamp>.pcd scans")->required();
  loc->add_option("--odom", odom, "Front-end odometry (TUM)")->required();
  loc->add_option("--imu", imu, "IMU CSV (t,wx,wy,wz,ax,ay,az)");
  loc->add_option("--config", config, "Run configuration (JSON)");
  loc->add_option("--out", out, "Output directory");
  loc->add_option("--set", sets, "Override a config key, e.g. degeneracy.s_thres=3.0")->take_all();

  auto* syn = app.add_subcommand("synth", "Generate a synthetic scene and sequence");
  syn->add_option("--spec", spec, "Scene spec (JSON)")->required();
  syn->add_option("--out", out, "Output directory")->required();

  auto* et = app.add_subcommand("eval-traj", "ATE and RPE of a trajectory against a reference");
  et->add_option("--est", est, "Estimated trajectory (TUM)")->required();
  et->add_option("--ref", ref, "Reference trajectory (TUM)")->required();
  et->add_option("--delta", delta, "RPE frame delta")->check(CLI::PositiveNumber);

  auto* em = app.add_subcommand("eval-map", "Map accuracy and completeness against a reference cloud");
  em->add_option("--est", est, "Estimated map (PCD or PLY)")->required();
  em->add_option("--ref", ref, "Reference map (PCD or PLY)")->required();
  em->add_option("--threshold", threshold, "Inlier distance in meters")->check(CLI::PositiveNumber);

  auto* dr = app.add_subcommand("degeneracy-report", "Register one scan and report its degeneracy");
  dr->add_option("--map", map, "Prior map (PCD or PLY)")->required();
  dr->add_option("--scan", scan, "Scan in the body frame (PCD or PLY)")->required();
  dr->add_option("--pose", pose, "Initial pose: tx ty tz qx qy qz qw")->expected(7)->required();
  dr->add_option("--voxel", voxel, "Map voxel size in meters")->check(CLI::PositiveNumber);
  dr->add_option("--de-threshold", de_threshold, "Stage-1 bound on d_e (0 = none)")->check(CLI::NonNegativeNumber);
  dr->add_option("--s-thres", s_thres, "Stage-2 ratio threshold")->check(CLI::Range(1.0, 1e9));

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*loc) return localize(map, scans, odom, imu, config, out, sets);
    if (*syn) return synth(spec, out);
    if (*et) return eval_traj(est, ref, delta);
    if (*em) return eval_map(est, ref, threshold);
    if (*dr) return degeneracy_report(map, scan, pose, voxel, de_threshold, s_thres);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

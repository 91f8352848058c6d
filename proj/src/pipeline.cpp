#include "maploc/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <sstream>

#include "maploc/error.hpp"
#include "maploc/io.hpp"
#include "maploc/registration.hpp"

namespace maploc {
namespace {

using nlohmann::json;

ImuSample lerp(const ImuSample& a, const ImuSample& b, double t) {
  const double w = (t - a.timestamp) / (b.timestamp - a.timestamp);
  ImuSample s;
  s.timestamp = t;
  s.gyro = (1.0 - w) * a.gyro + w * b.gyro;
  s.accel = (1.0 - w) * a.accel + w * b.accel;
  return s;
}

/// Samples covering exactly [t0, t1], interpolating the end points. Empty when the stream
/// does not cover the interval.
std::vector<ImuSample> imu_slice(const std::vector<ImuSample>& imu, double t0, double t1) {
  constexpr double kSnap = 1e-9;
  if (imu.size() < 2 || imu.front().timestamp > t0 + kSnap || imu.back().timestamp < t1 - kSnap || !(t1 > t0)) {
    return {};
  }
  auto by_time = [](const ImuSample& s, double t) { return s.timestamp < t; };
  std::vector<ImuSample> out;
  auto it = std::lower_bound(imu.begin(), imu.end(), t0 - kSnap, by_time);
  if (it != imu.end() && std::abs(it->timestamp - t0) <= kSnap) {
    out.push_back(*it);
    out.back().timestamp = t0;
    ++it;
  } else {
    out.push_back(lerp(*(it - 1), *it, t0));
  }
  for (; it != imu.end() && it->timestamp < t1 - kSnap; ++it) out.push_back(*it);
  if (it != imu.end() && std::abs(it->timestamp - t1) <= kSnap) {
    out.push_back(*it);
    out.back().timestamp = t1;
  } else if (it != imu.end()) {
    out.push_back(lerp(*(it - 1), *it, t1));
  } else {
    out.back().timestamp = t1;  // within the snap tolerance of the last sample
  }
  return out;
}

json maybe(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

struct Keyframe {
  std::size_t scan = 0;
  std::size_t odom = 0;
  double timestamp = 0.0;
};

}  // namespace

PriorMap load_map(const std::filesystem::path& path, double voxel, const NormalParams& normals) {
  if (!(voxel > 0.0)) throw Error(ErrorCode::kInvalidConfig, "map voxel must be positive");
  return make_prior_map(read_cloud(path), voxel, normals);
}

SequenceInput load_sequence(const std::filesystem::path& scans_dir, const std::filesystem::path& odom,
                            const std::filesystem::path& imu) {
  if (!std::filesystem::is_directory(scans_dir)) {
    throw Error(ErrorCode::kIoError, "scan directory not found: " + scans_dir.string());
  }
  std::vector<std::pair<double, std::filesystem::path>> files;
  for (const auto& entry : std::filesystem::directory_iterator(scans_dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".pcd") continue;
    const std::string stem = entry.path().stem().string();
    std::size_t used = 0;
    double t = 0.0;
    try {
      t = std::stod(stem, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != stem.size()) throw ParseError("scan file name is not a timestamp: " + entry.path().string(), 0);
    files.emplace_back(t, entry.path());
  }
  std::sort(files.begin(), files.end());

  SequenceInput input;
  for (const auto& [t, path] : files) input.scans.push_back({t, read_pcd(path)});
  input.odometry = read_tum(odom);
  if (!imu.empty()) input.imu = read_imu_csv(imu);
  if (!input.odometry.empty()) {
    input.initial_pose = input.odometry.entries.front().pose;
    input.has_initial_pose = true;
  }
  return input;
}

MetricsReport compute_metrics(const Trajectory& est, const Trajectory& ref, const PointCloud* est_map,
                              const PointCloud* gt_map, const RunConfig::Eval& eval) {
  MetricsReport m;
  const AteResult a = ate(est, ref, {eval.max_dt, true});
  m.ate_rmse_cm = a.rmse_cm;
  m.alignment = a.alignment;
  m.matched_pairs = a.pairs;
  m.rpe_delta = eval.rpe_delta;
  m.rpe_rmse_cm = rpe(est, ref, eval.rpe_delta, eval.max_dt);
  m.rpe_per_meter_cm = rpe_per_meter(est, ref, 1.0, eval.max_dt);
  m.map_threshold = eval.map_threshold;
  if (est_map != nullptr && gt_map != nullptr && !est_map->empty() && !gt_map->empty()) {
    auto gt = std::make_shared<const PointCloud>(PointCloud{gt_map->points, {}, {}});
    auto es = std::make_shared<const PointCloud>(PointCloud{est_map->points, {}, {}});
    m.map_acc_cm = map_accuracy(*es, SpatialIndex(gt), eval.map_threshold);
    m.map_com_percent = map_completeness(SpatialIndex(es), *gt, eval.map_threshold);
    m.has_map_metrics = true;
  }
  return m;
}

RunResult run(const RunConfig& config, const SequenceInput& input, const PriorMap& map, const GroundTruth& truth) {
  RunResult result;
  auto warn = [&](const std::string& w) { result.warnings.push_back(w); };
  input.odometry.validate();
  const auto& odom = input.odometry.entries;
  if (odom.empty()) throw Error(ErrorCode::kNoMatches, "odometry trajectory is empty");
  for (std::size_t i = 1; i < input.imu.size(); ++i) {
    if (!(input.imu[i].timestamp > input.imu[i - 1].timestamp)) {
      throw Error(ErrorCode::kNonMonotonicTimestamps, "IMU timestamps must strictly increase");
    }
  }

  // ---- scan / odometry association -----------------------------------------------------
  result.summary.scans = input.scans.size();
  std::vector<Keyframe> associated;
  for (std::size_t i = 0; i < input.scans.size(); ++i) {
    const double t = input.scans[i].timestamp;
    auto it = std::lower_bound(odom.begin(), odom.end(), t,
                               [](const TrajectoryEntry& e, double x) { return e.timestamp < x; });
    std::size_t best = odom.size();
    double best_dt = kScanAssociationTolerance;
    for (auto c : {it, it == odom.begin() ? it : it - 1}) {
      if (c == odom.end()) continue;
      const double dt = std::abs(c->timestamp - t);
      if (dt <= best_dt) {
        best_dt = dt;
        best = static_cast<std::size_t>(c - odom.begin());
      }
    }
    if (best == odom.size() || (!associated.empty() && best <= associated.back().odom)) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "scan %.9f dropped: no odometry pose within 10 ms", t);
      warn(buf);
      ++result.summary.dropped_scans;
      continue;
    }
    associated.push_back({i, best, t});
  }
  std::vector<Keyframe> keyframes;
  for (std::size_t i = 0; i < associated.size(); i += config.keyframe_stride) keyframes.push_back(associated[i]);
  if (keyframes.empty()) throw Error(ErrorCode::kNoMatches, "no scan associates with the odometry");
  const std::size_t n = keyframes.size();
  result.summary.keyframes = n;

  // ---- initial guess from the odometry chain ---------------------------------------------
  const Pose initial = config.initial_pose      ? *config.initial_pose
                       : input.has_initial_pose ? input.initial_pose
                                                : odom[keyframes[0].odom].pose;
  const Pose world_from_odom = initial * odom[keyframes[0].odom].pose.inverse();
  std::vector<Pose> dead_reckoned(n);
  for (std::size_t k = 0; k < n; ++k) dead_reckoned[k] = world_from_odom * odom[keyframes[k].odom].pose;
  dead_reckoned[0] = initial;
  std::vector<Eigen::Vector3d> velocity(n, Eigen::Vector3d::Zero());
  for (std::size_t k = 0; k < n && n > 1; ++k) {
    const std::size_t a = k == 0 ? 0 : k - 1, b = k + 1 == n ? k : k + 1;
    velocity[k] = (dead_reckoned[b].translation - dead_reckoned[a].translation) /
                  (keyframes[b].timestamp - keyframes[a].timestamp);
  }

  std::vector<PointCloud> reg_scans(n);
  for (std::size_t k = 0; k < n; ++k) {
    const PointCloud& raw = input.scans[keyframes[k].scan].cloud;
    reg_scans[k] = config.registration.scan_voxel > 0.0 ? voxel_downsample(raw, config.registration.scan_voxel)
                                                        : PointCloud{raw.points, {}, {}};
  }

  // ---- sanity gate --------------------------------------------------------------------------
  AlignResult first;
  try {
    first = align(reg_scans[0], map, initial, config.registration.params);
  } catch (const Error& e) {
    throw Error(ErrorCode::kInitializationFailure, std::string("initial pose does not register: ") + e.what());
  }
  if (!(first.residual_rms < config.registration.sanity_rms)) {
    throw Error(ErrorCode::kInitializationFailure,
                "initial registration residual " + std::to_string(first.residual_rms) + " m exceeds the sanity gate");
  }

  // ---- graph construction -------------------------------------------------------------------
  const bool use_imu = config.imu.enabled && input.imu.size() >= 2;
  const bool use_zupt = use_imu && config.zupt.enabled;
  const double g_mag = config.imu.noise.gravity_magnitude;
  FactorGraph graph;
  graph.set_gravity(Eigen::Vector3d(0.0, 0.0, -1.0));
  DegeneracyDetector detector(config.degeneracy.params);
  std::vector<bool> stationary(n, false);
  std::size_t interval_start = 0;  // first state of the current stationary interval
  OptimizerParams window_params = config.optimizer.params;

  for (std::size_t k = 0; k < n; ++k) {
    FrameReport frame;
    frame.index = keyframes[k].scan;
    frame.timestamp = keyframes[k].timestamp;

    StateNode state;
    state.timestamp = keyframes[k].timestamp;
    if (k == 0) {
      state.pose = initial;
      state.velocity = velocity[0];
      graph.add_state(state);
      graph.add_factor(make_prior_factor(0, initial, pose_information(config.prior.rot_sigma, config.prior.trans_sigma)));
      if (use_imu) {
        graph.add_factor(make_bias_prior_factor(0, Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(),
                                                config.imu.bias_prior_accel, config.imu.bias_prior_gyro));
      }
    } else {
      const StateNode& prev = graph.states()[k - 1];
      const Pose relative = between(odom[keyframes[k - 1].odom].pose, odom[keyframes[k].odom].pose);
      const Pose correction = prev.pose * dead_reckoned[k - 1].inverse();
      state.pose = prev.pose * relative;
      state.velocity = correction.rotation * velocity[k];
      state.accel_bias = prev.accel_bias;
      state.gyro_bias = prev.gyro_bias;
      graph.add_state(state);
      graph.add_factor(make_odometry_factor(k - 1, k, relative,
                                            pose_information(config.odometry.rot_sigma, config.odometry.trans_sigma)));
      if (use_imu) {
        const auto samples = imu_slice(input.imu, keyframes[k - 1].timestamp, keyframes[k].timestamp);
        if (samples.size() >= 2) {
          const Eigen::Vector3d g_start = prev.pose.rotation.transpose() * graph.gravity() * g_mag;
          graph.add_factor(make_imu_factor(k - 1, k, preintegrate(samples, prev.accel_bias, prev.gyro_bias, g_start,
                                                                  config.imu.noise),
                                           g_mag));
        } else {
          char buf[96];
          std::snprintf(buf, sizeof buf, "no IMU coverage between %.9f and %.9f", keyframes[k - 1].timestamp,
                        keyframes[k].timestamp);
          warn(buf);
        }
        graph.add_factor(make_bias_walk_factor(k - 1, k, keyframes[k].timestamp - keyframes[k - 1].timestamp,
                                               config.imu.noise));
      }
    }

    // Map constraint.
    if (config.map_factor.enabled && k % config.map_factor_stride == 0) {
      try {
        const AlignResult r = k == 0 ? first : align(reg_scans[k], map, graph.states()[k].pose, config.registration.params);
        frame.registered = true;
        frame.residual_rms = r.residual_rms;
        frame.correspondences = r.correspondences.size();
        std::array<bool, 3> mask{};
        bool accept = true;
        if (config.degeneracy.enabled) {
          const DegeneracyReport rep = detector.process(r);
          frame.degeneracy = rep;
          accept = !rep.stage1_reject;
          mask = rep.degenerate;
          if (rep.stage1_reject) ++result.summary.stage1_rejects;
          if (rep.any_degenerate()) ++result.summary.degenerate_frames;
        }
        if (accept) {
          graph.add_factor(make_map_factor(k, r.pose, r.hessian, mask,
                                           1.0 / (config.map_factor.sigma * config.map_factor.sigma)));
          frame.map_factor = true;
          ++result.summary.map_factors;
          // Start the window solve from the registered pose.
          graph.mutable_states()[k].pose = r.pose;
        }
      } catch (const Error& e) {
        frame.status = e.what();
        ++result.summary.failed_frames;
        warn("frame " + std::to_string(frame.index) + ": " + e.what());
      }
    }

    // Zero-velocity constraints from the IMU window ending at (or, at the start, beginning at) t_k.
    if (use_zupt) {
      const double t = keyframes[k].timestamp, w = config.zupt.params.window;
      auto window = imu_slice(input.imu, t - w, t);
      if (window.empty()) window = imu_slice(input.imu, t, t + w);
      bool still = false;
      try {
        still = !window.empty() && velocity[k].norm() < config.zupt.max_odom_speed &&
                detect_zupt(window, config.zupt.params);
      } catch (const Error&) {
        still = false;
      }
      stationary[k] = still;
      if (still) {
        frame.zupt = true;
        ++result.summary.zupt_frames;
        graph.add_factor(make_zero_velocity_factor(k, config.zupt.velocity_sigma));
        // Star topology: every later state of an interval is tied to its first state.
        const bool continues = k > 0 && stationary[k - 1] && keyframes[k].timestamp - keyframes[k - 1].timestamp <= w;
        if (!continues) interval_start = k;
        if (continues) {
          graph.add_factor(make_no_motion_factor(interval_start, k, config.zupt.rot_sigma, config.zupt.trans_sigma));
        }
        Eigen::Vector3d mean = Eigen::Vector3d::Zero();
        for (const auto& s : window) mean += s.accel;
        mean /= static_cast<double>(window.size());
        // Direction information from the window's accelerometer scatter, scaled to a unit vector.
        Eigen::Vector3d var = Eigen::Vector3d::Zero();
        for (const auto& s : window) var += (s.accel - mean).cwiseAbs2();
        var /= static_cast<double>(std::max<std::size_t>(window.size() - 1, 1));
        const double floor = config.zupt.gravity_min_sigma * config.zupt.gravity_min_sigma;
        Eigen::Vector3d info;
        for (int a = 0; a < 3; ++a) info[a] = 1.0 / std::max(var[a] / mean.squaredNorm(), floor);
        mean -= graph.states()[k].accel_bias;
        try {
          graph.add_factor(make_gravity_factor(k, mean, info.asDiagonal().toDenseMatrix()));
        } catch (const Error& e) {
          warn("frame " + std::to_string(frame.index) + ": gravity factor skipped: " + e.what());
        }
      }
    }

    if (config.window > 0) {
      const std::size_t first_free = k + 1 > config.window ? k + 1 - config.window : 0;
      try {
        optimize(graph, window_params, first_free);
      } catch (const Error& e) {
        warn("frame " + std::to_string(frame.index) + ": window solve failed: " + e.what());
      }
    }
    result.frames.push_back(std::move(frame));
  }

  OptimizerParams batch = config.optimizer.params;
  batch.max_iterations = config.optimizer.final_max_iterations;
  const OptimizeResult final_solve = optimize(graph, batch, 0);
  result.optimizer_log = final_solve.log;
  result.summary.final_cost = final_solve.final_cost;
  result.summary.iterations = final_solve.log.size();
  result.summary.gravity = final_solve.gravity;
  result.states = final_solve.states;

  for (std::size_t k = 0; k < n; ++k) {
    result.trajectory.entries.push_back({keyframes[k].timestamp, result.states[k].pose});
  }

  PointCloud merged;
  for (std::size_t k = 0; k < n; ++k) {
    const PointCloud& raw = input.scans[keyframes[k].scan].cloud;
    const Pose& pose = result.states[k].pose;
    merged.points.reserve(merged.points.size() + raw.size());
    for (const auto& p : raw.points) merged.points.push_back(pose * p);
  }
  result.map = merged.empty() ? merged : voxel_downsample(merged, config.output.voxel);

  if (truth.trajectory) {
    try {
      result.metrics = compute_metrics(result.trajectory, *truth.trajectory, &result.map,
                                       truth.map ? &*truth.map : nullptr, config.eval);
    } catch (const Error& e) {
      warn(std::string("metrics unavailable: ") + e.what());
    }
  }
  return result;
}

std::string format_report(const RunResult& result) {
  json frames = json::array();
  for (const auto& f : result.frames) {
    json j = {{"index", f.index},
              {"timestamp", f.timestamp},
              {"status", f.status},
              {"registered", f.registered},
              {"map_factor", f.map_factor},
              {"zupt", f.zupt}};
    if (f.registered) {
      j["residual_rms"] = maybe(f.residual_rms);
      j["correspondences"] = f.correspondences;
    }
    if (f.degeneracy) {
      const auto& d = *f.degeneracy;
      j["degeneracy"] = {{"d_e", maybe(d.d_e)},
                         {"threshold", maybe(d.threshold)},
                         {"axis_counts", {d.axis_counts[0], d.axis_counts[1], d.axis_counts[2]}},
                         {"ratios", {maybe(d.ratios[0]), maybe(d.ratios[1]), maybe(d.ratios[2])}},
                         {"degenerate", {d.degenerate[0], d.degenerate[1], d.degenerate[2]}},
                         {"mask_bits", d.mask_bits()},
                         {"stage1_reject", d.stage1_reject}};
    }
    frames.push_back(std::move(j));
  }
  const auto& s = result.summary;
  json report = {{"version", 1},
                 {"summary",
                  {{"scans", s.scans},
                   {"dropped_scans", s.dropped_scans},
                   {"keyframes", s.keyframes},
                   {"map_factors", s.map_factors},
                   {"stage1_rejects", s.stage1_rejects},
                   {"degenerate_frames", s.degenerate_frames},
                   {"zupt_frames", s.zupt_frames},
                   {"failed_frames", s.failed_frames},
                   {"final_cost", s.final_cost},
                   {"iterations", s.iterations},
                   {"gravity", {s.gravity.x(), s.gravity.y(), s.gravity.z()}}}},
                 {"frames", std::move(frames)},
                 {"metrics", nullptr},
                 {"warnings", result.warnings}};
  if (result.metrics) {
    const auto& m = *result.metrics;
    json jm = {{"ate_rmse_cm", m.ate_rmse_cm},
               {"rpe_rmse_cm", m.rpe_rmse_cm},
               {"rpe_delta", m.rpe_delta},
               {"rpe_per_meter_cm", m.rpe_per_meter_cm},
               {"map_threshold_m", m.map_threshold}};
    if (m.has_map_metrics) {
      jm["map_acc_cm"] = m.map_acc_cm;
      jm["map_com_percent"] = m.map_com_percent;
    }
    report["metrics"] = std::move(jm);
  }
  return report.dump(2) + "\n";
}

std::string format_frame_csv(const RunResult& result) {
  std::ostringstream os;
  os << "timestamp,d_e,n_x,n_y,n_z,mask_bits,residual_rms,stage1_reject,map_factor,zupt\n";
  char buf[256];
  for (const auto& f : result.frames) {
    const auto& d = f.degeneracy;
    std::snprintf(buf, sizeof buf, "%.9f,%.9g,%zu,%zu,%zu,%d,%.9g,%d,%d,%d\n", f.timestamp,
                  d ? d->d_e : std::nan(""), d ? d->axis_counts[0] : 0, d ? d->axis_counts[1] : 0,
                  d ? d->axis_counts[2] : 0, d ? d->mask_bits() : 0, f.registered ? f.residual_rms : std::nan(""),
                  d && d->stage1_reject ? 1 : 0, f.map_factor ? 1 : 0, f.zupt ? 1 : 0);
    os << buf;
  }
  return os.str();
}

void emit_reports(const RunResult& result, const std::filesystem::path& dir, PcdPrecision map_precision) {
  write_tum(dir / "trajectory.tum", result.trajectory);
  write_pcd(dir / "map.pcd", result.map, map_precision);
  write_file(dir / "report.json", format_report(result));
  write_file(dir / "frames.csv", format_frame_csv(result));
  std::ostringstream log;
  write_iteration_log(log, result.optimizer_log);
  write_file(dir / "optimizer.csv", log.str());
}

}  // namespace maploc

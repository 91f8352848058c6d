#include "maploc/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <random>
#include <set>

#include "maploc/error.hpp"
#include "maploc/io.hpp"

namespace maploc {
namespace {

using nlohmann::json;

constexpr double kGravity = 9.81;
constexpr double kPi = 3.14159265358979323846;

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::kInvalidSpec, what); }

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t sub = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(sub),
                    static_cast<std::uint32_t>(sub >> 32)};
  return std::mt19937_64(seq);
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) invalid(where + " must be an object");
  for (const auto& item : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return item.key() == k; });
    if (!known) invalid("unknown key '" + where + (where.empty() ? "" : ".") + item.key() + "'");
  }
}

double number(const json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) invalid(std::string("'") + key + "' must be a number");
  return obj[key].get<double>();
}

Eigen::Vector3d vec3(const json& v, const std::string& what) {
  if (!v.is_array() || v.size() != 3) invalid(what + " must be an array of three numbers");
  Eigen::Vector3d out;
  for (int i = 0; i < 3; ++i) {
    if (!v[static_cast<std::size_t>(i)].is_number()) invalid(what + " must be an array of three numbers");
    out[i] = v[static_cast<std::size_t>(i)].get<double>();
  }
  return out;
}

Eigen::Vector3d vec3_or(const json& obj, const char* key, const Eigen::Vector3d& fallback) {
  return obj.contains(key) ? vec3(obj[key], key) : fallback;
}

SceneKind parse_kind(const std::string& s) {
  if (s == "cube-room") return SceneKind::kCubeRoom;
  if (s == "corridor") return SceneKind::kCorridor;
  if (s == "l-corridor") return SceneKind::kLCorridor;
  if (s == "plane-only") return SceneKind::kPlaneOnly;
  invalid("unknown scene kind '" + s + "'");
}

// Quintic ease: zero velocity and acceleration at both ends.
struct Ease {
  double s, ds, dds;
};
Ease ease(double tau, double duration) {
  const double t2 = tau * tau, t3 = t2 * tau;
  return {10 * t3 - 15 * t3 * tau + 6 * t3 * t2,
          (30 * t2 - 60 * t3 + 30 * t2 * t2) / duration,
          (60 * tau - 180 * t2 + 120 * t3) / (duration * duration)};
}

}  // namespace

const char* to_string(SceneKind kind) {
  switch (kind) {
    case SceneKind::kCubeRoom: return "cube-room";
    case SceneKind::kCorridor: return "corridor";
    case SceneKind::kLCorridor: return "l-corridor";
    case SceneKind::kPlaneOnly: return "plane-only";
  }
  return "?";
}

SceneSpec parse_scene_spec(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    invalid(std::string("malformed JSON: ") + e.what());
  }
  check_keys(root, {"kind", "dimensions", "density", "trajectory", "sensor", "imu", "odometry", "seed", "end_walls"}, "");

  SceneSpec spec;
  try {
    if (!root.contains("kind") || !root["kind"].is_string()) invalid("'kind' is required");
    spec.kind = parse_kind(root["kind"].get<std::string>());
    if (!root.contains("dimensions")) invalid("'dimensions' is required");
    spec.dimensions = vec3(root["dimensions"], "dimensions");
    spec.density = number(root, "density", spec.density);
    if (!root.contains("seed") || !root["seed"].is_number_unsigned()) invalid("'seed' is required (non-negative integer)");
    spec.seed = root["seed"].get<std::uint64_t>();
    if (root.contains("end_walls")) {
      if (!root["end_walls"].is_boolean()) invalid("'end_walls' must be a boolean");
      spec.end_walls = root["end_walls"].get<bool>();
    }

    if (!root.contains("trajectory")) invalid("'trajectory' is required");
    const json& tj = root["trajectory"];
    check_keys(tj, {"waypoints", "speed", "dwell", "yaw", "yaw_amplitude", "yaw_wavelength"}, "trajectory");
    auto& traj = spec.trajectory;
    if (!tj.contains("waypoints") || !tj["waypoints"].is_array()) invalid("'trajectory.waypoints' is required");
    for (const auto& w : tj["waypoints"]) traj.waypoints.push_back(vec3(w, "waypoint"));
    traj.speed = number(tj, "speed", traj.speed);
    if (tj.contains("dwell")) {
      const json& d = tj["dwell"];
      if (d.is_number()) {
        traj.dwell = {d.get<double>()};
      } else if (d.is_array()) {
        for (const auto& x : d) {
          if (!x.is_number()) invalid("'trajectory.dwell' entries must be numbers");
          traj.dwell.push_back(x.get<double>());
        }
      } else {
        invalid("'trajectory.dwell' must be a number or an array");
      }
    }
    traj.yaw = number(tj, "yaw", traj.yaw);
    traj.yaw_amplitude = number(tj, "yaw_amplitude", traj.yaw_amplitude);
    traj.yaw_wavelength = number(tj, "yaw_wavelength", traj.yaw_wavelength);

    if (root.contains("sensor")) {
      const json& sj = root["sensor"];
      check_keys(sj, {"columns", "rings", "fov_up", "fov_down", "min_range", "max_range", "range_noise", "scan_rate"}, "sensor");
      auto& s = spec.sensor;
      s.columns = static_cast<int>(number(sj, "columns", s.columns));
      s.rings = static_cast<int>(number(sj, "rings", s.rings));
      s.fov_up_deg = number(sj, "fov_up", s.fov_up_deg);
      s.fov_down_deg = number(sj, "fov_down", s.fov_down_deg);
      s.min_range = number(sj, "min_range", s.min_range);
      s.max_range = number(sj, "max_range", s.max_range);
      s.range_noise = number(sj, "range_noise", s.range_noise);
      s.scan_rate = number(sj, "scan_rate", s.scan_rate);
    }
    if (root.contains("imu")) {
      const json& ij = root["imu"];
      check_keys(ij, {"rate", "accel_noise", "gyro_noise", "accel_bias", "gyro_bias"}, "imu");
      auto& m = spec.imu;
      m.rate = number(ij, "rate", m.rate);
      m.accel_noise = number(ij, "accel_noise", m.accel_noise);
      m.gyro_noise = number(ij, "gyro_noise", m.gyro_noise);
      m.accel_bias = vec3_or(ij, "accel_bias", m.accel_bias);
      m.gyro_bias = vec3_or(ij, "gyro_bias", m.gyro_bias);
    }
    if (root.contains("odometry")) {
      const json& oj = root["odometry"];
      check_keys(oj, {"rot_noise", "trans_noise", "z_drift_per_frame"}, "odometry");
      auto& o = spec.odometry;
      o.rot_noise = number(oj, "rot_noise", o.rot_noise);
      o.trans_noise = number(oj, "trans_noise", o.trans_noise);
      o.z_drift_per_frame = number(oj, "z_drift_per_frame", o.z_drift_per_frame);
    }
  } catch (const json::exception& e) {
    invalid(e.what());
  }
  validate(spec);
  return spec;
}

void validate(const SceneSpec& spec) {
  if (!(spec.dimensions.minCoeff() > 0.0) || !spec.dimensions.allFinite()) invalid("dimensions must be positive");
  if (spec.kind == SceneKind::kLCorridor && !(spec.dimensions.x() > spec.dimensions.y())) {
    invalid("l-corridor leg length must exceed its width");
  }
  if (!(spec.density > 0.0)) invalid("density must be positive");

  const auto& traj = spec.trajectory;
  if (traj.waypoints.empty()) invalid("trajectory needs at least one waypoint");
  if (!(traj.speed > 0.0)) invalid("trajectory.speed must be positive");
  if (!traj.dwell.empty() && traj.dwell.size() != 1 && traj.dwell.size() != traj.waypoints.size()) {
    invalid("trajectory.dwell must have one entry or one per waypoint");
  }
  for (double d : traj.dwell) {
    if (!(d >= 0.0)) invalid("trajectory.dwell must be non-negative");
  }
  if (!(traj.yaw_wavelength > 0.0)) invalid("trajectory.yaw_wavelength must be positive");

  const SceneGeometry geometry(spec);
  for (const auto& w : traj.waypoints) {
    if (!geometry.inside(w)) invalid("waypoint outside the scene");
  }

  const auto& s = spec.sensor;
  if (s.columns < 1 || s.rings < 2) invalid("sensor needs at least one column and two rings");
  if (!(s.fov_up_deg > s.fov_down_deg) || s.fov_up_deg > 90.0 || s.fov_down_deg < -90.0) {
    invalid("sensor field of view must satisfy -90 <= fov_down < fov_up <= 90");
  }
  if (!(s.min_range >= 0.0) || !(s.max_range > s.min_range)) invalid("sensor ranges must satisfy 0 <= min < max");
  if (!(s.range_noise >= 0.0)) invalid("sensor.range_noise must be non-negative");
  if (!(s.scan_rate > 0.0)) invalid("sensor.scan_rate must be positive");

  const auto& m = spec.imu;
  if (!(m.rate >= s.scan_rate)) invalid("imu.rate must be at least the scan rate");
  if (!(m.accel_noise >= 0.0) || !(m.gyro_noise >= 0.0)) invalid("imu noise must be non-negative");
  if (!m.accel_bias.allFinite() || !m.gyro_bias.allFinite()) invalid("imu biases must be finite");

  const auto& o = spec.odometry;
  if (!(o.rot_noise >= 0.0) || !(o.trans_noise >= 0.0)) invalid("odometry noise must be non-negative");
  if (!std::isfinite(o.z_drift_per_frame)) invalid("odometry.z_drift_per_frame must be finite");

  if (SyntheticMotion(traj).duration() * s.scan_rate < 1.0) invalid("sequence shorter than two scans");
}

// ---- geometry ------------------------------------------------------------------------------

SceneGeometry::SceneGeometry(const SceneSpec& spec) : end_walls_(spec.end_walls) {
  const Eigen::Vector3d d = spec.dimensions;
  switch (spec.kind) {
    case SceneKind::kCubeRoom:
      boxes_.push_back({Eigen::Vector3d(-d.x() / 2, -d.y() / 2, 0.0), Eigen::Vector3d(d.x() / 2, d.y() / 2, d.z())});
      break;
    case SceneKind::kCorridor:
      boxes_.push_back({Eigen::Vector3d(-d.x() / 2, -d.y() / 2, 0.0), Eigen::Vector3d(d.x() / 2, d.y() / 2, d.z())});
      break;
    case SceneKind::kLCorridor: {
      // Leg along +x from the origin, then a leg along +y at its far end.
      const double len = d.x(), w = d.y();
      boxes_.push_back({Eigen::Vector3d(0.0, -w / 2, 0.0), Eigen::Vector3d(len, w / 2, d.z())});
      boxes_.push_back({Eigen::Vector3d(len - w, -w / 2, 0.0), Eigen::Vector3d(len, len, d.z())});
      break;
    }
    case SceneKind::kPlaneOnly:
      plane_ = true;
      plane_half_extent_ = d.head<2>() / 2;
      break;
  }
  if (spec.kind != SceneKind::kCorridor) end_walls_ = true;
}

bool SceneGeometry::inside(const Eigen::Vector3d& p) const {
  if (plane_) {
    return p.z() > 0.0 && std::abs(p.x()) < plane_half_extent_.x() && std::abs(p.y()) < plane_half_extent_.y();
  }
  return std::any_of(boxes_.begin(), boxes_.end(), [&](const Box& b) {
    return (p.array() > b.lo.array()).all() && (p.array() < b.hi.array()).all();
  });
}

std::optional<double> SceneGeometry::raycast(const Eigen::Vector3d& o, const Eigen::Vector3d& d,
                                             double max_range) const {
  if (plane_) {
    if (!(d.z() < 0.0) || !(o.z() > 0.0)) return std::nullopt;
    const double t = -o.z() / d.z();
    const Eigen::Vector3d q = o + t * d;
    if (t > max_range || std::abs(q.x()) > plane_half_extent_.x() || std::abs(q.y()) > plane_half_extent_.y()) {
      return std::nullopt;
    }
    return t;
  }

  constexpr double kTol = 1e-9;
  auto contains = [&](const Box& b, const Eigen::Vector3d& p) {
    return (p.array() >= b.lo.array() - kTol).all() && (p.array() <= b.hi.array() + kTol).all();
  };
  std::size_t cur = boxes_.size();
  for (std::size_t i = 0; i < boxes_.size(); ++i) {
    if (contains(boxes_[i], o)) {
      cur = i;
      break;
    }
  }
  if (cur == boxes_.size()) return std::nullopt;

  for (std::size_t hop = 0; hop <= boxes_.size(); ++hop) {
    const Box& b = boxes_[cur];
    double t_exit = std::numeric_limits<double>::infinity();
    int axis = -1;
    for (int a = 0; a < 3; ++a) {
      if (d[a] == 0.0) continue;
      const double t = ((d[a] > 0.0 ? b.hi[a] : b.lo[a]) - o[a]) / d[a];
      if (t < t_exit) {
        t_exit = t;
        axis = a;
      }
    }
    if (axis < 0 || t_exit > max_range) return std::nullopt;
    const Eigen::Vector3d ahead = o + (t_exit + 1e-7) * d;
    std::size_t next = boxes_.size();
    for (std::size_t j = 0; j < boxes_.size(); ++j) {
      if (j != cur && contains(boxes_[j], ahead)) {
        next = j;
        break;
      }
    }
    if (next == boxes_.size()) {
      if (axis == 0 && !end_walls_) return std::nullopt;
      return std::max(t_exit, 0.0);
    }
    cur = next;
  }
  return std::nullopt;
}

PointCloud SceneGeometry::sample_surfaces(double density, std::uint64_t seed, std::uint64_t stream) const {
  auto rng = stream_rng(seed, stream);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  PointCloud out;

  if (plane_) {
    const Eigen::Vector2d e = plane_half_extent_;
    const auto n = static_cast<std::size_t>(std::llround(4.0 * e.x() * e.y() * density));
    out.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      out.points.emplace_back((2 * unit(rng) - 1) * e.x(), (2 * unit(rng) - 1) * e.y(), 0.0);
    }
    return out;
  }

  constexpr double kTol = 1e-9;
  auto strictly_inside = [&](const Box& b, const Eigen::Vector3d& p) {
    return (p.array() > b.lo.array() + kTol).all() && (p.array() < b.hi.array() - kTol).all();
  };
  auto on_boundary = [&](const Box& b, const Eigen::Vector3d& p) {
    return (p.array() >= b.lo.array() - kTol).all() && (p.array() <= b.hi.array() + kTol).all() &&
           !strictly_inside(b, p);
  };

  for (std::size_t i = 0; i < boxes_.size(); ++i) {
    const Box& b = boxes_[i];
    const Eigen::Vector3d size = b.hi - b.lo;
    for (int axis = 0; axis < 3; ++axis) {
      if (axis == 0 && !end_walls_) continue;
      const int u = (axis + 1) % 3, v = (axis + 2) % 3;
      const double area = size[u] * size[v];
      const auto n = static_cast<std::size_t>(std::llround(area * density));
      for (int side = 0; side < 2; ++side) {
        const double plane = side == 0 ? b.lo[axis] : b.hi[axis];
        for (std::size_t k = 0; k < n; ++k) {
          Eigen::Vector3d p;
          p[axis] = plane;
          p[u] = b.lo[u] + unit(rng) * size[u];
          p[v] = b.lo[v] + unit(rng) * size[v];
          // Faces opening into another box are not walls; shared faces belong to the first box.
          bool keep = true;
          for (std::size_t j = 0; j < boxes_.size() && keep; ++j) {
            if (j == i) continue;
            if (strictly_inside(boxes_[j], p) || (j < i && on_boundary(boxes_[j], p))) keep = false;
          }
          if (keep) out.points.push_back(p);
        }
      }
    }
  }
  return out;
}

// ---- motion --------------------------------------------------------------------------------

SyntheticMotion::SyntheticMotion(const TrajectorySpec& spec) : spec_(spec) {
  auto dwell_at = [&](std::size_t i) {
    if (spec_.dwell.empty()) return 0.0;
    return spec_.dwell.size() == 1 ? spec_.dwell[0] : spec_.dwell[i];
  };
  double t = 0.0, arc = 0.0;
  for (std::size_t i = 0; i < spec_.waypoints.size(); ++i) {
    const double dw = dwell_at(i);
    if (dw > 0.0) dwells_.emplace_back(t, t + dw);
    t += dw;
    if (i + 1 == spec_.waypoints.size()) break;
    const Eigen::Vector3d a = spec_.waypoints[i], b = spec_.waypoints[i + 1];
    const double dist = (b - a).norm();
    if (dist == 0.0) continue;
    const double duration = dist / spec_.speed;
    legs_.push_back({t, t + duration, arc, a, b});
    t += duration;
    arc += dist;
  }
  duration_ = t;
}

SyntheticMotion::Kinematics SyntheticMotion::evaluate(double t) const {
  Kinematics k{spec_.waypoints.front(), Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(), 0.0, 0.0};
  for (const Leg& leg : legs_) {
    if (t <= leg.t0) return k;
    const Eigen::Vector3d delta = leg.b - leg.a;
    const double dist = delta.norm();
    if (t >= leg.t1) {
      k.p = leg.b;
      k.arc = leg.arc0 + dist;
      continue;
    }
    const double duration = leg.t1 - leg.t0;
    const Ease e = ease((t - leg.t0) / duration, duration);
    k.p = leg.a + e.s * delta;
    k.v = e.ds * delta;
    k.acc = e.dds * delta;
    k.arc = leg.arc0 + e.s * dist;
    k.arc_rate = e.ds * dist;
    return k;
  }
  return k;
}

double SyntheticMotion::yaw(double arc) const {
  return spec_.yaw + spec_.yaw_amplitude * std::sin(2.0 * kPi * arc / spec_.yaw_wavelength);
}

Pose SyntheticMotion::pose(double t) const {
  const Kinematics k = evaluate(t);
  return {Eigen::AngleAxisd(yaw(k.arc), Eigen::Vector3d::UnitZ()).toRotationMatrix(), k.p};
}

Eigen::Vector3d SyntheticMotion::velocity(double t) const { return evaluate(t).v; }
Eigen::Vector3d SyntheticMotion::acceleration(double t) const { return evaluate(t).acc; }

Eigen::Vector3d SyntheticMotion::angular_rate(double t) const {
  const Kinematics k = evaluate(t);
  const double w = 2.0 * kPi / spec_.yaw_wavelength;
  return {0.0, 0.0, spec_.yaw_amplitude * std::cos(w * k.arc) * w * k.arc_rate};
}

bool SyntheticMotion::stationary(double t) const {
  return std::any_of(dwells_.begin(), dwells_.end(),
                     [&](const auto& d) { return t >= d.first && t < d.second; });
}

std::vector<std::pair<double, double>> SyntheticMotion::dwell_intervals() const { return dwells_; }

// ---- sequence ------------------------------------------------------------------------------

namespace {

enum Stream : std::uint64_t { kMapStream = 1, kGtMapStream = 2, kScanStream = 3, kImuStream = 4, kOdomStream = 5 };

PointCloud render_scan(const SceneGeometry& geometry, const SensorModel& sensor, const Pose& pose,
                       std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, 1.0);
  PointCloud scan;
  scan.points.reserve(static_cast<std::size_t>(sensor.columns * sensor.rings));
  const double down = sensor.fov_down_deg * kPi / 180.0, up = sensor.fov_up_deg * kPi / 180.0;
  for (int r = 0; r < sensor.rings; ++r) {
    const double el = down + (up - down) * r / (sensor.rings - 1);
    for (int c = 0; c < sensor.columns; ++c) {
      const double az = 2.0 * kPi * c / sensor.columns;
      const Eigen::Vector3d dir(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
      const auto hit = geometry.raycast(pose.translation, pose.rotation * dir, sensor.max_range);
      const double n = noise(rng);  // drawn for every ray so the stream does not depend on hits
      if (!hit || *hit < sensor.min_range) continue;
      scan.points.push_back(dir * (*hit + sensor.range_noise * n));
    }
  }
  return scan;
}

}  // namespace

SyntheticScene synthesize(const SceneSpec& spec) {
  validate(spec);
  const SceneGeometry geometry(spec);
  const SyntheticMotion motion(spec.trajectory);
  SyntheticScene scene;

  scene.map_source = geometry.sample_surfaces(spec.density, spec.seed, kMapStream);
  scene.gt_map = geometry.sample_surfaces(spec.density, spec.seed, kGtMapStream);

  const auto frames = static_cast<std::size_t>(std::floor(motion.duration() * spec.sensor.scan_rate + 1e-9)) + 1;
  for (std::size_t k = 0; k < frames; ++k) {
    const double t = static_cast<double>(k) / spec.sensor.scan_rate;
    const Pose gt = motion.pose(t);
    scene.ground_truth.entries.push_back({t, gt});
    auto rng = stream_rng(spec.seed, kScanStream, k);
    scene.input.scans.push_back({t, render_scan(geometry, spec.sensor, gt, rng)});
  }

  // Odometry: relative motions perturbed per frame and chained, then a world-z drift.
  {
    auto rng = stream_rng(spec.seed, kOdomStream);
    std::normal_distribution<double> unit(0.0, 1.0);
    const auto& o = spec.odometry;
    Pose chained = scene.ground_truth.entries.front().pose;
    for (std::size_t k = 0; k < frames; ++k) {
      if (k > 0) {
        const Pose rel = between(scene.ground_truth.entries[k - 1].pose, scene.ground_truth.entries[k].pose);
        const Eigen::Vector3d dr(unit(rng), unit(rng), unit(rng));
        const Eigen::Vector3d dt(unit(rng), unit(rng), unit(rng));
        Pose noisy = rel;
        if (o.rot_noise > 0.0 || o.trans_noise > 0.0) noisy = rel * exp_map(Twist(o.rot_noise * dr, o.trans_noise * dt));
        chained = chained * noisy;
        chained.rotation = orthonormalize(chained.rotation);
      }
      Pose drifted = chained;
      drifted.translation.z() += o.z_drift_per_frame * static_cast<double>(k);
      scene.input.odometry.entries.push_back({scene.ground_truth.entries[k].timestamp, drifted});
    }
  }

  {
    auto rng = stream_rng(spec.seed, kImuStream);
    std::normal_distribution<double> unit(0.0, 1.0);
    const auto& m = spec.imu;
    const auto samples = static_cast<std::size_t>(std::floor(motion.duration() * m.rate + 1e-9)) + 1;
    scene.input.imu.reserve(samples);
    for (std::size_t j = 0; j < samples; ++j) {
      const double t = static_cast<double>(j) / m.rate;
      const Pose p = motion.pose(t);
      ImuSample s;
      s.timestamp = t;
      const Eigen::Vector3d na(unit(rng), unit(rng), unit(rng));
      const Eigen::Vector3d ng(unit(rng), unit(rng), unit(rng));
      s.accel = p.rotation.transpose() * (motion.acceleration(t) + Eigen::Vector3d(0.0, 0.0, kGravity)) +
                m.accel_bias + m.accel_noise * na;
      s.gyro = motion.angular_rate(t) + m.gyro_bias + m.gyro_noise * ng;
      scene.input.imu.push_back(s);
    }
  }

  scene.input.initial_pose = scene.input.odometry.entries.front().pose;
  scene.input.has_initial_pose = true;
  return scene;
}

RegistrationCase make_registration_case(std::size_t map_points, std::size_t scan_points, std::uint64_t seed) {
  SceneSpec spec;
  spec.kind = SceneKind::kCubeRoom;
  spec.dimensions = {8.0, 8.0, 8.0};
  spec.density = static_cast<double>(map_points) / (6.0 * 64.0);
  spec.seed = seed;
  spec.sensor.rings = 28;
  spec.sensor.columns = static_cast<int>(std::ceil(static_cast<double>(scan_points) / spec.sensor.rings));
  const SceneGeometry geometry(spec);

  RegistrationCase c;
  c.map_source = geometry.sample_surfaces(spec.density, seed, kMapStream);
  auto rng = stream_rng(seed, kScanStream);
  c.truth = Pose(Eigen::AngleAxisd(0.4, Eigen::Vector3d::UnitZ()).toRotationMatrix(), Eigen::Vector3d(0.7, -0.5, 3.8));
  c.scan = render_scan(geometry, spec.sensor, c.truth, rng);
  return c;
}

std::string scan_filename(double timestamp) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9f.pcd", timestamp);
  return buf;
}

void write_scene(const SyntheticScene& scene, const std::filesystem::path& dir) {
  write_pcd(dir / "map.pcd", scene.map_source, PcdPrecision::kFloat64);
  write_pcd(dir / "gt_map.pcd", scene.gt_map, PcdPrecision::kFloat64);
  write_tum(dir / "gt.tum", scene.ground_truth);
  write_tum(dir / "odom.tum", scene.input.odometry);
  write_imu_csv(dir / "imu.csv", scene.input.imu);
  for (const auto& frame : scene.input.scans) {
    write_pcd(dir / "scans" / scan_filename(frame.timestamp), frame.cloud, PcdPrecision::kFloat64);
  }
}

}  // namespace maploc

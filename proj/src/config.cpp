#include "maploc/config.hpp"

#include <rapidjson/document.h>
#include <rapidjson/error/en.h>
#include <rapidjson/schema.h>
#include <rapidjson/stringbuffer.h>

#include <json.hpp>

#include "maploc/error.hpp"
#include "maploc/schemas.hpp"

namespace maploc {
namespace {

using nlohmann::json;

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::kInvalidConfig, what); }

void apply_override(json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) invalid("override '" + assignment + "' is not key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) invalid("override path '" + path + "' has an empty component");
    if (!node->is_object()) invalid("override path '" + path + "' descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

// Dotted path of the first key the schema does not declare, or "".
std::string unknown_key(const json& doc, const json& schema, const std::string& prefix) {
  if (!doc.is_object() || !schema.contains("properties")) return "";
  const json& props = schema["properties"];
  for (const auto& item : doc.items()) {
    const std::string path = prefix.empty() ? item.key() : prefix + "." + item.key();
    if (!props.contains(item.key())) return path;
    const std::string nested = unknown_key(item.value(), props[item.key()], path);
    if (!nested.empty()) return nested;
  }
  return "";
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj[key].get<T>();
}

void read_sigmas(const json& root, const char* key, RunConfig::Sigmas& s) {
  if (!root.contains(key)) return;
  read(root[key], "rot_sigma", s.rot_sigma);
  read(root[key], "trans_sigma", s.trans_sigma);
}

}  // namespace

std::string_view config_schema() { return embedded::kConfigSchema; }
std::string_view report_schema() { return embedded::kReportSchema; }

std::vector<std::string> schema_violations(const std::string& json_text, std::string_view schema) {
  rapidjson::Document schema_doc;
  schema_doc.Parse(schema.data(), schema.size());
  if (schema_doc.HasParseError()) return {"schema is not valid JSON"};
  const rapidjson::SchemaDocument compiled(schema_doc);

  rapidjson::Document doc;
  doc.Parse(json_text.c_str(), json_text.size());
  if (doc.HasParseError()) {
    return {std::string("malformed JSON at offset ") + std::to_string(doc.GetErrorOffset()) + ": " +
            rapidjson::GetParseError_En(doc.GetParseError())};
  }
  rapidjson::SchemaValidator validator(compiled);
  if (doc.Accept(validator)) return {};

  rapidjson::StringBuffer where, rule;
  validator.GetInvalidDocumentPointer().StringifyUriFragment(where);
  validator.GetInvalidSchemaPointer().StringifyUriFragment(rule);
  return {std::string("'") + where.GetString() + "' violates '" + validator.GetInvalidSchemaKeyword() + "' (" +
          rule.GetString() + ")"};
}

RunConfig parse_run_config(const std::string& json_text, const std::vector<std::string>& overrides) {
  json root = json::parse(json_text.empty() ? std::string("{}") : json_text, nullptr, false);
  if (root.is_discarded()) invalid("config is not valid JSON");
  for (const auto& o : overrides) apply_override(root, o);

  const std::string unknown = unknown_key(root, json::parse(config_schema()), "");
  if (!unknown.empty()) invalid("unknown config key '" + unknown + "'");
  const auto violations = schema_violations(root.dump(), config_schema());
  if (!violations.empty()) invalid(violations.front());

  RunConfig c;
  try {
    read(root, "threads", c.threads);
    read(root, "keyframe_stride", c.keyframe_stride);
    read(root, "map_factor_stride", c.map_factor_stride);
    read(root, "window", c.window);
    read(root, "output_dir", c.output_dir);
    if (root.contains("initial_pose")) c.initial_pose = parse_pose7(root["initial_pose"].get<std::vector<double>>());

    if (root.contains("map")) {
      const json& m = root["map"];
      read(m, "voxel", c.map.voxel);
      read(m, "normal_k", c.map.normals.k);
      read(m, "flatness_ratio", c.map.normals.flatness_ratio);
    }
    if (root.contains("registration")) {
      const json& r = root["registration"];
      auto& p = c.registration.params;
      read(r, "max_correspondence_distance", p.max_correspondence_distance);
      read(r, "max_iterations", p.max_iterations);
      read(r, "convergence_threshold", p.convergence_threshold);
      read(r, "kernel_width", p.kernel_width);
      read(r, "initial_damping", p.initial_damping);
      read(r, "scan_voxel", c.registration.scan_voxel);
      read(r, "sanity_rms", c.registration.sanity_rms);
    }
    if (root.contains("degeneracy")) {
      const json& d = root["degeneracy"];
      read(d, "enabled", c.degeneracy.enabled);
      read(d, "de_threshold", c.degeneracy.params.de_threshold);
      read(d, "calibration_factor", c.degeneracy.params.calibration_factor);
      read(d, "min_threshold", c.degeneracy.params.min_threshold);
      read(d, "s_thres", c.degeneracy.params.s_thres);
      read(d, "min_correspondences", c.degeneracy.params.min_correspondences);
    }
    if (root.contains("map_factor")) {
      read(root["map_factor"], "enabled", c.map_factor.enabled);
      read(root["map_factor"], "sigma", c.map_factor.sigma);
    }
    read_sigmas(root, "odometry", c.odometry);
    read_sigmas(root, "prior", c.prior);
    if (root.contains("imu")) {
      const json& i = root["imu"];
      read(i, "enabled", c.imu.enabled);
      read(i, "gyro_density", c.imu.noise.gyro_density);
      read(i, "accel_density", c.imu.noise.accel_density);
      read(i, "gyro_bias_walk", c.imu.noise.gyro_bias_walk);
      read(i, "accel_bias_walk", c.imu.noise.accel_bias_walk);
      read(i, "gravity_magnitude", c.imu.noise.gravity_magnitude);
      read(i, "bias_prior_accel", c.imu.bias_prior_accel);
      read(i, "bias_prior_gyro", c.imu.bias_prior_gyro);
    }
    if (root.contains("zupt")) {
      const json& z = root["zupt"];
      read(z, "enabled", c.zupt.enabled);
      read(z, "window", c.zupt.params.window);
      read(z, "accel_std_max", c.zupt.params.accel_std_max);
      read(z, "gyro_mean_max", c.zupt.params.gyro_mean_max);
      read(z, "velocity_sigma", c.zupt.velocity_sigma);
      read(z, "rot_sigma", c.zupt.rot_sigma);
      read(z, "trans_sigma", c.zupt.trans_sigma);
      read(z, "gravity_min_sigma", c.zupt.gravity_min_sigma);
      read(z, "max_odom_speed", c.zupt.max_odom_speed);
    }
    if (root.contains("optimizer")) {
      const json& o = root["optimizer"];
      read(o, "max_iterations", c.optimizer.params.max_iterations);
      read(o, "final_max_iterations", c.optimizer.final_max_iterations);
      read(o, "relative_tolerance", c.optimizer.params.relative_tolerance);
      read(o, "initial_damping", c.optimizer.params.initial_damping);
      read(o, "optimize_gravity", c.optimizer.params.optimize_gravity);
    }
    if (root.contains("output")) {
      const json& o = root["output"];
      read(o, "voxel", c.output.voxel);
      if (o.contains("map_precision")) {
        c.output.map_precision = o["map_precision"] == "f8" ? PcdPrecision::kFloat64 : PcdPrecision::kFloat32;
      }
    }
    if (root.contains("eval")) {
      const json& e = root["eval"];
      read(e, "gt_trajectory", c.eval.gt_trajectory);
      read(e, "gt_map", c.eval.gt_map);
      read(e, "rpe_delta", c.eval.rpe_delta);
      read(e, "map_threshold", c.eval.map_threshold);
      read(e, "max_dt", c.eval.max_dt);
    }
  } catch (const json::exception& e) {
    invalid(e.what());
  } catch (const std::invalid_argument& e) {
    invalid(e.what());
  }
  c.registration.params.threads = c.threads;
  c.map.normals.threads = c.threads;
  return c;
}

std::string config_to_json(const RunConfig& c) {
  json j;
  j["threads"] = c.threads;
  j["keyframe_stride"] = c.keyframe_stride;
  j["map_factor_stride"] = c.map_factor_stride;
  j["window"] = c.window;
  j["output_dir"] = c.output_dir;
  if (c.initial_pose) {
    const auto q = c.initial_pose->quaternion();
    const auto& t = c.initial_pose->translation;
    j["initial_pose"] = {t.x(), t.y(), t.z(), q.x(), q.y(), q.z(), q.w()};
  }
  j["map"] = {{"voxel", c.map.voxel}, {"normal_k", c.map.normals.k}, {"flatness_ratio", c.map.normals.flatness_ratio}};
  const auto& r = c.registration.params;
  j["registration"] = {{"max_correspondence_distance", r.max_correspondence_distance},
                       {"max_iterations", r.max_iterations},
                       {"convergence_threshold", r.convergence_threshold},
                       {"kernel_width", r.kernel_width},
                       {"initial_damping", r.initial_damping},
                       {"scan_voxel", c.registration.scan_voxel},
                       {"sanity_rms", c.registration.sanity_rms}};
  const auto& d = c.degeneracy.params;
  j["degeneracy"] = {{"enabled", c.degeneracy.enabled},
                     {"de_threshold", d.de_threshold},
                     {"calibration_factor", d.calibration_factor},
                     {"min_threshold", d.min_threshold},
                     {"s_thres", d.s_thres},
                     {"min_correspondences", d.min_correspondences}};
  j["map_factor"] = {{"enabled", c.map_factor.enabled}, {"sigma", c.map_factor.sigma}};
  j["odometry"] = {{"rot_sigma", c.odometry.rot_sigma}, {"trans_sigma", c.odometry.trans_sigma}};
  j["prior"] = {{"rot_sigma", c.prior.rot_sigma}, {"trans_sigma", c.prior.trans_sigma}};
  const auto& n = c.imu.noise;
  j["imu"] = {{"enabled", c.imu.enabled},
              {"gyro_density", n.gyro_density},
              {"accel_density", n.accel_density},
              {"gyro_bias_walk", n.gyro_bias_walk},
              {"accel_bias_walk", n.accel_bias_walk},
              {"gravity_magnitude", n.gravity_magnitude},
              {"bias_prior_accel", c.imu.bias_prior_accel},
              {"bias_prior_gyro", c.imu.bias_prior_gyro}};
  j["zupt"] = {{"enabled", c.zupt.enabled},
               {"window", c.zupt.params.window},
               {"accel_std_max", c.zupt.params.accel_std_max},
               {"gyro_mean_max", c.zupt.params.gyro_mean_max},
               {"velocity_sigma", c.zupt.velocity_sigma},
               {"rot_sigma", c.zupt.rot_sigma},
               {"trans_sigma", c.zupt.trans_sigma},
               {"gravity_min_sigma", c.zupt.gravity_min_sigma},
               {"max_odom_speed", c.zupt.max_odom_speed}};
  const auto& o = c.optimizer.params;
  j["optimizer"] = {{"max_iterations", o.max_iterations},
                    {"final_max_iterations", c.optimizer.final_max_iterations},
                    {"relative_tolerance", o.relative_tolerance},
                    {"initial_damping", o.initial_damping},
                    {"optimize_gravity", o.optimize_gravity}};
  j["output"] = {{"voxel", c.output.voxel},
                 {"map_precision", c.output.map_precision == PcdPrecision::kFloat64 ? "f8" : "f4"}};
  j["eval"] = {{"gt_trajectory", c.eval.gt_trajectory},
               {"gt_map", c.eval.gt_map},
               {"rpe_delta", c.eval.rpe_delta},
               {"map_threshold", c.eval.map_threshold},
               {"max_dt", c.eval.max_dt}};
  return j.dump(2) + "\n";
}

}  // namespace maploc

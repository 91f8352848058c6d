#include "maploc/io.hpp"

#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "maploc/error.hpp"

namespace maploc {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

bool parse_double(const std::string& s, double& v) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  return res.ec == std::errc() && res.ptr == last;
}

bool parse_size(const std::string& s, std::size_t& v) {
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

// Reads a line starting at pos; advances pos past the newline.
bool next_line(const std::string& text, std::size_t& pos, std::string& line) {
  if (pos >= text.size()) return false;
  const std::size_t nl = text.find('\n', pos);
  const std::size_t end = nl == std::string::npos ? text.size() : nl;
  line.assign(text, pos, end - pos);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  pos = nl == std::string::npos ? text.size() : nl + 1;
  return true;
}

struct PcdField {
  std::string name;
  std::size_t size = 4;
  char type = 'F';
  std::size_t count = 1;
  std::size_t offset = 0;  // element offset (ascii) or byte offset (binary)
};

double decode_binary(const char* p, const PcdField& f) {
  auto load = [p](auto tag) {
    decltype(tag) v;
    std::memcpy(&v, p, sizeof(v));
    return static_cast<double>(v);
  };
  switch (f.type) {
    case 'F': return f.size == 8 ? load(double{}) : load(float{});
    case 'I':
      switch (f.size) {
        case 1: return load(std::int8_t{});
        case 2: return load(std::int16_t{});
        case 4: return load(std::int32_t{});
        default: return load(std::int64_t{});
      }
    default:
      switch (f.size) {
        case 1: return load(std::uint8_t{});
        case 2: return load(std::uint16_t{});
        case 4: return load(std::uint32_t{});
        default: return load(std::uint64_t{});
      }
  }
}

}  // namespace

PointCloud parse_pcd(const std::string& bytes) {
  std::vector<PcdField> fields;
  std::size_t width = 0, height = 1, points = 0;
  bool have_points = false;
  std::string data;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  std::string line;

  while (true) {
    if (!next_line(bytes, pos, line)) throw ParseError("PCD header ended before DATA", line_no + 1);
    ++line_no;
    const auto tok = split_ws(line);
    if (tok.empty() || tok[0][0] == '#') continue;
    const std::string& key = tok[0];
    if (key == "VERSION") continue;
    if (key == "FIELDS") {
      fields.clear();
      for (std::size_t i = 1; i < tok.size(); ++i) fields.push_back({tok[i]});
    } else if (key == "SIZE" || key == "TYPE" || key == "COUNT") {
      if (tok.size() != fields.size() + 1) throw ParseError("PCD " + key + " arity mismatch", line_no);
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (key == "TYPE") {
          const char t = tok[i + 1][0];
          if (tok[i + 1].size() != 1 || (t != 'F' && t != 'I' && t != 'U')) {
            throw ParseError("PCD unknown TYPE " + tok[i + 1], line_no);
          }
          fields[i].type = t;
        } else {
          std::size_t v = 0;
          if (!parse_size(tok[i + 1], v) || v == 0) throw ParseError("PCD bad " + key + " value", line_no);
          if (key == "SIZE") {
            if (v != 1 && v != 2 && v != 4 && v != 8) throw ParseError("PCD bad SIZE", line_no);
            fields[i].size = v;
          } else {
            fields[i].count = v;
          }
        }
      }
    } else if (key == "WIDTH" || key == "HEIGHT" || key == "POINTS") {
      std::size_t v = 0;
      if (tok.size() != 2 || !parse_size(tok[1], v)) throw ParseError("PCD bad " + key, line_no);
      if (key == "WIDTH") width = v;
      if (key == "HEIGHT") height = v;
      if (key == "POINTS") {
        points = v;
        have_points = true;
      }
    } else if (key == "VIEWPOINT") {
      continue;
    } else if (key == "DATA") {
      if (tok.size() != 2) throw ParseError("PCD bad DATA line", line_no);
      data = tok[1];
      break;
    } else {
      throw ParseError("PCD unknown header key " + key, line_no);
    }
  }
  if (!have_points) points = width * height;

  int ix = -1, iy = -1, iz = -1, inx = -1, iny = -1, inz = -1;
  std::size_t elem = 0, byte = 0;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    auto& f = fields[i];
    f.offset = data == "ascii" ? elem : byte;
    elem += f.count;
    byte += f.size * f.count;
    const int id = static_cast<int>(i);
    if (f.name == "x") ix = id;
    if (f.name == "y") iy = id;
    if (f.name == "z") iz = id;
    if (f.name == "normal_x") inx = id;
    if (f.name == "normal_y") iny = id;
    if (f.name == "normal_z") inz = id;
  }
  if (ix < 0 || iy < 0 || iz < 0) throw ParseError("PCD lacks x/y/z fields", line_no);
  const bool normals = inx >= 0 && iny >= 0 && inz >= 0;

  PointCloud cloud;
  cloud.points.reserve(points);
  if (normals) cloud.normals.reserve(points);

  if (data == "ascii") {
    std::vector<double> values(elem);
    while (cloud.points.size() < points) {
      if (!next_line(bytes, pos, line)) {
        throw ParseError("PCD ascii data truncated after " + std::to_string(cloud.points.size()) + " points",
                         line_no + 1);
      }
      ++line_no;
      const auto tok = split_ws(line);
      if (tok.empty()) continue;
      if (tok.size() != elem) throw ParseError("PCD record has wrong field count", line_no);
      for (std::size_t k = 0; k < elem; ++k) {
        if (!parse_double(tok[k], values[k])) throw ParseError("PCD record has a non-numeric value", line_no);
      }
      auto at = [&](int f) { return values[fields[static_cast<std::size_t>(f)].offset]; };
      cloud.points.emplace_back(at(ix), at(iy), at(iz));
      if (normals) cloud.normals.emplace_back(at(inx), at(iny), at(inz));
    }
  } else if (data == "binary") {
    const std::size_t step = byte;
    for (std::size_t n = 0; n < points; ++n) {
      const std::size_t start = pos + n * step;
      if (start + step > bytes.size()) {
        throw ParseError("PCD binary data truncated", std::min(start, bytes.size()));
      }
      const char* rec = bytes.data() + start;
      auto at = [&](int f) {
        const auto& fd = fields[static_cast<std::size_t>(f)];
        return decode_binary(rec + fd.offset, fd);
      };
      cloud.points.emplace_back(at(ix), at(iy), at(iz));
      if (normals) cloud.normals.emplace_back(at(inx), at(iny), at(inz));
    }
  } else {
    throw ParseError("PCD DATA type '" + data + "' is not supported", line_no);
  }
  return cloud;
}

PointCloud read_pcd(const fs::path& path) { return parse_pcd(read_file(path)); }

std::string format_pcd(const PointCloud& cloud, PcdPrecision precision, bool include_normals) {
  const bool normals = include_normals && cloud.has_normals();
  const bool f64 = precision == PcdPrecision::kFloat64;
  const int nfields = normals ? 6 : 3;
  std::ostringstream h;
  h << "# .PCD v0.7 - Point Cloud Data file format\nVERSION 0.7\nFIELDS x y z"
    << (normals ? " normal_x normal_y normal_z" : "") << "\nSIZE";
  for (int i = 0; i < nfields; ++i) h << (f64 ? " 8" : " 4");
  h << "\nTYPE";
  for (int i = 0; i < nfields; ++i) h << " F";
  h << "\nCOUNT";
  for (int i = 0; i < nfields; ++i) h << " 1";
  h << "\nWIDTH " << cloud.size() << "\nHEIGHT 1\nVIEWPOINT 0 0 0 1 0 0 0\nPOINTS " << cloud.size()
    << "\nDATA binary\n";
  std::string out = h.str();
  const std::size_t elem = f64 ? 8 : 4;
  const std::size_t header = out.size();
  out.resize(header + cloud.size() * elem * static_cast<std::size_t>(nfields));
  char* p = out.data() + header;
  auto put = [&](double v) {
    if (f64) {
      std::memcpy(p, &v, 8);
    } else {
      const auto f = static_cast<float>(v);
      std::memcpy(p, &f, 4);
    }
    p += elem;
  };
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (int a = 0; a < 3; ++a) put(cloud.points[i][a]);
    if (normals) {
      for (int a = 0; a < 3; ++a) put(cloud.normals[i][a]);
    }
  }
  return out;
}

void write_pcd(const fs::path& path, const PointCloud& cloud, PcdPrecision precision, bool include_normals) {
  write_file(path, format_pcd(cloud, precision, include_normals));
}

PointCloud parse_ply(const std::string& text) {
  std::size_t pos = 0;
  std::size_t line_no = 0;
  std::string line;
  if (!next_line(text, pos, line) || line != "ply") throw ParseError("PLY magic missing", 1);
  ++line_no;

  std::size_t vertices = 0;
  bool in_vertex = false, seen_vertex = false;
  std::vector<std::string> props;
  while (true) {
    if (!next_line(text, pos, line)) throw ParseError("PLY header ended before end_header", line_no + 1);
    ++line_no;
    const auto tok = split_ws(line);
    if (tok.empty() || tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "format") {
      if (tok.size() < 2 || tok[1] != "ascii") throw ParseError("only ASCII PLY is supported", line_no);
    } else if (tok[0] == "element") {
      if (tok.size() != 3) throw ParseError("PLY bad element line", line_no);
      in_vertex = tok[1] == "vertex";
      if (in_vertex) {
        if (seen_vertex) throw ParseError("PLY has two vertex elements", line_no);
        if (!parse_size(tok[2], vertices)) throw ParseError("PLY bad vertex count", line_no);
        seen_vertex = true;
      } else if (!seen_vertex) {
        throw ParseError("PLY vertex element must come first", line_no);
      }
    } else if (tok[0] == "property") {
      if (in_vertex) {
        if (tok.size() != 3 || tok[1] == "list") throw ParseError("PLY unsupported vertex property", line_no);
        props.push_back(tok[2]);
      }
    } else if (tok[0] == "end_header") {
      break;
    } else {
      throw ParseError("PLY unknown header line", line_no);
    }
  }
  int ix = -1, iy = -1, iz = -1;
  for (std::size_t i = 0; i < props.size(); ++i) {
    if (props[i] == "x") ix = static_cast<int>(i);
    if (props[i] == "y") iy = static_cast<int>(i);
    if (props[i] == "z") iz = static_cast<int>(i);
  }
  if (ix < 0 || iy < 0 || iz < 0) throw ParseError("PLY lacks x/y/z properties", line_no);

  PointCloud cloud;
  cloud.points.reserve(vertices);
  std::vector<double> v(props.size());
  while (cloud.points.size() < vertices) {
    if (!next_line(text, pos, line)) throw ParseError("PLY vertex data truncated", line_no + 1);
    ++line_no;
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok.size() != props.size()) throw ParseError("PLY vertex has wrong property count", line_no);
    for (std::size_t k = 0; k < tok.size(); ++k) {
      if (!parse_double(tok[k], v[k])) throw ParseError("PLY vertex has a non-numeric value", line_no);
    }
    cloud.points.emplace_back(v[static_cast<std::size_t>(ix)], v[static_cast<std::size_t>(iy)],
                              v[static_cast<std::size_t>(iz)]);
  }
  return cloud;
}

PointCloud read_ply(const fs::path& path) { return parse_ply(read_file(path)); }

PointCloud read_cloud(const fs::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".ply" || ext == ".PLY") return read_ply(path);
  return read_pcd(path);
}

namespace {

std::string fmt_sig(double v) {
  if (v == 0.0) v = 0.0;  // drop negative zero
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

std::string format_tum_line(const TrajectoryEntry& entry) {
  Eigen::Quaterniond q = entry.pose.quaternion().normalized();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  char ts[64];
  std::snprintf(ts, sizeof(ts), "%.9f", entry.timestamp);
  const auto& t = entry.pose.translation;
  std::string line = ts;
  for (const double v : {t.x(), t.y(), t.z(), q.x(), q.y(), q.z(), q.w()}) {
    line += ' ';
    line += fmt_sig(v);
  }
  return line;
}

void write_tum(const fs::path& path, const Trajectory& trajectory) {
  std::string out;
  for (const auto& e : trajectory.entries) {
    out += format_tum_line(e);
    out += '\n';
  }
  write_file(path, out);
}

Pose parse_pose7(const std::vector<double>& v) {
  if (v.size() != 7) throw std::invalid_argument("pose needs 7 values: tx ty tz qx qy qz qw");
  const Eigen::Quaterniond q(v[6], v[3], v[4], v[5]);
  if (q.norm() < 1e-12) throw std::invalid_argument("pose quaternion has zero norm");
  return Pose::from_quaternion(q, Eigen::Vector3d(v[0], v[1], v[2]));
}

Trajectory parse_tum(const std::string& text) {
  Trajectory traj;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  std::string line;
  while (next_line(text, pos, line)) {
    ++line_no;
    const auto tok = split_ws(line);
    if (tok.empty() || tok[0][0] == '#') continue;
    if (tok.size() != 8) throw ParseError("TUM line needs 8 values", line_no);
    std::vector<double> v(8);
    for (std::size_t k = 0; k < 8; ++k) {
      if (!parse_double(tok[k], v[k])) throw ParseError("TUM line has a non-numeric value", line_no);
    }
    try {
      traj.entries.push_back({v[0], parse_pose7({v.begin() + 1, v.end()})});
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  traj.validate();
  return traj;
}

Trajectory read_tum(const fs::path& path) { return parse_tum(read_file(path)); }

void write_imu_csv(const fs::path& path, const std::vector<ImuSample>& samples) {
  std::string out = "t,wx,wy,wz,ax,ay,az\n";
  char buf[256];
  for (const auto& s : samples) {
    std::snprintf(buf, sizeof(buf), "%.9f,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.timestamp, s.gyro.x(),
                  s.gyro.y(), s.gyro.z(), s.accel.x(), s.accel.y(), s.accel.z());
    out += buf;
  }
  write_file(path, out);
}

std::vector<ImuSample> parse_imu_csv(const std::string& text) {
  std::size_t pos = 0;
  std::size_t line_no = 0;
  std::string line;
  if (!next_line(text, pos, line)) throw ParseError("IMU CSV is empty", 1);
  ++line_no;
  std::string header;
  for (const char c : line) {
    if (!std::isspace(static_cast<unsigned char>(c))) header += c;
  }
  if (header != "t,wx,wy,wz,ax,ay,az") throw ParseError("IMU CSV header must be t,wx,wy,wz,ax,ay,az", 1);

  std::vector<ImuSample> samples;
  while (next_line(text, pos, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> v;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
      const auto b = cell.find_first_not_of(" \t");
      const auto e = cell.find_last_not_of(" \t");
      double d = 0.0;
      if (b == std::string::npos || !parse_double(cell.substr(b, e - b + 1), d)) {
        throw ParseError("IMU CSV has a non-numeric cell", line_no);
      }
      v.push_back(d);
    }
    if (v.size() != 7) throw ParseError("IMU CSV row needs 7 values", line_no);
    samples.push_back({v[0], {v[1], v[2], v[3]}, {v[4], v[5], v[6]}});
    if (samples.size() > 1 && !(samples.back().timestamp > samples[samples.size() - 2].timestamp)) {
      throw Error(ErrorCode::kNonMonotonicTimestamps, "IMU CSV line " + std::to_string(line_no));
    }
  }
  return samples;
}

std::vector<ImuSample> read_imu_csv(const fs::path& path) { return parse_imu_csv(read_file(path)); }

}  // namespace maploc

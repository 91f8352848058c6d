#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "maploc/eval.hpp"
#include "maploc/factors.hpp"
#include "maploc/point_cloud.hpp"

namespace maploc {

enum class PcdPrecision { kFloat32, kFloat64 };

/// PCD v0.7, DATA ascii or binary, x/y/z required; normal_x/normal_y/normal_z picked up when
/// present. Malformed input throws ParseError with the line (header/ascii) or byte offset.
PointCloud read_pcd(const std::filesystem::path& path);
PointCloud parse_pcd(const std::string& bytes);

void write_pcd(const std::filesystem::path& path, const PointCloud& cloud,
               PcdPrecision precision = PcdPrecision::kFloat32, bool include_normals = false);
std::string format_pcd(const PointCloud& cloud, PcdPrecision precision = PcdPrecision::kFloat32,
                       bool include_normals = false);

/// ASCII PLY vertices (x, y, z).
PointCloud read_ply(const std::filesystem::path& path);
PointCloud parse_ply(const std::string& text);

/// Dispatches on the extension (.pcd or .ply).
PointCloud read_cloud(const std::filesystem::path& path);

/// One `timestamp tx ty tz qx qy qz qw` line per pose; timestamp with nine decimals, the rest
/// with nine significant digits, quaternion w-last with w >= 0.
std::string format_tum_line(const TrajectoryEntry& entry);
void write_tum(const std::filesystem::path& path, const Trajectory& trajectory);
Trajectory read_tum(const std::filesystem::path& path);
Trajectory parse_tum(const std::string& text);

/// CSV with header `t,wx,wy,wz,ax,ay,az`.
void write_imu_csv(const std::filesystem::path& path, const std::vector<ImuSample>& samples);
std::vector<ImuSample> read_imu_csv(const std::filesystem::path& path);
std::vector<ImuSample> parse_imu_csv(const std::string& text);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

/// Parses "tx ty tz qx qy qz qw".
Pose parse_pose7(const std::vector<double>& values);

}  // namespace maploc

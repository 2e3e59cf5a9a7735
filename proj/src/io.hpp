#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "geometry.hpp"
#include "scan.hpp"

namespace geost {

// Point-cloud files.
//   text:   "geopc v1 <count>" header, then <count> lines "x y z"
//   binary: magic "GPC1", uint64 LE count, count*3 doubles LE
void save_cloud_text(const PointCloud& cloud, const std::string& path);
void save_cloud_binary(const PointCloud& cloud, const std::string& path);
PointCloud load_cloud(const std::string& path);  // sniffs text vs binary

// Organized scan files.
//   "geoscan v1 <width> <height>" header, then width*height row-major lines
//   "x y z valid gt"; invalid pixels are written with zero coordinates.
void save_scan(const OrganizedScan& scan, const std::string& path);
OrganizedScan load_scan(const std::string& path);

// Score files.
//   "geoscore v1 <count>" header, optional "# key value" comment lines, then
//   <count> lines "<index> <score>". Indices refer to pixels for scan inputs
//   and to point indices for raw clouds.
struct ScoreFile {
    std::vector<std::uint32_t> indices;
    std::vector<double> scores;
    std::map<std::string, std::string> meta;  // from "# key value" lines
};

void save_scores(const ScoreFile& scores, const std::string& path);
ScoreFile load_scores(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace geost

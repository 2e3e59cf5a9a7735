#pragma once

#include <cstdint>
#include <vector>

#include "geometry.hpp"

namespace geost {

// Pixel-grid range scan. Row-major indexing, pixel (x, y) at y * width + x.
// Invalid pixels carry no coordinate; gt marks ground-truth anomaly pixels
// and is used by evaluation only.
struct OrganizedScan {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<Vec3> xyz;
    std::vector<std::uint8_t> valid;
    std::vector<std::uint8_t> gt;

    std::size_t num_pixels() const { return width * height; }
    std::size_t pixel(std::size_t x, std::size_t y) const { return y * width + x; }
};

// Valid pixels as a point cloud; pixel_of_point[i] is the linear pixel index
// the i-th point came from.
struct ScanCloud {
    PointCloud cloud;
    std::vector<std::uint32_t> pixel_of_point;
};

ScanCloud scan_to_cloud(const OrganizedScan& scan);

}  // namespace geost

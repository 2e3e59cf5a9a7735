#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "geometry.hpp"

namespace geost {

struct ShapeBank {
    std::vector<std::string> names;
    std::vector<PointCloud> models;
};

struct SceneConfig {
    std::size_t models_per_scene = 10;
    double placement_range = 3.0;
    std::size_t points_per_scene = 64000;
    std::uint64_t seed = 0;
};

// Deterministic bank of procedural primitive surfaces (boxes, spheres,
// ellipsoids, cylinders, tori, cone, capsule), >= 10 models with >= 4096
// surface points each.
ShapeBank synth_shape_bank(std::uint64_t seed);

// Random scene assembly: models drawn uniformly with replacement, longest
// bounding-box side scaled to 1, random per-axis rotations in [0, 2pi),
// translations uniform in [-r, r]^3, then farthest point sampling down to
// points_per_scene.
PointCloud generate_scene(const ShapeBank& bank, const SceneConfig& cfg);

}  // namespace geost

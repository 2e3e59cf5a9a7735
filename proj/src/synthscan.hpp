#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rng.hpp"
#include "scan.hpp"

namespace geost {

enum class SurfaceKind { plane, sinusoid, spherecap };

SurfaceKind surface_kind_from_name(const std::string& name);
std::string surface_kind_name(SurfaceKind kind);

enum class DefectKind { bump, dent, cut, contamination };

DefectKind defect_kind_from_name(const std::string& name);
std::string defect_kind_name(DefectKind kind);

// A radial defect on the height field. center (u, v) and radius are in
// surface coordinates (the grid spans [0,1] x [0,1]); amplitude is a
// positive displacement magnitude in length units.
struct DefectSpec {
    DefectKind kind = DefectKind::bump;
    double u = 0.5;
    double v = 0.5;
    double radius = 0.1;
    double amplitude = 0.0;
};

// Standard deviation of the per-coordinate Gaussian noise: 0.1% of the
// noiseless surface bounding-box diagonal. Deterministic per kind and grid.
double noise_sigma(SurfaceKind kind, std::size_t width, std::size_t height);

// Displacements at or below 3 sigma are clipped to zero, so the ground-truth
// mask is exactly the set of pixels that differ from the defect-free twin.
double noise_floor(SurfaceKind kind, std::size_t width, std::size_t height);

// Anomaly-free scan: height field plus noise, all pixels valid, empty gt.
OrganizedScan make_train_scan(SurfaceKind kind, std::size_t width,
                              std::size_t height, std::uint64_t seed);

// Same base surface and noise as make_train_scan(kind, ..., seed) with the
// defects applied on top. Rejects defects that leave [0,1]^2 or overlap.
OrganizedScan make_test_scan(SurfaceKind kind,
                             const std::vector<DefectSpec>& defects,
                             std::size_t width, std::size_t height,
                             std::uint64_t seed);

// Draws non-overlapping defect placements, cycling through the requested
// kinds. Amplitudes land in [5, 15] x the noise floor.
std::vector<DefectSpec> random_defects(SurfaceKind kind,
                                       const std::vector<DefectKind>& kinds,
                                       std::size_t count, std::size_t width,
                                       std::size_t height, Rng& rng);

}  // namespace geost

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "scan.hpp"

namespace geost {

struct AnomalyMap {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> score;
    std::vector<std::uint8_t> valid;

    std::size_t num_pixels() const { return width * height; }
};

// Dirichlet data: (pixel index, score). Seeded pixels keep their scores;
// every other valid pixel gets the discrete-harmonic value of the 4-neighbor
// Laplace equation on the valid-pixel domain (invalid pixels are excluded
// from the stencil). Duplicate seeds on one pixel are averaged.
// Errors if a connected valid region contains no seed.
AnomalyMap harmonic_interpolate(
    const OrganizedScan& scan,
    const std::vector<std::pair<std::uint32_t, double>>& seeds,
    double tol = 1e-9, std::size_t max_iter = 400000);

// 8-connectivity labeling; labels assigned in row-major discovery order,
// -1 marks background. Returns the number of regions.
std::size_t connected_components(const std::vector<std::uint8_t>& mask,
                                 std::size_t width, std::size_t height,
                                 std::vector<std::int32_t>& labels);

struct ProSample {
    double threshold = 0.0;
    double fpr = 0.0;
    double pro = 0.0;
};

struct ProCurve {
    std::vector<ProSample> samples;  // fpr non-decreasing
};

// Threshold sweep over the exact score multiset (descending). PRO(t) is the
// mean per-region overlap over all ground-truth regions pooled across scans;
// FPR(t) counts false-positive valid pixels against all anomaly-free valid
// pixels. Region sizes count valid ground-truth pixels.
ProCurve pro_curve(const std::vector<AnomalyMap>& maps,
                   const std::vector<OrganizedScan>& scans);

// Normalized trapezoidal area of PRO over FPR on [0, limit]. A curve ending
// before the limit is padded with its final PRO value.
double au_pro(const ProCurve& curve, double limit);

struct CategoryEval {
    std::string category;
    ProCurve curve;
};

void write_report_csv(const std::string& path,
                      const std::vector<CategoryEval>& results,
                      const std::vector<double>& limits);
void write_curves_csv(const std::string& path,
                      const std::vector<CategoryEval>& results);
nlohmann::json report_json(const std::vector<CategoryEval>& results,
                           const std::vector<double>& limits);

}  // namespace geost

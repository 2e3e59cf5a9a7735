#include "evalmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "error.hpp"

namespace geost {

namespace {

const int kOffsets4[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
const int kOffsets8[8][2] = {{1, 0},  {-1, 0}, {0, 1},  {0, -1},
                             {1, 1},  {1, -1}, {-1, 1}, {-1, -1}};

std::string format_value(const char* fmt, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return buf;
}

}  // namespace

std::size_t connected_components(const std::vector<std::uint8_t>& mask,
                                 std::size_t width, std::size_t height,
                                 std::vector<std::int32_t>& labels) {
    require(mask.size() == width * height, ErrorCode::invalid_argument,
            "connected_components: mask size mismatch");
    labels.assign(mask.size(), -1);
    std::int32_t next = 0;
    std::vector<std::size_t> queue;
    for (std::size_t start = 0; start < mask.size(); ++start) {
        if (!mask[start] || labels[start] >= 0)
            continue;
        const std::int32_t label = next++;
        labels[start] = label;
        queue.assign(1, start);
        while (!queue.empty()) {
            const std::size_t p = queue.back();
            queue.pop_back();
            const std::size_t px = p % width;
            const std::size_t py = p / width;
            for (const auto& off : kOffsets8) {
                const std::int64_t nx = static_cast<std::int64_t>(px) + off[0];
                const std::int64_t ny = static_cast<std::int64_t>(py) + off[1];
                if (nx < 0 || ny < 0 || nx >= static_cast<std::int64_t>(width) ||
                    ny >= static_cast<std::int64_t>(height))
                    continue;
                const std::size_t np = static_cast<std::size_t>(ny) * width +
                                       static_cast<std::size_t>(nx);
                if (mask[np] && labels[np] < 0) {
                    labels[np] = label;
                    queue.push_back(np);
                }
            }
        }
    }
    return static_cast<std::size_t>(next);
}

AnomalyMap harmonic_interpolate(
    const OrganizedScan& scan,
    const std::vector<std::pair<std::uint32_t, double>>& seeds, double tol,
    std::size_t max_iter) {
    const std::size_t n = scan.num_pixels();

    // Average duplicate seeds per pixel.
    std::vector<double> seed_sum(n, 0.0);
    std::vector<std::uint32_t> seed_count(n, 0);
    for (const auto& [pixel, score] : seeds) {
        require(pixel < n, ErrorCode::invalid_argument,
                "harmonic_interpolate: seed pixel out of range");
        require(scan.valid[pixel], ErrorCode::invalid_argument,
                "harmonic_interpolate: seed on invalid pixel");
        require(std::isfinite(score), ErrorCode::invalid_argument,
                "harmonic_interpolate: non-finite seed score");
        seed_sum[pixel] += score;
        seed_count[pixel] += 1;
    }

    // Solve-domain regions use 4-connectivity (the stencil connectivity).
    std::vector<std::int32_t> region(n, -1);
    std::int32_t next_region = 0;
    {
        std::vector<std::size_t> queue;
        for (std::size_t start = 0; start < n; ++start) {
            if (!scan.valid[start] || region[start] >= 0)
                continue;
            const std::int32_t label = next_region++;
            region[start] = label;
            queue.assign(1, start);
            while (!queue.empty()) {
                const std::size_t p = queue.back();
                queue.pop_back();
                const std::size_t px = p % scan.width;
                const std::size_t py = p / scan.width;
                for (const auto& off : kOffsets4) {
                    const std::int64_t nx = static_cast<std::int64_t>(px) + off[0];
                    const std::int64_t ny = static_cast<std::int64_t>(py) + off[1];
                    if (nx < 0 || ny < 0 ||
                        nx >= static_cast<std::int64_t>(scan.width) ||
                        ny >= static_cast<std::int64_t>(scan.height))
                        continue;
                    const std::size_t np = static_cast<std::size_t>(ny) * scan.width +
                                           static_cast<std::size_t>(nx);
                    if (scan.valid[np] && region[np] < 0) {
                        region[np] = label;
                        queue.push_back(np);
                    }
                }
            }
        }
    }

    // Per-region seed range; every region needs at least one seed.
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> region_lo(next_region, inf);
    std::vector<double> region_hi(next_region, -inf);
    for (std::size_t p = 0; p < n; ++p) {
        if (seed_count[p]) {
            const double v = seed_sum[p] / seed_count[p];
            region_lo[region[p]] = std::min(region_lo[region[p]], v);
            region_hi[region[p]] = std::max(region_hi[region[p]], v);
        }
    }
    for (std::int32_t r = 0; r < next_region; ++r) {
        if (region_lo[r] > region_hi[r]) {
            std::size_t sample = 0, size = 0;
            for (std::size_t p = 0; p < n; ++p)
                if (scan.valid[p] && region[p] == r) {
                    if (!size)
                        sample = p;
                    ++size;
                }
            raise(ErrorCode::invalid_argument,
                  "harmonic_interpolate: valid region " + std::to_string(r) +
                      " (size " + std::to_string(size) + ", first pixel (" +
                      std::to_string(sample % scan.width) + "," +
                      std::to_string(sample / scan.width) + ")) has no seed");
        }
    }

    AnomalyMap map;
    map.width = scan.width;
    map.height = scan.height;
    map.valid = scan.valid;
    map.score.assign(n, 0.0);

    struct FreePixel {
        std::uint32_t pixel;
        std::int32_t region;
        std::uint32_t nb[4];
        std::uint32_t nb_count;
    };
    std::vector<FreePixel> free_pixels;
    for (std::size_t p = 0; p < n; ++p) {
        if (!scan.valid[p])
            continue;
        if (seed_count[p]) {
            map.score[p] = seed_sum[p] / seed_count[p];
            continue;
        }
        FreePixel fp;
        fp.pixel = static_cast<std::uint32_t>(p);
        fp.region = region[p];
        fp.nb_count = 0;
        const std::size_t px = p % scan.width;
        const std::size_t py = p / scan.width;
        for (const auto& off : kOffsets4) {
            const std::int64_t nx = static_cast<std::int64_t>(px) + off[0];
            const std::int64_t ny = static_cast<std::int64_t>(py) + off[1];
            if (nx < 0 || ny < 0 || nx >= static_cast<std::int64_t>(scan.width) ||
                ny >= static_cast<std::int64_t>(scan.height))
                continue;
            const std::size_t np = static_cast<std::size_t>(ny) * scan.width +
                                   static_cast<std::size_t>(nx);
            if (scan.valid[np])
                fp.nb[fp.nb_count++] = static_cast<std::uint32_t>(np);
        }
        // A free pixel with no valid neighbor would be a seedless region.
        map.score[p] = 0.5 * (region_lo[fp.region] + region_hi[fp.region]);
        free_pixels.push_back(fp);
    }

    // Gauss-Seidel sweeps; each update is a clamped neighbor average, so the
    // discrete maximum principle holds without tolerance.
    std::size_t iter = 0;
    double residual = inf;
    while (residual >= tol) {
        require(iter < max_iter, ErrorCode::numeric,
                "harmonic_interpolate: Laplace solve did not converge");
        for (const FreePixel& fp : free_pixels) {
            double acc = 0.0;
            for (std::uint32_t j = 0; j < fp.nb_count; ++j)
                acc += map.score[fp.nb[j]];
            double v = acc / fp.nb_count;
            v = std::min(std::max(v, region_lo[fp.region]), region_hi[fp.region]);
            map.score[fp.pixel] = v;
        }
        ++iter;
        if (iter % 16 == 0 || iter >= max_iter) {
            residual = 0.0;
            for (const FreePixel& fp : free_pixels) {
                double acc = 0.0;
                for (std::uint32_t j = 0; j < fp.nb_count; ++j)
                    acc += map.score[fp.nb[j]];
                residual = std::max(residual,
                                    std::abs(map.score[fp.pixel] - acc / fp.nb_count));
            }
        }
        if (free_pixels.empty())
            break;
    }
    return map;
}

ProCurve pro_curve(const std::vector<AnomalyMap>& maps,
                   const std::vector<OrganizedScan>& scans) {
    require(maps.size() == scans.size() && !maps.empty(),
            ErrorCode::invalid_argument, "pro_curve: map/scan count mismatch");

    struct Entry {
        double score;
        std::int32_t region;  // -1 for anomaly-free pixels
    };
    std::vector<Entry> entries;
    std::vector<std::size_t> region_size;
    std::size_t total_neg = 0;

    for (std::size_t si = 0; si < scans.size(); ++si) {
        const OrganizedScan& scan = scans[si];
        const AnomalyMap& map = maps[si];
        require(map.width == scan.width && map.height == scan.height,
                ErrorCode::invalid_argument, "pro_curve: shape mismatch");
        require(map.valid == scan.valid, ErrorCode::invalid_argument,
                "pro_curve: validity mask mismatch");

        std::vector<std::int32_t> labels;
        const std::size_t local_regions =
            connected_components(scan.gt, scan.width, scan.height, labels);
        // Region sizes count valid ground-truth pixels; regions that are
        // entirely invalid cannot be scored and are dropped.
        std::vector<std::int32_t> remap(local_regions, -1);
        std::vector<std::size_t> local_size(local_regions, 0);
        for (std::size_t p = 0; p < scan.num_pixels(); ++p)
            if (scan.valid[p] && scan.gt[p])
                local_size[labels[p]] += 1;
        for (std::size_t r = 0; r < local_regions; ++r) {
            if (local_size[r] > 0) {
                remap[r] = static_cast<std::int32_t>(region_size.size());
                region_size.push_back(local_size[r]);
            }
        }
        for (std::size_t p = 0; p < scan.num_pixels(); ++p) {
            if (!scan.valid[p])
                continue;
            require(std::isfinite(map.score[p]), ErrorCode::invalid_argument,
                    "pro_curve: non-finite score on a valid pixel");
            Entry e;
            e.score = map.score[p];
            e.region = scan.gt[p] ? remap[labels[p]] : -1;
            if (e.region < 0 && scan.gt[p])
                continue;  // invalid-region gt pixel, unreachable by scores
            if (!scan.gt[p])
                ++total_neg;
            entries.push_back(e);
        }
    }

    require(!region_size.empty(), ErrorCode::invalid_argument,
            "pro_curve: no ground-truth regions");
    require(total_neg > 0, ErrorCode::invalid_argument,
            "pro_curve: no anomaly-free valid pixels");

    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.score > b.score; });

    ProCurve curve;
    curve.samples.push_back(
        {std::numeric_limits<double>::infinity(), 0.0, 0.0});

    const std::size_t num_regions = region_size.size();
    std::vector<std::size_t> hits(num_regions, 0);
    std::size_t fp = 0;
    std::size_t i = 0;
    while (i < entries.size()) {
        const double threshold = entries[i].score;
        while (i < entries.size() && entries[i].score == threshold) {
            if (entries[i].region >= 0)
                hits[entries[i].region] += 1;
            else
                ++fp;
            ++i;
        }
        double pro = 0.0;
        for (std::size_t r = 0; r < num_regions; ++r)
            pro += static_cast<double>(hits[r]) / static_cast<double>(region_size[r]);
        pro /= static_cast<double>(num_regions);
        const double fpr = static_cast<double>(fp) / static_cast<double>(total_neg);
        curve.samples.push_back({threshold, fpr, pro});
    }
    return curve;
}

double au_pro(const ProCurve& curve, double limit) {
    require(limit > 0.0 && limit <= 1.0, ErrorCode::invalid_argument,
            "au_pro: limit must be in (0, 1]");
    require(!curve.samples.empty(), ErrorCode::invalid_argument,
            "au_pro: empty curve");

    double area = 0.0;
    double prev_fpr = curve.samples.front().fpr;
    double prev_pro = curve.samples.front().pro;
    require(prev_fpr == 0.0, ErrorCode::invalid_argument,
            "au_pro: curve must start at fpr 0");
    for (std::size_t i = 1; i < curve.samples.size() && prev_fpr < limit; ++i) {
        const double fpr = curve.samples[i].fpr;
        const double pro = curve.samples[i].pro;
        require(fpr >= prev_fpr, ErrorCode::invalid_argument,
                "au_pro: fpr not monotone");
        if (fpr <= prev_fpr) {
            prev_pro = pro;
            continue;
        }
        const double fpr_c = std::min(fpr, limit);
        const double pro_c =
            prev_pro + (pro - prev_pro) * (fpr_c - prev_fpr) / (fpr - prev_fpr);
        area += (fpr_c - prev_fpr) * 0.5 * (prev_pro + pro_c);
        prev_fpr = fpr_c;
        prev_pro = pro_c;
    }
    if (prev_fpr < limit)
        area += (limit - prev_fpr) * prev_pro;  // pad with the final pro value
    return area / limit;
}

void write_report_csv(const std::string& path,
                      const std::vector<CategoryEval>& results,
                      const std::vector<double>& limits) {
    std::ofstream out(path);
    require(out.good(), ErrorCode::io, "cannot open for writing: " + path);
    out << "category,limit,au_pro\n";
    std::vector<double> mean(limits.size(), 0.0);
    for (const CategoryEval& r : results) {
        for (std::size_t li = 0; li < limits.size(); ++li) {
            const double v = au_pro(r.curve, limits[li]);
            mean[li] += v / static_cast<double>(results.size());
            out << r.category << ',' << format_value("%g", limits[li]) << ','
                << format_value("%.6f", v) << "\n";
        }
    }
    for (std::size_t li = 0; li < limits.size(); ++li)
        out << "mean," << format_value("%g", limits[li]) << ','
            << format_value("%.6f", mean[li]) << "\n";
    require(out.good(), ErrorCode::io, "write failed: " + path);
}

void write_curves_csv(const std::string& path,
                      const std::vector<CategoryEval>& results) {
    std::ofstream out(path);
    require(out.good(), ErrorCode::io, "cannot open for writing: " + path);
    out << "category,threshold,fpr,pro\n";
    for (const CategoryEval& r : results) {
        for (const ProSample& s : r.curve.samples) {
            out << r.category << ',';
            if (std::isinf(s.threshold))
                out << "inf";
            else
                out << format_value("%.9g", s.threshold);
            out << ',' << format_value("%.9g", s.fpr) << ','
                << format_value("%.9g", s.pro) << "\n";
        }
    }
    require(out.good(), ErrorCode::io, "write failed: " + path);
}

nlohmann::json report_json(const std::vector<CategoryEval>& results,
                           const std::vector<double>& limits) {
    nlohmann::json doc;
    doc["limits"] = limits;
    doc["categories"] = nlohmann::json::array();
    std::vector<double> mean(limits.size(), 0.0);
    for (const CategoryEval& r : results) {
        nlohmann::json entry;
        entry["category"] = r.category;
        nlohmann::json au;
        for (std::size_t li = 0; li < limits.size(); ++li) {
            const double v = au_pro(r.curve, limits[li]);
            mean[li] += v / static_cast<double>(results.size());
            au[format_value("%g", limits[li])] = v;
        }
        entry["au_pro"] = au;
        doc["categories"].push_back(entry);
    }
    nlohmann::json mj;
    for (std::size_t li = 0; li < limits.size(); ++li)
        mj[format_value("%g", limits[li])] = mean[li];
    doc["mean_au_pro"] = mj;
    return doc;
}

}  // namespace geost

#include "synthscan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "error.hpp"

namespace geost {

namespace {

constexpr double kPi = 3.141592653589793238462643383279;

double surface_height(SurfaceKind kind, double u, double v) {
    switch (kind) {
        case SurfaceKind::plane:
            return 0.2 * u + 0.1 * v;
        case SurfaceKind::sinusoid:
            return 0.08 * std::sin(2.0 * kPi * u) * std::sin(2.0 * kPi * v);
        case SurfaceKind::spherecap: {
            const double du = u - 0.5;
            const double dv = v - 0.5;
            const double radius = 1.2;
            return std::sqrt(radius * radius - du * du - dv * dv) - radius + 0.3;
        }
    }
    raise(ErrorCode::internal, "surface_height: unknown kind");
}

// Radial falloff: 1 at the center, 0 at the rim. The quartic keeps the
// above-noise-floor support close to the nominal radius across the
// amplitude range.
double falloff(double d, double radius) {
    const double t = d / radius;
    return 1.0 - t * t * t * t;
}

struct GridInfo {
    double du, dv;  // surface units per pixel step
};

GridInfo grid_info(std::size_t width, std::size_t height) {
    require(width >= 16 && height >= 16, ErrorCode::invalid_argument,
            "scan resolution must be at least 16x16");
    return {1.0 / static_cast<double>(width - 1),
            1.0 / static_cast<double>(height - 1)};
}

void validate_defects(const std::vector<DefectSpec>& defects) {
    for (std::size_t i = 0; i < defects.size(); ++i) {
        const DefectSpec& d = defects[i];
        require(d.radius > 0.0 && d.amplitude > 0.0, ErrorCode::invalid_argument,
                "defect radius and amplitude must be positive");
        require(d.u - d.radius >= 0.0 && d.u + d.radius <= 1.0 &&
                    d.v - d.radius >= 0.0 && d.v + d.radius <= 1.0,
                ErrorCode::invalid_argument,
                "defect support leaves the surface bounds");
        for (std::size_t j = 0; j < i; ++j) {
            const double dist = std::hypot(d.u - defects[j].u, d.v - defects[j].v);
            require(dist > d.radius + defects[j].radius,
                    ErrorCode::invalid_argument, "overlapping defect supports");
        }
    }
}

OrganizedScan make_base_scan(SurfaceKind kind, std::size_t width,
                             std::size_t height, std::uint64_t seed) {
    grid_info(width, height);
    OrganizedScan scan;
    scan.width = width;
    scan.height = height;
    scan.xyz.resize(width * height);
    scan.valid.assign(width * height, 1);
    scan.gt.assign(width * height, 0);

    const double sigma = noise_sigma(kind, width, height);
    Rng rng(Rng::derive(seed, 501));
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x) {
            const double u = static_cast<double>(x) / static_cast<double>(width - 1);
            const double v = static_cast<double>(y) / static_cast<double>(height - 1);
            Vec3 p{u, v, surface_height(kind, u, v)};
            for (int c = 0; c < 3; ++c)
                p[c] += sigma * rng.normal();
            scan.xyz[scan.pixel(x, y)] = p;
        }
    return scan;
}

}  // namespace

SurfaceKind surface_kind_from_name(const std::string& name) {
    if (name == "plane")
        return SurfaceKind::plane;
    if (name == "sinusoid")
        return SurfaceKind::sinusoid;
    if (name == "spherecap")
        return SurfaceKind::spherecap;
    raise(ErrorCode::invalid_argument, "unknown surface kind: " + name);
}

std::string surface_kind_name(SurfaceKind kind) {
    switch (kind) {
        case SurfaceKind::plane:
            return "plane";
        case SurfaceKind::sinusoid:
            return "sinusoid";
        case SurfaceKind::spherecap:
            return "spherecap";
    }
    raise(ErrorCode::internal, "surface_kind_name: unknown kind");
}

DefectKind defect_kind_from_name(const std::string& name) {
    if (name == "bump")
        return DefectKind::bump;
    if (name == "dent")
        return DefectKind::dent;
    if (name == "cut")
        return DefectKind::cut;
    if (name == "contamination")
        return DefectKind::contamination;
    raise(ErrorCode::invalid_argument, "unknown defect kind: " + name);
}

std::string defect_kind_name(DefectKind kind) {
    switch (kind) {
        case DefectKind::bump:
            return "bump";
        case DefectKind::dent:
            return "dent";
        case DefectKind::cut:
            return "cut";
        case DefectKind::contamination:
            return "contamination";
    }
    raise(ErrorCode::internal, "defect_kind_name: unknown kind");
}

double noise_sigma(SurfaceKind kind, std::size_t width, std::size_t height) {
    grid_info(width, height);
    double zlo = std::numeric_limits<double>::infinity();
    double zhi = -zlo;
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x) {
            const double z = surface_height(
                kind, static_cast<double>(x) / static_cast<double>(width - 1),
                static_cast<double>(y) / static_cast<double>(height - 1));
            zlo = std::min(zlo, z);
            zhi = std::max(zhi, z);
        }
    const double dz = zhi - zlo;
    return 0.001 * std::sqrt(1.0 + 1.0 + dz * dz);
}

double noise_floor(SurfaceKind kind, std::size_t width, std::size_t height) {
    return 3.0 * noise_sigma(kind, width, height);
}

OrganizedScan make_train_scan(SurfaceKind kind, std::size_t width,
                              std::size_t height, std::uint64_t seed) {
    return make_base_scan(kind, width, height, seed);
}

OrganizedScan make_test_scan(SurfaceKind kind,
                             const std::vector<DefectSpec>& defects,
                             std::size_t width, std::size_t height,
                             std::uint64_t seed) {
    validate_defects(defects);
    OrganizedScan scan = make_base_scan(kind, width, height, seed);
    const double floor = noise_floor(kind, width, height);
    // The cut core (material removed) is where the falloff exceeds 0.7, i.e.
    // d < radius * 0.3^(1/4); the remaining crater wall stays valid.
    const double cut_core = 0.7;

    for (const DefectSpec& spec : defects) {
        for (std::size_t y = 0; y < height; ++y)
            for (std::size_t x = 0; x < width; ++x) {
                const double u =
                    static_cast<double>(x) / static_cast<double>(width - 1);
                const double v =
                    static_cast<double>(y) / static_cast<double>(height - 1);
                const double d = std::hypot(u - spec.u, v - spec.v);
                if (d >= spec.radius)
                    continue;
                const std::size_t p = scan.pixel(x, y);
                const double f = falloff(d, spec.radius);
                double dz = 0.0;
                switch (spec.kind) {
                    case DefectKind::bump:
                        dz = spec.amplitude * f;
                        break;
                    case DefectKind::dent:
                        dz = -spec.amplitude * f;
                        break;
                    case DefectKind::cut:
                        if (f > cut_core) {
                            scan.valid[p] = 0;
                            scan.gt[p] = 0;
                            scan.xyz[p] = Vec3{0.0, 0.0, 0.0};
                            continue;
                        }
                        dz = -spec.amplitude * f;
                        break;
                    case DefectKind::contamination:
                        // Off-surface blob: a jump at the rim plus a cap.
                        dz = spec.amplitude * (0.3 + 0.7 * f);
                        break;
                }
                // Sub-noise-floor displacements are dropped so the gt mask is
                // exactly the set of pixels that differ from the twin.
                if (std::abs(dz) <= floor)
                    continue;
                scan.xyz[p][2] += dz;
                scan.gt[p] = 1;
            }
    }
    return scan;
}

std::vector<DefectSpec> random_defects(SurfaceKind kind,
                                       const std::vector<DefectKind>& kinds,
                                       std::size_t count, std::size_t width,
                                       std::size_t height, Rng& rng) {
    require(!kinds.empty(), ErrorCode::invalid_argument,
            "random_defects: no defect kinds");
    const double floor = noise_floor(kind, width, height);
    std::vector<DefectSpec> defects;
    for (std::size_t i = 0; i < count; ++i) {
        DefectSpec spec;
        spec.kind = kinds[i % kinds.size()];
        spec.radius = rng.uniform(0.08, 0.15);
        spec.amplitude = rng.uniform(5.0, 15.0) * floor;
        bool placed = false;
        for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
            spec.u = rng.uniform(spec.radius + 0.02, 1.0 - spec.radius - 0.02);
            spec.v = rng.uniform(spec.radius + 0.02, 1.0 - spec.radius - 0.02);
            placed = true;
            for (const DefectSpec& other : defects)
                if (std::hypot(spec.u - other.u, spec.v - other.v) <=
                    spec.radius + other.radius + 0.02)
                    placed = false;
        }
        require(placed, ErrorCode::invalid_argument,
                "random_defects: could not place non-overlapping defects");
        defects.push_back(spec);
    }
    return defects;
}

}  // namespace geost

#include "scene.hpp"

#include <cmath>

#include "error.hpp"
#include "rng.hpp"

namespace geost {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr std::size_t kModelPoints = 4096;

Vec3 sphere_dir(Rng& rng) {
    // Uniform direction via normalized gaussians.
    Vec3 v{rng.normal(), rng.normal(), rng.normal()};
    double n = norm(v);
    while (n < 1e-9) {
        v = {rng.normal(), rng.normal(), rng.normal()};
        n = norm(v);
    }
    return v * (1.0 / n);
}

PointCloud sample_box(Rng& rng, const Vec3& half) {
    // Area-weighted face sampling.
    const double ax = half[1] * half[2];
    const double ay = half[0] * half[2];
    const double az = half[0] * half[1];
    const double total = ax + ay + az;
    PointCloud out;
    out.points.reserve(kModelPoints);
    for (std::size_t i = 0; i < kModelPoints; ++i) {
        const double pick = rng.uniform() * total;
        const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
        const double u = rng.uniform(-1.0, 1.0);
        const double v = rng.uniform(-1.0, 1.0);
        Vec3 p;
        if (pick < ax)
            p = {sign * half[0], u * half[1], v * half[2]};
        else if (pick < ax + ay)
            p = {u * half[0], sign * half[1], v * half[2]};
        else
            p = {u * half[0], v * half[1], sign * half[2]};
        out.points.push_back(p);
    }
    return out;
}

PointCloud sample_ellipsoid(Rng& rng, const Vec3& radii) {
    PointCloud out;
    out.points.reserve(kModelPoints);
    for (std::size_t i = 0; i < kModelPoints; ++i) {
        const Vec3 d = sphere_dir(rng);
        out.points.push_back({d[0] * radii[0], d[1] * radii[1], d[2] * radii[2]});
    }
    return out;
}

PointCloud sample_cylinder(Rng& rng, double radius, double half_height,
                           bool caps) {
    const double side_area = kTwoPi * radius * 2.0 * half_height;
    const double cap_area = caps ? 2.0 * 3.14159265358979323846 * radius * radius : 0.0;
    PointCloud out;
    out.points.reserve(kModelPoints);
    for (std::size_t i = 0; i < kModelPoints; ++i) {
        const double pick = rng.uniform() * (side_area + cap_area);
        if (pick < side_area) {
            const double a = rng.uniform(0.0, kTwoPi);
            const double z = rng.uniform(-half_height, half_height);
            out.points.push_back({radius * std::cos(a), radius * std::sin(a), z});
        } else {
            const double a = rng.uniform(0.0, kTwoPi);
            const double r = radius * std::sqrt(rng.uniform());
            const double z = rng.uniform() < 0.5 ? -half_height : half_height;
            out.points.push_back({r * std::cos(a), r * std::sin(a), z});
        }
    }
    return out;
}

PointCloud sample_torus(Rng& rng, double major, double minor) {
    PointCloud out;
    out.points.reserve(kModelPoints);
    // Rejection on the tube angle keeps the sampling area-uniform.
    std::size_t produced = 0;
    while (produced < kModelPoints) {
        const double u = rng.uniform(0.0, kTwoPi);
        const double v = rng.uniform(0.0, kTwoPi);
        const double w = rng.uniform();
        if (w > (major + minor * std::cos(v)) / (major + minor))
            continue;
        const double rc = major + minor * std::cos(v);
        out.points.push_back({rc * std::cos(u), rc * std::sin(u),
                              minor * std::sin(v)});
        ++produced;
    }
    return out;
}

PointCloud sample_cone(Rng& rng, double radius, double height) {
    const double slant = std::sqrt(radius * radius + height * height);
    const double side_area = 3.14159265358979323846 * radius * slant;
    const double base_area = 3.14159265358979323846 * radius * radius;
    PointCloud out;
    out.points.reserve(kModelPoints);
    for (std::size_t i = 0; i < kModelPoints; ++i) {
        const double a = rng.uniform(0.0, kTwoPi);
        if (rng.uniform() * (side_area + base_area) < side_area) {
            const double t = std::sqrt(rng.uniform());  // uniform over the lateral area
            const double r = radius * t;
            out.points.push_back({r * std::cos(a), r * std::sin(a),
                                  height * (1.0 - t) - height * 0.5});
        } else {
            const double r = radius * std::sqrt(rng.uniform());
            out.points.push_back({r * std::cos(a), r * std::sin(a), -height * 0.5});
        }
    }
    return out;
}

PointCloud sample_capsule(Rng& rng, double radius, double half_height) {
    const double cyl_area = kTwoPi * radius * 2.0 * half_height;
    const double hemi_area = kTwoPi * radius * radius;  // per hemisphere
    const double total = cyl_area + 2.0 * hemi_area;
    PointCloud out;
    out.points.reserve(kModelPoints);
    for (std::size_t i = 0; i < kModelPoints; ++i) {
        const double pick = rng.uniform() * total;
        if (pick < cyl_area) {
            const double a = rng.uniform(0.0, kTwoPi);
            const double z = rng.uniform(-half_height, half_height);
            out.points.push_back({radius * std::cos(a), radius * std::sin(a), z});
        } else {
            const double sign = pick < cyl_area + hemi_area ? 1.0 : -1.0;
            Vec3 d = sphere_dir(rng);
            d[2] = std::abs(d[2]) * sign;
            out.points.push_back({radius * d[0], radius * d[1],
                                  radius * d[2] + sign * half_height});
        }
    }
    return out;
}

void bounding_box(const PointCloud& cloud, Vec3& lo, Vec3& hi) {
    lo = hi = cloud.points.at(0);
    for (const Vec3& p : cloud.points) {
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], p[a]);
            hi[a] = std::max(hi[a], p[a]);
        }
    }
}

}  // namespace

ShapeBank synth_shape_bank(std::uint64_t seed) {
    ShapeBank bank;
    auto add = [&](const std::string& name, PointCloud cloud) {
        bank.names.push_back(name);
        bank.models.push_back(std::move(cloud));
    };
    std::size_t stream = 0;
    auto next_rng = [&] { return Rng(Rng::derive(seed, stream++)); };

    {
        Rng rng = next_rng();
        add("cube", sample_box(rng, {0.5, 0.5, 0.5}));
    }
    {
        Rng rng = next_rng();
        add("slab", sample_box(rng, {0.25, 0.5, 1.0}));
    }
    {
        Rng rng = next_rng();
        add("sphere", sample_ellipsoid(rng, {1.0, 1.0, 1.0}));
    }
    {
        Rng rng = next_rng();
        add("ellipsoid", sample_ellipsoid(rng, {1.0, 0.6, 0.4}));
    }
    {
        Rng rng = next_rng();
        add("cylinder", sample_cylinder(rng, 0.3, 0.5, true));
    }
    {
        Rng rng = next_rng();
        add("rod", sample_cylinder(rng, 0.1, 1.0, true));
    }
    {
        Rng rng = next_rng();
        add("torus", sample_torus(rng, 1.0, 0.3));
    }
    {
        Rng rng = next_rng();
        add("ring", sample_torus(rng, 0.8, 0.15));
    }
    {
        Rng rng = next_rng();
        add("cone", sample_cone(rng, 0.5, 1.0));
    }
    {
        Rng rng = next_rng();
        add("capsule", sample_capsule(rng, 0.3, 0.5));
    }
    return bank;
}

PointCloud generate_scene(const ShapeBank& bank, const SceneConfig& cfg) {
    require(!bank.models.empty(), ErrorCode::invalid_argument,
            "generate_scene: empty shape bank");
    require(cfg.models_per_scene >= 1 && cfg.points_per_scene >= 1,
            ErrorCode::invalid_argument, "generate_scene: counts must be positive");
    require(cfg.placement_range > 0.0, ErrorCode::invalid_argument,
            "generate_scene: placement_range must be positive");

    Rng rng(cfg.seed);
    PointCloud pooled;
    for (std::size_t mi = 0; mi < cfg.models_per_scene; ++mi) {
        const PointCloud& model = bank.models[rng.index(bank.models.size())];
        const double ax = rng.uniform(0.0, kTwoPi);
        const double ay = rng.uniform(0.0, kTwoPi);
        const double az = rng.uniform(0.0, kTwoPi);
        const Vec3 t{rng.uniform(-cfg.placement_range, cfg.placement_range),
                     rng.uniform(-cfg.placement_range, cfg.placement_range),
                     rng.uniform(-cfg.placement_range, cfg.placement_range)};

        Vec3 lo, hi;
        bounding_box(model, lo, hi);
        const Vec3 center = (lo + hi) * 0.5;
        const double longest =
            std::max({hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]});
        require(longest > 0.0, ErrorCode::invalid_argument,
                "generate_scene: model with zero bounding box");
        const double scale = 1.0 / longest;

        const double cx = std::cos(ax), sx = std::sin(ax);
        const double cy = std::cos(ay), sy = std::sin(ay);
        const double cz = std::cos(az), sz = std::sin(az);
        for (const Vec3& raw : model.points) {
            Vec3 p = (raw - center) * scale;
            // Rz * Ry * Rx
            p = {p[0], cx * p[1] - sx * p[2], sx * p[1] + cx * p[2]};
            p = {cy * p[0] + sy * p[2], p[1], -sy * p[0] + cy * p[2]};
            p = {cz * p[0] - sz * p[1], sz * p[0] + cz * p[1], p[2]};
            pooled.points.push_back(p + t);
        }
    }

    require(cfg.points_per_scene <= pooled.size(), ErrorCode::invalid_argument,
            "generate_scene: points_per_scene exceeds pooled point count");
    const auto picks =
        farthest_point_sample(pooled, cfg.points_per_scene, rng.next_u64());
    return select_points(pooled, picks);
}

}  // namespace geost

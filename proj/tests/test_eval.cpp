#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <vector>

#include "error.hpp"
#include "evalmetrics.hpp"
#include "rng.hpp"
#include "scan.hpp"

using namespace geost;

namespace {

OrganizedScan blank_scan(std::size_t w, std::size_t h) {
    OrganizedScan scan;
    scan.width = w;
    scan.height = h;
    scan.xyz.assign(w * h, Vec3{0, 0, 0});
    scan.valid.assign(w * h, 1);
    scan.gt.assign(w * h, 0);
    return scan;
}

// Dense direct solve of the same Laplace system (Gaussian elimination with
// partial pivoting); practical up to a few hundred unknowns.
std::vector<double> dense_laplace(const OrganizedScan& scan,
                                  const std::map<std::size_t, double>& seeds) {
    const std::size_t n = scan.num_pixels();
    std::vector<std::ptrdiff_t> unknown_of(n, -1);
    std::vector<std::size_t> unknowns;
    for (std::size_t p = 0; p < n; ++p)
        if (scan.valid[p] && !seeds.count(p)) {
            unknown_of[p] = std::ptrdiff_t(unknowns.size());
            unknowns.push_back(p);
        }
    const std::size_t m = unknowns.size();
    std::vector<std::vector<double>> a(m, std::vector<double>(m + 1, 0.0));
    const int off[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    for (std::size_t r = 0; r < m; ++r) {
        const std::size_t p = unknowns[r];
        const std::ptrdiff_t px = p % scan.width, py = p / scan.width;
        int deg = 0;
        for (const auto& o : off) {
            const std::ptrdiff_t nx = px + o[0], ny = py + o[1];
            if (nx < 0 || ny < 0 || nx >= std::ptrdiff_t(scan.width) ||
                ny >= std::ptrdiff_t(scan.height))
                continue;
            const std::size_t np = std::size_t(ny) * scan.width + std::size_t(nx);
            if (!scan.valid[np])
                continue;
            ++deg;
            if (unknown_of[np] >= 0)
                a[r][std::size_t(unknown_of[np])] -= 1.0;
            else
                a[r][m] += seeds.at(np);
        }
        a[r][r] += double(deg);
    }
    // Gaussian elimination.
    for (std::size_t col = 0; col < m; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < m; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col]))
                piv = r;
        std::swap(a[col], a[piv]);
        for (std::size_t r = col + 1; r < m; ++r) {
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c <= m; ++c)
                a[r][c] -= f * a[col][c];
        }
    }
    std::vector<double> x(m, 0.0);
    for (std::size_t ri = m; ri-- > 0;) {
        double acc = a[ri][m];
        for (std::size_t c = ri + 1; c < m; ++c)
            acc -= a[ri][c] * x[c];
        x[ri] = acc / a[ri][ri];
    }
    std::vector<double> full(n, 0.0);
    for (const auto& [p, v] : seeds)
        full[p] = v;
    for (std::size_t r = 0; r < m; ++r)
        full[unknowns[r]] = x[r];
    return full;
}

// Independent flood fill (stack-based, 8-connectivity).
std::size_t flood_fill(const std::vector<std::uint8_t>& mask, std::size_t w,
                       std::size_t h, std::vector<std::int32_t>& labels) {
    labels.assign(w * h, -1);
    std::int32_t next = 0;
    for (std::size_t s = 0; s < mask.size(); ++s) {
        if (!mask[s] || labels[s] >= 0)
            continue;
        std::vector<std::size_t> stack{s};
        labels[s] = next;
        while (!stack.empty()) {
            const std::size_t p = stack.back();
            stack.pop_back();
            const std::ptrdiff_t px = p % w, py = p / w;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const std::ptrdiff_t nx = px + dx, ny = py + dy;
                    if (nx < 0 || ny < 0 || nx >= std::ptrdiff_t(w) ||
                        ny >= std::ptrdiff_t(h))
                        continue;
                    const std::size_t np = std::size_t(ny) * w + std::size_t(nx);
                    if (mask[np] && labels[np] < 0) {
                        labels[np] = next;
                        stack.push_back(np);
                    }
                }
        }
        ++next;
    }
    return std::size_t(next);
}

// Brute-force PRO/FPR at every distinct threshold.
std::vector<ProSample> brute_pro(const std::vector<AnomalyMap>& maps,
                                 const std::vector<OrganizedScan>& scans) {
    struct Region {
        std::set<std::size_t> pixels;  // global (scan, pixel) keys
    };
    std::vector<Region> regions;
    std::vector<double> all_scores;
    std::size_t total_neg = 0;
    for (std::size_t si = 0; si < scans.size(); ++si) {
        std::vector<std::int32_t> labels;
        const std::size_t cnt =
            flood_fill(scans[si].gt, scans[si].width, scans[si].height, labels);
        std::vector<Region> local(cnt);
        for (std::size_t p = 0; p < scans[si].num_pixels(); ++p) {
            if (!scans[si].valid[p])
                continue;
            all_scores.push_back(maps[si].score[p]);
            if (scans[si].gt[p])
                local[labels[p]].pixels.insert(si * 100000 + p);
            else
                ++total_neg;
        }
        for (auto& r : local)
            if (!r.pixels.empty())
                regions.push_back(std::move(r));
    }
    std::sort(all_scores.begin(), all_scores.end(), std::greater<double>());
    all_scores.erase(std::unique(all_scores.begin(), all_scores.end()),
                     all_scores.end());

    std::vector<ProSample> out;
    for (const double t : all_scores) {
        double pro = 0.0;
        for (const Region& r : regions) {
            std::size_t hit = 0;
            for (const std::size_t key : r.pixels) {
                const std::size_t si = key / 100000, p = key % 100000;
                if (maps[si].score[p] >= t)
                    ++hit;
            }
            pro += double(hit) / double(r.pixels.size());
        }
        pro /= double(regions.size());
        std::size_t fp = 0;
        for (std::size_t si = 0; si < scans.size(); ++si)
            for (std::size_t p = 0; p < scans[si].num_pixels(); ++p)
                if (scans[si].valid[p] && !scans[si].gt[p] &&
                    maps[si].score[p] >= t)
                    ++fp;
        out.push_back({t, double(fp) / double(total_neg), pro});
    }
    return out;
}

AnomalyMap map_of(const OrganizedScan& scan, const std::vector<double>& scores) {
    AnomalyMap m;
    m.width = scan.width;
    m.height = scan.height;
    m.valid = scan.valid;
    m.score = scores;
    return m;
}

}  // namespace

TEST_CASE("fully seeded interpolation is the identity") {
    const OrganizedScan scan = blank_scan(4, 4);
    std::vector<std::pair<std::uint32_t, double>> seeds;
    for (std::uint32_t p = 0; p < 16; ++p)
        seeds.emplace_back(p, double(p) * 0.5);
    const AnomalyMap m = harmonic_interpolate(scan, seeds);
    for (std::size_t p = 0; p < 16; ++p)
        CHECK(m.score[p] == double(p) * 0.5);
}

TEST_CASE("two seeds on a 1D strip give the linear ramp") {
    const std::size_t w = 16;
    const OrganizedScan scan = blank_scan(w, 1);
    const AnomalyMap m = harmonic_interpolate(scan, {{0, 0.0}, {w - 1, 1.0}});
    for (std::size_t x = 0; x < w; ++x)
        CHECK(std::abs(m.score[x] - double(x) / double(w - 1)) <= 1e-6);
}

TEST_CASE("interpolation matches a dense linear solve") {
    OrganizedScan scan = blank_scan(16, 16);
    // Punch a few invalid pixels (keeping the domain connected).
    for (const std::size_t p : {35u, 36u, 37u, 100u, 200u})
        scan.valid[p] = 0;
    Rng rng(5);
    std::map<std::size_t, double> seed_map;
    while (seed_map.size() < 12) {
        const std::size_t p = rng.index(scan.num_pixels());
        if (scan.valid[p])
            seed_map[p] = rng.uniform(0.0, 2.0);
    }
    std::vector<std::pair<std::uint32_t, double>> seeds;
    for (const auto& [p, v] : seed_map)
        seeds.emplace_back(std::uint32_t(p), v);

    const AnomalyMap m = harmonic_interpolate(scan, seeds, 1e-8);
    const std::vector<double> expect = dense_laplace(scan, seed_map);
    for (std::size_t p = 0; p < scan.num_pixels(); ++p)
        if (scan.valid[p])
            CHECK(std::abs(m.score[p] - expect[p]) <= 1e-5);
}

TEST_CASE("interpolation satisfies mean-value and maximum principles") {
    const OrganizedScan scan = blank_scan(32, 32);
    Rng rng(6);
    std::vector<std::pair<std::uint32_t, double>> seeds;
    std::set<std::uint32_t> seeded;
    for (int i = 0; i < 20; ++i) {
        const std::uint32_t p = std::uint32_t(rng.index(scan.num_pixels()));
        seeds.emplace_back(p, rng.uniform(-1.0, 3.0));
        seeded.insert(p);
    }
    const AnomalyMap m = harmonic_interpolate(scan, seeds);

    double lo = 1e300, hi = -1e300;
    std::map<std::uint32_t, std::pair<double, int>> acc;
    for (const auto& [p, v] : seeds) {
        acc[p].first += v;
        acc[p].second += 1;
    }
    for (const auto& [p, sv] : acc) {
        lo = std::min(lo, sv.first / sv.second);
        hi = std::max(hi, sv.first / sv.second);
    }
    for (std::size_t y = 0; y < 32; ++y)
        for (std::size_t x = 0; x < 32; ++x) {
            const std::size_t p = y * 32 + x;
            CHECK(m.score[p] >= lo);  // exact maximum principle
            CHECK(m.score[p] <= hi);
            if (seeded.count(std::uint32_t(p)))
                continue;
            double nb = 0.0;
            int deg = 0;
            if (x + 1 < 32) {
                nb += m.score[p + 1];
                ++deg;
            }
            if (x > 0) {
                nb += m.score[p - 1];
                ++deg;
            }
            if (y + 1 < 32) {
                nb += m.score[p + 32];
                ++deg;
            }
            if (y > 0) {
                nb += m.score[p - 32];
                ++deg;
            }
            CHECK(std::abs(m.score[p] - nb / deg) <= 1e-5);
        }
}

TEST_CASE("a valid region without any seed is an error") {
    OrganizedScan scan = blank_scan(8, 8);
    for (std::size_t y = 0; y < 8; ++y)
        scan.valid[y * 8 + 4] = 0;  // split into left and right halves
    CHECK_THROWS_AS(harmonic_interpolate(scan, {{0, 1.0}}), Error);
    // One seed per region is enough.
    const AnomalyMap m = harmonic_interpolate(scan, {{0, 1.0}, {7, 2.0}});
    CHECK(m.score[0] == 1.0);
    CHECK(m.score[7] == 2.0);
}

TEST_CASE("duplicate seeds on one pixel are averaged") {
    const OrganizedScan scan = blank_scan(4, 1);
    const AnomalyMap m =
        harmonic_interpolate(scan, {{0, 1.0}, {0, 3.0}, {3, 2.0}});
    CHECK(m.score[0] == 2.0);
}

TEST_CASE("connected components: trivial cases") {
    std::vector<std::int32_t> labels;
    CHECK(connected_components(std::vector<std::uint8_t>(12, 0), 4, 3, labels) == 0);
    // Two diagonal-touching pixels form one region under 8-connectivity.
    std::vector<std::uint8_t> diag(9, 0);
    diag[0] = 1;
    diag[4] = 1;
    CHECK(connected_components(diag, 3, 3, labels) == 1);
    CHECK(labels[0] == labels[4]);
}

TEST_CASE("connected components match the flood-fill oracle") {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t w = 5 + rng.index(12), h = 5 + rng.index(12);
        std::vector<std::uint8_t> mask(w * h);
        for (auto& v : mask)
            v = rng.uniform() < 0.4 ? 1 : 0;
        std::vector<std::int32_t> got, expect;
        CHECK(connected_components(mask, w, h, got) == flood_fill(mask, w, h, expect));
        CHECK(got == expect);  // row-major discovery order in both
    }
}

TEST_CASE("perfect and inverted scores hit the PRO extremes") {
    OrganizedScan scan = blank_scan(8, 8);
    for (const std::size_t p : {9u, 10u, 17u, 50u})
        scan.gt[p] = 1;
    std::vector<double> perfect(64, 0.0), inverted(64, 1.0);
    for (const std::size_t p : {9u, 10u, 17u, 50u}) {
        perfect[p] = 1.0;
        inverted[p] = 0.0;
    }
    {
        const ProCurve c = pro_curve({map_of(scan, perfect)}, {scan});
        bool found = false;
        for (const ProSample& s : c.samples)
            found = found || (s.fpr == 0.0 && s.pro == 1.0);
        CHECK(found);
        CHECK(au_pro(c, 0.3) == 1.0);
    }
    {
        const ProCurve c = pro_curve({map_of(scan, inverted)}, {scan});
        for (const ProSample& s : c.samples)
            if (s.fpr == 0.0)
                CHECK(s.pro == 0.0);
    }
}

TEST_CASE("pro curve matches exhaustive threshold enumeration") {
    Rng rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<OrganizedScan> scans;
        std::vector<AnomalyMap> maps;
        for (int s = 0; s < 2; ++s) {
            OrganizedScan scan = blank_scan(8, 8);
            for (auto& v : scan.gt)
                v = rng.uniform() < 0.2 ? 1 : 0;
            for (auto& v : scan.valid)
                v = rng.uniform() < 0.9 ? 1 : 0;
            std::vector<double> scores(64);
            for (auto& v : scores)
                v = double(rng.index(5));  // deliberate ties
            scans.push_back(scan);
            maps.push_back(map_of(scan, scores));
        }
        bool has_region = false, has_neg = false;
        for (const auto& scan : scans)
            for (std::size_t p = 0; p < scan.num_pixels(); ++p) {
                if (scan.valid[p] && scan.gt[p])
                    has_region = true;
                if (scan.valid[p] && !scan.gt[p])
                    has_neg = true;
            }
        if (!has_region || !has_neg)
            continue;

        const ProCurve curve = pro_curve(maps, scans);
        const std::vector<ProSample> expect = brute_pro(maps, scans);
        REQUIRE(curve.samples.size() == expect.size() + 1);
        CHECK(curve.samples[0].fpr == 0.0);
        CHECK(curve.samples[0].pro == 0.0);
        for (std::size_t i = 0; i < expect.size(); ++i) {
            CHECK(curve.samples[i + 1].threshold == expect[i].threshold);
            CHECK(curve.samples[i + 1].fpr == expect[i].fpr);
            CHECK(curve.samples[i + 1].pro == doctest::Approx(expect[i].pro).epsilon(1e-12));
        }
    }
}

TEST_CASE("au_pro: analytic shapes") {
    ProCurve flat;  // pro == 1 everywhere
    flat.samples = {{1e308, 0.0, 0.0}, {0.5, 0.0, 1.0}, {0.1, 1.0, 1.0}};
    CHECK(au_pro(flat, 0.3) == doctest::Approx(1.0).epsilon(1e-12));

    ProCurve diag;  // pro == fpr (random scoring)
    diag.samples.push_back({1e308, 0.0, 0.0});
    for (int i = 1; i <= 100; ++i)
        diag.samples.push_back({1.0 - i * 0.01, i * 0.01, i * 0.01});
    CHECK(au_pro(diag, 0.3) == doctest::Approx(0.15).epsilon(1e-9));
    CHECK(au_pro(diag, 1.0) == doctest::Approx(0.5).epsilon(1e-9));

    ProCurve ends_early;  // stops at fpr 0.2, pads with final pro 0.8
    ends_early.samples = {{1e308, 0.0, 0.0}, {2.0, 0.2, 0.8}};
    const double expect = (0.2 * 0.4 + 0.1 * 0.8) / 0.3;
    CHECK(au_pro(ends_early, 0.3) == doctest::Approx(expect).epsilon(1e-12));

    CHECK_THROWS_AS(au_pro(flat, 0.0), Error);
    CHECK_THROWS_AS(au_pro(flat, 1.5), Error);
}

TEST_CASE("au_pro is invariant under strictly monotone score transforms") {
    Rng rng(9);
    OrganizedScan scan = blank_scan(10, 10);
    for (std::size_t p = 30; p < 34; ++p)
        scan.gt[p] = 1;
    std::vector<double> scores(100);
    for (auto& v : scores)
        v = rng.uniform(0.1, 2.0);
    std::vector<double> cubed = scores;
    for (auto& v : cubed)
        v = v * v * v;

    const ProCurve a = pro_curve({map_of(scan, scores)}, {scan});
    const ProCurve b = pro_curve({map_of(scan, cubed)}, {scan});
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].fpr == b.samples[i].fpr);
        CHECK(a.samples[i].pro == b.samples[i].pro);
    }
    CHECK(au_pro(a, 0.3) == au_pro(b, 0.3));
}

TEST_CASE("report CSV is stable byte for byte") {
    ProCurve c1;
    c1.samples = {{1e308, 0.0, 0.0}, {0.7, 0.0, 0.5}, {0.2, 1.0, 1.0}};
    ProCurve c2;
    c2.samples = {{1e308, 0.0, 0.0}, {0.9, 0.5, 0.25}, {0.3, 1.0, 1.0}};
    const std::vector<CategoryEval> results{{"alpha", c1}, {"beta", c2}};
    const std::vector<double> limits{0.3, 1.0};

    const std::string dir =
        (std::filesystem::temp_directory_path() /
         ("geost_eval_" + std::to_string(::getpid()))).string();
    std::filesystem::create_directories(dir);
    write_report_csv(dir + "/report.csv", results, limits);
    std::ifstream in(dir + "/report.csv", std::ios::binary);
    const std::string got(std::istreambuf_iterator<char>(in),
                          std::istreambuf_iterator<char>{});
    const std::string expect =
        "category,limit,au_pro\n"
        "alpha,0.3,0.575000\n"
        "alpha,1,0.750000\n"
        "beta,0.3,0.075000\n"
        "beta,1,0.375000\n"
        "mean,0.3,0.325000\n"
        "mean,1,0.562500\n";
    CHECK(got == expect);

    const nlohmann::json doc = report_json(results, limits);
    CHECK(doc.at("categories").size() == 2);
    CHECK(doc.at("mean_au_pro").at("0.3").get<double>() ==
          doctest::Approx((au_pro(c1, 0.3) + au_pro(c2, 0.3)) / 2));
    std::filesystem::remove_all(dir);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "error.hpp"
#include "geometry.hpp"
#include "rng.hpp"

using namespace geost;

namespace {

PointCloud random_cloud(std::size_t n, std::uint64_t seed, double span = 1.0) {
    Rng rng(seed);
    PointCloud cloud;
    cloud.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        cloud.points.push_back({rng.uniform(-span, span), rng.uniform(-span, span),
                                rng.uniform(-span, span)});
    return cloud;
}

// All-pairs kNN with the same (distance, index) ordering contract.
std::vector<std::uint32_t> brute_knn(const PointCloud& cloud, std::size_t i,
                                     std::size_t k) {
    std::vector<std::pair<double, std::uint32_t>> all;
    for (std::size_t j = 0; j < cloud.size(); ++j) {
        if (j == i)
            continue;
        all.emplace_back(squared_norm(cloud.points[i] - cloud.points[j]),
                         static_cast<std::uint32_t>(j));
    }
    std::sort(all.begin(), all.end());
    std::vector<std::uint32_t> out;
    for (std::size_t j = 0; j < k; ++j)
        out.push_back(all[j].second);
    return out;
}

std::vector<std::uint32_t> brute_fps(const PointCloud& cloud, std::size_t n,
                                     std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::uint32_t> sel{static_cast<std::uint32_t>(rng.index(cloud.size()))};
    while (sel.size() < n) {
        std::size_t best = 0;
        double best_d = -1.0;
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            double d = std::numeric_limits<double>::infinity();
            for (std::uint32_t s : sel)
                d = std::min(d, squared_norm(cloud.points[i] - cloud.points[s]));
            if (d > best_d) {
                best_d = d;
                best = i;
            }
        }
        sel.push_back(static_cast<std::uint32_t>(best));
    }
    return sel;
}

}  // namespace

TEST_CASE("knn graph matches the all-pairs oracle") {
    for (const std::size_t n : {32, 257, 1024}) {
        for (const std::size_t k : {1, 4, 9}) {
            const PointCloud cloud = random_cloud(n, 1000 + n + k);
            const NeighborGraph graph = build_knn_graph(cloud, k, 2);
            for (std::size_t i = 0; i < n; ++i) {
                const auto expect = brute_knn(cloud, i, k);
                for (std::size_t j = 0; j < k; ++j) {
                    CHECK(graph.neighbors_of(i)[j] == expect[j]);
                    CHECK(graph.distances_of(i)[j] ==
                          doctest::Approx(norm(cloud.points[i] -
                                               cloud.points[expect[j]]))
                              .epsilon(1e-12));
                }
            }
        }
    }
}

TEST_CASE("knn tie-break is ascending index on a regular grid") {
    // Every interior grid point has 6 equidistant axis neighbors; k=4 must
    // pick the 4 with the lowest indices.
    PointCloud cloud;
    for (int z = 0; z < 5; ++z)
        for (int y = 0; y < 5; ++y)
            for (int x = 0; x < 5; ++x)
                cloud.points.push_back({double(x), double(y), double(z)});
    const std::size_t k = 4;
    const NeighborGraph graph = build_knn_graph(cloud, k, 1);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto expect = brute_knn(cloud, i, k);
        for (std::size_t j = 0; j < k; ++j)
            CHECK(graph.neighbors_of(i)[j] == expect[j]);
    }
}

TEST_CASE("knn rejects degenerate input") {
    const PointCloud cloud = random_cloud(8, 3);
    CHECK_THROWS_AS(build_knn_graph(cloud, 8, 1), Error);
    CHECK_THROWS_AS(build_knn_graph(cloud, 0, 1), Error);
    PointCloud bad = cloud;
    bad.points[3][1] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(build_knn_graph(bad, 2, 1), Error);
}

TEST_CASE("knn graph is independent of the thread count") {
    const PointCloud cloud = random_cloud(777, 42);
    const NeighborGraph a = build_knn_graph(cloud, 7, 1);
    const NeighborGraph b = build_knn_graph(cloud, 7, 8);
    CHECK(a.neighbors == b.neighbors);
    CHECK(a.distances == b.distances);
}

TEST_CASE("farthest point sampling matches the greedy oracle") {
    for (const std::uint64_t seed : {1u, 2u, 3u, 4u}) {
        const PointCloud cloud = random_cloud(200, 50 + seed);
        const auto got = farthest_point_sample(cloud, 40, seed);
        const auto expect = brute_fps(cloud, 40, seed);
        CHECK(got == expect);
    }
}

TEST_CASE("farthest point sampling covers the whole cloud at n = size") {
    const PointCloud cloud = random_cloud(64, 9);
    const auto got = farthest_point_sample(cloud, 64, 9);
    std::set<std::uint32_t> unique(got.begin(), got.end());
    CHECK(unique.size() == 64);
    CHECK_THROWS_AS(farthest_point_sample(cloud, 65, 9), Error);
}

TEST_CASE("receptive field matches a BFS closure oracle") {
    const PointCloud cloud = random_cloud(300, 77);
    const NeighborGraph graph = build_knn_graph(cloud, 5, 1);
    for (const std::size_t center : {0u, 13u, 299u}) {
        for (const std::size_t hops : {0u, 1u, 3u, 8u}) {
            // Independent closure: repeated set expansion.
            std::set<std::uint32_t> members{static_cast<std::uint32_t>(center)};
            for (std::size_t h = 0; h < hops; ++h) {
                std::set<std::uint32_t> next = members;
                for (std::uint32_t q : members)
                    for (std::size_t j = 0; j < graph.k; ++j)
                        next.insert(graph.neighbors_of(q)[j]);
                members.swap(next);
            }
            const ReceptiveField field = receptive_field(graph, center, hops);
            const std::vector<std::uint32_t> expect(members.begin(), members.end());
            CHECK(field.member_indices == expect);
        }
    }
}

TEST_CASE("receptive field hop 0 is the center itself") {
    const PointCloud cloud = random_cloud(32, 5);
    const NeighborGraph graph = build_knn_graph(cloud, 3, 1);
    const ReceptiveField field = receptive_field(graph, 7, 0);
    CHECK(field.member_indices == std::vector<std::uint32_t>{7});
}

TEST_CASE("scaling factor is 1-homogeneous in the coordinates") {
    const std::vector<PointCloud> clouds{random_cloud(150, 11),
                                         random_cloud(90, 12)};
    const double s = scaling_factor(clouds, 4, 1);
    for (const double c : {0.25, 3.7, 1234.5}) {
        std::vector<PointCloud> scaled;
        for (const PointCloud& cloud : clouds) {
            PointCloud sc;
            for (const Vec3& p : cloud.points)
                sc.points.push_back(p * c);
            scaled.push_back(sc);
        }
        const double ss = scaling_factor(scaled, 4, 1);
        CHECK(std::abs(ss - c * s) <= 1e-9 * c * s);
    }
}

TEST_CASE("scaling factor is invariant under rigid motion") {
    const std::vector<PointCloud> clouds{random_cloud(120, 21)};
    const double s = scaling_factor(clouds, 3, 1);
    const double a = 0.83;
    PointCloud moved;
    for (const Vec3& p : clouds[0].points)
        moved.points.push_back({std::cos(a) * p[0] - std::sin(a) * p[1] + 10.0,
                                std::sin(a) * p[0] + std::cos(a) * p[1] - 4.0,
                                p[2] + 2.5});
    const double ss = scaling_factor({moved}, 3, 1);
    CHECK(ss == doctest::Approx(s).epsilon(1e-12));
}

TEST_CASE("scaling factor rejects degenerate datasets") {
    CHECK_THROWS_AS(scaling_factor({}, 3, 1), Error);
    PointCloud dup;
    for (int i = 0; i < 8; ++i)
        dup.points.push_back({1.0, 2.0, 3.0});
    CHECK_THROWS_AS(scaling_factor({dup}, 3, 1), Error);
}

TEST_CASE("normalize_cloud divides by the scale") {
    const PointCloud cloud = random_cloud(10, 31);
    const PointCloud out = normalize_cloud(cloud, 4.0);
    for (std::size_t i = 0; i < cloud.size(); ++i)
        for (int c = 0; c < 3; ++c)
            CHECK(out.points[i][c] == cloud.points[i][c] * 0.25);
    CHECK_THROWS_AS(normalize_cloud(cloud, 0.0), Error);
    CHECK_THROWS_AS(normalize_cloud(cloud, -1.0), Error);
}

TEST_CASE("center_receptive_field subtracts the member mean") {
    const PointCloud cloud = random_cloud(50, 61);
    const NeighborGraph graph = build_knn_graph(cloud, 4, 1);
    const ReceptiveField field = receptive_field(graph, 10, 2);
    const auto centered = center_receptive_field(cloud, field);
    Vec3 sum{0, 0, 0};
    for (const Vec3& p : centered)
        sum = sum + p;
    for (int c = 0; c < 3; ++c)
        CHECK(std::abs(sum[c]) <= 1e-12 * centered.size());
}

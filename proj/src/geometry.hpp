#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace geost {

using Vec3 = std::array<double, 3>;

inline Vec3 operator-(const Vec3& a, const Vec3& b) {
    return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
inline Vec3 operator+(const Vec3& a, const Vec3& b) {
    return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
inline Vec3 operator*(const Vec3& a, double s) {
    return {a[0] * s, a[1] * s, a[2] * s};
}
double norm(const Vec3& v);
double squared_norm(const Vec3& v);

struct PointCloud {
    std::vector<Vec3> points;

    std::size_t size() const { return points.size(); }
};

// Throws if any coordinate is non-finite.
void validate_cloud(const PointCloud& cloud, const std::string& context);

// k nearest neighbors per point, self excluded. Neighbor lists are sorted by
// ascending (distance, index); both arrays are n*k, row-major.
struct NeighborGraph {
    std::size_t k = 0;
    std::vector<std::uint32_t> neighbors;
    std::vector<double> distances;

    std::size_t num_points() const { return k == 0 ? 0 : neighbors.size() / k; }
    const std::uint32_t* neighbors_of(std::size_t i) const {
        return neighbors.data() + i * k;
    }
    const double* distances_of(std::size_t i) const {
        return distances.data() + i * k;
    }
};

struct ReceptiveField {
    std::size_t center = 0;
    std::size_t hop_count = 0;
    std::vector<std::uint32_t> member_indices;  // sorted ascending, contains center
};

// kd-tree backed; `threads` > 1 parallelizes the per-point queries.
NeighborGraph build_knn_graph(const PointCloud& cloud, std::size_t k, int threads = 1);

// Greedy farthest point sampling. The first index is drawn from the seeded
// RNG; every later pick maximizes the distance to the selected set, ties
// broken by lowest index.
std::vector<std::uint32_t> farthest_point_sample(const PointCloud& cloud,
                                                 std::size_t n,
                                                 std::uint64_t seed);

// Mean distance from each point to its k nearest neighbors, averaged over the
// disjoint union of all clouds (kNN computed per cloud).
double scaling_factor(const std::vector<PointCloud>& clouds, std::size_t k,
                      int threads = 1);

// Multiplies every coordinate by 1/s.
PointCloud normalize_cloud(const PointCloud& cloud, double s);

// L-hop closure of the kNN relation from `center`; hop 0 is {center}.
ReceptiveField receptive_field(const NeighborGraph& graph, std::size_t center,
                               std::size_t hops);

// Member points minus their arithmetic mean.
std::vector<Vec3> center_receptive_field(const PointCloud& cloud,
                                         const ReceptiveField& field);

PointCloud select_points(const PointCloud& cloud,
                         const std::vector<std::uint32_t>& indices);

}  // namespace geost

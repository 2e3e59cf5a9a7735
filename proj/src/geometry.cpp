#include "geometry.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace geost {

double squared_norm(const Vec3& v) {
    return v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
}

double norm(const Vec3& v) {
    return std::sqrt(squared_norm(v));
}

void validate_cloud(const PointCloud& cloud, const std::string& context) {
    for (const Vec3& p : cloud.points) {
        if (!std::isfinite(p[0]) || !std::isfinite(p[1]) || !std::isfinite(p[2]))
            raise(ErrorCode::invalid_argument,
                  context + ": point cloud contains non-finite coordinates");
    }
}

namespace {

struct Candidate {
    double d2;
    std::uint32_t idx;
};

// Total order on (distance^2, index); the k nearest under this order are
// unique, which pins the tie-break to ascending index.
inline bool cand_less(const Candidate& a, const Candidate& b) {
    return a.d2 < b.d2 || (a.d2 == b.d2 && a.idx < b.idx);
}

class KdTree {
public:
    explicit KdTree(const std::vector<Vec3>& pts) : pts_(pts) {
        order_.resize(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i)
            order_[i] = static_cast<std::uint32_t>(i);
        if (!pts.empty())
            root_ = build(0, static_cast<std::uint32_t>(pts.size()));
    }

    void knn(const Vec3& q, std::uint32_t self, std::size_t k,
             std::vector<Candidate>& heap) const {
        heap.clear();
        search(root_, q, self, k, heap);
        std::sort(heap.begin(), heap.end(), cand_less);
    }

private:
    struct Node {
        int axis = -1;  // -1 marks a leaf
        double split = 0.0;
        int left = -1;
        int right = -1;
        std::uint32_t begin = 0;
        std::uint32_t end = 0;
    };

    static constexpr std::uint32_t kLeafSize = 16;

    int build(std::uint32_t b, std::uint32_t e) {
        const int self = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        if (e - b <= kLeafSize) {
            nodes_[self].begin = b;
            nodes_[self].end = e;
            return self;
        }
        Vec3 lo = pts_[order_[b]];
        Vec3 hi = lo;
        for (std::uint32_t i = b + 1; i < e; ++i) {
            for (int a = 0; a < 3; ++a) {
                lo[a] = std::min(lo[a], pts_[order_[i]][a]);
                hi[a] = std::max(hi[a], pts_[order_[i]][a]);
            }
        }
        int axis = 0;
        for (int a = 1; a < 3; ++a)
            if (hi[a] - lo[a] > hi[axis] - lo[axis])
                axis = a;
        const std::uint32_t mid = b + (e - b) / 2;
        std::nth_element(order_.begin() + b, order_.begin() + mid,
                         order_.begin() + e,
                         [&](std::uint32_t x, std::uint32_t y) {
                             const double px = pts_[x][axis];
                             const double py = pts_[y][axis];
                             return px < py || (px == py && x < y);
                         });
        nodes_[self].axis = axis;
        nodes_[self].split = pts_[order_[mid]][axis];
        const int l = build(b, mid);
        const int r = build(mid, e);
        nodes_[self].left = l;
        nodes_[self].right = r;
        return self;
    }

    void search(int ni, const Vec3& q, std::uint32_t self, std::size_t k,
                std::vector<Candidate>& heap) const {
        const Node& nd = nodes_[ni];
        if (nd.axis < 0) {
            for (std::uint32_t i = nd.begin; i < nd.end; ++i) {
                const std::uint32_t idx = order_[i];
                if (idx == self)
                    continue;
                const Candidate c{squared_norm(pts_[idx] - q), idx};
                if (heap.size() < k) {
                    heap.push_back(c);
                    std::push_heap(heap.begin(), heap.end(), cand_less);
                } else if (cand_less(c, heap.front())) {
                    std::pop_heap(heap.begin(), heap.end(), cand_less);
                    heap.back() = c;
                    std::push_heap(heap.begin(), heap.end(), cand_less);
                }
            }
            return;
        }
        const double delta = q[nd.axis] - nd.split;
        const int near = delta <= 0.0 ? nd.left : nd.right;
        const int far = delta <= 0.0 ? nd.right : nd.left;
        search(near, q, self, k, heap);
        // <= keeps equal-distance candidates reachable so index tie-breaks
        // stay exact.
        if (heap.size() < k || delta * delta <= heap.front().d2)
            search(far, q, self, k, heap);
    }

    const std::vector<Vec3>& pts_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

}  // namespace

NeighborGraph build_knn_graph(const PointCloud& cloud, std::size_t k, int threads) {
    require(k >= 1, ErrorCode::invalid_argument, "build_knn_graph: k must be >= 1");
    require(cloud.size() >= k + 1, ErrorCode::invalid_argument,
            "build_knn_graph: cloud needs at least k+1 points");
    validate_cloud(cloud, "build_knn_graph");

    const std::size_t n = cloud.size();
    KdTree tree(cloud.points);
    NeighborGraph graph;
    graph.k = k;
    graph.neighbors.resize(n * k);
    graph.distances.resize(n * k);
    parallel_for(n, threads, [&](std::size_t i) {
        std::vector<Candidate> heap;
        heap.reserve(k + 1);
        tree.knn(cloud.points[i], static_cast<std::uint32_t>(i), k, heap);
        for (std::size_t j = 0; j < k; ++j) {
            graph.neighbors[i * k + j] = heap[j].idx;
            graph.distances[i * k + j] = std::sqrt(heap[j].d2);
        }
    });
    return graph;
}

std::vector<std::uint32_t> farthest_point_sample(const PointCloud& cloud,
                                                 std::size_t n,
                                                 std::uint64_t seed) {
    const std::size_t total = cloud.size();
    require(n >= 1, ErrorCode::invalid_argument, "farthest_point_sample: n must be >= 1");
    require(n <= total, ErrorCode::invalid_argument,
            "farthest_point_sample: n exceeds cloud size");
    validate_cloud(cloud, "farthest_point_sample");

    Rng rng(seed);
    std::vector<std::uint32_t> selected;
    selected.reserve(n);
    const std::uint32_t first = static_cast<std::uint32_t>(rng.index(total));
    selected.push_back(first);

    std::vector<double> min_d2(total);
    for (std::size_t i = 0; i < total; ++i)
        min_d2[i] = squared_norm(cloud.points[i] - cloud.points[first]);

    while (selected.size() < n) {
        std::size_t best = 0;
        double best_d2 = -1.0;
        for (std::size_t i = 0; i < total; ++i) {
            if (min_d2[i] > best_d2) {
                best_d2 = min_d2[i];
                best = i;
            }
        }
        selected.push_back(static_cast<std::uint32_t>(best));
        for (std::size_t i = 0; i < total; ++i) {
            const double d2 = squared_norm(cloud.points[i] - cloud.points[best]);
            if (d2 < min_d2[i])
                min_d2[i] = d2;
        }
    }
    return selected;
}

double scaling_factor(const std::vector<PointCloud>& clouds, std::size_t k,
                      int threads) {
    require(!clouds.empty(), ErrorCode::invalid_argument,
            "scaling_factor: empty dataset");
    double sum = 0.0;
    std::size_t total_points = 0;
    for (const PointCloud& cloud : clouds) {
        const NeighborGraph graph = build_knn_graph(cloud, k, threads);
        for (double d : graph.distances)
            sum += d;
        total_points += cloud.size();
    }
    const double s = sum / (static_cast<double>(k) * static_cast<double>(total_points));
    require(s > 0.0, ErrorCode::numeric,
            "scaling_factor: degenerate dataset (all neighbor distances are zero)");
    return s;
}

PointCloud normalize_cloud(const PointCloud& cloud, double s) {
    require(std::isfinite(s) && s > 0.0, ErrorCode::invalid_argument,
            "normalize_cloud: scale must be positive");
    const double inv = 1.0 / s;
    PointCloud out;
    out.points.reserve(cloud.size());
    for (const Vec3& p : cloud.points)
        out.points.push_back(p * inv);
    return out;
}

ReceptiveField receptive_field(const NeighborGraph& graph, std::size_t center,
                               std::size_t hops) {
    const std::size_t n = graph.num_points();
    require(center < n, ErrorCode::invalid_argument,
            "receptive_field: center index out of range");

    std::vector<bool> visited(n, false);
    visited[center] = true;
    std::vector<std::uint32_t> frontier{static_cast<std::uint32_t>(center)};
    std::vector<std::uint32_t> next;
    for (std::size_t hop = 0; hop < hops && !frontier.empty(); ++hop) {
        next.clear();
        for (std::uint32_t q : frontier) {
            const std::uint32_t* nb = graph.neighbors_of(q);
            for (std::size_t j = 0; j < graph.k; ++j) {
                if (!visited[nb[j]]) {
                    visited[nb[j]] = true;
                    next.push_back(nb[j]);
                }
            }
        }
        frontier.swap(next);
    }

    ReceptiveField field;
    field.center = center;
    field.hop_count = hops;
    for (std::size_t i = 0; i < n; ++i)
        if (visited[i])
            field.member_indices.push_back(static_cast<std::uint32_t>(i));
    return field;
}

std::vector<Vec3> center_receptive_field(const PointCloud& cloud,
                                         const ReceptiveField& field) {
    require(!field.member_indices.empty(), ErrorCode::invalid_argument,
            "center_receptive_field: empty field");
    Vec3 mean{0.0, 0.0, 0.0};
    for (std::uint32_t idx : field.member_indices) {
        require(idx < cloud.size(), ErrorCode::invalid_argument,
                "center_receptive_field: member index out of range");
        mean = mean + cloud.points[idx];
    }
    mean = mean * (1.0 / static_cast<double>(field.member_indices.size()));
    std::vector<Vec3> out;
    out.reserve(field.member_indices.size());
    for (std::uint32_t idx : field.member_indices)
        out.push_back(cloud.points[idx] - mean);
    return out;
}

PointCloud select_points(const PointCloud& cloud,
                         const std::vector<std::uint32_t>& indices) {
    PointCloud out;
    out.points.reserve(indices.size());
    for (std::uint32_t idx : indices) {
        require(idx < cloud.size(), ErrorCode::invalid_argument,
                "select_points: index out of range");
        out.points.push_back(cloud.points[idx]);
    }
    return out;
}

}  // namespace geost

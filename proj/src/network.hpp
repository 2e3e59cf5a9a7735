#pragma once

#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "geometry.hpp"
#include "rng.hpp"
#include "tape.hpp"

namespace geost {

// Teacher/student descriptor network configuration. The receptive field is
// L = 2 * blocks hops (two LFA steps per residual block).
struct NetConfig {
    std::size_t d = 64;
    std::size_t k = 32;
    std::size_t blocks = 4;
    bool use_absolute_coords = false;  // ablation mode

    std::size_t hops() const { return 2 * blocks; }
    std::size_t pair_feature_width() const { return use_absolute_coords ? 10 : 4; }
};

struct DecoderConfig {
    std::size_t d = 64;
    std::size_t m = 1024;
    std::size_t hidden = 128;
};

inline constexpr double kNetSlope = 0.2;
inline constexpr double kDecoderSlope = 0.05;

// Pairwise geometric feature: (p - p_j) concatenated with ||p - p_j||.
template <typename T>
std::array<T, 4> geometric_features(const Vec3& p, const Vec3& pj) {
    const Vec3 diff = p - pj;
    return {static_cast<T>(diff[0]), static_cast<T>(diff[1]),
            static_cast<T>(diff[2]), static_cast<T>(norm(diff))};
}

// Per-pair feature tensor [n, k, 4] (or [n, k, 10] with absolute coordinates
// of both points appended, ablation only).
template <typename T>
Tensor<T> pair_feature_tensor(const PointCloud& cloud, const NeighborGraph& graph,
                              const NetConfig& cfg) {
    const std::size_t n = cloud.size();
    const std::size_t k = graph.k;
    const std::size_t width = cfg.pair_feature_width();
    Tensor<T> g = Tensor<T>::zeros({n, k, width});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            const std::uint32_t nb = graph.neighbors_of(i)[j];
            const auto feat = geometric_features<T>(cloud.points[i], cloud.points[nb]);
            T* dst = g.data.data() + (i * k + j) * width;
            dst[0] = feat[0];
            dst[1] = feat[1];
            dst[2] = feat[2];
            dst[3] = feat[3];
            if (cfg.use_absolute_coords) {
                for (int c = 0; c < 3; ++c) {
                    dst[4 + c] = static_cast<T>(cloud.points[i][c]);
                    dst[7 + c] = static_cast<T>(cloud.points[nb][c]);
                }
            }
        }
    }
    return g;
}

// Lazily binds ParamStore entries as tape leaves so gradients can be read
// back by name after backward().
template <typename T>
class BoundParams {
public:
    BoundParams(Tape<T>& tape, const ParamStore<T>& store, bool requires_grad)
        : tape_(&tape), store_(&store), requires_grad_(requires_grad) {}

    int node(const std::string& name) {
        auto it = nodes_.find(name);
        if (it != nodes_.end())
            return it->second;
        const int id = tape_->leaf(store_->get(name), requires_grad_);
        nodes_.emplace(name, id);
        return id;
    }

    std::map<std::string, Tensor<T>> collect_grads() const {
        std::map<std::string, Tensor<T>> grads;
        for (const auto& [name, id] : nodes_) {
            const Tensor<T>& g = tape_->adjoint(id);
            grads[name] = g.empty() ? Tensor<T>::zeros(store_->get(name).shape) : g;
        }
        return grads;
    }

private:
    Tape<T>* tape_;
    const ParamStore<T>* store_;
    bool requires_grad_;
    std::map<std::string, int> nodes_;
};

template <typename T>
void init_affine_params(ParamStore<T>& store, const std::string& prefix,
                        std::size_t in, std::size_t out, Rng& rng) {
    // Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Tensor<T> w = Tensor<T>::zeros({in, out});
    for (T& v : w.data)
        v = static_cast<T>(rng.uniform(-bound, bound));
    store.add(prefix + ".W", std::move(w));
    store.add(prefix + ".b", Tensor<T>::zeros({out}));
}

template <typename T>
void init_descriptor_params(ParamStore<T>& store, const NetConfig& cfg,
                            const std::string& prefix, Rng& rng) {
    require(cfg.d >= 4 && cfg.d % 4 == 0, ErrorCode::invalid_argument,
            "descriptor width must be divisible by 4");
    const std::size_t g = cfg.pair_feature_width();
    for (std::size_t b = 0; b < cfg.blocks; ++b) {
        const std::string bp = prefix + ".block" + std::to_string(b);
        init_affine_params(store, bp + ".entry", cfg.d, cfg.d / 4, rng);
        init_affine_params(store, bp + ".lfa0", g, cfg.d / 4, rng);
        init_affine_params(store, bp + ".lfa1", g, cfg.d / 2, rng);
        init_affine_params(store, bp + ".exit", cfg.d, cfg.d, rng);
        init_affine_params(store, bp + ".skip", cfg.d, cfg.d, rng);
    }
    init_affine_params(store, prefix + ".final.hidden", cfg.d, cfg.d, rng);
    init_affine_params(store, prefix + ".final.out", cfg.d, cfg.d, rng);
}

template <typename T>
void init_decoder_params(ParamStore<T>& store, const DecoderConfig& cfg,
                         const std::string& prefix, Rng& rng) {
    init_affine_params(store, prefix + ".l0", cfg.d, cfg.hidden, rng);
    init_affine_params(store, prefix + ".l1", cfg.hidden, cfg.hidden, rng);
    init_affine_params(store, prefix + ".l2", cfg.hidden, 3 * cfg.m, rng);
}

template <typename T>
int mlp(Tape<T>& tape, BoundParams<T>& params, const std::string& name, int x,
        T slope) {
    return tape.leaky_relu(
        tape.affine(x, params.node(name + ".W"), params.node(name + ".b")), slope);
}

// One local feature aggregation step: the pairwise features go through the
// block's shared MLP, get concatenated with the neighbors' input features,
// and are average-pooled. Input width must equal d_lfa; output is 2 * d_lfa.
template <typename T>
int lfa_forward(Tape<T>& tape, BoundParams<T>& params, const std::string& name,
                int features, int pair_features_flat,
                const std::vector<std::uint32_t>& neighbor_idx, std::size_t n,
                std::size_t k) {
    const std::size_t d_lfa = tape.value(features).shape[1];
    const int gm = mlp(tape, params, name, pair_features_flat, T(kNetSlope));
    const int gm3 = tape.reshape(gm, {n, k, d_lfa});
    const int nf = tape.gather_rows(features, neighbor_idx, k);
    return tape.mean_pool_neighbors(tape.concat_last(gm3, nf));
}

template <typename T>
int residual_block_forward(Tape<T>& tape, BoundParams<T>& params,
                           const std::string& bp, int features,
                           int pair_features_flat,
                           const std::vector<std::uint32_t>& neighbor_idx,
                           std::size_t n, std::size_t k) {
    const int entry = mlp(tape, params, bp + ".entry", features, T(kNetSlope));
    const int lfa0 =
        lfa_forward(tape, params, bp + ".lfa0", entry, pair_features_flat,
                    neighbor_idx, n, k);
    const int lfa1 =
        lfa_forward(tape, params, bp + ".lfa1", lfa0, pair_features_flat,
                    neighbor_idx, n, k);
    const int exit_mlp = mlp(tape, params, bp + ".exit", lfa1, T(kNetSlope));
    const int skip = mlp(tape, params, bp + ".skip", features, T(kNetSlope));
    return tape.add(exit_mlp, skip);
}

// Full descriptor network: zero-initialized features, `blocks` residual
// blocks, then a final shared MLP with one hidden layer and a linear output.
template <typename T>
int descriptor_forward(Tape<T>& tape, BoundParams<T>& params,
                       const std::string& prefix, const PointCloud& cloud,
                       const NeighborGraph& graph, const NetConfig& cfg) {
    const std::size_t n = cloud.size();
    require(graph.k == cfg.k && graph.num_points() == n,
            ErrorCode::invalid_argument,
            "descriptor_forward: graph does not match cloud/config");

    const Tensor<T> g = pair_feature_tensor<T>(cloud, graph, cfg);
    const int g_flat = tape.reshape(tape.leaf(g), {n * cfg.k, cfg.pair_feature_width()});
    std::vector<std::uint32_t> idx(graph.neighbors.begin(), graph.neighbors.end());

    int f = tape.leaf(Tensor<T>::zeros({n, cfg.d}));
    for (std::size_t b = 0; b < cfg.blocks; ++b) {
        f = residual_block_forward(tape, params,
                                   prefix + ".block" + std::to_string(b), f,
                                   g_flat, idx, n, cfg.k);
    }
    const int hidden = mlp(tape, params, prefix + ".final.hidden", f, T(kNetSlope));
    return tape.affine(hidden, params.node(prefix + ".final.out.W"),
                       params.node(prefix + ".final.out.b"));
}

// Decoder: two hidden LeakyReLU(0.05) layers, linear output of width 3m.
// Input [q, d] -> output [q, 3m]; reshape a row to [m, 3] for the Chamfer
// comparison.
template <typename T>
int decoder_forward(Tape<T>& tape, BoundParams<T>& params,
                    const std::string& prefix, int features,
                    const DecoderConfig& cfg) {
    require(tape.value(features).last_dim() == cfg.d, ErrorCode::invalid_argument,
            "decoder_forward: feature width mismatch");
    const int h0 = mlp(tape, params, prefix + ".l0", features, T(kDecoderSlope));
    const int h1 = mlp(tape, params, prefix + ".l1", h0, T(kDecoderSlope));
    return tape.affine(h1, params.node(prefix + ".l2.W"),
                       params.node(prefix + ".l2.b"));
}

// Convenience no-grad forward; returns the [n, d] descriptor tensor.
template <typename T>
Tensor<T> descriptor_features(const ParamStore<T>& store,
                              const std::string& prefix, const PointCloud& cloud,
                              const NeighborGraph& graph, const NetConfig& cfg) {
    Tape<T> tape;
    BoundParams<T> params(tape, store, /*requires_grad=*/false);
    const int out = descriptor_forward(tape, params, prefix, cloud, graph, cfg);
    return tape.value(out);
}

}  // namespace geost

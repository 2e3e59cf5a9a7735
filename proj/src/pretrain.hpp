#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "geometry.hpp"
#include "network.hpp"
#include "tape.hpp"

namespace geost {

struct PretrainConfig {
    std::size_t epochs = 250;
    double lr = 1e-3;
    double weight_decay = 1e-6;
    std::size_t queries = 16;  // |Q| descriptors decoded per step
    NetConfig net;
    std::size_t decoder_m = 1024;
    std::uint64_t seed = 0;
    int threads = 1;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct PretrainResult {
    ParamStore<float> params;  // teacher.* and decoder.* of the best epoch
    double scaling = 1.0;      // dataset scaling factor the scenes were normalized with
    double best_val_loss = 0.0;
    std::size_t best_epoch = 0;
    std::vector<EpochRecord> curve;
};

// Mean Chamfer distance between decoded descriptors and their mean-centered
// receptive fields over the query set. Shared by training and the test
// oracles, hence templated on the scalar type.
template <typename T>
int reconstruction_loss(Tape<T>& tape, BoundParams<T>& params,
                        const PointCloud& cloud, const NeighborGraph& graph,
                        const NetConfig& net_cfg, const DecoderConfig& dec_cfg,
                        const std::vector<std::uint32_t>& queries) {
    require(!queries.empty(), ErrorCode::invalid_argument,
            "reconstruction_loss: empty query set");
    const std::size_t q = queries.size();

    const int features = descriptor_forward(tape, params, "teacher", cloud,
                                            graph, net_cfg);
    const int fq = tape.reshape(tape.gather_rows(features, queries, 1),
                                {q, net_cfg.d});
    const int decoded = decoder_forward(tape, params, "decoder", fq, dec_cfg);

    int total = -1;
    for (std::size_t i = 0; i < q; ++i) {
        const ReceptiveField field =
            receptive_field(graph, queries[i], net_cfg.hops());
        const auto centered = center_receptive_field(cloud, field);
        Tensor<T> target = Tensor<T>::zeros({centered.size(), 3});
        for (std::size_t p = 0; p < centered.size(); ++p)
            for (int c = 0; c < 3; ++c)
                target.data[p * 3 + c] = static_cast<T>(centered[p][c]);
        const int predicted = tape.reshape(tape.slice_rows(decoded, i, i + 1),
                                           {dec_cfg.m, 3});
        const int term = tape.chamfer(predicted, tape.leaf(std::move(target)));
        total = total < 0 ? term : tape.add(total, term);
    }
    return tape.scale(total, T(1) / static_cast<T>(q));
}

// Self-supervised teacher pretraining. Scenes must already be normalized
// with the dataset scaling factor recorded in cfg-independent metadata (the
// caller passes it through `scaling` for bookkeeping). One scene per step,
// |Q| queries sampled uniformly without replacement, teacher and decoder
// updated jointly by a single Adam instance. Returns the parameters of the
// epoch with the lowest validation loss.
PretrainResult pretrain_teacher(const std::vector<PointCloud>& train_scenes,
                                const std::vector<PointCloud>& val_scenes,
                                const PretrainConfig& cfg, double scaling,
                                const std::function<void(const EpochRecord&)>&
                                    on_epoch = {});

}  // namespace geost

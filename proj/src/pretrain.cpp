#include "pretrain.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "error.hpp"

namespace geost {

namespace {

std::vector<std::uint32_t> sample_without_replacement(std::size_t n,
                                                      std::size_t count,
                                                      Rng& rng) {
    require(count <= n, ErrorCode::invalid_argument,
            "query sample larger than cloud");
    std::vector<std::uint32_t> pool(n);
    std::iota(pool.begin(), pool.end(), 0u);
    // Partial Fisher-Yates.
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + rng.index(n - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(count);
    return pool;
}

}  // namespace

PretrainResult pretrain_teacher(
    const std::vector<PointCloud>& train_scenes,
    const std::vector<PointCloud>& val_scenes, const PretrainConfig& cfg,
    double scaling, const std::function<void(const EpochRecord&)>& on_epoch) {
    require(!train_scenes.empty(), ErrorCode::invalid_argument,
            "pretrain_teacher: no training scenes");
    require(cfg.epochs >= 1 && cfg.queries >= 1, ErrorCode::invalid_argument,
            "pretrain_teacher: epochs and queries must be positive");

    const DecoderConfig dec_cfg{cfg.net.d, cfg.decoder_m, 128};

    ParamStore<float> store;
    {
        Rng init_rng(Rng::derive(cfg.seed, 1));
        init_descriptor_params(store, cfg.net, "teacher", init_rng);
        Rng dec_rng(Rng::derive(cfg.seed, 2));
        init_decoder_params(store, dec_cfg, "decoder", dec_rng);
    }

    // Graphs are immutable across the run; build them once.
    std::vector<NeighborGraph> train_graphs;
    train_graphs.reserve(train_scenes.size());
    for (const auto& scene : train_scenes)
        train_graphs.push_back(build_knn_graph(scene, cfg.net.k, cfg.threads));
    std::vector<NeighborGraph> val_graphs;
    val_graphs.reserve(val_scenes.size());
    for (const auto& scene : val_scenes)
        val_graphs.push_back(build_knn_graph(scene, cfg.net.k, cfg.threads));

    AdamConfig<float> adam;
    adam.lr = static_cast<float>(cfg.lr);
    adam.weight_decay = static_cast<float>(cfg.weight_decay);

    Rng rng(Rng::derive(cfg.seed, 3));

    PretrainResult result;
    result.scaling = scaling;
    result.best_val_loss = std::numeric_limits<double>::infinity();

    std::vector<std::size_t> order(train_scenes.size());
    std::iota(order.begin(), order.end(), std::size_t(0));

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = 0; i + 1 < order.size(); ++i) {
            const std::size_t j = i + rng.index(order.size() - i);
            std::swap(order[i], order[j]);
        }

        double train_loss_sum = 0.0;
        for (std::size_t si : order) {
            const PointCloud& scene = train_scenes[si];
            const auto queries = sample_without_replacement(
                scene.size(), std::min(cfg.queries, scene.size()), rng);

            Tape<float> tape;
            BoundParams<float> bound(tape, store, /*requires_grad=*/true);
            const int loss = reconstruction_loss(tape, bound, scene,
                                                 train_graphs[si], cfg.net,
                                                 dec_cfg, queries);
            const double loss_value = tape.value(loss).data[0];
            if (!std::isfinite(loss_value))
                raise(ErrorCode::numeric,
                      "pretrain_teacher: non-finite loss at epoch " +
                          std::to_string(epoch) + ", scene " + std::to_string(si));
            train_loss_sum += loss_value;

            tape.backward(loss);
            adam_step(store, bound.collect_grads(), adam);
        }

        double val_loss = 0.0;
        if (!val_scenes.empty()) {
            for (std::size_t vi = 0; vi < val_scenes.size(); ++vi) {
                // Fixed per-scene validation queries for deterministic model
                // selection.
                Rng vrng(Rng::derive(cfg.seed, 1000 + vi));
                const auto queries = sample_without_replacement(
                    val_scenes[vi].size(),
                    std::min(cfg.queries, val_scenes[vi].size()), vrng);
                Tape<float> tape;
                BoundParams<float> bound(tape, store, /*requires_grad=*/false);
                const int loss = reconstruction_loss(tape, bound, val_scenes[vi],
                                                     val_graphs[vi], cfg.net,
                                                     dec_cfg, queries);
                val_loss += tape.value(loss).data[0];
            }
            val_loss /= static_cast<double>(val_scenes.size());
        } else {
            val_loss = train_loss_sum / static_cast<double>(train_scenes.size());
        }
        if (!std::isfinite(val_loss))
            raise(ErrorCode::numeric, "pretrain_teacher: non-finite validation loss");

        EpochRecord record{epoch,
                           train_loss_sum / static_cast<double>(train_scenes.size()),
                           val_loss};
        result.curve.push_back(record);
        if (on_epoch)
            on_epoch(record);

        if (val_loss < result.best_val_loss) {
            result.best_val_loss = val_loss;
            result.best_epoch = epoch;
            result.params = store;
        }
    }
    return result;
}

}  // namespace geost

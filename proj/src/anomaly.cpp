#include "anomaly.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "error.hpp"

namespace geost {

FeatureFn teacher_feature_fn(const ParamStore<float>& teacher,
                             const NetConfig& cfg) {
    return [&teacher, cfg](const PointCloud& cloud, const NeighborGraph& graph) {
        return descriptor_features(teacher, "teacher", cloud, graph, cfg);
    };
}

FeatureStats compute_feature_stats(const FeatureFn& features,
                                   const std::vector<PointCloud>& clouds,
                                   std::size_t k, std::size_t d, int threads) {
    require(!clouds.empty(), ErrorCode::invalid_argument,
            "compute_feature_stats: empty training set");
    std::vector<double> sum(d, 0.0);
    std::vector<double> sum_sq(d, 0.0);
    std::size_t count = 0;
    for (const PointCloud& cloud : clouds) {
        const NeighborGraph graph = build_knn_graph(cloud, k, threads);
        const Tensor<float> f = features(cloud, graph);
        require(f.rank() == 2 && f.shape[0] == cloud.size() && f.shape[1] == d,
                ErrorCode::invalid_argument,
                "compute_feature_stats: feature shape mismatch");
        for (std::size_t i = 0; i < cloud.size(); ++i)
            for (std::size_t c = 0; c < d; ++c) {
                const double v = f.data[i * d + c];
                sum[c] += v;
                sum_sq[c] += v * v;
            }
        count += cloud.size();
    }

    FeatureStats stats;
    stats.mu.resize(d);
    stats.sigma.resize(d);
    const double inv = 1.0 / static_cast<double>(count);
    for (std::size_t c = 0; c < d; ++c) {
        stats.mu[c] = sum[c] * inv;
        const double var = std::max(0.0, sum_sq[c] * inv - stats.mu[c] * stats.mu[c]);
        stats.sigma[c] = std::sqrt(var);
        require(stats.sigma[c] >= 1e-12, ErrorCode::numeric,
                "compute_feature_stats: constant feature dimension " +
                    std::to_string(c));
    }
    return stats;
}

Tensor<float> normalize_features(const Tensor<float>& features,
                                 const FeatureStats& stats) {
    require(features.rank() == 2 && features.shape[1] == stats.d(),
            ErrorCode::invalid_argument, "normalize_features: shape mismatch");
    Tensor<float> out = features;
    const std::size_t d = stats.d();
    for (std::size_t i = 0; i < features.shape[0]; ++i)
        for (std::size_t c = 0; c < d; ++c)
            out.data[i * d + c] = static_cast<float>(
                (features.data[i * d + c] - stats.mu[c]) / stats.sigma[c]);
    return out;
}

void split_validation(const std::vector<PointCloud>& clouds, std::uint64_t seed,
                      std::vector<PointCloud>& train,
                      std::vector<PointCloud>& val) {
    train.clear();
    val.clear();
    if (clouds.size() <= 1) {
        train = clouds;
        val = clouds;  // degenerate: validate on the single training cloud
        return;
    }
    std::vector<std::size_t> order(clouds.size());
    std::iota(order.begin(), order.end(), std::size_t(0));
    Rng rng(Rng::derive(seed, 77));
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        const std::size_t j = i + rng.index(order.size() - i);
        std::swap(order[i], order[j]);
    }
    const std::size_t val_count =
        std::max<std::size_t>(1, clouds.size() / 10);
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i < clouds.size() - val_count)
            train.push_back(clouds[order[i]]);
        else
            val.push_back(clouds[order[i]]);
    }
}

StudentResult train_student(
    const ParamStore<float>& teacher, const FeatureStats& stats,
    const std::vector<PointCloud>& train_clouds,
    const std::vector<PointCloud>& val_clouds, const StudentConfig& cfg,
    const std::function<void(const EpochRecord&)>& on_epoch) {
    require(!train_clouds.empty(), ErrorCode::invalid_argument,
            "train_student: no training clouds");
    require(stats.d() == cfg.net.d, ErrorCode::invalid_argument,
            "train_student: stats dimension does not match network");

    ParamStore<float> store;
    {
        Rng init_rng(Rng::derive(cfg.seed, 11));
        init_descriptor_params(store, cfg.net, "student", init_rng);
    }

    // The teacher is frozen; its normalized targets are fixed per cloud.
    auto make_targets = [&](const std::vector<PointCloud>& clouds,
                            std::vector<NeighborGraph>& graphs,
                            std::vector<Tensor<float>>& targets) {
        for (const PointCloud& cloud : clouds) {
            graphs.push_back(build_knn_graph(cloud, cfg.net.k, cfg.threads));
            const Tensor<float> f = descriptor_features(
                teacher, "teacher", cloud, graphs.back(), cfg.net);
            targets.push_back(normalize_features(f, stats));
        }
    };
    std::vector<NeighborGraph> train_graphs, val_graphs;
    std::vector<Tensor<float>> train_targets, val_targets;
    make_targets(train_clouds, train_graphs, train_targets);
    make_targets(val_clouds, val_graphs, val_targets);

    AdamConfig<float> adam;
    adam.lr = static_cast<float>(cfg.lr);
    adam.weight_decay = static_cast<float>(cfg.weight_decay);

    Rng rng(Rng::derive(cfg.seed, 12));
    std::vector<std::size_t> order(train_clouds.size());
    std::iota(order.begin(), order.end(), std::size_t(0));

    StudentResult result;
    result.best_val_loss = std::numeric_limits<double>::infinity();

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = 0; i + 1 < order.size(); ++i) {
            const std::size_t j = i + rng.index(order.size() - i);
            std::swap(order[i], order[j]);
        }

        double train_loss_sum = 0.0;
        for (std::size_t ci : order) {
            Tape<float> tape;
            BoundParams<float> bound(tape, store, /*requires_grad=*/true);
            const int loss = student_regression_loss(
                tape, bound, train_clouds[ci], train_graphs[ci], cfg.net,
                train_targets[ci]);
            const double loss_value = tape.value(loss).data[0];
            if (!std::isfinite(loss_value))
                raise(ErrorCode::numeric,
                      "train_student: non-finite loss at epoch " +
                          std::to_string(epoch) + ", cloud " + std::to_string(ci));
            train_loss_sum += loss_value;
            tape.backward(loss);
            adam_step(store, bound.collect_grads(), adam);
        }

        double val_loss = 0.0;
        for (std::size_t vi = 0; vi < val_clouds.size(); ++vi) {
            Tape<float> tape;
            BoundParams<float> bound(tape, store, /*requires_grad=*/false);
            const int loss = student_regression_loss(
                tape, bound, val_clouds[vi], val_graphs[vi], cfg.net,
                val_targets[vi]);
            val_loss += tape.value(loss).data[0];
        }
        val_loss = val_clouds.empty()
                       ? train_loss_sum / static_cast<double>(train_clouds.size())
                       : val_loss / static_cast<double>(val_clouds.size());
        if (!std::isfinite(val_loss))
            raise(ErrorCode::numeric, "train_student: non-finite validation loss");

        EpochRecord record{epoch,
                           train_loss_sum / static_cast<double>(train_clouds.size()),
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

std::vector<double> score_cloud(const ParamStore<float>& teacher,
                                const ParamStore<float>& student,
                                const FeatureStats& stats,
                                const PointCloud& cloud, const NetConfig& cfg,
                                int threads) {
    require(stats.d() == cfg.d, ErrorCode::invalid_argument,
            "score_cloud: stats dimension mismatch");
    const NeighborGraph graph = build_knn_graph(cloud, cfg.k, threads);
    const Tensor<float> ft =
        descriptor_features(teacher, "teacher", cloud, graph, cfg);
    const Tensor<float> target = normalize_features(ft, stats);
    const Tensor<float> fs =
        descriptor_features(student, "student", cloud, graph, cfg);

    const std::size_t d = cfg.d;
    std::vector<double> scores(cloud.size(), 0.0);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        double acc = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            const double diff = static_cast<double>(fs.data[i * d + c]) -
                                static_cast<double>(target.data[i * d + c]);
            acc += diff * diff;
        }
        scores[i] = std::sqrt(acc);
    }
    return scores;
}

}  // namespace geost

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "geometry.hpp"
#include "network.hpp"
#include "pretrain.hpp"
#include "tape.hpp"

namespace geost {

// Component-wise mean and population standard deviation of teacher features
// over a training set. Computed once and frozen.
struct FeatureStats {
    std::vector<double> mu;
    std::vector<double> sigma;

    std::size_t d() const { return mu.size(); }
};

// Feature extractor abstraction so the stats can be tested with stub
// teachers; the real one wraps descriptor_features().
using FeatureFn =
    std::function<Tensor<float>(const PointCloud&, const NeighborGraph&)>;

FeatureFn teacher_feature_fn(const ParamStore<float>& teacher,
                             const NetConfig& cfg);

// Aborts if any sigma component falls below 1e-12 (constant feature
// dimension).
FeatureStats compute_feature_stats(const FeatureFn& features,
                                   const std::vector<PointCloud>& clouds,
                                   std::size_t k, std::size_t d,
                                   int threads = 1);

// (f - mu) / sigma, row-wise over an [n, d] feature tensor.
Tensor<float> normalize_features(const Tensor<float>& features,
                                 const FeatureStats& stats);

struct StudentConfig {
    std::size_t epochs = 100;
    double lr = 1e-3;
    double weight_decay = 1e-5;
    NetConfig net;
    std::uint64_t seed = 0;
    int threads = 1;
};

struct StudentResult {
    ParamStore<float> params;  // student.* of the best epoch
    double best_val_loss = 0.0;
    std::size_t best_epoch = 0;
    std::vector<EpochRecord> curve;
};

// Mean squared feature-wise L2 distance between the student output and the
// normalized teacher target.
template <typename T>
int student_regression_loss(Tape<T>& tape, BoundParams<T>& student_params,
                            const PointCloud& cloud, const NeighborGraph& graph,
                            const NetConfig& cfg, Tensor<T> normalized_teacher) {
    require(normalized_teacher.rank() == 2 &&
                normalized_teacher.shape[0] == cloud.size() &&
                normalized_teacher.shape[1] == cfg.d,
            ErrorCode::invalid_argument,
            "student_regression_loss: target shape mismatch");
    const std::size_t n = cloud.size();
    const int out = descriptor_forward(tape, student_params, "student", cloud,
                                       graph, cfg);
    const int target = tape.leaf(std::move(normalized_teacher));
    const int residual = tape.sub(out, target);
    return tape.scale(tape.sum(tape.squared_l2_rows(residual)),
                      T(1) / static_cast<T>(n));
}

// Trains a freshly initialized student to regress the frozen teacher's
// normalized features, batch size 1, Adam on the student only. Returns the
// parameters with the lowest validation loss.
StudentResult train_student(const ParamStore<float>& teacher,
                            const FeatureStats& stats,
                            const std::vector<PointCloud>& train_clouds,
                            const std::vector<PointCloud>& val_clouds,
                            const StudentConfig& cfg,
                            const std::function<void(const EpochRecord&)>&
                                on_epoch = {});

// Deterministic 10% holdout (at least one cloud when more than one exists).
void split_validation(const std::vector<PointCloud>& clouds, std::uint64_t seed,
                      std::vector<PointCloud>& train,
                      std::vector<PointCloud>& val);

// Per-point anomaly scores: the (unsquared) norm of the student residual
// against the normalized teacher features.
std::vector<double> score_cloud(const ParamStore<float>& teacher,
                                const ParamStore<float>& student,
                                const FeatureStats& stats,
                                const PointCloud& cloud, const NetConfig& cfg,
                                int threads = 1);

}  // namespace geost

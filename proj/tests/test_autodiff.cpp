#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "anomaly.hpp"
#include "geometry.hpp"
#include "gradcheck.hpp"
#include "network.hpp"
#include "pretrain.hpp"
#include "rng.hpp"
#include "tape.hpp"

using namespace geost;

namespace {

Tensor<double> random_tensor(std::vector<std::size_t> shape, Rng& rng,
                             double offset = 0.0) {
    Tensor<double> t = Tensor<double>::zeros(std::move(shape));
    for (double& v : t.data)
        v = rng.normal() + offset;
    return t;
}

PointCloud random_cloud(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    PointCloud cloud;
    for (std::size_t i = 0; i < n; ++i)
        cloud.points.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1),
                                rng.uniform(-1, 1)});
    return cloud;
}

constexpr double kTol = 1e-4;

}  // namespace

TEST_CASE("affine matches finite differences") {
    Rng rng(1);
    const std::vector<Tensor<double>> inputs{random_tensor({5, 4}, rng),
                                             random_tensor({4, 3}, rng),
                                             random_tensor({3}, rng)};
    const double err = gradcheck::max_grad_error(
        inputs, [](Tape<double>& t, const std::vector<int>& ids) {
            return t.sum(t.squared_l2_rows(t.affine(ids[0], ids[1], ids[2])));
        });
    CHECK(err < kTol);
}

TEST_CASE("leaky_relu matches finite differences away from the kink") {
    Rng rng(2);
    Tensor<double> x = random_tensor({6, 3}, rng);
    for (double& v : x.data)
        if (std::abs(v) < 0.05)
            v += v < 0 ? -0.1 : 0.1;  // keep FD probes off the kink
    const double err = gradcheck::max_grad_error(
        {x}, [](Tape<double>& t, const std::vector<int>& ids) {
            return t.sum(t.leaky_relu(ids[0], 0.2));
        });
    CHECK(err < kTol);
}

TEST_CASE("leaky_relu subgradient at zero is 1") {
    Tape<double> tape;
    const int x = tape.leaf(Tensor<double>({2}, {0.0, -1.0}), true);
    const int loss = tape.sum(tape.leaky_relu(x, 0.2));
    tape.backward(loss);
    CHECK(tape.adjoint(x).data[0] == 1.0);
    CHECK(tape.adjoint(x).data[1] == 0.2);
}

TEST_CASE("gather, concat and mean-pool match finite differences") {
    Rng rng(3);
    const std::vector<std::uint32_t> idx{0, 2, 1, 3, 3, 0};  // q=3, k=2
    const std::vector<Tensor<double>> inputs{random_tensor({4, 3}, rng),
                                             random_tensor({3, 2, 2}, rng)};
    const double err = gradcheck::max_grad_error(
        inputs, [&](Tape<double>& t, const std::vector<int>& ids) {
            const int gathered = t.gather_rows(ids[0], idx, 2);  // [3,2,3]
            const int cat = t.concat_last(gathered, ids[1]);     // [3,2,5]
            const int pooled = t.mean_pool_neighbors(cat);       // [3,5]
            return t.sum(t.squared_l2_rows(pooled));
        });
    CHECK(err < kTol);
}

TEST_CASE("add, sub, scale, reshape and slice match finite differences") {
    Rng rng(4);
    const std::vector<Tensor<double>> inputs{random_tensor({4, 6}, rng),
                                             random_tensor({4, 6}, rng)};
    const double err = gradcheck::max_grad_error(
        inputs, [](Tape<double>& t, const std::vector<int>& ids) {
            const int mixed = t.sub(t.scale(ids[0], 1.7), t.add(ids[0], ids[1]));
            const int wide = t.reshape(mixed, {2, 12});
            const int row = t.slice_rows(wide, 1, 2);
            return t.scale(t.sum(t.squared_l2_rows(row)), 0.5);
        });
    CHECK(err < kTol);
}

TEST_CASE("l2_rows matches finite differences and is safe at zero rows") {
    Rng rng(5);
    const double err = gradcheck::max_grad_error(
        {random_tensor({5, 3}, rng, 1.0)},
        [](Tape<double>& t, const std::vector<int>& ids) {
            return t.sum(t.l2_rows(ids[0]));
        });
    CHECK(err < kTol);

    Tape<double> tape;
    const int x = tape.leaf(Tensor<double>::zeros({2, 3}), true);
    tape.backward(tape.sum(tape.l2_rows(x)));
    for (double g : tape.adjoint(x).data)
        CHECK(g == 0.0);
}

TEST_CASE("chamfer value matches an independent exhaustive oracle") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        Rng rng(100 + seed);
        const std::size_t na = 3 + rng.index(8);
        const std::size_t nb = 3 + rng.index(8);
        const Tensor<double> a = random_tensor({na, 3}, rng);
        const Tensor<double> b = random_tensor({nb, 3}, rng);

        double expect = 0.0;
        for (std::size_t i = 0; i < na; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < nb; ++j) {
                double d2 = 0.0;
                for (int c = 0; c < 3; ++c) {
                    const double d = a.data[i * 3 + c] - b.data[j * 3 + c];
                    d2 += d * d;
                }
                best = std::min(best, d2);
            }
            expect += best / double(na);
        }
        for (std::size_t j = 0; j < nb; ++j) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < na; ++i) {
                double d2 = 0.0;
                for (int c = 0; c < 3; ++c) {
                    const double d = a.data[i * 3 + c] - b.data[j * 3 + c];
                    d2 += d * d;
                }
                best = std::min(best, d2);
            }
            expect += best / double(nb);
        }

        Tape<double> tape;
        const double got =
            tape.value(tape.chamfer(tape.leaf(a), tape.leaf(b))).data[0];
        CHECK(got == doctest::Approx(expect).epsilon(1e-13));
    }
}

TEST_CASE("chamfer of a set with itself is zero; single points double up") {
    Rng rng(7);
    const Tensor<double> a = random_tensor({6, 3}, rng);
    Tape<double> tape;
    CHECK(tape.value(tape.chamfer(tape.leaf(a), tape.leaf(a))).data[0] == 0.0);

    const Tensor<double> p({1, 3}, {0.0, 0.0, 0.0});
    const Tensor<double> q({1, 3}, {1.0, 2.0, 2.0});
    CHECK(tape.value(tape.chamfer(tape.leaf(p), tape.leaf(q))).data[0] ==
          doctest::Approx(18.0));  // 2 * (1 + 4 + 4)
}

TEST_CASE("chamfer matches finite differences") {
    Rng rng(8);
    const std::vector<Tensor<double>> inputs{random_tensor({5, 3}, rng),
                                             random_tensor({7, 3}, rng)};
    const double err = gradcheck::max_grad_error(
        inputs, [](Tape<double>& t, const std::vector<int>& ids) {
            return t.chamfer(ids[0], ids[1]);
        });
    CHECK(err < kTol);
}

TEST_CASE("leaves without requires_grad receive no adjoint") {
    Tape<double> tape;
    const int a = tape.leaf(Tensor<double>({2}, {1.0, 2.0}), true);
    const int b = tape.leaf(Tensor<double>({2}, {3.0, 4.0}), false);
    tape.backward(tape.sum(tape.add(a, b)));
    CHECK(!tape.adjoint(a).empty());
    CHECK(tape.adjoint(b).empty());
}

TEST_CASE("adam first step matches the closed form") {
    ParamStore<double> store;
    store.add("w", Tensor<double>({3}, {1.0, -2.0, 0.5}));
    const Tensor<double> grad({3}, {0.3, -0.1, 0.0});
    AdamConfig<double> cfg;
    cfg.lr = 0.01;
    cfg.weight_decay = 0.1;
    adam_step(store, {{"w", grad}}, cfg);

    for (std::size_t i = 0; i < 3; ++i) {
        const double theta0 = std::vector<double>{1.0, -2.0, 0.5}[i];
        const double g = grad.data[i] + cfg.weight_decay * theta0;
        // With zero state and bias correction, mhat = g and vhat = g^2.
        const double expect = theta0 - cfg.lr * g / (std::abs(g) + cfg.eps);
        CHECK(store.get("w").data[i] == doctest::Approx(expect).epsilon(1e-14));
    }
    CHECK(store.step == 1);
}

TEST_CASE("adam rejects unknown names and mismatched shapes") {
    ParamStore<double> store;
    store.add("w", Tensor<double>::zeros({2}));
    AdamConfig<double> cfg;
    CHECK_THROWS_AS(adam_step(store, {{"nope", Tensor<double>::zeros({2})}}, cfg),
                    Error);
    CHECK_THROWS_AS(adam_step(store, {{"w", Tensor<double>::zeros({3})}}, cfg),
                    Error);
}

TEST_CASE("reconstruction loss gradient matches finite differences") {
    NetConfig net;
    net.d = 8;
    net.k = 3;
    net.blocks = 2;
    const DecoderConfig dec{net.d, 5, 16};
    const PointCloud cloud = random_cloud(24, 900);
    const NeighborGraph graph = build_knn_graph(cloud, net.k, 1);
    const std::vector<std::uint32_t> queries{0, 5, 9};

    ParamStore<double> store;
    Rng init(901);
    init_descriptor_params(store, net, "teacher", init);
    init_decoder_params(store, dec, "decoder", init);
    // Knock the zero-initialized biases off the leaky_relu kink, where
    // central differences average the two slopes.
    for (auto& [name, entry] : store.params)
        for (double& v : entry.value.data)
            v += 0.05 * init.normal();

    Tape<double> tape;
    BoundParams<double> bound(tape, store, true);
    const int loss =
        reconstruction_loss(tape, bound, cloud, graph, net, dec, queries);
    tape.backward(loss);

    Rng pick(902);
    const double err = gradcheck::max_param_grad_error(
        store, bound.collect_grads(),
        [&](const ParamStore<double>& probe) {
            Tape<double> t2;
            BoundParams<double> b2(t2, probe, false);
            return t2
                .value(reconstruction_loss(t2, b2, cloud, graph, net, dec, queries))
                .data[0];
        },
        pick, 4, 1e-5);
    CHECK(err < kTol);
}

TEST_CASE("student regression loss gradient matches finite differences") {
    NetConfig net;
    net.d = 8;
    net.k = 3;
    net.blocks = 2;
    const PointCloud cloud = random_cloud(20, 910);
    const NeighborGraph graph = build_knn_graph(cloud, net.k, 1);

    ParamStore<double> store;
    Rng init(911);
    init_descriptor_params(store, net, "student", init);
    for (auto& [name, entry] : store.params)
        for (double& v : entry.value.data)
            v += 0.05 * init.normal();
    Rng trng(912);
    const Tensor<double> target = random_tensor({cloud.size(), net.d}, trng);

    Tape<double> tape;
    BoundParams<double> bound(tape, store, true);
    const int loss =
        student_regression_loss(tape, bound, cloud, graph, net, target);
    tape.backward(loss);

    Rng pick(913);
    const double err = gradcheck::max_param_grad_error(
        store, bound.collect_grads(),
        [&](const ParamStore<double>& probe) {
            Tape<double> t2;
            BoundParams<double> b2(t2, probe, false);
            return t2
                .value(student_regression_loss(t2, b2, cloud, graph, net, target))
                .data[0];
        },
        pick, 4, 1e-5);
    CHECK(err < kTol);
}

// Finite-difference gradient checking shared by the unit tests and the
// acceptance suite. Everything runs in double precision.
#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "rng.hpp"
#include "tape.hpp"

namespace gradcheck {

// Builds a scalar loss from one leaf per input tensor.
using Builder =
    std::function<int(geost::Tape<double>&, const std::vector<int>&)>;

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({1e-6, std::abs(a), std::abs(b)});
}

// Max relative error between reverse-mode and central-difference gradients
// over every element of every input.
inline double max_grad_error(const std::vector<geost::Tensor<double>>& inputs,
                             const Builder& build, double h = 1e-6) {
    geost::Tape<double> tape;
    std::vector<int> ids;
    for (const auto& t : inputs)
        ids.push_back(tape.leaf(t, true));
    const int loss = build(tape, ids);
    tape.backward(loss);

    auto eval = [&](const std::vector<geost::Tensor<double>>& xs) {
        geost::Tape<double> t2;
        std::vector<int> id2;
        for (const auto& x : xs)
            id2.push_back(t2.leaf(x, true));
        return t2.value(build(t2, id2)).data[0];
    };

    double worst = 0.0;
    for (std::size_t ii = 0; ii < inputs.size(); ++ii) {
        const geost::Tensor<double>& adjoint = tape.adjoint(ids[ii]);
        for (std::size_t e = 0; e < inputs[ii].size(); ++e) {
            std::vector<geost::Tensor<double>> xs = inputs;
            const double step = h * std::max(1.0, std::abs(xs[ii].data[e]));
            xs[ii].data[e] = inputs[ii].data[e] + step;
            const double fp = eval(xs);
            xs[ii].data[e] = inputs[ii].data[e] - step;
            const double fm = eval(xs);
            const double fd = (fp - fm) / (2.0 * step);
            const double ad = adjoint.empty() ? 0.0 : adjoint.data[e];
            worst = std::max(worst, rel_err(ad, fd));
        }
    }
    return worst;
}

// Checks parameter-space gradients of a loss defined over a ParamStore:
// `loss_of` rebuilds the loss from scratch on a store copy. Samples
// `samples` random elements per parameter. A probe that disagrees is retried
// with smaller steps: an activation kink inside the FD interval makes the
// central difference average two slopes, and shrinking the interval moves it
// off the kink, while a genuinely wrong gradient disagrees at every scale.
inline double max_param_grad_error(
    const geost::ParamStore<double>& store,
    const std::map<std::string, geost::Tensor<double>>& grads,
    const std::function<double(const geost::ParamStore<double>&)>& loss_of,
    geost::Rng& rng, std::size_t samples, double h = 1e-6) {
    double worst = 0.0;
    for (const auto& [name, grad] : grads) {
        for (std::size_t s = 0; s < samples; ++s) {
            const std::size_t e = rng.index(grad.size());
            geost::ParamStore<double> probe = store;
            double& slot = probe.params.at(name).value.data[e];
            const double base = slot;
            double err = std::numeric_limits<double>::infinity();
            for (double scale : {1.0, 0.1, 0.01}) {
                const double step = scale * h * std::max(1.0, std::abs(base));
                slot = base + step;
                const double fp = loss_of(probe);
                slot = base - step;
                const double fm = loss_of(probe);
                slot = base;
                const double fd = (fp - fm) / (2.0 * step);
                err = std::min(err, rel_err(grad.data[e], fd));
                if (err < 1e-6)
                    break;
            }
            worst = std::max(worst, err);
        }
    }
    return worst;
}

}  // namespace gradcheck

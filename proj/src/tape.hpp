#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "error.hpp"

namespace geost {

template <typename T>
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<T> data;

    Tensor() = default;
    Tensor(std::vector<std::size_t> s, std::vector<T> d)
        : shape(std::move(s)), data(std::move(d)) {}

    static Tensor zeros(std::vector<std::size_t> s) {
        std::size_t n = 1;
        for (std::size_t d : s)
            n *= d;
        return Tensor(std::move(s), std::vector<T>(n, T(0)));
    }

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t last_dim() const { return shape.empty() ? 1 : shape.back(); }
    std::size_t rows() const {
        std::size_t r = 1;
        for (std::size_t i = 0; i + 1 < shape.size(); ++i)
            r *= shape[i];
        return r;
    }
    bool empty() const { return data.empty(); }
};

// Reverse-mode tape over the fixed primitive set the descriptor network
// needs. Values are computed eagerly at node creation; backward() fills the
// adjoint buffers in one reverse sweep. Single writer per tape.
template <typename T>
class Tape {
public:
    int leaf(Tensor<T> value, bool requires_grad = false) {
        return push(Op::leaf, std::move(value), -1, -1, -1, requires_grad);
    }

    // Row-wise x*W + b. x: [R, in] (higher ranks collapse to rows),
    // W: [in, out], b: [out].
    int affine(int x, int w, int b) {
        const Tensor<T>& xv = value(x);
        const Tensor<T>& wv = value(w);
        const Tensor<T>& bv = value(b);
        require(wv.rank() == 2, ErrorCode::invalid_argument, "affine: W must be 2D");
        const std::size_t in = wv.shape[0];
        const std::size_t out = wv.shape[1];
        require(xv.last_dim() == in, ErrorCode::invalid_argument,
                "affine: input width does not match W");
        require(bv.size() == out, ErrorCode::invalid_argument,
                "affine: bias width does not match W");
        const std::size_t rows = xv.rows();

        std::vector<std::size_t> shape(xv.shape);
        if (shape.empty())
            shape = {1};
        shape.back() = out;
        Tensor<T> y = Tensor<T>::zeros(shape);
        for (std::size_t r = 0; r < rows; ++r) {
            const T* xr = xv.data.data() + r * in;
            T* yr = y.data.data() + r * out;
            for (std::size_t c = 0; c < out; ++c)
                yr[c] = bv.data[c];
            for (std::size_t i = 0; i < in; ++i) {
                const T xi = xr[i];
                const T* wrow = wv.data.data() + i * out;
                for (std::size_t c = 0; c < out; ++c)
                    yr[c] += xi * wrow[c];
            }
        }
        return push(Op::affine, std::move(y), x, w, b);
    }

    // max(x, slope*x); the subgradient at exactly 0 is 1.
    int leaky_relu(int x, T slope) {
        require(slope > T(0) && slope < T(1), ErrorCode::invalid_argument,
                "leaky_relu: slope must be in (0, 1)");
        Tensor<T> y = value(x);
        for (T& v : y.data)
            if (v < T(0))
                v *= slope;
        int id = push(Op::leaky_relu, std::move(y), x);
        nodes_[id].scalar = slope;
        return id;
    }

    // out[i,j] = x[idx[i*k+j]]; x: [n, d] -> [q, k, d].
    int gather_rows(int x, std::vector<std::uint32_t> idx, std::size_t k) {
        const Tensor<T>& xv = value(x);
        require(xv.rank() == 2, ErrorCode::invalid_argument,
                "gather_rows: input must be 2D");
        require(k >= 1 && idx.size() % k == 0, ErrorCode::invalid_argument,
                "gather_rows: index shape mismatch");
        const std::size_t n = xv.shape[0];
        const std::size_t d = xv.shape[1];
        const std::size_t q = idx.size() / k;
        for (std::uint32_t i : idx)
            require(i < n, ErrorCode::invalid_argument,
                    "gather_rows: index out of range");
        Tensor<T> y = Tensor<T>::zeros({q, k, d});
        for (std::size_t r = 0; r < idx.size(); ++r) {
            const T* src = xv.data.data() + static_cast<std::size_t>(idx[r]) * d;
            T* dst = y.data.data() + r * d;
            for (std::size_t c = 0; c < d; ++c)
                dst[c] = src[c];
        }
        int id = push(Op::gather_rows, std::move(y), x);
        nodes_[id].idx = std::move(idx);
        nodes_[id].aux = k;
        return id;
    }

    // Concatenation along the final axis; leading shapes must agree.
    int concat_last(int a, int b) {
        const Tensor<T>& av = value(a);
        const Tensor<T>& bv = value(b);
        require(av.rank() == bv.rank() && av.rank() >= 1,
                ErrorCode::invalid_argument, "concat_last: rank mismatch");
        for (std::size_t i = 0; i + 1 < av.rank(); ++i)
            require(av.shape[i] == bv.shape[i], ErrorCode::invalid_argument,
                    "concat_last: leading shape mismatch");
        const std::size_t rows = av.rows();
        const std::size_t da = av.last_dim();
        const std::size_t db = bv.last_dim();
        std::vector<std::size_t> shape(av.shape);
        shape.back() = da + db;
        Tensor<T> y = Tensor<T>::zeros(shape);
        for (std::size_t r = 0; r < rows; ++r) {
            T* dst = y.data.data() + r * (da + db);
            const T* sa = av.data.data() + r * da;
            const T* sb = bv.data.data() + r * db;
            for (std::size_t c = 0; c < da; ++c)
                dst[c] = sa[c];
            for (std::size_t c = 0; c < db; ++c)
                dst[da + c] = sb[c];
        }
        return push(Op::concat_last, std::move(y), a, b);
    }

    // Mean over the middle axis: [n, k, d] -> [n, d].
    int mean_pool_neighbors(int x) {
        const Tensor<T>& xv = value(x);
        require(xv.rank() == 3, ErrorCode::invalid_argument,
                "mean_pool_neighbors: input must be 3D");
        const std::size_t n = xv.shape[0];
        const std::size_t k = xv.shape[1];
        const std::size_t d = xv.shape[2];
        require(k >= 1, ErrorCode::invalid_argument, "mean_pool_neighbors: k must be >= 1");
        Tensor<T> y = Tensor<T>::zeros({n, d});
        const T inv = T(1) / static_cast<T>(k);
        for (std::size_t i = 0; i < n; ++i) {
            T* dst = y.data.data() + i * d;
            for (std::size_t j = 0; j < k; ++j) {
                const T* src = xv.data.data() + (i * k + j) * d;
                for (std::size_t c = 0; c < d; ++c)
                    dst[c] += src[c];
            }
            for (std::size_t c = 0; c < d; ++c)
                dst[c] *= inv;
        }
        return push(Op::mean_pool, std::move(y), x);
    }

    int add(int a, int b) { return binary_elementwise(Op::add, a, b); }
    int sub(int a, int b) { return binary_elementwise(Op::sub, a, b); }

    // Symmetric squared Chamfer distance, mean-reduced per side.
    // A: [a, 3], B: [b, 3] -> scalar. Argmin ties break to the lowest index.
    int chamfer(int a, int b) {
        const Tensor<T>& av = value(a);
        const Tensor<T>& bv = value(b);
        require(av.rank() == 2 && av.shape[1] == 3, ErrorCode::invalid_argument,
                "chamfer: A must be [a, 3]");
        require(bv.rank() == 2 && bv.shape[1] == 3, ErrorCode::invalid_argument,
                "chamfer: B must be [b, 3]");
        const std::size_t na = av.shape[0];
        const std::size_t nb = bv.shape[0];
        require(na >= 1 && nb >= 1, ErrorCode::invalid_argument,
                "chamfer: empty point set");

        std::vector<std::uint32_t> pairing(na + nb, 0);
        T total = T(0);
        for (std::size_t i = 0; i < na; ++i) {
            const T* pa = av.data.data() + i * 3;
            T best = T(0);
            std::size_t best_j = 0;
            for (std::size_t j = 0; j < nb; ++j) {
                const T* pb = bv.data.data() + j * 3;
                const T dx = pa[0] - pb[0];
                const T dy = pa[1] - pb[1];
                const T dz = pa[2] - pb[2];
                const T d2 = dx * dx + dy * dy + dz * dz;
                if (j == 0 || d2 < best) {
                    best = d2;
                    best_j = j;
                }
            }
            pairing[i] = static_cast<std::uint32_t>(best_j);
            total += best / static_cast<T>(na);
        }
        for (std::size_t j = 0; j < nb; ++j) {
            const T* pb = bv.data.data() + j * 3;
            T best = T(0);
            std::size_t best_i = 0;
            for (std::size_t i = 0; i < na; ++i) {
                const T* pa = av.data.data() + i * 3;
                const T dx = pa[0] - pb[0];
                const T dy = pa[1] - pb[1];
                const T dz = pa[2] - pb[2];
                const T d2 = dx * dx + dy * dy + dz * dz;
                if (i == 0 || d2 < best) {
                    best = d2;
                    best_i = i;
                }
            }
            pairing[na + j] = static_cast<std::uint32_t>(best_i);
            total += best / static_cast<T>(nb);
        }
        Tensor<T> y({1}, {total});
        int id = push(Op::chamfer, std::move(y), a, b);
        nodes_[id].idx = std::move(pairing);
        return id;
    }

    // Per-row squared L2 norm: [n, d] -> [n].
    int squared_l2_rows(int x) {
        const Tensor<T>& xv = value(x);
        require(xv.rank() == 2, ErrorCode::invalid_argument,
                "squared_l2_rows: input must be 2D");
        const std::size_t n = xv.shape[0];
        const std::size_t d = xv.shape[1];
        Tensor<T> y = Tensor<T>::zeros({n});
        for (std::size_t i = 0; i < n; ++i) {
            const T* xr = xv.data.data() + i * d;
            T acc = T(0);
            for (std::size_t c = 0; c < d; ++c)
                acc += xr[c] * xr[c];
            y.data[i] = acc;
        }
        return push(Op::squared_l2_rows, std::move(y), x);
    }

    // Per-row L2 norm: [n, d] -> [n]; gradient at a zero row is 0.
    int l2_rows(int x) {
        const Tensor<T>& xv = value(x);
        require(xv.rank() == 2, ErrorCode::invalid_argument,
                "l2_rows: input must be 2D");
        const std::size_t n = xv.shape[0];
        const std::size_t d = xv.shape[1];
        Tensor<T> y = Tensor<T>::zeros({n});
        for (std::size_t i = 0; i < n; ++i) {
            const T* xr = xv.data.data() + i * d;
            T acc = T(0);
            for (std::size_t c = 0; c < d; ++c)
                acc += xr[c] * xr[c];
            y.data[i] = std::sqrt(acc);
        }
        return push(Op::l2_rows, std::move(y), x);
    }

    int sum(int x) {
        const Tensor<T>& xv = value(x);
        T acc = T(0);
        for (T v : xv.data)
            acc += v;
        Tensor<T> y({1}, {acc});
        return push(Op::sum, std::move(y), x);
    }

    int scale(int x, T c) {
        Tensor<T> y = value(x);
        for (T& v : y.data)
            v *= c;
        int id = push(Op::scale, std::move(y), x);
        nodes_[id].scalar = c;
        return id;
    }

    int reshape(int x, std::vector<std::size_t> shape) {
        Tensor<T> y(shape, value(x).data);
        std::size_t n = 1;
        for (std::size_t d : shape)
            n *= d;
        require(n == y.data.size(), ErrorCode::invalid_argument,
                "reshape: element count mismatch");
        return push(Op::reshape, std::move(y), x);
    }

    // Row slice [r0, r1) of a 2D tensor.
    int slice_rows(int x, std::size_t r0, std::size_t r1) {
        const Tensor<T>& xv = value(x);
        require(xv.rank() == 2 && r0 < r1 && r1 <= xv.shape[0],
                ErrorCode::invalid_argument, "slice_rows: bad range");
        const std::size_t d = xv.shape[1];
        Tensor<T> y({r1 - r0, d},
                    std::vector<T>(xv.data.begin() + r0 * d,
                                   xv.data.begin() + r1 * d));
        int id = push(Op::slice_rows, std::move(y), x);
        nodes_[id].aux = r0;
        return id;
    }

    void backward(int loss) {
        require(loss >= 0 && static_cast<std::size_t>(loss) < nodes_.size(),
                ErrorCode::invalid_argument, "backward: bad loss node");
        require(value(loss).size() == 1, ErrorCode::invalid_argument,
                "backward: loss must be scalar");
        adjoints_.assign(nodes_.size(), Tensor<T>());
        adj(loss).data[0] = T(1);
        for (int id = loss; id >= 0; --id) {
            if (adjoints_[id].empty())
                continue;
            propagate(id);
        }
    }

    const Tensor<T>& value(int id) const { return values_.at(id); }

    const Tensor<T>& adjoint(int id) const {
        static const Tensor<T> empty;
        if (static_cast<std::size_t>(id) >= adjoints_.size() ||
            adjoints_[id].empty())
            return empty;
        return adjoints_[id];
    }

    std::size_t num_nodes() const { return nodes_.size(); }

private:
    enum class Op {
        leaf,
        affine,
        leaky_relu,
        gather_rows,
        concat_last,
        mean_pool,
        add,
        sub,
        chamfer,
        squared_l2_rows,
        l2_rows,
        sum,
        scale,
        reshape,
        slice_rows,
    };

    struct Node {
        Op op;
        int in0 = -1, in1 = -1, in2 = -1;
        T scalar = T(0);
        std::size_t aux = 0;
        std::vector<std::uint32_t> idx;
        bool needs = false;
    };

    int binary_elementwise(Op op, int a, int b) {
        const Tensor<T>& av = value(a);
        const Tensor<T>& bv = value(b);
        require(av.shape == bv.shape, ErrorCode::invalid_argument,
                "add/sub: shape mismatch");
        Tensor<T> y = av;
        if (op == Op::add) {
            for (std::size_t i = 0; i < y.data.size(); ++i)
                y.data[i] += bv.data[i];
        } else {
            for (std::size_t i = 0; i < y.data.size(); ++i)
                y.data[i] -= bv.data[i];
        }
        return push(op, std::move(y), a, b);
    }

    int push(Op op, Tensor<T> v, int in0 = -1, int in1 = -1, int in2 = -1,
             bool leaf_needs = false) {
        Node node;
        node.op = op;
        node.in0 = in0;
        node.in1 = in1;
        node.in2 = in2;
        node.needs = leaf_needs;
        for (int in : {in0, in1, in2})
            if (in >= 0 && nodes_[in].needs)
                node.needs = true;
        nodes_.push_back(std::move(node));
        values_.push_back(std::move(v));
        return static_cast<int>(nodes_.size()) - 1;
    }

    Tensor<T>& adj(int id) {
        if (adjoints_[id].empty())
            adjoints_[id] = Tensor<T>::zeros(values_[id].shape);
        return adjoints_[id];
    }

    bool wants(int id) const { return id >= 0 && nodes_[id].needs; }

    void propagate(int id) {
        const Node& nd = nodes_[id];
        const Tensor<T>& g = adjoints_[id];
        switch (nd.op) {
        case Op::leaf:
            break;
        case Op::affine: {
            const Tensor<T>& xv = values_[nd.in0];
            const Tensor<T>& wv = values_[nd.in1];
            const std::size_t in = wv.shape[0];
            const std::size_t out = wv.shape[1];
            const std::size_t rows = xv.rows();
            if (wants(nd.in0)) {
                Tensor<T>& gx = adj(nd.in0);
                for (std::size_t r = 0; r < rows; ++r) {
                    const T* gr = g.data.data() + r * out;
                    T* gxr = gx.data.data() + r * in;
                    for (std::size_t i = 0; i < in; ++i) {
                        const T* wrow = wv.data.data() + i * out;
                        T acc = T(0);
                        for (std::size_t c = 0; c < out; ++c)
                            acc += gr[c] * wrow[c];
                        gxr[i] += acc;
                    }
                }
            }
            if (wants(nd.in1)) {
                Tensor<T>& gw = adj(nd.in1);
                for (std::size_t r = 0; r < rows; ++r) {
                    const T* xr = xv.data.data() + r * in;
                    const T* gr = g.data.data() + r * out;
                    for (std::size_t i = 0; i < in; ++i) {
                        const T xi = xr[i];
                        T* gwrow = gw.data.data() + i * out;
                        for (std::size_t c = 0; c < out; ++c)
                            gwrow[c] += xi * gr[c];
                    }
                }
            }
            if (wants(nd.in2)) {
                Tensor<T>& gb = adj(nd.in2);
                for (std::size_t r = 0; r < rows; ++r) {
                    const T* gr = g.data.data() + r * out;
                    for (std::size_t c = 0; c < out; ++c)
                        gb.data[c] += gr[c];
                }
            }
            break;
        }
        case Op::leaky_relu: {
            if (!wants(nd.in0))
                break;
            const Tensor<T>& xv = values_[nd.in0];
            Tensor<T>& gx = adj(nd.in0);
            for (std::size_t i = 0; i < xv.data.size(); ++i)
                gx.data[i] += xv.data[i] < T(0) ? g.data[i] * nd.scalar : g.data[i];
            break;
        }
        case Op::gather_rows: {
            if (!wants(nd.in0))
                break;
            Tensor<T>& gx = adj(nd.in0);
            const std::size_t d = gx.shape[1];
            for (std::size_t r = 0; r < nd.idx.size(); ++r) {
                T* dst = gx.data.data() + static_cast<std::size_t>(nd.idx[r]) * d;
                const T* src = g.data.data() + r * d;
                for (std::size_t c = 0; c < d; ++c)
                    dst[c] += src[c];
            }
            break;
        }
        case Op::concat_last: {
            const std::size_t da = values_[nd.in0].last_dim();
            const std::size_t db = values_[nd.in1].last_dim();
            const std::size_t rows = values_[nd.in0].rows();
            if (wants(nd.in0)) {
                Tensor<T>& ga = adj(nd.in0);
                for (std::size_t r = 0; r < rows; ++r) {
                    const T* src = g.data.data() + r * (da + db);
                    T* dst = ga.data.data() + r * da;
                    for (std::size_t c = 0; c < da; ++c)
                        dst[c] += src[c];
                }
            }
            if (wants(nd.in1)) {
                Tensor<T>& gb = adj(nd.in1);
                for (std::size_t r = 0; r < rows; ++r) {
                    const T* src = g.data.data() + r * (da + db) + da;
                    T* dst = gb.data.data() + r * db;
                    for (std::size_t c = 0; c < db; ++c)
                        dst[c] += src[c];
                }
            }
            break;
        }
        case Op::mean_pool: {
            if (!wants(nd.in0))
                break;
            Tensor<T>& gx = adj(nd.in0);
            const std::size_t n = gx.shape[0];
            const std::size_t k = gx.shape[1];
            const std::size_t d = gx.shape[2];
            const T inv = T(1) / static_cast<T>(k);
            for (std::size_t i = 0; i < n; ++i) {
                const T* src = g.data.data() + i * d;
                for (std::size_t j = 0; j < k; ++j) {
                    T* dst = gx.data.data() + (i * k + j) * d;
                    for (std::size_t c = 0; c < d; ++c)
                        dst[c] += src[c] * inv;
                }
            }
            break;
        }
        case Op::add: {
            for (int in : {nd.in0, nd.in1}) {
                if (!wants(in))
                    continue;
                Tensor<T>& gi = adj(in);
                for (std::size_t i = 0; i < g.data.size(); ++i)
                    gi.data[i] += g.data[i];
            }
            break;
        }
        case Op::sub: {
            if (wants(nd.in0)) {
                Tensor<T>& ga = adj(nd.in0);
                for (std::size_t i = 0; i < g.data.size(); ++i)
                    ga.data[i] += g.data[i];
            }
            if (wants(nd.in1)) {
                Tensor<T>& gb = adj(nd.in1);
                for (std::size_t i = 0; i < g.data.size(); ++i)
                    gb.data[i] -= g.data[i];
            }
            break;
        }
        case Op::chamfer: {
            const Tensor<T>& av = values_[nd.in0];
            const Tensor<T>& bv = values_[nd.in1];
            const std::size_t na = av.shape[0];
            const std::size_t nb = bv.shape[0];
            const T g0 = g.data[0];
            const T ca = T(2) * g0 / static_cast<T>(na);
            const T cb = T(2) * g0 / static_cast<T>(nb);
            const bool wa = wants(nd.in0);
            const bool wb = wants(nd.in1);
            if (!wa && !wb)
                break;
            Tensor<T>* ga = wa ? &adj(nd.in0) : nullptr;
            Tensor<T>* gb = wb ? &adj(nd.in1) : nullptr;
            for (std::size_t i = 0; i < na; ++i) {
                const std::size_t j = nd.idx[i];
                const T* pa = av.data.data() + i * 3;
                const T* pb = bv.data.data() + j * 3;
                for (int c = 0; c < 3; ++c) {
                    const T diff = (pa[c] - pb[c]) * ca;
                    if (ga)
                        ga->data[i * 3 + c] += diff;
                    if (gb)
                        gb->data[j * 3 + c] -= diff;
                }
            }
            for (std::size_t j = 0; j < nb; ++j) {
                const std::size_t i = nd.idx[na + j];
                const T* pa = av.data.data() + i * 3;
                const T* pb = bv.data.data() + j * 3;
                for (int c = 0; c < 3; ++c) {
                    const T diff = (pa[c] - pb[c]) * cb;
                    if (ga)
                        ga->data[i * 3 + c] += diff;
                    if (gb)
                        gb->data[j * 3 + c] -= diff;
                }
            }
            break;
        }
        case Op::squared_l2_rows: {
            if (!wants(nd.in0))
                break;
            const Tensor<T>& xv = values_[nd.in0];
            Tensor<T>& gx = adj(nd.in0);
            const std::size_t d = xv.shape[1];
            for (std::size_t i = 0; i < xv.shape[0]; ++i) {
                const T gi = g.data[i];
                for (std::size_t c = 0; c < d; ++c)
                    gx.data[i * d + c] += T(2) * xv.data[i * d + c] * gi;
            }
            break;
        }
        case Op::l2_rows: {
            if (!wants(nd.in0))
                break;
            const Tensor<T>& xv = values_[nd.in0];
            const Tensor<T>& yv = values_[id];
            Tensor<T>& gx = adj(nd.in0);
            const std::size_t d = xv.shape[1];
            for (std::size_t i = 0; i < xv.shape[0]; ++i) {
                if (yv.data[i] == T(0))
                    continue;
                const T gi = g.data[i] / yv.data[i];
                for (std::size_t c = 0; c < d; ++c)
                    gx.data[i * d + c] += xv.data[i * d + c] * gi;
            }
            break;
        }
        case Op::sum: {
            if (!wants(nd.in0))
                break;
            Tensor<T>& gx = adj(nd.in0);
            const T g0 = g.data[0];
            for (T& v : gx.data)
                v += g0;
            break;
        }
        case Op::scale: {
            if (!wants(nd.in0))
                break;
            Tensor<T>& gx = adj(nd.in0);
            for (std::size_t i = 0; i < g.data.size(); ++i)
                gx.data[i] += g.data[i] * nd.scalar;
            break;
        }
        case Op::reshape: {
            if (!wants(nd.in0))
                break;
            Tensor<T>& gx = adj(nd.in0);
            for (std::size_t i = 0; i < g.data.size(); ++i)
                gx.data[i] += g.data[i];
            break;
        }
        case Op::slice_rows: {
            if (!wants(nd.in0))
                break;
            Tensor<T>& gx = adj(nd.in0);
            const std::size_t d = gx.shape[1];
            const std::size_t offset = nd.aux * d;
            for (std::size_t i = 0; i < g.data.size(); ++i)
                gx.data[offset + i] += g.data[i];
            break;
        }
        }
    }

    std::vector<Node> nodes_;
    std::vector<Tensor<T>> values_;
    std::vector<Tensor<T>> adjoints_;
};

// Named trainable tensors with per-parameter Adam state.
template <typename T>
struct ParamStore {
    struct Entry {
        Tensor<T> value;
        Tensor<T> m;
        Tensor<T> v;
    };

    std::map<std::string, Entry> params;
    std::int64_t step = 0;

    Tensor<T>& add(const std::string& name, Tensor<T> init) {
        require(!params.count(name), ErrorCode::invalid_argument,
                "ParamStore: duplicate parameter " + name);
        Entry e;
        e.m = Tensor<T>::zeros(init.shape);
        e.v = Tensor<T>::zeros(init.shape);
        e.value = std::move(init);
        return params.emplace(name, std::move(e)).first->second.value;
    }

    const Tensor<T>& get(const std::string& name) const {
        auto it = params.find(name);
        require(it != params.end(), ErrorCode::invalid_argument,
                "ParamStore: unknown parameter " + name);
        return it->second.value;
    }
};

template <typename T>
struct AdamConfig {
    T lr = T(1e-3);
    T weight_decay = T(0);
    T beta1 = T(0.9);
    T beta2 = T(0.999);
    T eps = T(1e-8);
};

// Bias-corrected Adam with classic L2-coupled weight decay (wd * theta added
// to the gradient).
template <typename T>
void adam_step(ParamStore<T>& store,
               const std::map<std::string, Tensor<T>>& grads,
               const AdamConfig<T>& cfg) {
    store.step += 1;
    const T bc1 = T(1) - std::pow(cfg.beta1, static_cast<T>(store.step));
    const T bc2 = T(1) - std::pow(cfg.beta2, static_cast<T>(store.step));
    for (const auto& [name, grad] : grads) {
        auto it = store.params.find(name);
        require(it != store.params.end(), ErrorCode::invalid_argument,
                "adam_step: unknown parameter " + name);
        auto& entry = it->second;
        require(grad.shape == entry.value.shape, ErrorCode::invalid_argument,
                "adam_step: gradient shape mismatch for " + name);
        for (std::size_t i = 0; i < grad.data.size(); ++i) {
            const T g = grad.data[i] + cfg.weight_decay * entry.value.data[i];
            entry.m.data[i] = cfg.beta1 * entry.m.data[i] + (T(1) - cfg.beta1) * g;
            entry.v.data[i] =
                cfg.beta2 * entry.v.data[i] + (T(1) - cfg.beta2) * g * g;
            const T mhat = entry.m.data[i] / bc1;
            const T vhat = entry.v.data[i] / bc2;
            entry.value.data[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

}  // namespace geost

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "plmforge/errors.hpp"
#include "plmforge/numerics/kernels.hpp"
#include "plmforge/numerics/tensor.hpp"

namespace plmforge::num {

struct VarId {
    std::uint32_t v = 0;
};

// Reverse-mode gradient tape. Ops append nodes in evaluation order, which is
// a valid topological order, so backward() is a single reverse sweep that
// visits each node exactly once. One tape per training step, single-threaded.
template <typename T>
class Tape {
public:
    using BackwardFn = std::function<void(Tape&)>;

    VarId leaf(Tensor<T> value) {
        return push(std::move(value), nullptr);
    }

    VarId push(Tensor<T> value, BackwardFn backward) {
        Node n;
        n.grad = Tensor<T>(value.shape());
        n.value = std::move(value);
        n.backward = std::move(backward);
        nodes_.push_back(std::move(n));
        return VarId{static_cast<std::uint32_t>(nodes_.size() - 1)};
    }

    const Tensor<T>& value(VarId id) const { return nodes_[id.v].value; }
    Tensor<T>& grad(VarId id) { return nodes_[id.v].grad; }
    const Tensor<T>& grad(VarId id) const { return nodes_[id.v].grad; }

    std::size_t size() const { return nodes_.size(); }

    // Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse creation
    // order. Leaves that do not reach the loss keep their zero gradient.
    void backward(VarId loss) {
        if (!nodes_[loss.v].value.is_scalar()) {
            throw ContractError("backward() requires a scalar loss");
        }
        nodes_[loss.v].grad.at(0) = T(1);
        for (std::size_t i = nodes_.size(); i-- > 0;) {
            if (nodes_[i].backward) nodes_[i].backward(*this);
        }
    }

    void reset() { nodes_.clear(); }

private:
    struct Node {
        Tensor<T> value;
        Tensor<T> grad;
        BackwardFn backward;
    };

    std::vector<Node> nodes_;
};

namespace detail {

template <typename T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(op) + ": shape mismatch " +
                         Tensor<T>::shape_str(a.shape()) + " vs " +
                         Tensor<T>::shape_str(b.shape()));
    }
}

} // namespace detail

template <typename T>
VarId add(Tape<T>& t, VarId a, VarId b) {
    const auto& av = t.value(a);
    const auto& bv = t.value(b);
    detail::check_same_shape(av, bv, "add");
    Tensor<T> out(av.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out.at(i) = av.at(i) + bv.at(i);
    return t.push(std::move(out), [a, b, id = t.size()](Tape<T>& tp) {
        const auto& g = tp.grad(VarId{static_cast<std::uint32_t>(id)});
        auto& ga = tp.grad(a);
        auto& gb = tp.grad(b);
        for (std::size_t i = 0; i < g.numel(); ++i) {
            ga.at(i) += g.at(i);
            gb.at(i) += g.at(i);
        }
    });
}

// a[m,n] + bias[n] broadcast over rows; the only sanctioned broadcast.
template <typename T>
VarId add_row_bias(Tape<T>& t, VarId a, VarId bias) {
    const auto& av = t.value(a);
    const auto& bv = t.value(bias);
    if (av.rank() != 2 || bv.rank() != 1 || av.cols() != bv.numel()) {
        throw ShapeError("add_row_bias: need [m,n] plus [n]");
    }
    const std::size_t m = av.rows(), n = av.cols();
    Tensor<T> out(av.shape());
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) out.at(i, j) = av.at(i, j) + bv.at(j);
    }
    return t.push(std::move(out), [a, bias, m, n, id = t.size()](Tape<T>& tp) {
        const auto& g = tp.grad(VarId{static_cast<std::uint32_t>(id)});
        auto& ga = tp.grad(a);
        auto& gb = tp.grad(bias);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                ga.at(i, j) += g.at(i, j);
                gb.at(j) += g.at(i, j);
            }
        }
    });
}

template <typename T>
VarId hadamard(Tape<T>& t, VarId a, VarId b) {
    const auto& av = t.value(a);
    const auto& bv = t.value(b);
    detail::check_same_shape(av, bv, "hadamard");
    Tensor<T> out(av.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out.at(i) = av.at(i) * bv.at(i);
    return t.push(std::move(out), [a, b, id = t.size()](Tape<T>& tp) {
        const auto out_id = VarId{static_cast<std::uint32_t>(id)};
        const auto& g = tp.grad(out_id);
        const auto& av2 = tp.value(a);
        const auto& bv2 = tp.value(b);
        auto& ga = tp.grad(a);
        auto& gb = tp.grad(b);
        for (std::size_t i = 0; i < g.numel(); ++i) {
            ga.at(i) += g.at(i) * bv2.at(i);
            gb.at(i) += g.at(i) * av2.at(i);
        }
    });
}

template <typename T>
VarId scale(Tape<T>& t, VarId a, T c) {
    const auto& av = t.value(a);
    Tensor<T> out(av.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out.at(i) = av.at(i) * c;
    return t.push(std::move(out), [a, c, id = t.size()](Tape<T>& tp) {
        const auto& g = tp.grad(VarId{static_cast<std::uint32_t>(id)});
        auto& ga = tp.grad(a);
        for (std::size_t i = 0; i < g.numel(); ++i) ga.at(i) += g.at(i) * c;
    });
}

template <typename T>
VarId matmul(Tape<T>& t, VarId a, VarId b) {
    const auto& av = t.value(a);
    const auto& bv = t.value(b);
    if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.rows()) {
        throw ShapeError("matmul: inner dimensions do not match, " +
                         Tensor<T>::shape_str(av.shape()) + " x " +
                         Tensor<T>::shape_str(bv.shape()));
    }
    const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
    Tensor<T> out({m, n});
    gemm_nn(m, k, n, av.data(), bv.data(), out.data());
    return t.push(std::move(out), [a, b, m, k, n, id = t.size()](Tape<T>& tp) {
        const auto& g = tp.grad(VarId{static_cast<std::uint32_t>(id)});
        // dA += dC * B^T ; dB += A^T * dC
        gemm_nt(m, n, k, g.data(), tp.value(b).data(), tp.grad(a).data(), true);
        gemm_tn(m, k, n, tp.value(a).data(), g.data(), tp.grad(b).data(), true);
    });
}

// out[m,n] = a[m,k] * b[n,k]^T; used for the tied LM head.
template <typename T>
VarId matmul_nt(Tape<T>& t, VarId a, VarId b) {
    const auto& av = t.value(a);
    const auto& bv = t.value(b);
    if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.cols()) {
        throw ShapeError("matmul_nt: inner dimensions do not match");
    }
    const std::size_t m = av.rows(), k = av.cols(), n = bv.rows();
    Tensor<T> out({m, n});
    gemm_nt(m, k, n, av.data(), bv.data(), out.data());
    return t.push(std::move(out), [a, b, m, k, n, id = t.size()](Tape<T>& tp) {
        const auto& g = tp.grad(VarId{static_cast<std::uint32_t>(id)});
        // dA += dC * B ; dB += dC^T * A
        gemm_nn(m, n, k, g.data(), tp.value(b).data(), tp.grad(a).data(), true);
        gemm_tn(m, n, k, g.data(), tp.value(a).data(), tp.grad(b).data(), true);
    });
}

template <typename T>
VarId gelu(Tape<T>& t, VarId a) {
    const auto& av = t.value(a);
    Tensor<T> out(av.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out.at(i) = gelu_scalar(av.at(i));
    return t.push(std::move(out), [a, id = t.size()](Tape<T>& tp) {
        const auto& g = tp.grad(VarId{static_cast<std::uint32_t>(id)});
        const auto& av2 = tp.value(a);
        auto& ga = tp.grad(a);
        for (std::size_t i = 0; i < g.numel(); ++i) {
            ga.at(i) += g.at(i) * gelu_grad_scalar(av2.at(i));
        }
    });
}

// Softmax along the last axis of a 1-D or 2-D tensor.
template <typename T>
VarId softmax(Tape<T>& t, VarId a) {
    const auto& av = t.value(a);
    if (av.rank() < 1 || av.rank() > 2) throw ShapeError("softmax: 1-D or 2-D input");
    const std::size_t m = av.rows(), n = av.cols();
    Tensor<T> out(av.shape());
    for (std::size_t i = 0; i < m; ++i) {
        softmax_row(av.data() + i * n, out.data() + i * n, n);
    }
    return t.push(std::move(out), [a, m, n, id = t.size()](Tape<T>& tp) {
        const auto out_id = VarId{static_cast<std::uint32_t>(id)};
        const auto& y = tp.value(out_id);
        const auto& g = tp.grad(out_id);
        auto& ga = tp.grad(a);
        for (std::size_t i = 0; i < m; ++i) {
            softmax_row_backward(y.data() + i * n, g.data() + i * n, ga.data() + i * n, n);
        }
    });
}

// Layer norm along the last axis; zero mean / unit variance before the
// gain/bias affine. gain and bias are [n].
template <typename T>
VarId layer_norm(Tape<T>& t, VarId x, VarId gain, VarId bias, T eps = T(1e-5)) {
    const auto& xv = t.value(x);
    if (xv.rank() < 1 || xv.rank() > 2) throw ShapeError("layer_norm: 1-D or 2-D input");
    const std::size_t m = xv.rows(), n = xv.cols();
    if (t.value(gain).numel() != n || t.value(bias).numel() != n) {
        throw ShapeError("layer_norm: gain/bias must match the row width");
    }
    Tensor<T> out(xv.shape());
    auto saved = std::make_shared<std::vector<T>>(2 * m); // mean, rstd per row
    for (std::size_t i = 0; i < m; ++i) {
        layer_norm_row(xv.data() + i * n, t.value(gain).data(), t.value(bias).data(), eps,
                       out.data() + i * n, n, &(*saved)[i], &(*saved)[m + i]);
    }
    return t.push(std::move(out), [x, gain, bias, m, n, saved, id = t.size()](Tape<T>& tp) {
        const auto& g = tp.grad(VarId{static_cast<std::uint32_t>(id)});
        const auto& xv2 = tp.value(x);
        for (std::size_t i = 0; i < m; ++i) {
            layer_norm_row_backward(xv2.data() + i * n, tp.value(gain).data(),
                                    (*saved)[i], (*saved)[m + i], g.data() + i * n,
                                    tp.grad(x).data() + i * n, tp.grad(gain).data(),
                                    tp.grad(bias).data(), n);
        }
    });
}

// Row gather: out[i,:] = table[ids[i],:]. Backward scatter-adds.
template <typename T>
VarId embedding(Tape<T>& t, VarId table, std::vector<std::uint16_t> ids) {
    const auto& tv = t.value(table);
    if (tv.rank() != 2) throw ShapeError("embedding: table must be 2-D");
    const std::size_t v = tv.rows(), d = tv.cols();
    for (auto id : ids) {
        if (id >= v) throw ContractError("embedding: token index out of vocabulary");
    }
    const std::size_t m = ids.size();
    Tensor<T> out({m, d});
    for (std::size_t i = 0; i < m; ++i) {
        const T* src = tv.data() + std::size_t(ids[i]) * d;
        T* dst = out.data() + i * d;
        for (std::size_t j = 0; j < d; ++j) dst[j] = src[j];
    }
    auto ids_p = std::make_shared<std::vector<std::uint16_t>>(std::move(ids));
    return t.push(std::move(out), [table, ids_p, d, id = t.size()](Tape<T>& tp) {
        const auto& g = tp.grad(VarId{static_cast<std::uint32_t>(id)});
        auto& gt = tp.grad(table);
        for (std::size_t i = 0; i < ids_p->size(); ++i) {
            T* dst = gt.data() + std::size_t((*ids_p)[i]) * d;
            const T* src = g.data() + i * d;
            for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
        }
    });
}

template <typename T>
VarId sum(Tape<T>& t, VarId a) {
    const auto& av = t.value(a);
    double acc = 0.0;
    for (std::size_t i = 0; i < av.numel(); ++i) acc += static_cast<double>(av.at(i));
    return t.push(Tensor<T>::scalar(static_cast<T>(acc)), [a, id = t.size()](Tape<T>& tp) {
        const T g = tp.grad(VarId{static_cast<std::uint32_t>(id)}).at(0);
        auto& ga = tp.grad(a);
        for (std::size_t i = 0; i < ga.numel(); ++i) ga.at(i) += g;
    });
}

template <typename T>
VarId mean(Tape<T>& t, VarId a) {
    const std::size_t n = t.value(a).numel();
    return scale(t, sum(t, a), T(1) / T(n));
}

// Masked token-level cross entropy: mean over mask of -ln softmax(logits)[target].
// logits [N,V]; targets, mask are length N. exp(loss) is the batch perplexity.
template <typename T>
VarId cross_entropy_masked(Tape<T>& t, VarId logits,
                           std::vector<std::uint16_t> targets,
                           std::vector<std::uint8_t> mask) {
    const auto& lv = t.value(logits);
    if (lv.rank() != 2) throw ShapeError("cross_entropy: logits must be [N,V]");
    const std::size_t n = lv.rows(), v = lv.cols();
    if (targets.size() != n || mask.size() != n) {
        throw ShapeError("cross_entropy: targets/mask length mismatch");
    }
    std::size_t count = 0;
    for (auto m : mask) count += m ? 1 : 0;
    if (count == 0) throw ContractError("cross_entropy: empty loss mask");

    // Save probabilities for the backward pass; masked rows only.
    auto probs = std::make_shared<Tensor<T>>(std::vector<std::size_t>{n, v});
    double nll_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!mask[i]) continue;
        const T* row = lv.data() + i * v;
        if (targets[i] >= v) throw ContractError("cross_entropy: target out of vocabulary");
        softmax_row(row, probs->data() + i * v, v);
        T mx = row[0];
        for (std::size_t j = 1; j < v; ++j) mx = row[j] > mx ? row[j] : mx;
        T se = T(0);
        for (std::size_t j = 0; j < v; ++j) se += std::exp(row[j] - mx);
        nll_sum += static_cast<double>(std::log(se) + mx - row[targets[i]]);
    }
    const T loss = static_cast<T>(nll_sum / static_cast<double>(count));
    auto tgt = std::make_shared<std::vector<std::uint16_t>>(std::move(targets));
    auto msk = std::make_shared<std::vector<std::uint8_t>>(std::move(mask));
    return t.push(Tensor<T>::scalar(loss),
                  [logits, probs, tgt, msk, n, v, count, id = t.size()](Tape<T>& tp) {
        const T g = tp.grad(VarId{static_cast<std::uint32_t>(id)}).at(0);
        const T w = g / T(count);
        auto& gl = tp.grad(logits);
        for (std::size_t i = 0; i < n; ++i) {
            if (!(*msk)[i]) continue;
            const T* p = probs->data() + i * v;
            T* gi = gl.data() + i * v;
            for (std::size_t j = 0; j < v; ++j) gi[j] += w * p[j];
            gi[(*tgt)[i]] -= w;
        }
    });
}

} // namespace plmforge::num

#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "plmforge/model/params.hpp"
#include "plmforge/numerics/tape.hpp"

namespace plmforge::model {

inline constexpr double kLayerNormEps = 1e-5;

// Rotary table sized for a given number of positions.
template <typename T>
num::RotaryTable<T> make_rotary_table(const ModelConfig& cfg, std::size_t n_pos) {
    return num::RotaryTable<T>(static_cast<std::size_t>(cfg.effective_rotary_dim()), n_pos);
}

// Causal multi-head attention with rotary q/k over a fused QKV activation.
// qkv rows are [q | k | v] of d_model each; positions reset per batch row.
// The same routine backs the tape op, the no-grad forward and (with m=1 rows)
// the incremental sampling session, so all paths share float semantics.
//
// ctx:   [B*S, D] output.
// qrot/krot: [B*S, D] buffers that receive the rotated q/k (kept for backward).
// probs: optional [B, H, S, S] buffer for attention weights (kept for backward).
template <typename T>
void attention_forward(const T* qkv, std::size_t batch, std::size_t seq,
                       std::size_t n_heads, std::size_t head_dim,
                       const num::RotaryTable<T>& rot,
                       T* ctx, T* qrot, T* krot, T* probs) {
    const std::size_t d = n_heads * head_dim;
    const T scale = T(1) / std::sqrt(T(head_dim));

    for (std::size_t r = 0; r < batch * seq; ++r) {
        const T* src = qkv + r * 3 * d;
        T* qr = qrot + r * d;
        T* kr = krot + r * d;
        for (std::size_t j = 0; j < d; ++j) qr[j] = src[j];
        for (std::size_t j = 0; j < d; ++j) kr[j] = src[d + j];
        const std::size_t pos = r % seq;
        for (std::size_t h = 0; h < n_heads; ++h) {
            rot.apply(qr + h * head_dim, pos);
            rot.apply(kr + h * head_dim, pos);
        }
    }

    std::vector<T> scratch(seq);
    for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t r0 = b * seq;
        for (std::size_t h = 0; h < n_heads; ++h) {
            const std::size_t hoff = h * head_dim;
            for (std::size_t t = 0; t < seq; ++t) {
                const T* q = qrot + (r0 + t) * d + hoff;
                // causal scores: only positions <= t ever enter the float path
                for (std::size_t u = 0; u <= t; ++u) {
                    const T* k = krot + (r0 + u) * d + hoff;
                    T acc = T(0);
                    for (std::size_t j = 0; j < head_dim; ++j) acc += q[j] * k[j];
                    scratch[u] = acc * scale;
                }
                T* p = probs ? probs + ((b * n_heads + h) * seq + t) * seq : scratch.data();
                num::softmax_row(scratch.data(), p, t + 1);
                if (probs) {
                    for (std::size_t u = t + 1; u < seq; ++u) p[u] = T(0);
                }
                T* out = ctx + (r0 + t) * d + hoff;
                for (std::size_t j = 0; j < head_dim; ++j) {
                    T acc = T(0);
                    for (std::size_t u = 0; u <= t; ++u) {
                        acc += p[u] * qkv[(r0 + u) * 3 * d + 2 * d + hoff + j];
                    }
                    out[j] = acc;
                }
            }
        }
    }
}

// Tape op wrapping attention_forward with a hand-derived backward.
template <typename T>
num::VarId attention(num::Tape<T>& tape, num::VarId qkv, std::size_t batch, std::size_t seq,
                     std::size_t n_heads, std::size_t head_dim,
                     std::shared_ptr<const num::RotaryTable<T>> rot) {
    const auto& qv = tape.value(qkv);
    const std::size_t d = n_heads * head_dim;
    if (qv.rank() != 2 || qv.rows() != batch * seq || qv.cols() != 3 * d) {
        throw ShapeError("attention: qkv must be [batch*seq, 3*d_model]");
    }

    auto qrot = std::make_shared<num::Tensor<T>>(std::vector<std::size_t>{batch * seq, d});
    auto krot = std::make_shared<num::Tensor<T>>(std::vector<std::size_t>{batch * seq, d});
    auto probs = std::make_shared<std::vector<T>>(batch * n_heads * seq * seq, T(0));

    num::Tensor<T> ctx({batch * seq, d});
    attention_forward(qv.data(), batch, seq, n_heads, head_dim, *rot,
                      ctx.data(), qrot->data(), krot->data(), probs->data());

    return tape.push(std::move(ctx), [qkv, batch, seq, n_heads, head_dim, rot, qrot, krot,
                                      probs, id = tape.size()](num::Tape<T>& tp) {
        const std::size_t d = n_heads * head_dim;
        const T scale = T(1) / std::sqrt(T(head_dim));
        const auto& dctx = tp.grad(num::VarId{static_cast<std::uint32_t>(id)});
        const auto& qv2 = tp.value(qkv);
        auto& dqkv = tp.grad(qkv);

        std::vector<T> dqrot(batch * seq * d, T(0));
        std::vector<T> dkrot(batch * seq * d, T(0));
        std::vector<T> dp(seq), ds(seq);

        for (std::size_t b = 0; b < batch; ++b) {
            const std::size_t r0 = b * seq;
            for (std::size_t h = 0; h < n_heads; ++h) {
                const std::size_t hoff = h * head_dim;
                for (std::size_t t = 0; t < seq; ++t) {
                    const T* p = probs->data() + ((b * n_heads + h) * seq + t) * seq;
                    const T* dout = dctx.data() + (r0 + t) * d + hoff;

                    // d(probs) and d(v)
                    for (std::size_t u = 0; u <= t; ++u) {
                        const T* v = qv2.data() + (r0 + u) * 3 * d + 2 * d + hoff;
                        T* dv = dqkv.data() + (r0 + u) * 3 * d + 2 * d + hoff;
                        T acc = T(0);
                        for (std::size_t j = 0; j < head_dim; ++j) {
                            acc += dout[j] * v[j];
                            dv[j] += p[u] * dout[j];
                        }
                        dp[u] = acc;
                    }
                    // softmax backward on the causal slice
                    T dot = T(0);
                    for (std::size_t u = 0; u <= t; ++u) dot += dp[u] * p[u];
                    for (std::size_t u = 0; u <= t; ++u) ds[u] = p[u] * (dp[u] - dot);
                    // d(scores) -> d(qrot), d(krot)
                    const T* q = qrot->data() + (r0 + t) * d + hoff;
                    T* dq = dqrot.data() + (r0 + t) * d + hoff;
                    for (std::size_t u = 0; u <= t; ++u) {
                        const T w = ds[u] * scale;
                        const T* k = krot->data() + (r0 + u) * d + hoff;
                        T* dk = dkrot.data() + (r0 + u) * d + hoff;
                        for (std::size_t j = 0; j < head_dim; ++j) {
                            dq[j] += w * k[j];
                            dk[j] += w * q[j];
                        }
                    }
                }
            }
        }

        // un-rotate gradients back into the fused qkv layout
        for (std::size_t r = 0; r < batch * seq; ++r) {
            const std::size_t pos = r % seq;
            T* dst = dqkv.data() + r * 3 * d;
            T* dq = dqrot.data() + r * d;
            T* dk = dkrot.data() + r * d;
            for (std::size_t h = 0; h < n_heads; ++h) {
                rot->apply(dq + h * head_dim, pos, /*inverse=*/true);
                rot->apply(dk + h * head_dim, pos, /*inverse=*/true);
            }
            for (std::size_t j = 0; j < d; ++j) dst[j] += dq[j];
            for (std::size_t j = 0; j < d; ++j) dst[d + j] += dk[j];
        }
    });
}

// Parameter tree bound onto a tape as leaves, in visit order.
template <typename T>
struct BoundParams {
    struct Layer {
        num::VarId ln_gain, ln_bias, w_qkv, b_qkv, w_attn_out, b_attn_out;
        num::VarId w_mlp_in, b_mlp_in, w_mlp_out, b_mlp_out;
    };
    num::VarId embed;
    std::vector<Layer> layers;
    num::VarId final_gain, final_bias, lm_head, lm_bias;
    bool tied = false;
};

template <typename T>
BoundParams<T> bind_params(num::Tape<T>& tape, const ModelParams<T>& p) {
    BoundParams<T> bp;
    bp.tied = p.config.tie_lm_head;
    bp.embed = tape.leaf(p.embed);
    bp.layers.reserve(p.layers.size());
    for (const auto& lp : p.layers) {
        typename BoundParams<T>::Layer bl;
        bl.ln_gain = tape.leaf(lp.ln_gain);
        bl.ln_bias = tape.leaf(lp.ln_bias);
        bl.w_qkv = tape.leaf(lp.w_qkv);
        bl.b_qkv = tape.leaf(lp.b_qkv);
        bl.w_attn_out = tape.leaf(lp.w_attn_out);
        bl.b_attn_out = tape.leaf(lp.b_attn_out);
        bl.w_mlp_in = tape.leaf(lp.w_mlp_in);
        bl.b_mlp_in = tape.leaf(lp.b_mlp_in);
        bl.w_mlp_out = tape.leaf(lp.w_mlp_out);
        bl.b_mlp_out = tape.leaf(lp.b_mlp_out);
        bp.layers.push_back(bl);
    }
    bp.final_gain = tape.leaf(p.final_gain);
    bp.final_bias = tape.leaf(p.final_bias);
    if (!bp.tied) bp.lm_head = tape.leaf(p.lm_head);
    bp.lm_bias = tape.leaf(p.lm_bias);
    return bp;
}

// Gradients read back into a tree shaped like the parameters.
template <typename T>
ModelParams<T> collect_grads(const num::Tape<T>& tape, const BoundParams<T>& bp,
                             const ModelParams<T>& p) {
    ModelParams<T> g;
    g.config = p.config;
    g.embed = tape.grad(bp.embed);
    g.layers.resize(p.layers.size());
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        const auto& bl = bp.layers[l];
        auto& gl = g.layers[l];
        gl.ln_gain = tape.grad(bl.ln_gain);
        gl.ln_bias = tape.grad(bl.ln_bias);
        gl.w_qkv = tape.grad(bl.w_qkv);
        gl.b_qkv = tape.grad(bl.b_qkv);
        gl.w_attn_out = tape.grad(bl.w_attn_out);
        gl.b_attn_out = tape.grad(bl.b_attn_out);
        gl.w_mlp_in = tape.grad(bl.w_mlp_in);
        gl.b_mlp_in = tape.grad(bl.b_mlp_in);
        gl.w_mlp_out = tape.grad(bl.w_mlp_out);
        gl.b_mlp_out = tape.grad(bl.b_mlp_out);
    }
    g.final_gain = tape.grad(bp.final_gain);
    g.final_bias = tape.grad(bp.final_bias);
    if (!bp.tied) g.lm_head = tape.grad(bp.lm_head);
    g.lm_bias = tape.grad(bp.lm_bias);
    return g;
}

// Full differentiable forward: embed -> n_layers x parallel block -> final
// norm -> LM head. Each block is x + attn(ln(x)) + mlp(ln(x)) with one
// shared pre-norm feeding both branches. Returns logits [batch*seq, vocab].
template <typename T>
num::VarId decoder_forward(num::Tape<T>& tape, const BoundParams<T>& bp, const ModelConfig& cfg,
                           const std::vector<std::uint16_t>& tokens,
                           std::size_t batch, std::size_t seq,
                           std::shared_ptr<const num::RotaryTable<T>> rot) {
    if (tokens.size() != batch * seq) throw ShapeError("decoder_forward: token count mismatch");
    if (seq > static_cast<std::size_t>(cfg.context_len)) {
        throw ContractError("decoder_forward: sequence exceeds context length");
    }
    for (auto t : tokens) {
        if (t >= static_cast<std::uint16_t>(cfg.vocab_size)) {
            throw ContractError("decoder_forward: token index out of vocabulary");
        }
    }

    const auto h = static_cast<std::size_t>(cfg.n_heads);
    const auto hd = static_cast<std::size_t>(cfg.head_dim);
    const T eps = static_cast<T>(kLayerNormEps);

    num::VarId x = num::embedding(tape, bp.embed, tokens);
    for (const auto& bl : bp.layers) {
        num::VarId xn = num::layer_norm(tape, x, bl.ln_gain, bl.ln_bias, eps);
        num::VarId qkv = num::add_row_bias(tape, num::matmul(tape, xn, bl.w_qkv), bl.b_qkv);
        num::VarId att = attention(tape, qkv, batch, seq, h, hd, rot);
        num::VarId att_out =
            num::add_row_bias(tape, num::matmul(tape, att, bl.w_attn_out), bl.b_attn_out);
        num::VarId hidden =
            num::gelu(tape, num::add_row_bias(tape, num::matmul(tape, xn, bl.w_mlp_in), bl.b_mlp_in));
        num::VarId mlp_out =
            num::add_row_bias(tape, num::matmul(tape, hidden, bl.w_mlp_out), bl.b_mlp_out);
        x = num::add(tape, num::add(tape, x, att_out), mlp_out);
    }
    num::VarId xf = num::layer_norm(tape, x, bp.final_gain, bp.final_bias, eps);
    num::VarId logits = bp.tied ? num::matmul_nt(tape, xf, bp.embed)
                                : num::matmul(tape, xf, bp.lm_head);
    return num::add_row_bias(tape, logits, bp.lm_bias);
}

// Mean masked next-token cross entropy; exp(loss) is the batch perplexity.
template <typename T>
num::VarId decoder_loss(num::Tape<T>& tape, num::VarId logits,
                        std::vector<std::uint16_t> targets, std::vector<std::uint8_t> mask) {
    return num::cross_entropy_masked(tape, logits, std::move(targets), std::move(mask));
}

// No-grad forward over the same kernels (same float semantics, no tape).
template <typename T>
num::Tensor<T> forward_logits(const ModelParams<T>& p, const std::vector<std::uint16_t>& tokens,
                              std::size_t batch, std::size_t seq,
                              const num::RotaryTable<T>* rot_table = nullptr) {
    const auto& cfg = p.config;
    if (tokens.size() != batch * seq) throw ShapeError("forward_logits: token count mismatch");
    if (seq > static_cast<std::size_t>(cfg.context_len)) {
        throw ContractError("forward_logits: sequence exceeds context length");
    }
    const std::size_t d = static_cast<std::size_t>(cfg.d_model());
    const std::size_t v = static_cast<std::size_t>(cfg.vocab_size);
    const std::size_t n = batch * seq;
    const std::size_t nh = static_cast<std::size_t>(cfg.n_heads);
    const std::size_t hd = static_cast<std::size_t>(cfg.head_dim);
    const T eps = static_cast<T>(kLayerNormEps);

    num::RotaryTable<T> local_rot;
    if (!rot_table) {
        local_rot = make_rotary_table<T>(cfg, seq);
        rot_table = &local_rot;
    }

    std::vector<T> x(n * d), xn(n * d), qkv(n * 3 * d), ctx(n * d), attn(n * d);
    std::vector<T> hidden(n * 4 * d), mlp(n * d);
    std::vector<T> qrot(n * d), krot(n * d);

    for (std::size_t i = 0; i < n; ++i) {
        if (tokens[i] >= v) throw ContractError("forward_logits: token index out of vocabulary");
        const T* src = p.embed.data() + std::size_t(tokens[i]) * d;
        for (std::size_t j = 0; j < d; ++j) x[i * d + j] = src[j];
    }

    for (const auto& lp : p.layers) {
        for (std::size_t i = 0; i < n; ++i) {
            num::layer_norm_row(x.data() + i * d, lp.ln_gain.data(), lp.ln_bias.data(), eps,
                                xn.data() + i * d, d, static_cast<T*>(nullptr),
                                static_cast<T*>(nullptr));
        }
        num::gemm_nn(n, d, 3 * d, xn.data(), lp.w_qkv.data(), qkv.data());
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < 3 * d; ++j) qkv[i * 3 * d + j] += lp.b_qkv.at(j);
        }
        attention_forward(qkv.data(), batch, seq, nh, hd, *rot_table, ctx.data(), qrot.data(),
                          krot.data(), static_cast<T*>(nullptr));
        num::gemm_nn(n, d, d, ctx.data(), lp.w_attn_out.data(), attn.data());
        num::gemm_nn(n, d, 4 * d, xn.data(), lp.w_mlp_in.data(), hidden.data());
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < 4 * d; ++j) {
                hidden[i * 4 * d + j] = num::gelu_scalar(hidden[i * 4 * d + j] + lp.b_mlp_in.at(j));
            }
        }
        num::gemm_nn(n, 4 * d, d, hidden.data(), lp.w_mlp_out.data(), mlp.data());
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                x[i * d + j] = (x[i * d + j] + (attn[i * d + j] + lp.b_attn_out.at(j))) +
                               (mlp[i * d + j] + lp.b_mlp_out.at(j));
            }
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        num::layer_norm_row(x.data() + i * d, p.final_gain.data(), p.final_bias.data(), eps,
                            xn.data() + i * d, d, static_cast<T*>(nullptr),
                            static_cast<T*>(nullptr));
    }
    num::Tensor<T> logits({n, v});
    if (cfg.tie_lm_head) {
        num::gemm_nt(n, d, v, xn.data(), p.embed.data(), logits.data());
    } else {
        num::gemm_nn(n, d, v, xn.data(), p.lm_head.data(), logits.data());
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < v; ++j) logits.at(i, j) += p.lm_bias.at(j);
    }
    return logits;
}

// Mean masked NLL via the no-grad forward; accumulated in double.
template <typename T>
double forward_nll(const ModelParams<T>& p, const std::vector<std::uint16_t>& tokens,
                   const std::vector<std::uint16_t>& targets, const std::vector<std::uint8_t>& mask,
                   std::size_t batch, std::size_t seq) {
    const auto logits = forward_logits(p, tokens, batch, seq);
    const std::size_t v = logits.cols();
    double nll = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        if (!mask[i]) continue;
        const T* row = logits.data() + i * v;
        T mx = row[0];
        for (std::size_t j = 1; j < v; ++j) mx = row[j] > mx ? row[j] : mx;
        double se = 0.0;
        for (std::size_t j = 0; j < v; ++j) se += std::exp(static_cast<double>(row[j] - mx));
        nll += std::log(se) + static_cast<double>(mx) - static_cast<double>(row[targets[i]]);
        ++count;
    }
    if (count == 0) throw ContractError("forward_nll: empty loss mask");
    return nll / static_cast<double>(count);
}

} // namespace plmforge::model

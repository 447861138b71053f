#pragma once

#include <cstdint>
#include <vector>

#include "plmforge/model/decoder.hpp"

namespace plmforge::model {

// Incremental forward pass with a per-layer KV cache (rotated keys cached).
// Mirrors the batched forward operation-for-operation so a cached generation
// and a fresh full forward produce the same logits.
template <typename T>
class InferSession {
public:
    explicit InferSession(const ModelParams<T>& params)
        : p_(&params),
          d_(static_cast<std::size_t>(params.config.d_model())),
          v_(static_cast<std::size_t>(params.config.vocab_size)),
          nh_(static_cast<std::size_t>(params.config.n_heads)),
          hd_(static_cast<std::size_t>(params.config.head_dim)),
          ctx_len_(static_cast<std::size_t>(params.config.context_len)),
          rot_(make_rotary_table<T>(params.config, ctx_len_)) {
        const std::size_t layers = p_->layers.size();
        k_cache_.assign(layers, std::vector<T>(ctx_len_ * d_));
        v_cache_.assign(layers, std::vector<T>(ctx_len_ * d_));
        x_.resize(d_);
        xn_.resize(d_);
        qkv_.resize(3 * d_);
        ctx_.resize(d_);
        attn_.resize(d_);
        hidden_.resize(4 * d_);
        mlp_.resize(d_);
        scores_.resize(ctx_len_);
        logits_.resize(v_);
    }

    void reset() { pos_ = 0; }

    std::size_t position() const { return pos_; }
    bool full() const { return pos_ >= ctx_len_; }

    // Feeds the token at the next position; returns logits over the vocabulary.
    const std::vector<T>& step(std::uint16_t token) {
        if (full()) throw ContractError("InferSession: context is full");
        if (token >= v_) throw ContractError("InferSession: token out of vocabulary");
        const T eps = static_cast<T>(kLayerNormEps);
        const T scale = T(1) / std::sqrt(T(hd_));
        const std::size_t pos = pos_;

        const T* erow = p_->embed.data() + std::size_t(token) * d_;
        for (std::size_t j = 0; j < d_; ++j) x_[j] = erow[j];

        for (std::size_t l = 0; l < p_->layers.size(); ++l) {
            const auto& lp = p_->layers[l];
            num::layer_norm_row(x_.data(), lp.ln_gain.data(), lp.ln_bias.data(), eps, xn_.data(),
                                d_, static_cast<T*>(nullptr), static_cast<T*>(nullptr));
            num::gemm_nn(1, d_, 3 * d_, xn_.data(), lp.w_qkv.data(), qkv_.data());
            for (std::size_t j = 0; j < 3 * d_; ++j) qkv_[j] += lp.b_qkv.at(j);

            // rotate q in place and the new k straight into the cache
            T* krow = k_cache_[l].data() + pos * d_;
            T* vrow = v_cache_[l].data() + pos * d_;
            for (std::size_t j = 0; j < d_; ++j) krow[j] = qkv_[d_ + j];
            for (std::size_t j = 0; j < d_; ++j) vrow[j] = qkv_[2 * d_ + j];
            for (std::size_t h = 0; h < nh_; ++h) {
                rot_.apply(qkv_.data() + h * hd_, pos);
                rot_.apply(krow + h * hd_, pos);
            }

            for (std::size_t h = 0; h < nh_; ++h) {
                const std::size_t hoff = h * hd_;
                const T* q = qkv_.data() + hoff;
                for (std::size_t u = 0; u <= pos; ++u) {
                    const T* k = k_cache_[l].data() + u * d_ + hoff;
                    T acc = T(0);
                    for (std::size_t j = 0; j < hd_; ++j) acc += q[j] * k[j];
                    scores_[u] = acc * scale;
                }
                num::softmax_row(scores_.data(), scores_.data(), pos + 1);
                T* out = ctx_.data() + hoff;
                for (std::size_t j = 0; j < hd_; ++j) {
                    T acc = T(0);
                    for (std::size_t u = 0; u <= pos; ++u) {
                        acc += scores_[u] * v_cache_[l][u * d_ + hoff + j];
                    }
                    out[j] = acc;
                }
            }

            num::gemm_nn(1, d_, d_, ctx_.data(), lp.w_attn_out.data(), attn_.data());
            num::gemm_nn(1, d_, 4 * d_, xn_.data(), lp.w_mlp_in.data(), hidden_.data());
            for (std::size_t j = 0; j < 4 * d_; ++j) {
                hidden_[j] = num::gelu_scalar(hidden_[j] + lp.b_mlp_in.at(j));
            }
            num::gemm_nn(1, 4 * d_, d_, hidden_.data(), lp.w_mlp_out.data(), mlp_.data());
            for (std::size_t j = 0; j < d_; ++j) {
                x_[j] = (x_[j] + (attn_[j] + lp.b_attn_out.at(j))) + (mlp_[j] + lp.b_mlp_out.at(j));
            }
        }

        num::layer_norm_row(x_.data(), p_->final_gain.data(), p_->final_bias.data(), eps,
                            xn_.data(), d_, static_cast<T*>(nullptr), static_cast<T*>(nullptr));
        if (p_->config.tie_lm_head) {
            num::gemm_nt(1, d_, v_, xn_.data(), p_->embed.data(), logits_.data());
        } else {
            num::gemm_nn(1, d_, v_, xn_.data(), p_->lm_head.data(), logits_.data());
        }
        for (std::size_t j = 0; j < v_; ++j) logits_[j] += p_->lm_bias.at(j);

        ++pos_;
        return logits_;
    }

private:
    const ModelParams<T>* p_;
    std::size_t d_, v_, nh_, hd_, ctx_len_;
    num::RotaryTable<T> rot_;
    std::size_t pos_ = 0;
    std::vector<std::vector<T>> k_cache_, v_cache_;
    std::vector<T> x_, xn_, qkv_, ctx_, attn_, hidden_, mlp_, scores_, logits_;
};

} // namespace plmforge::model

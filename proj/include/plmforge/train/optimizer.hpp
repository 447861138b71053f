#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "plmforge/model/params.hpp"
#include "plmforge/train/schedule.hpp"

namespace plmforge::train {

// Global gradient norm over every tensor in the tree (flatten-equivalent).
// If the norm exceeds clip_norm, every gradient is scaled by clip_norm/norm.
// Returns the pre-clip norm; non-finite gradients raise DivergenceError.
template <typename T>
double clip_global_norm(model::ModelParams<T>& grads, double clip_norm,
                        const std::string& last_checkpoint = {}) {
    double sq = 0.0;
    grads.visit([&](const std::string&, num::Tensor<T>& g, bool) {
        for (std::size_t i = 0; i < g.numel(); ++i) {
            const double x = static_cast<double>(g.at(i));
            sq += x * x;
        }
    });
    const double norm = std::sqrt(sq);
    if (!std::isfinite(norm)) {
        throw DivergenceError("non-finite gradient norm", last_checkpoint);
    }
    if (norm > clip_norm) {
        const T s = static_cast<T>(clip_norm / norm);
        grads.visit([&](const std::string&, num::Tensor<T>& g, bool) {
            for (std::size_t i = 0; i < g.numel(); ++i) g.at(i) *= s;
        });
    }
    return norm;
}

// Adam moments shaped like the parameter tree.
template <typename T>
struct AdamMoments {
    model::ModelParams<T> m, v;

    static AdamMoments zeros_like(const model::ModelParams<T>& p) {
        AdamMoments a;
        a.m = shaped_zeros(p);
        a.v = shaped_zeros(p);
        return a;
    }

    void zero() {
        auto clear = [](model::ModelParams<T>& tree) {
            tree.visit([](const std::string&, num::Tensor<T>& t, bool) { t.fill(T(0)); });
        };
        clear(m);
        clear(v);
    }

private:
    static model::ModelParams<T> shaped_zeros(const model::ModelParams<T>& p) {
        model::ModelParams<T> z;
        z.config = p.config;
        z.embed = num::Tensor<T>(p.embed.shape());
        z.layers.resize(p.layers.size());
        for (std::size_t l = 0; l < p.layers.size(); ++l) {
            const auto& src = p.layers[l];
            auto& dst = z.layers[l];
            dst.ln_gain = num::Tensor<T>(src.ln_gain.shape());
            dst.ln_bias = num::Tensor<T>(src.ln_bias.shape());
            dst.w_qkv = num::Tensor<T>(src.w_qkv.shape());
            dst.b_qkv = num::Tensor<T>(src.b_qkv.shape());
            dst.w_attn_out = num::Tensor<T>(src.w_attn_out.shape());
            dst.b_attn_out = num::Tensor<T>(src.b_attn_out.shape());
            dst.w_mlp_in = num::Tensor<T>(src.w_mlp_in.shape());
            dst.b_mlp_in = num::Tensor<T>(src.b_mlp_in.shape());
            dst.w_mlp_out = num::Tensor<T>(src.w_mlp_out.shape());
            dst.b_mlp_out = num::Tensor<T>(src.b_mlp_out.shape());
        }
        z.final_gain = num::Tensor<T>(p.final_gain.shape());
        z.final_bias = num::Tensor<T>(p.final_bias.shape());
        if (!p.config.tie_lm_head) z.lm_head = num::Tensor<T>(p.lm_head.shape());
        z.lm_bias = num::Tensor<T>(p.lm_bias.shape());
        return z;
    }
};

// Bias-corrected Adam with decoupled weight decay:
//   p <- p - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * p)
// The decay term is applied only to tensors flagged for decay (projection
// and embedding matrices); norm gains/biases and all biases are exempt.
// step is 0-based: the first update uses bias correction t = 1.
template <typename T>
void adam_step(model::ModelParams<T>& params, const model::ModelParams<T>& grads,
               AdamMoments<T>& moments, long step, double lr, const TrainConfig& config) {
    const double b1 = config.beta1, b2 = config.beta2, eps = config.adam_eps;
    const double t = static_cast<double>(step + 1);
    const double c1 = 1.0 - std::pow(b1, t);
    const double c2 = 1.0 - std::pow(b2, t);

    struct Slot {
        num::Tensor<T>* g;
        num::Tensor<T>* m;
        num::Tensor<T>* v;
    };
    std::vector<Slot> slots;
    const_cast<model::ModelParams<T>&>(grads).visit(
        [&](const std::string&, num::Tensor<T>& g, bool) { slots.push_back({&g, nullptr, nullptr}); });
    std::size_t i = 0;
    moments.m.visit([&](const std::string&, num::Tensor<T>& m, bool) { slots[i++].m = &m; });
    i = 0;
    moments.v.visit([&](const std::string&, num::Tensor<T>& v, bool) { slots[i++].v = &v; });

    i = 0;
    params.visit([&](const std::string&, num::Tensor<T>& p, bool decay) {
        auto& slot = slots[i++];
        const double wd = decay ? config.weight_decay : 0.0;
        for (std::size_t j = 0; j < p.numel(); ++j) {
            const double g = static_cast<double>(slot.g->at(j));
            const double m = b1 * static_cast<double>(slot.m->at(j)) + (1.0 - b1) * g;
            const double v = b2 * static_cast<double>(slot.v->at(j)) + (1.0 - b2) * g * g;
            slot.m->at(j) = static_cast<T>(m);
            slot.v->at(j) = static_cast<T>(v);
            const double m_hat = m / c1;
            const double v_hat = v / c2;
            const double update = m_hat / (std::sqrt(v_hat) + eps) +
                                  wd * static_cast<double>(p.at(j));
            p.at(j) = static_cast<T>(static_cast<double>(p.at(j)) - lr * update);
        }
    });
}

} // namespace plmforge::train

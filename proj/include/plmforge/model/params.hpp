#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "plmforge/model/config.hpp"
#include "plmforge/numerics/tensor.hpp"
#include "plmforge/rng.hpp"

namespace plmforge::model {

template <typename T>
struct LayerParams {
    num::Tensor<T> ln_gain, ln_bias;        // [D]
    num::Tensor<T> w_qkv, b_qkv;            // [D,3D], [3D]
    num::Tensor<T> w_attn_out, b_attn_out;  // [D,D], [D]
    num::Tensor<T> w_mlp_in, b_mlp_in;      // [D,4D], [4D]
    num::Tensor<T> w_mlp_out, b_mlp_out;    // [4D,D], [D]
};

// Full parameter tree. Tensor iteration order (visit) is the canonical order
// for checkpoints and optimizer state.
template <typename T>
struct ModelParams {
    ModelConfig config;
    num::Tensor<T> embed;                   // [V,D]
    std::vector<LayerParams<T>> layers;
    num::Tensor<T> final_gain, final_bias;  // [D]
    num::Tensor<T> lm_head, lm_bias;        // [D,V], [V]; lm_head empty when tied

    // fn(name, tensor, decay) -- decay marks tensors subject to weight decay
    // (rank-2 projection/embedding matrices; never norms or biases).
    template <typename Fn>
    void visit(Fn&& fn) {
        fn("embed", embed, true);
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const std::string p = "layers." + std::to_string(l) + ".";
            auto& lp = layers[l];
            fn(p + "ln_gain", lp.ln_gain, false);
            fn(p + "ln_bias", lp.ln_bias, false);
            fn(p + "w_qkv", lp.w_qkv, true);
            fn(p + "b_qkv", lp.b_qkv, false);
            fn(p + "w_attn_out", lp.w_attn_out, true);
            fn(p + "b_attn_out", lp.b_attn_out, false);
            fn(p + "w_mlp_in", lp.w_mlp_in, true);
            fn(p + "b_mlp_in", lp.b_mlp_in, false);
            fn(p + "w_mlp_out", lp.w_mlp_out, true);
            fn(p + "b_mlp_out", lp.b_mlp_out, false);
        }
        fn("final_gain", final_gain, false);
        fn("final_bias", final_bias, false);
        if (!config.tie_lm_head) fn("lm_head", lm_head, true);
        fn("lm_bias", lm_bias, false);
    }

    template <typename Fn>
    void visit(Fn&& fn) const {
        const_cast<ModelParams*>(this)->visit(
            [&fn](const std::string& name, num::Tensor<T>& t, bool decay) {
                fn(name, const_cast<const num::Tensor<T>&>(t), decay);
            });
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        visit([&n](const std::string&, const num::Tensor<T>& t, bool) { n += t.numel(); });
        return n;
    }

    bool all_finite() const {
        bool ok = true;
        visit([&ok](const std::string&, const num::Tensor<T>& t, bool) { ok = ok && t.all_finite(); });
        return ok;
    }
};

// Normal(0, 0.02) projections with the attention/MLP output projections
// scaled by 1/sqrt(2*n_layers); norms are gain=1/bias=0, biases zero.
// Deterministic per seed (fixed visit order, own Box-Muller).
template <typename T>
ModelParams<T> init_params(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    const auto d = static_cast<std::size_t>(config.d_model());
    const auto v = static_cast<std::size_t>(config.vocab_size);

    ModelParams<T> p;
    p.config = config;
    p.embed = num::Tensor<T>({v, d});
    p.layers.resize(static_cast<std::size_t>(config.n_layers));
    for (auto& lp : p.layers) {
        lp.ln_gain = num::Tensor<T>::full({d}, T(1));
        lp.ln_bias = num::Tensor<T>({d});
        lp.w_qkv = num::Tensor<T>({d, 3 * d});
        lp.b_qkv = num::Tensor<T>({3 * d});
        lp.w_attn_out = num::Tensor<T>({d, d});
        lp.b_attn_out = num::Tensor<T>({d});
        lp.w_mlp_in = num::Tensor<T>({d, 4 * d});
        lp.b_mlp_in = num::Tensor<T>({4 * d});
        lp.w_mlp_out = num::Tensor<T>({4 * d, d});
        lp.b_mlp_out = num::Tensor<T>({d});
    }
    p.final_gain = num::Tensor<T>::full({d}, T(1));
    p.final_bias = num::Tensor<T>({d});
    if (!config.tie_lm_head) p.lm_head = num::Tensor<T>({d, v});
    p.lm_bias = num::Tensor<T>({v});

    const double base_std = 0.02;
    const double out_std = base_std / std::sqrt(2.0 * config.n_layers);
    Rng rng(mix64(seed, 0x696e6974ull)); // "init"

    p.visit([&](const std::string& name, num::Tensor<T>& t, bool decay) {
        if (!decay) return; // norms and biases keep their deterministic init
        const bool is_out = name.find("w_attn_out") != std::string::npos ||
                            name.find("w_mlp_out") != std::string::npos;
        const double std_dev = is_out ? out_std : base_std;
        for (std::size_t i = 0; i < t.numel(); ++i) {
            t.at(i) = static_cast<T>(rng.normal(0.0, std_dev));
        }
    });
    return p;
}

} // namespace plmforge::model

#pragma once

#include <cstddef>

#include "plmforge/errors.hpp"

namespace plmforge::model {

struct ModelConfig {
    int n_layers = 0;
    int n_heads = 0;
    int head_dim = 0;
    int context_len = 0;
    int vocab_size = 0;
    int rotary_dim = -1; // -1: defaults to head_dim
    bool tie_lm_head = false;

    int d_model() const { return n_heads * head_dim; }
    int effective_rotary_dim() const { return rotary_dim < 0 ? head_dim : rotary_dim; }

    void validate() const {
        if (n_layers <= 0 || n_heads <= 0 || head_dim <= 0 || vocab_size <= 0) {
            throw ConfigError("model dimensions must be positive");
        }
        if (context_len < 2) throw ConfigError("context_len must be at least 2");
        const int rd = effective_rotary_dim();
        if (rd <= 0 || rd > head_dim) {
            throw ConfigError("rotary_dim must be in (0, head_dim]");
        }
        if (rd % 2 != 0) throw ConfigError("rotary_dim must be even");
    }
};

} // namespace plmforge::model

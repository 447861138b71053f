#pragma once

#include <cstdint>

namespace plmforge::train {

struct TrainConfig {
    double peak_lr = 6.0e-4;
    int warmup_steps = 100;
    int total_steps = 1000;
    double min_lr_ratio = 0.1;
    double weight_decay = 0.1;
    double clip_norm = 1.0;
    long batch_size_tokens = 4096; // token budget per optimizer step
    int grad_accum = 1;
    std::uint64_t seed = 0;
    int checkpoint_every = 500;

    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;

    void validate() const;
};

// Linear ramp 0 -> peak over warmup_steps, cosine from peak down to
// min_lr_ratio * peak at total_steps, constant afterwards.
double lr_schedule(long step, const TrainConfig& config);

} // namespace plmforge::train

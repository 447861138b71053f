#include "plmforge/train/schedule.hpp"

#include <cmath>

#include "plmforge/errors.hpp"

namespace plmforge::train {

void TrainConfig::validate() const {
    if (peak_lr <= 0.0) throw ConfigError("peak_lr must be positive");
    if (warmup_steps < 0 || total_steps <= 0 || warmup_steps >= total_steps) {
        throw ConfigError("need 0 <= warmup_steps < total_steps");
    }
    if (min_lr_ratio < 0.0 || min_lr_ratio > 1.0) throw ConfigError("min_lr_ratio must be in [0,1]");
    if (weight_decay < 0.0) throw ConfigError("weight_decay must be non-negative");
    if (clip_norm <= 0.0) throw ConfigError("clip_norm must be positive");
    if (batch_size_tokens <= 0) throw ConfigError("batch_size_tokens must be positive");
    if (grad_accum < 1) throw ConfigError("grad_accum must be at least 1");
    if (checkpoint_every < 1) throw ConfigError("checkpoint_every must be at least 1");
}

double lr_schedule(long step, const TrainConfig& config) {
    const double peak = config.peak_lr;
    const double floor_lr = config.min_lr_ratio * peak;
    if (step < config.warmup_steps) {
        return peak * static_cast<double>(step) / static_cast<double>(config.warmup_steps);
    }
    if (step >= config.total_steps) return floor_lr;
    const double progress = static_cast<double>(step - config.warmup_steps) /
                            static_cast<double>(config.total_steps - config.warmup_steps);
    return floor_lr + 0.5 * (peak - floor_lr) * (1.0 + std::cos(3.14159265358979323846 * progress));
}

} // namespace plmforge::train

#pragma once

#include <optional>
#include <string>

#include "plmforge/model/params.hpp"
#include "plmforge/train/optimizer.hpp"
#include "plmforge/train/schedule.hpp"

namespace plmforge::train {

// Checkpoint directory layout:
//   manifest.json -- model/train config, vocabulary, schedule position and a
//                    table of tensor names/shapes/byte offsets
//   tensors.bin   -- per tensor: u32 rank, u32 dims..., then little-endian
//                    IEEE-754 32-bit floats, at the offset the manifest names
struct Checkpoint {
    model::ModelParams<float> params;
    std::optional<AdamMoments<float>> moments;
    TrainConfig train_config;
    long step = 0;
    long tokens_seen = 0;
};

void save_checkpoint(const std::string& dir, const model::ModelParams<float>& params,
                     const AdamMoments<float>* moments, const TrainConfig& train_config,
                     long step, long tokens_seen);

Checkpoint load_checkpoint(const std::string& dir);

} // namespace plmforge::train

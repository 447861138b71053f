#pragma once

#include <functional>
#include <string>
#include <vector>

#include "plmforge/model/decoder.hpp"
#include "plmforge/seqdata/packing.hpp"
#include "plmforge/train/checkpoint.hpp"
#include "plmforge/train/optimizer.hpp"
#include "plmforge/train/schedule.hpp"

namespace plmforge::train {

struct StepReport {
    long step = 0;
    double loss = 0.0;
    double lr = 0.0;
    double grad_norm = 0.0; // pre-clip global norm
    long tokens_seen = 0;
};

struct TrainState {
    model::ModelParams<float> params;
    AdamMoments<float> moments;
    long step = 0;
    long tokens_seen = 0;
};

struct TrainResult {
    TrainState state;
    std::vector<StepReport> reports;
    std::string last_checkpoint;
};

// Per-step batches are a fixed token budget of packed rows; the row order is
// a pure function of (seed, step), which is what makes checkpoint resume
// reproduce an uninterrupted run step-for-step.
class Trainer {
public:
    Trainer(TrainState state, TrainConfig config, const seq::PackedBatch& data);

    // Runs until config.total_steps (or step_limit, to emulate an
    // interruption without touching the schedule), checkpointing every
    // checkpoint_every steps and at exit into checkpoint_dir (when
    // non-empty). Raises DivergenceError when loss or gradient norm go
    // non-finite.
    TrainResult run(const std::string& checkpoint_dir,
                    const std::function<void(const StepReport&)>& on_step = {},
                    long step_limit = -1);

    // One optimizer step; exposed for tests.
    StepReport step_once();

    const TrainState& state() const { return state_; }

    long rows_per_step() const { return rows_per_step_; }
    long steps_per_epoch() const;

private:
    std::size_t global_row(long position) const;
    void gather_step_rows(long step, std::vector<std::uint16_t>& tokens,
                          std::vector<std::uint16_t>& targets,
                          std::vector<std::uint8_t>& mask, std::size_t& rows) const;

    TrainState state_;
    TrainConfig config_;
    const seq::PackedBatch* data_;
    long rows_per_step_ = 1;
    std::shared_ptr<const num::RotaryTable<float>> rotary_;
    mutable std::vector<std::size_t> perm_;
    mutable long perm_epoch_ = -1;
};

// Writes "step,loss,lr,grad_norm,tokens_seen" rows.
void write_step_log(const std::string& path, const std::vector<StepReport>& reports);
std::string format_step_report(const StepReport& r);

// Finetuning protocol: parameters from the checkpoint, Adam moments zeroed,
// step reset to zero, peak learning rate divided by 5, warmup scaled to the
// shortened run, and the step budget capped at two epochs over the
// finetuning dataset.
struct FinetuneInit {
    TrainState state;
    TrainConfig config;
};

FinetuneInit finetune_init(const Checkpoint& base, const TrainConfig& requested,
                           const seq::PackedBatch& finetune_data);

} // namespace plmforge::train

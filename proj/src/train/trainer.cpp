#include "plmforge/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "plmforge/rng.hpp"

namespace plmforge::train {

Trainer::Trainer(TrainState state, TrainConfig config, const seq::PackedBatch& data)
    : state_(std::move(state)), config_(std::move(config)), data_(&data) {
    config_.validate();
    if (data.n_rows == 0) throw DataError("training dataset has no packed rows");
    if (data.context_len != static_cast<std::size_t>(state_.params.config.context_len)) {
        throw DataError("dataset context length does not match the model configuration");
    }
    rows_per_step_ = std::max<long>(
        1, config_.batch_size_tokens / static_cast<long>(data.context_len));
    rotary_ = std::make_shared<const num::RotaryTable<float>>(
        model::make_rotary_table<float>(state_.params.config, data.context_len));
}

long Trainer::steps_per_epoch() const {
    const long rows = static_cast<long>(data_->n_rows);
    return (rows + rows_per_step_ - 1) / rows_per_step_;
}

std::size_t Trainer::global_row(long position) const {
    const long rows = static_cast<long>(data_->n_rows);
    const long epoch = position / rows;
    const long offset = position % rows;
    if (epoch != perm_epoch_) {
        perm_.resize(data_->n_rows);
        for (std::size_t i = 0; i < perm_.size(); ++i) perm_[i] = i;
        Rng rng(mix64(config_.seed, 0x65706f6368ull, static_cast<std::uint64_t>(epoch)));
        rng.shuffle(perm_.begin(), perm_.end());
        perm_epoch_ = epoch;
    }
    return perm_[static_cast<std::size_t>(offset)];
}

void Trainer::gather_step_rows(long step, std::vector<std::uint16_t>& tokens,
                               std::vector<std::uint16_t>& targets,
                               std::vector<std::uint8_t>& mask, std::size_t& rows) const {
    const std::size_t ctx = data_->context_len;
    rows = static_cast<std::size_t>(rows_per_step_);
    tokens.resize(rows * ctx);
    targets.resize(rows * ctx);
    mask.resize(rows * ctx);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t src = global_row(step * rows_per_step_ + static_cast<long>(r));
        std::copy_n(data_->inputs.data() + src * ctx, ctx, tokens.data() + r * ctx);
        std::copy_n(data_->targets.data() + src * ctx, ctx, targets.data() + r * ctx);
        std::copy_n(data_->loss_mask.data() + src * ctx, ctx, mask.data() + r * ctx);
    }
}

StepReport Trainer::step_once() {
    const std::size_t ctx = data_->context_len;
    const double lr = lr_schedule(state_.step, config_);

    std::vector<std::uint16_t> tokens, targets;
    std::vector<std::uint8_t> mask;
    std::size_t rows = 0;

    // grad_accum > 1 splits the token budget into micro-batches whose
    // gradients are averaged before the optimizer update.
    model::ModelParams<float> grads;
    double loss_sum = 0.0;
    long masked_total = 0;

    for (int micro = 0; micro < config_.grad_accum; ++micro) {
        const long micro_step = state_.step * config_.grad_accum + micro;
        gather_step_rows(micro_step, tokens, targets, mask, rows);
        long masked = 0;
        for (auto m : mask) masked += m ? 1 : 0;
        if (masked == 0) continue;

        num::Tape<float> tape;
        auto bound = model::bind_params(tape, state_.params);
        auto logits = model::decoder_forward(tape, bound, state_.params.config, tokens,
                                             rows, ctx, rotary_);
        auto loss = model::decoder_loss(tape, logits, targets, mask);
        tape.backward(loss);

        loss_sum += static_cast<double>(tape.value(loss).value());
        masked_total += masked;
        auto g = model::collect_grads(tape, bound, state_.params);
        if (micro == 0) {
            grads = std::move(g);
        } else {
            std::vector<num::Tensor<float>*> acc;
            grads.visit([&](const std::string&, num::Tensor<float>& t, bool) { acc.push_back(&t); });
            std::size_t i = 0;
            g.visit([&](const std::string&, num::Tensor<float>& t, bool) {
                auto& dst = *acc[i++];
                for (std::size_t j = 0; j < dst.numel(); ++j) dst.at(j) += t.at(j);
            });
        }
    }
    if (masked_total == 0) throw DataError("training step had no loss-contributing tokens");
    if (config_.grad_accum > 1) {
        const float inv = 1.0f / static_cast<float>(config_.grad_accum);
        grads.visit([&](const std::string&, num::Tensor<float>& t, bool) {
            for (std::size_t j = 0; j < t.numel(); ++j) t.at(j) *= inv;
        });
    }

    const double loss = loss_sum / config_.grad_accum;
    if (!std::isfinite(loss)) throw DivergenceError("non-finite training loss", {});
    const double norm = clip_global_norm(grads, config_.clip_norm);
    adam_step(state_.params, grads, state_.moments, state_.step, lr, config_);

    state_.tokens_seen += masked_total;
    StepReport report{state_.step, loss, lr, norm, state_.tokens_seen};
    state_.step += 1;
    return report;
}

TrainResult Trainer::run(const std::string& checkpoint_dir,
                         const std::function<void(const StepReport&)>& on_step,
                         long step_limit) {
    TrainResult result;
    auto save = [&](const char* reason) {
        (void)reason;
        if (checkpoint_dir.empty()) return;
        save_checkpoint(checkpoint_dir, state_.params, &state_.moments, config_,
                        state_.step, state_.tokens_seen);
        result.last_checkpoint = checkpoint_dir;
    };

    const long stop = step_limit < 0 ? config_.total_steps
                                     : std::min<long>(step_limit, config_.total_steps);
    while (state_.step < stop) {
        StepReport report;
        try {
            report = step_once();
        } catch (const DivergenceError& e) {
            throw DivergenceError(e.what(), result.last_checkpoint);
        }
        result.reports.push_back(report);
        if (on_step) on_step(report);
        if (state_.step % config_.checkpoint_every == 0) save("periodic");
    }
    save("final");
    result.state = state_;
    return result;
}

std::string format_step_report(const StepReport& r) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%ld,%.9g,%.9g,%.9g,%ld", r.step, r.loss, r.lr,
                  r.grad_norm, r.tokens_seen);
    return buf;
}

void write_step_log(const std::string& path, const std::vector<StepReport>& reports) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write training log: " + path);
    out << "step,loss,lr,grad_norm,tokens_seen\n";
    for (const auto& r : reports) out << format_step_report(r) << '\n';
}

FinetuneInit finetune_init(const Checkpoint& base, const TrainConfig& requested,
                           const seq::PackedBatch& finetune_data) {
    FinetuneInit out;
    out.state.params = base.params;
    out.state.moments = AdamMoments<float>::zeros_like(base.params);
    out.state.step = 0;
    out.state.tokens_seen = 0;

    out.config = requested;
    out.config.peak_lr = base.train_config.peak_lr / 5.0;

    const long rows_per_step = std::max<long>(
        1, out.config.batch_size_tokens / static_cast<long>(finetune_data.context_len));
    const long rows = static_cast<long>(finetune_data.n_rows);
    const long steps_per_epoch = (rows + rows_per_step - 1) / rows_per_step;
    const long cap = 2 * steps_per_epoch; // at most two epochs
    if (out.config.total_steps > cap) out.config.total_steps = static_cast<int>(cap);

    // warmup scaled proportionally to the shortened run
    const double frac = static_cast<double>(base.train_config.warmup_steps) /
                        static_cast<double>(base.train_config.total_steps);
    out.config.warmup_steps = static_cast<int>(
        std::min<double>(std::floor(frac * out.config.total_steps),
                         std::max(0, out.config.total_steps - 1)));
    out.config.validate();
    return out;
}

} // namespace plmforge::train

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "plmforge/model/infer.hpp"
#include "plmforge/rng.hpp"
#include "plmforge/seqdata/records.hpp"

namespace plmforge::sample {

struct SamplerConfig {
    double temperature = 1.0; // > 0
    double top_p = 1.0;       // (0, 1]
    int max_new_tokens = 1024;
    std::string prompt;       // residues, consumed in generation order
    seq::Direction direction = seq::Direction::N2C;
    std::uint64_t seed = 0;

    void validate() const;
};

enum class Termination : std::uint8_t { StopToken, MaxLength };

struct GeneratedRecord {
    std::string residues;             // N-to-C order, markers stripped
    SamplerConfig config;
    std::vector<double> log_probs;    // raw model ln p per sampled token (T=1, unfiltered)
    Termination termination = Termination::MaxLength;

    double mean_log_prob() const;
};

// logits / T. T must be positive.
std::vector<double> apply_temperature(const std::vector<double>& logits, double temperature);

std::vector<double> softmax_probs(const std::vector<double>& logits);

// Keeps the smallest set of highest-probability tokens whose cumulative mass
// reaches p (ties broken by token index ascending), zeroes the rest and
// renormalizes. p >= 1 is the identity.
std::vector<double> nucleus_filter(const std::vector<double>& probs, double p);

// Autoregressive generation: [direction marker] + prompt, then tokens drawn
// from nucleus_filter(softmax(logits/T), p) until the closing marker or
// max_new_tokens. PAD and the opening marker are never emitted. log_probs
// records the model's unfiltered ln p of each sampled token (including the
// closing marker), so a fresh forward pass over the final sequence
// reproduces them.
GeneratedRecord generate(const model::ModelParams<float>& params, const seq::Vocabulary& vocab,
                         const SamplerConfig& config);

// Exact-duplicate residue strings removed, first occurrence kept.
std::vector<GeneratedRecord> dedupe(std::vector<GeneratedRecord> records);

} // namespace plmforge::sample

#pragma once

#include <string>
#include <vector>

#include "plmforge/model/decoder.hpp"
#include "plmforge/seqdata/records.hpp"

namespace plmforge::eval {

enum class ScoreMode : std::uint8_t { N2C, C2N, MeanBoth };

ScoreMode score_mode_from_string(const std::string& s);
const char* score_mode_name(ScoreMode m);

// exp(-(1/n) sum ln p(x_i)) over the causal conditionals of a tokenized
// sequence: every token after the first context token is scored.
template <typename T>
double perplexity(const model::ModelParams<T>& params, const seq::TokenizedSequence& ts) {
    if (ts.tokens.size() < 2) throw ContractError("perplexity needs at least 2 tokens");
    const std::size_t n = ts.tokens.size() - 1;
    std::vector<std::uint16_t> inputs(ts.tokens.begin(), ts.tokens.end() - 1);
    std::vector<std::uint16_t> targets(ts.tokens.begin() + 1, ts.tokens.end());
    std::vector<std::uint8_t> mask(n, 1);
    const double nll = model::forward_nll(params, inputs, targets, mask, 1, n);
    return std::exp(nll);
}

// Mean per-token ln p of a residue sequence under the chosen direction(s);
// MeanBoth averages the two directional scores. Length normalization makes
// indel variants of different lengths comparable; normalize=false returns
// the summed log-likelihood instead.
template <typename T>
double log_likelihood(const model::ModelParams<T>& params, const seq::Vocabulary& vocab,
                      const std::string& residues, ScoreMode mode, bool normalize = true) {
    auto one = [&](seq::Direction d) {
        const auto ts = seq::tokenize(vocab, residues, d);
        const std::size_t n = ts.tokens.size() - 1;
        std::vector<std::uint16_t> inputs(ts.tokens.begin(), ts.tokens.end() - 1);
        std::vector<std::uint16_t> targets(ts.tokens.begin() + 1, ts.tokens.end());
        std::vector<std::uint8_t> mask(n, 1);
        const double nll = model::forward_nll(params, inputs, targets, mask, 1, n);
        return normalize ? -nll : -nll * static_cast<double>(n);
    };
    switch (mode) {
        case ScoreMode::N2C: return one(seq::Direction::N2C);
        case ScoreMode::C2N: return one(seq::Direction::C2N);
        case ScoreMode::MeanBoth:
            return 0.5 * (one(seq::Direction::N2C) + one(seq::Direction::C2N));
    }
    throw ContractError("unknown score mode");
}

struct CorpusPerplexity {
    double per_sequence_mean = 0.0; // arithmetic mean of per-sequence ppl
    double token_weighted = 0.0;    // exp of token-count-weighted mean NLL
    std::vector<double> per_sequence;
};

template <typename T>
CorpusPerplexity corpus_perplexity(const model::ModelParams<T>& params,
                                   const std::vector<seq::TokenizedSequence>& seqs) {
    if (seqs.empty()) throw ContractError("corpus_perplexity: empty dataset");
    CorpusPerplexity out;
    out.per_sequence.resize(seqs.size());
    double nll_weighted = 0.0;
    double tokens = 0.0;
    for (std::size_t i = 0; i < seqs.size(); ++i) {
        const double ppl = perplexity(params, seqs[i]);
        out.per_sequence[i] = ppl;
        const auto n = static_cast<double>(seqs[i].tokens.size() - 1);
        nll_weighted += std::log(ppl) * n;
        tokens += n;
    }
    double sum = 0.0;
    for (double p : out.per_sequence) sum += p;
    out.per_sequence_mean = sum / static_cast<double>(seqs.size());
    out.token_weighted = std::exp(nll_weighted / tokens);
    return out;
}

// Scores every sequence, sorts descending (stable for ties) and keeps
// ceil(keep_fraction * n). Returns indices into the input.
std::vector<std::size_t> rank_and_filter(const model::ModelParams<float>& params,
                                         const seq::Vocabulary& vocab,
                                         const std::vector<std::string>& sequences,
                                         double keep_fraction, ScoreMode mode,
                                         int threads = 1,
                                         std::vector<double>* scores_out = nullptr,
                                         bool normalize = true);

} // namespace plmforge::eval

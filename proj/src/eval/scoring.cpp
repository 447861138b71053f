#include "plmforge/eval/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "plmforge/parallel.hpp"

namespace plmforge::eval {

ScoreMode score_mode_from_string(const std::string& s) {
    if (s == "n2c") return ScoreMode::N2C;
    if (s == "c2n") return ScoreMode::C2N;
    if (s == "mean-both") return ScoreMode::MeanBoth;
    throw ConfigError("unknown scoring direction: " + s + " (use n2c, c2n or mean-both)");
}

const char* score_mode_name(ScoreMode m) {
    switch (m) {
        case ScoreMode::N2C: return "n2c";
        case ScoreMode::C2N: return "c2n";
        case ScoreMode::MeanBoth: return "mean-both";
    }
    return "?";
}

std::vector<std::size_t> rank_and_filter(const model::ModelParams<float>& params,
                                         const seq::Vocabulary& vocab,
                                         const std::vector<std::string>& sequences,
                                         double keep_fraction, ScoreMode mode, int threads,
                                         std::vector<double>* scores_out, bool normalize) {
    if (!(keep_fraction > 0.0) || keep_fraction > 1.0) {
        throw ConfigError("keep_fraction must be in (0,1]");
    }
    if (sequences.empty()) return {};

    std::vector<double> scores(sequences.size());
    parallel_for(sequences.size(), threads, [&](std::size_t i) {
        scores[i] = log_likelihood(params, vocab, sequences[i], mode, normalize);
    });

    std::vector<std::size_t> order(sequences.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    const auto keep = static_cast<std::size_t>(
        std::ceil(keep_fraction * static_cast<double>(sequences.size())));
    order.resize(std::min(keep, order.size()));
    if (scores_out) *scores_out = std::move(scores);
    return order;
}

} // namespace plmforge::eval

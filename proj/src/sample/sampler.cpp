#include "plmforge/sample/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace plmforge::sample {

void SamplerConfig::validate() const {
    if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
    if (!(top_p > 0.0) || top_p > 1.0) throw ConfigError("top_p must be in (0,1]");
    if (max_new_tokens < 1) throw ConfigError("max_new_tokens must be at least 1");
}

double GeneratedRecord::mean_log_prob() const {
    if (log_probs.empty()) return 0.0;
    return std::accumulate(log_probs.begin(), log_probs.end(), 0.0) /
           static_cast<double>(log_probs.size());
}

std::vector<double> apply_temperature(const std::vector<double>& logits, double temperature) {
    if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
    std::vector<double> out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] / temperature;
    return out;
}

std::vector<double> softmax_probs(const std::vector<double>& logits) {
    std::vector<double> out(logits.size());
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        sum += out[i];
    }
    for (auto& v : out) v /= sum;
    return out;
}

std::vector<double> nucleus_filter(const std::vector<double>& probs, double p) {
    if (!(p > 0.0) || p > 1.0) throw ConfigError("nucleus p must be in (0,1]");
    if (p >= 1.0) return probs;

    std::vector<std::size_t> order(probs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return probs[a] != probs[b] ? probs[a] > probs[b] : a < b;
    });

    std::vector<double> out(probs.size(), 0.0);
    double cum = 0.0, kept = 0.0;
    for (std::size_t i : order) {
        out[i] = probs[i];
        cum += probs[i];
        kept += probs[i];
        if (cum >= p) break;
    }
    for (auto& v : out) v /= kept;
    return out;
}

namespace {

// ln p of one token under the unfiltered model distribution (double math).
double token_log_prob(const std::vector<float>& logits, std::uint16_t token) {
    double mx = logits[0];
    for (float v : logits) mx = std::max(mx, static_cast<double>(v));
    double sum = 0.0;
    for (float v : logits) sum += std::exp(static_cast<double>(v) - mx);
    return static_cast<double>(logits[token]) - mx - std::log(sum);
}

} // namespace

GeneratedRecord generate(const model::ModelParams<float>& params, const seq::Vocabulary& vocab,
                         const SamplerConfig& config) {
    config.validate();
    const auto& cfg = params.config;
    const std::uint16_t open_marker =
        config.direction == seq::Direction::N2C ? seq::Vocabulary::kNTerm : seq::Vocabulary::kCTerm;
    const std::uint16_t stop_marker =
        config.direction == seq::Direction::N2C ? seq::Vocabulary::kCTerm : seq::Vocabulary::kNTerm;

    std::vector<std::uint16_t> prompt_tokens;
    prompt_tokens.push_back(open_marker);
    for (char c : config.prompt) prompt_tokens.push_back(vocab.residue_token(c));
    if (prompt_tokens.size() >= static_cast<std::size_t>(cfg.context_len)) {
        throw ConfigError("prompt does not fit the model context");
    }

    model::InferSession<float> session(params);
    GeneratedRecord rec;
    rec.config = config;

    std::vector<float> logits;
    for (std::size_t i = 0; i < prompt_tokens.size(); ++i) {
        logits = session.step(prompt_tokens[i]);
    }

    Rng rng(mix64(config.seed, 0x73616d706c65ull)); // "sample"
    std::vector<std::uint16_t> sampled;
    rec.termination = Termination::MaxLength;

    while (static_cast<int>(sampled.size()) < config.max_new_tokens && !session.full()) {
        std::vector<double> adjusted(logits.size());
        for (std::size_t i = 0; i < logits.size(); ++i) {
            adjusted[i] = static_cast<double>(logits[i]) / config.temperature;
        }
        // the pad token and the opening marker are never legal continuations
        adjusted[seq::Vocabulary::kPad] = -1e30;
        adjusted[open_marker] = -1e30;
        auto probs = nucleus_filter(softmax_probs(adjusted), config.top_p);
        const auto token = static_cast<std::uint16_t>(rng.categorical(probs));

        rec.log_probs.push_back(token_log_prob(logits, token));
        sampled.push_back(token);
        if (token == stop_marker) {
            rec.termination = Termination::StopToken;
            break;
        }
        logits = session.step(token);
    }

    // residues of the whole stream (prompt + sampled) in generation order,
    // then flipped into N-to-C order for C2N runs
    std::string residues = config.prompt;
    for (std::uint16_t t : sampled) {
        if (vocab.is_residue(t)) residues.push_back(vocab.residue_char(t));
    }
    if (config.direction == seq::Direction::C2N) {
        std::reverse(residues.begin(), residues.end());
    }
    rec.residues = std::move(residues);
    return rec;
}

std::vector<GeneratedRecord> dedupe(std::vector<GeneratedRecord> records) {
    std::vector<GeneratedRecord> out;
    out.reserve(records.size());
    std::unordered_set<std::string> seen;
    for (auto& r : records) {
        if (seen.insert(r.residues).second) out.push_back(std::move(r));
    }
    return out;
}

} // namespace plmforge::sample

#include "plmforge/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "plmforge/errors.hpp"

namespace plmforge::eval {

std::vector<double> average_ranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double mid = 0.5 * static_cast<double>(i + j) + 1.0; // 1-based midrank
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mid;
        i = j + 1;
    }
    return ranks;
}

double spearman(const std::vector<double>& scores, const std::vector<double>& measurements) {
    if (scores.size() != measurements.size()) throw ContractError("spearman: length mismatch");
    const std::size_t n = scores.size();
    if (n < 3) throw MetricError("spearman requires at least 3 points");

    const auto rx = average_ranks(scores);
    const auto ry = average_ranks(measurements);

    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);

    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = rx[i] - mx, dy = ry[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw MetricError("spearman undefined: zero rank variance");
    }
    return sxy / std::sqrt(sxx * syy);
}

double auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
    if (scores.size() != labels.size()) throw ContractError("auc: length mismatch");
    std::size_t n_pos = 0;
    for (auto l : labels) n_pos += l ? 1 : 0;
    const std::size_t n_neg = labels.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) throw MetricError("auc undefined: single-class input");

    const auto ranks = average_ranks(scores);
    double pos_rank_sum = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i]) pos_rank_sum += ranks[i];
    }
    const double u = pos_rank_sum - static_cast<double>(n_pos) * (n_pos + 1) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double topk_avg(const std::vector<double>& scores, const std::vector<double>& measurements,
                std::size_t k) {
    if (scores.size() != measurements.size()) throw ContractError("topk_avg: length mismatch");
    const std::size_t n = scores.size();
    if (k == 0 || k > n) throw ConfigError("topk_avg: k must be in [1, n]");

    double lo = measurements[0], hi = measurements[0];
    for (double m : measurements) {
        lo = std::min(lo, m);
        hi = std::max(hi, m);
    }
    const double span = hi - lo;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double m = measurements[order[i]];
        sum += span == 0.0 ? 0.5 : (m - lo) / span;
    }
    return sum / static_cast<double>(k);
}

std::vector<double> ensemble_scores(const std::vector<std::vector<double>>& per_model_scores) {
    if (per_model_scores.empty()) throw ContractError("ensemble_scores: no models");
    const std::size_t n = per_model_scores.front().size();
    for (const auto& s : per_model_scores) {
        if (s.size() != n) throw ContractError("ensemble_scores: score lists differ in length");
    }
    std::vector<double> combined(n, 0.0);
    for (const auto& s : per_model_scores) {
        const auto ranks = average_ranks(s);
        for (std::size_t i = 0; i < n; ++i) combined[i] += ranks[i];
    }
    for (auto& c : combined) c /= static_cast<double>(per_model_scores.size());
    return combined;
}

} // namespace plmforge::eval

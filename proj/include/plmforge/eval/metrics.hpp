#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace plmforge::eval {

// Average (mid) ranks, 1-based; ties share the mean of their rank range.
std::vector<double> average_ranks(const std::vector<double>& values);

// Spearman rank correlation: Pearson on average ranks. Requires n >= 3;
// throws MetricError when either side has zero rank variance.
double spearman(const std::vector<double>& scores, const std::vector<double>& measurements);

// Probability that a random positive outranks a random negative, ties 0.5,
// computed via rank sums. Throws MetricError when a class is missing.
double auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels);

// Mean of the measurements of the k highest-scoring variants (ties keep
// input order), after min-max normalizing measurements over the whole
// dataset to [0,1]. A constant measurement column normalizes to 0.5.
double topk_avg(const std::vector<double>& scores, const std::vector<double>& measurements,
                std::size_t k);

// Rank-average ensembling: each model's scores become average ranks, which
// are averaged across models. Works for a single model (identity ranking).
std::vector<double> ensemble_scores(const std::vector<std::vector<double>>& per_model_scores);

} // namespace plmforge::eval

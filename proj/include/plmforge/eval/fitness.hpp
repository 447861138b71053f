#pragma once

#include <optional>
#include <string>
#include <vector>

#include "plmforge/eval/metrics.hpp"
#include "plmforge/eval/scoring.hpp"

namespace plmforge::eval {

enum class FitnessMetric : std::uint8_t { Spearman, Auc, TopkAvg };

FitnessMetric fitness_metric_from_string(const std::string& s);
const char* fitness_metric_name(FitnessMetric m);

// Variant sequences with scalar measurements; indels allowed, so sequences
// may differ in length. labels (for AUC) come from an explicit column or
// from thresholding the measurements.
struct FitnessDataset {
    std::string name;
    std::vector<std::string> sequences;
    std::vector<double> measurements;
    std::vector<std::uint8_t> labels; // empty unless the CSV has a label column
    FitnessMetric metric = FitnessMetric::Spearman;
    double metric_param = 0.0; // AUC threshold or top-k k
    bool has_param = false;

    std::size_t size() const { return sequences.size(); }
};

// CSV with header sequence,measurement[,label]; one variant per row.
FitnessDataset load_fitness_csv(const std::string& path, const seq::Vocabulary& vocab);

// Manifest rows: name,path,metric[,threshold|k]
std::vector<FitnessDataset> load_benchmark_manifest(const std::string& path,
                                                    const seq::Vocabulary& vocab);

std::vector<std::uint8_t> binarize_labels(const FitnessDataset& ds);

double compute_metric(const FitnessDataset& ds, const std::vector<double>& scores);

struct BenchmarkRow {
    std::string model;
    std::string dataset;
    std::string metric;
    double value = 0.0;
    bool ok = false;
    std::string error;
};

struct NamedModel {
    std::string name;
    const model::ModelParams<float>* params;
};

// Per-dataset metric per model plus an AVERAGE row (unweighted mean over the
// datasets that scored) and, with 2+ models, an ensemble entry combining the
// models' rankings. Dataset failures land in their row without aborting.
// normalize=false switches the variant score to the summed log-likelihood.
std::vector<BenchmarkRow> run_benchmark(const std::vector<NamedModel>& models,
                                        const std::vector<FitnessDataset>& datasets,
                                        ScoreMode mode, bool with_ensemble, int threads,
                                        std::vector<std::vector<std::vector<double>>>* scores_out
                                        = nullptr,
                                        bool normalize = true);

} // namespace plmforge::eval

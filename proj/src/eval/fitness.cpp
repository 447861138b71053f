#include "plmforge/eval/fitness.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "plmforge/parallel.hpp"

namespace plmforge::eval {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

std::string trimmed(std::string s) {
    const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && is_space(s.front())) s.erase(s.begin());
    while (!s.empty() && is_space(s.back())) s.pop_back();
    return s;
}

double parse_double(const std::string& s, const std::string& context) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError("cannot parse number '" + s + "' in " + context);
    }
}

} // namespace

FitnessMetric fitness_metric_from_string(const std::string& s) {
    if (s == "spearman") return FitnessMetric::Spearman;
    if (s == "auc") return FitnessMetric::Auc;
    if (s == "topk_avg" || s == "topkavg") return FitnessMetric::TopkAvg;
    throw ConfigError("unknown fitness metric: " + s);
}

const char* fitness_metric_name(FitnessMetric m) {
    switch (m) {
        case FitnessMetric::Spearman: return "spearman";
        case FitnessMetric::Auc: return "auc";
        case FitnessMetric::TopkAvg: return "topk_avg";
    }
    return "?";
}

FitnessDataset load_fitness_csv(const std::string& path, const seq::Vocabulary& vocab) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open fitness CSV: " + path);

    FitnessDataset ds;
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty fitness CSV: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = split_csv_line(line);
    for (auto& h : header) h = trimmed(h);
    const bool has_label = header.size() == 3 && header[2] == "label";
    if (!(header.size() == 2 || has_label) || header[0] != "sequence" ||
        header[1] != "measurement") {
        throw DataError("fitness CSV must start with 'sequence,measurement[,label]': " + path);
    }

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw DataError("wrong field count at " + path + ":" + std::to_string(line_no));
        }
        std::string residues = trimmed(fields[0]);
        seq::sanitize_residues(residues, vocab, seq::UnknownPolicy::Reject);
        const double m = parse_double(trimmed(fields[1]), path + ":" + std::to_string(line_no));
        if (!std::isfinite(m)) {
            throw DataError("non-finite measurement at " + path + ":" + std::to_string(line_no));
        }
        ds.sequences.push_back(std::move(residues));
        ds.measurements.push_back(m);
        if (has_label) {
            const std::string l = trimmed(fields[2]);
            if (l != "0" && l != "1") {
                throw DataError("label must be 0 or 1 at " + path + ":" + std::to_string(line_no));
            }
            ds.labels.push_back(l == "1" ? 1 : 0);
        }
    }
    if (ds.sequences.empty()) throw DataError("fitness CSV has no variants: " + path);
    return ds;
}

std::vector<FitnessDataset> load_benchmark_manifest(const std::string& path,
                                                    const seq::Vocabulary& vocab) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open benchmark manifest: " + path);

    // manifest-relative dataset paths
    std::string base;
    const auto slash = path.find_last_of('/');
    if (slash != std::string::npos) base = path.substr(0, slash + 1);

    std::vector<FitnessDataset> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string t = trimmed(line);
        if (t.empty() || t[0] == '#') continue;
        auto fields = split_csv_line(t);
        if (fields.size() < 3 || fields.size() > 4) {
            throw DataError("manifest rows are name,path,metric[,param] at " + path + ":" +
                            std::to_string(line_no));
        }
        std::string ds_path = trimmed(fields[1]);
        if (!ds_path.empty() && ds_path[0] != '/') ds_path = base + ds_path;
        FitnessDataset ds = load_fitness_csv(ds_path, vocab);
        ds.name = trimmed(fields[0]);
        ds.metric = fitness_metric_from_string(trimmed(fields[2]));
        if (fields.size() == 4) {
            ds.metric_param = parse_double(trimmed(fields[3]), path + ":" + std::to_string(line_no));
            ds.has_param = true;
        }
        out.push_back(std::move(ds));
    }
    if (out.empty()) throw DataError("benchmark manifest lists no datasets: " + path);
    return out;
}

std::vector<std::uint8_t> binarize_labels(const FitnessDataset& ds) {
    if (!ds.labels.empty()) return ds.labels;
    if (!ds.has_param) {
        throw DataError("dataset '" + ds.name +
                        "' needs a label column or an explicit AUC threshold");
    }
    std::vector<std::uint8_t> labels(ds.measurements.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        labels[i] = ds.measurements[i] >= ds.metric_param ? 1 : 0;
    }
    return labels;
}

double compute_metric(const FitnessDataset& ds, const std::vector<double>& scores) {
    switch (ds.metric) {
        case FitnessMetric::Spearman:
            return spearman(scores, ds.measurements);
        case FitnessMetric::Auc:
            return auc(scores, binarize_labels(ds));
        case FitnessMetric::TopkAvg: {
            if (!ds.has_param) throw DataError("topk_avg needs k in the manifest");
            return topk_avg(scores, ds.measurements, static_cast<std::size_t>(ds.metric_param));
        }
    }
    throw ContractError("unknown fitness metric");
}

std::vector<BenchmarkRow> run_benchmark(const std::vector<NamedModel>& models,
                                        const std::vector<FitnessDataset>& datasets,
                                        ScoreMode mode, bool with_ensemble, int threads,
                                        std::vector<std::vector<std::vector<double>>>* scores_out,
                                        bool normalize) {
    if (models.empty()) throw ContractError("run_benchmark: no models");
    std::vector<BenchmarkRow> rows;

    // scores[model][dataset][variant]
    std::vector<std::vector<std::vector<double>>> scores(
        models.size(), std::vector<std::vector<double>>(datasets.size()));
    for (std::size_t mi = 0; mi < models.size(); ++mi) {
        for (std::size_t di = 0; di < datasets.size(); ++di) {
            const auto& ds = datasets[di];
            auto& s = scores[mi][di];
            s.resize(ds.size());
            parallel_for(ds.size(), threads, [&](std::size_t vi) {
                s[vi] = log_likelihood(*models[mi].params, seq::Vocabulary::standard(),
                                       ds.sequences[vi], mode, normalize);
            });
        }
    }

    auto emit = [&](const std::string& model_name, std::size_t di,
                    const std::vector<double>& s) {
        BenchmarkRow row;
        row.model = model_name;
        row.dataset = datasets[di].name;
        row.metric = fitness_metric_name(datasets[di].metric);
        try {
            row.value = compute_metric(datasets[di], s);
            row.ok = true;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rows.push_back(row);
        return row;
    };

    auto emit_average = [&](const std::string& model_name, std::size_t first_row) {
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t i = first_row; i < rows.size(); ++i) {
            if (rows[i].ok) {
                sum += rows[i].value;
                ++n;
            }
        }
        BenchmarkRow avg;
        avg.model = model_name;
        avg.dataset = "AVERAGE";
        avg.metric = "mean";
        if (n > 0) {
            avg.value = sum / static_cast<double>(n);
            avg.ok = true;
        } else {
            avg.error = "no dataset produced a metric";
        }
        rows.push_back(avg);
    };

    for (std::size_t mi = 0; mi < models.size(); ++mi) {
        const std::size_t first = rows.size();
        for (std::size_t di = 0; di < datasets.size(); ++di) {
            emit(models[mi].name, di, scores[mi][di]);
        }
        emit_average(models[mi].name, first);
    }

    if (with_ensemble && models.size() >= 2) {
        const std::size_t first = rows.size();
        for (std::size_t di = 0; di < datasets.size(); ++di) {
            std::vector<std::vector<double>> per_model;
            per_model.reserve(models.size());
            for (std::size_t mi = 0; mi < models.size(); ++mi) per_model.push_back(scores[mi][di]);
            emit("ensemble", di, ensemble_scores(per_model));
        }
        emit_average("ensemble", first);
    }

    if (scores_out) *scores_out = std::move(scores);
    return rows;
}

} // namespace plmforge::eval

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "plmforge/cli/config.hpp"
#include "plmforge/eval/fitness.hpp"
#include "plmforge/eval/scoring.hpp"
#include "plmforge/eval/svg.hpp"
#include "plmforge/parallel.hpp"
#include "plmforge/sample/sweep.hpp"
#include "plmforge/seqdata/dataset_io.hpp"
#include "plmforge/seqdata/fasta.hpp"
#include "plmforge/seqdata/identity.hpp"
#include "plmforge/train/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace plmforge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitInternal = 4;

struct CommonOpts {
    int threads = default_threads();
    std::string format = "csv";
};

void add_threads_flag(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--threads", opts.threads,
                    "worker threads (1 = deterministic reference path)")
        ->check(CLI::PositiveNumber);
}

void add_format_flag(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--format", opts.format, "report format")
        ->check(CLI::IsMember({"csv", "json"}));
}

std::uint64_t resolve_seed(const CLI::Option* opt, std::uint64_t flag_value) {
    return opt->count() > 0 ? flag_value : cli::env_seed(0);
}

std::string sanitize_filename(std::string s) {
    for (char& c : s) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') {
            c = '_';
        }
    }
    return s;
}

// ---------------------------------------------------------------- prep ----

struct PrepOpts {
    std::string in_path, out_dir;
    std::size_t context_len = 256;
    double identity_threshold = 0.9;
    double holdout_fraction = 0.1;
    std::uint64_t seed = 0;
    std::string unknown_policy = "replace";
    std::string long_policy = "truncate";
    CommonOpts common;
};

int run_prep(const PrepOpts& o) {
    const auto& vocab = seq::Vocabulary::standard();
    const auto unknown = o.unknown_policy == "reject" ? seq::UnknownPolicy::Reject
                                                      : seq::UnknownPolicy::Replace;
    seq::FastaParseStats stats;
    const auto records = seq::parse_fasta_file(o.in_path, vocab, unknown, &stats);
    if (records.empty()) throw DataError("no sequences in " + o.in_path);
    if (stats.replaced_chars > 0) {
        std::cerr << "warning: mapped " << stats.replaced_chars
                  << " out-of-alphabet residue characters to X\n";
    }

    seq::SplitSpec spec{o.identity_threshold, o.holdout_fraction, o.seed};
    const auto split = seq::make_split(records, spec, o.common.threads);

    seq::Dataset ds;
    ds.context_len = o.context_len;
    ds.seed = o.seed;
    const auto long_policy =
        o.long_policy == "skip" ? seq::LongPolicy::Skip : seq::LongPolicy::Truncate;

    auto build = [&](const std::vector<std::size_t>& indices) {
        std::vector<seq::TokenizedSequence> seqs;
        std::vector<std::string> ids;
        seqs.reserve(indices.size() * 2);
        for (std::size_t i : indices) {
            auto fwd = seq::tokenize(vocab, records[i], seq::Direction::N2C);
            auto rev = seq::flip(fwd); // as-is and flipped
            seqs.push_back(std::move(fwd));
            seqs.push_back(std::move(rev));
            ids.push_back(records[i].id);
            ids.push_back(records[i].id);
        }
        seq::PackStats pstats;
        auto batch = seq::pack(seqs, ids, o.context_len, long_policy, &pstats);
        if (pstats.truncated > 0) {
            std::cerr << "warning: truncated " << pstats.truncated
                      << " sequences longer than the context\n";
        }
        if (pstats.skipped > 0) {
            std::cerr << "warning: skipped " << pstats.skipped
                      << " sequences longer than the context\n";
        }
        return batch;
    };
    ds.partitions.emplace("train", build(split.train));
    ds.partitions.emplace("heldout", build(split.heldout));

    seq::write_dataset(o.out_dir, ds, records, spec, split);

    std::cout << "records: " << records.size() << "\nclusters: " << split.clusters.n_clusters()
              << "\ntrain records: " << split.train.size()
              << " (rows: " << ds.partitions.at("train").n_rows << ")"
              << "\nheldout records: " << split.heldout.size()
              << " (rows: " << ds.partitions.at("heldout").n_rows << ")"
              << "\ndataset: " << o.out_dir << '\n';
    return kExitOk;
}

// ----------------------------------------------------- train / finetune ----

struct TrainOpts {
    std::string data_dir, out_dir, config_path, base_checkpoint;
    std::vector<std::string> overrides;
    CommonOpts common;
};

int run_train(const TrainOpts& o, bool finetune) {
    const auto run_cfg = cli::RunConfig::load(o.config_path, o.overrides);
    auto data = seq::load_partition(o.data_dir, "train");

    train::TrainState state;
    train::TrainConfig tcfg = run_cfg.train_config(cli::env_seed(0), /*validate=*/!finetune);

    if (finetune) {
        const auto base = train::load_checkpoint(o.base_checkpoint);
        auto init = train::finetune_init(base, tcfg, data);
        state = std::move(init.state);
        tcfg = init.config;
        std::cout << "finetune: peak_lr " << tcfg.peak_lr << " (base/5), total_steps "
                  << tcfg.total_steps << " (<= 2 epochs)\n";
    } else {
        const auto mcfg = run_cfg.model_config(static_cast<int>(data.context_len),
                                               static_cast<int>(seq::Vocabulary::standard().size()));
        state.params = model::init_params<float>(mcfg, tcfg.seed);
        state.moments = train::AdamMoments<float>::zeros_like(state.params);
    }

    fs::create_directories(o.out_dir);
    const std::string ckpt_dir = (fs::path(o.out_dir) / "checkpoint").string();

    train::Trainer trainer(std::move(state), tcfg, data);
    train::TrainResult result = trainer.run(ckpt_dir, [](const train::StepReport& r) {
        if (r.step % 50 == 0) {
            std::cout << "step " << r.step << " loss " << r.loss << " lr " << r.lr
                      << " grad_norm " << r.grad_norm << '\n';
        }
    });
    train::write_step_log((fs::path(o.out_dir) / "log.csv").string(), result.reports);
    std::cout << "final loss " << (result.reports.empty() ? 0.0 : result.reports.back().loss)
              << ", checkpoint: " << ckpt_dir << '\n';
    return kExitOk;
}

// -------------------------------------------------------------- sample ----

struct SampleOpts {
    std::string checkpoint, out_dir, prompt;
    std::vector<double> temperatures{0.2, 0.4, 0.6, 0.8, 1.0};
    std::vector<double> top_ps{0.5, 0.7, 0.9, 1.0};
    int n_per_cell = 10;
    int max_new_tokens = 1024;
    std::string direction = "n2c";
    std::uint64_t seed = 0;
    CommonOpts common;
};

int run_sample(const SampleOpts& o) {
    const auto ck = train::load_checkpoint(o.checkpoint);
    const auto& vocab = seq::Vocabulary::standard();

    sample::SamplerConfig base;
    base.prompt = o.prompt;
    base.max_new_tokens = o.max_new_tokens;
    base.direction = o.direction == "c2n" ? seq::Direction::C2N : seq::Direction::N2C;
    base.seed = o.seed;

    auto records = sample::sweep(ck.params, vocab, o.temperatures, o.top_ps, o.n_per_cell, base,
                                 o.common.threads);
    fs::create_directories(o.out_dir);
    {
        std::ofstream csv(fs::path(o.out_dir) / "library.csv", std::ios::trunc);
        if (!csv) throw DataError("cannot write library.csv in " + o.out_dir);
        sample::write_library_csv(csv, records);
    }
    const std::size_t before = records.size();
    auto deduped = sample::dedupe_library(std::move(records));
    {
        std::ofstream fasta(fs::path(o.out_dir) / "library.fasta", std::ios::trunc);
        if (!fasta) throw DataError("cannot write library.fasta in " + o.out_dir);
        sample::write_library_fasta(fasta, deduped);
    }
    std::cout << "generated " << before << " records (" << deduped.size()
              << " after dedupe) into " << o.out_dir << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- eval ----

struct EvalOpts {
    std::string checkpoint, fasta_path, out_path;
    std::string direction = "n2c";
    CommonOpts common;
};

int run_eval(const EvalOpts& o) {
    const auto ck = train::load_checkpoint(o.checkpoint);
    const auto& vocab = seq::Vocabulary::standard();
    const auto records = seq::parse_fasta_file(o.fasta_path, vocab);
    if (records.empty()) throw DataError("no sequences in " + o.fasta_path);

    const auto dir = o.direction == "c2n" ? seq::Direction::C2N : seq::Direction::N2C;
    std::vector<seq::TokenizedSequence> seqs(records.size());
    parallel_for(records.size(), o.common.threads,
                 [&](std::size_t i) { seqs[i] = seq::tokenize(vocab, records[i], dir); });
    // scoring is read-only over params; sequences score concurrently
    std::vector<double> ppl(records.size());
    parallel_for(records.size(), o.common.threads,
                 [&](std::size_t i) { ppl[i] = eval::perplexity(ck.params, seqs[i]); });

    eval::CorpusPerplexity corpus;
    corpus.per_sequence = ppl;
    double sum = 0.0, nll = 0.0, tokens = 0.0;
    for (std::size_t i = 0; i < ppl.size(); ++i) {
        sum += ppl[i];
        const auto n = static_cast<double>(seqs[i].tokens.size() - 1);
        nll += std::log(ppl[i]) * n;
        tokens += n;
    }
    corpus.per_sequence_mean = sum / static_cast<double>(ppl.size());
    corpus.token_weighted = std::exp(nll / tokens);

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!o.out_path.empty()) {
        file.open(o.out_path, std::ios::trunc);
        if (!file) throw DataError("cannot write " + o.out_path);
        out = &file;
    }
    if (o.common.format == "json") {
        json j{{"per_sequence_mean", corpus.per_sequence_mean},
               {"token_weighted", corpus.token_weighted},
               {"direction", o.direction},
               {"sequences", json::array()}};
        for (std::size_t i = 0; i < records.size(); ++i) {
            j["sequences"].push_back(json{{"id", records[i].id}, {"ppl", ppl[i]}});
        }
        *out << j.dump(2) << '\n';
    } else {
        *out << "id,ppl\n";
        for (std::size_t i = 0; i < records.size(); ++i) {
            *out << records[i].id << ',' << ppl[i] << '\n';
        }
        *out << "per_sequence_mean," << corpus.per_sequence_mean << '\n';
        *out << "token_weighted," << corpus.token_weighted << '\n';
    }
    return kExitOk;
}

// ------------------------------------------------------------- fitness ----

struct FitnessOpts {
    std::vector<std::string> checkpoints;
    std::string manifest_path, out_path, svg_dir;
    std::string direction = "n2c";
    bool ensemble = false;
    bool unnormalized = false;
    CommonOpts common;
};

int run_fitness(const FitnessOpts& o) {
    const auto& vocab = seq::Vocabulary::standard();
    const auto datasets = eval::load_benchmark_manifest(o.manifest_path, vocab);

    std::vector<train::Checkpoint> loaded;
    loaded.reserve(o.checkpoints.size());
    std::vector<eval::NamedModel> models;
    for (const auto& path : o.checkpoints) {
        loaded.push_back(train::load_checkpoint(path));
        std::string name = fs::path(path).filename().string();
        if (name.empty() || name == "checkpoint") {
            name = fs::path(path).parent_path().filename().string();
        }
        models.push_back({name.empty() ? path : name, &loaded.back().params});
    }

    const auto mode = eval::score_mode_from_string(o.direction);
    std::vector<std::vector<std::vector<double>>> scores;
    const auto rows = eval::run_benchmark(models, datasets, mode, o.ensemble, o.common.threads,
                                          &scores, !o.unnormalized);

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!o.out_path.empty()) {
        file.open(o.out_path, std::ios::trunc);
        if (!file) throw DataError("cannot write " + o.out_path);
        out = &file;
    }
    if (o.common.format == "json") {
        json j = json::array();
        for (const auto& r : rows) {
            json row{{"model", r.model}, {"dataset", r.dataset}, {"metric", r.metric}};
            if (r.ok) {
                row["value"] = r.value;
            } else {
                row["error"] = r.error;
            }
            j.push_back(row);
        }
        *out << j.dump(2) << '\n';
    } else {
        *out << "model,dataset,metric,value\n";
        for (const auto& r : rows) {
            *out << r.model << ',' << r.dataset << ',' << r.metric << ',';
            if (r.ok) {
                *out << r.value;
            } else {
                *out << "nan";
            }
            *out << '\n';
        }
    }
    for (const auto& r : rows) {
        if (!r.ok) std::cerr << "warning: " << r.model << '/' << r.dataset << ": " << r.error << '\n';
    }

    if (!o.svg_dir.empty()) {
        fs::create_directories(o.svg_dir);
        for (std::size_t mi = 0; mi < models.size(); ++mi) {
            for (std::size_t di = 0; di < datasets.size(); ++di) {
                const auto name = sanitize_filename(models[mi].name + "_" + datasets[di].name) +
                                  ".svg";
                eval::svg::write_scatter((fs::path(o.svg_dir) / name).string(), scores[mi][di],
                                         datasets[di].measurements, "model score", "measurement",
                                         datasets[di].name + " vs " + models[mi].name);
            }
        }
    }
    return kExitOk;
}

// ---------------------------------------------------------------- rank ----

struct RankOpts {
    std::string checkpoint, in_path, out_path, scores_path, ref_path, svg_path;
    double keep = 0.5;
    std::string direction = "n2c";
    bool unnormalized = false;
    CommonOpts common;
};

int run_rank(const RankOpts& o) {
    const auto ck = train::load_checkpoint(o.checkpoint);
    const auto& vocab = seq::Vocabulary::standard();
    const auto records = seq::parse_fasta_file(o.in_path, vocab);

    std::vector<std::string> sequences(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) sequences[i] = records[i].residues;

    std::vector<double> scores;
    const auto kept = eval::rank_and_filter(ck.params, vocab, sequences, o.keep,
                                            eval::score_mode_from_string(o.direction),
                                            o.common.threads, &scores, !o.unnormalized);

    std::vector<seq::SequenceRecord> kept_records;
    kept_records.reserve(kept.size());
    for (std::size_t idx : kept) kept_records.push_back(records[idx]);
    seq::write_fasta_file(o.out_path, kept_records);

    if (!o.scores_path.empty()) {
        std::ofstream out(o.scores_path, std::ios::trunc);
        if (!out) throw DataError("cannot write " + o.scores_path);
        std::vector<std::uint8_t> is_kept(records.size(), 0);
        for (std::size_t idx : kept) is_kept[idx] = 1;
        if (o.common.format == "json") {
            json j = json::array();
            for (std::size_t i = 0; i < records.size(); ++i) {
                j.push_back(json{{"id", records[i].id},
                                 {"score", scores[i]},
                                 {"kept", is_kept[i] != 0}});
            }
            out << j.dump(2) << '\n';
        } else {
            out << "id,score,kept\n";
            for (std::size_t i = 0; i < records.size(); ++i) {
                out << records[i].id << ',' << scores[i] << ',' << int(is_kept[i]) << '\n';
            }
        }
    }

    if (!o.svg_path.empty()) {
        if (o.ref_path.empty()) {
            throw UsageError("--svg needs --ref to compute identities against");
        }
        const auto refs = seq::parse_fasta_file(o.ref_path, vocab);
        if (refs.empty()) throw DataError("no sequences in " + o.ref_path);
        std::vector<double> identities(kept_records.size());
        parallel_for(kept_records.size(), o.common.threads, [&](std::size_t i) {
            double best = 0.0;
            for (const auto& ref : refs) {
                best = std::max(best,
                                seq::sequence_identity(kept_records[i].residues, ref.residues));
            }
            identities[i] = best;
        });
        eval::svg::write_histogram(o.svg_path, identities, 20, "max identity to reference",
                                   "kept library identity");
    }

    std::cout << "kept " << kept.size() << " of " << records.size() << " sequences -> "
              << o.out_path << '\n';
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"plmforge — desk-scale protein language model toolkit"};
    app.require_subcommand(1);

    PrepOpts prep;
    auto* cmd_prep = app.add_subcommand("prep", "tokenize, flip, pack and split a FASTA corpus");
    cmd_prep->add_option("--in", prep.in_path, "input FASTA")->required();
    cmd_prep->add_option("--out", prep.out_dir, "output dataset directory")->required();
    cmd_prep->add_option("--context-len", prep.context_len, "packed row length");
    cmd_prep->add_option("--identity-threshold", prep.identity_threshold,
                         "clustering/split identity threshold")
        ->check(CLI::Range(0.0, 1.0));
    cmd_prep->add_option("--holdout-fraction", prep.holdout_fraction,
                         "fraction of clusters held out");
    auto* prep_seed = cmd_prep->add_option("--seed", prep.seed, "split/prep seed");
    cmd_prep->add_option("--unknown-policy", prep.unknown_policy,
                         "out-of-alphabet residue handling")
        ->check(CLI::IsMember({"replace", "reject"}));
    cmd_prep->add_option("--long-policy", prep.long_policy, "sequences longer than the context")
        ->check(CLI::IsMember({"truncate", "skip"}));
    add_threads_flag(cmd_prep, prep.common);

    TrainOpts train_opts;
    auto* cmd_train = app.add_subcommand("train", "train a model on a prepared dataset");
    cmd_train->add_option("--data", train_opts.data_dir, "dataset directory from prep")->required();
    cmd_train->add_option("--out", train_opts.out_dir, "run directory")->required();
    cmd_train->add_option("--config", train_opts.config_path, "key=value config file");
    cmd_train->add_option("--set", train_opts.overrides, "config override key=value");
    add_threads_flag(cmd_train, train_opts.common);

    TrainOpts ft_opts;
    auto* cmd_finetune =
        app.add_subcommand("finetune", "continue from a checkpoint with the finetuning protocol");
    cmd_finetune->add_option("--data", ft_opts.data_dir, "finetuning dataset directory")->required();
    cmd_finetune->add_option("--base-checkpoint", ft_opts.base_checkpoint, "converged checkpoint")
        ->required();
    cmd_finetune->add_option("--out", ft_opts.out_dir, "run directory")->required();
    cmd_finetune->add_option("--config", ft_opts.config_path, "key=value config file");
    cmd_finetune->add_option("--set", ft_opts.overrides, "config override key=value");
    add_threads_flag(cmd_finetune, ft_opts.common);

    SampleOpts sample_opts;
    auto* cmd_sample = app.add_subcommand("sample", "generate a (T, P) sweep library");
    cmd_sample->add_option("--checkpoint", sample_opts.checkpoint, "model checkpoint")->required();
    cmd_sample->add_option("--out", sample_opts.out_dir, "library output directory")->required();
    cmd_sample->add_option("--temperatures", sample_opts.temperatures, "temperature set");
    cmd_sample->add_option("--top-p", sample_opts.top_ps, "nucleus probability set");
    cmd_sample->add_option("--n-per-cell", sample_opts.n_per_cell, "generations per (T,P) cell")
        ->check(CLI::PositiveNumber);
    cmd_sample->add_option("--prompt", sample_opts.prompt, "residue motif prompt (e.g. EVQ)");
    cmd_sample->add_option("--max-new-tokens", sample_opts.max_new_tokens, "generation budget")
        ->check(CLI::PositiveNumber);
    cmd_sample->add_option("--direction", sample_opts.direction, "generation direction")
        ->check(CLI::IsMember({"n2c", "c2n"}));
    auto* sample_seed = cmd_sample->add_option("--seed", sample_opts.seed, "library base seed");
    add_threads_flag(cmd_sample, sample_opts.common);

    EvalOpts eval_opts;
    auto* cmd_eval = app.add_subcommand("eval", "held-out perplexity of a FASTA corpus");
    cmd_eval->add_option("--checkpoint", eval_opts.checkpoint, "model checkpoint")->required();
    cmd_eval->add_option("--fasta", eval_opts.fasta_path, "sequences to score")->required();
    cmd_eval->add_option("--out", eval_opts.out_path, "output file (default stdout)");
    cmd_eval->add_option("--direction", eval_opts.direction, "tokenization direction")
        ->check(CLI::IsMember({"n2c", "c2n"}));
    add_format_flag(cmd_eval, eval_opts.common);
    add_threads_flag(cmd_eval, eval_opts.common);

    FitnessOpts fitness_opts;
    auto* cmd_fitness = app.add_subcommand("fitness", "zero-shot fitness benchmark");
    cmd_fitness->add_option("--checkpoint", fitness_opts.checkpoints, "model checkpoint (repeatable)")
        ->required();
    cmd_fitness->add_option("--manifest", fitness_opts.manifest_path,
                            "dataset manifest: name,path,metric[,param]")
        ->required();
    cmd_fitness->add_option("--out", fitness_opts.out_path, "output file (default stdout)");
    cmd_fitness->add_option("--direction", fitness_opts.direction, "scoring direction")
        ->check(CLI::IsMember({"n2c", "c2n", "mean-both"}));
    cmd_fitness->add_flag("--ensemble", fitness_opts.ensemble, "add a rank-ensemble of the models");
    cmd_fitness->add_flag("--unnormalized", fitness_opts.unnormalized,
                          "score by summed instead of mean per-token log-likelihood");
    cmd_fitness->add_option("--svg-dir", fitness_opts.svg_dir,
                            "write score-vs-measurement scatters here");
    add_format_flag(cmd_fitness, fitness_opts.common);
    add_threads_flag(cmd_fitness, fitness_opts.common);

    RankOpts rank_opts;
    auto* cmd_rank = app.add_subcommand("rank", "likelihood-rank a library and keep the top fraction");
    cmd_rank->add_option("--checkpoint", rank_opts.checkpoint, "model checkpoint")->required();
    cmd_rank->add_option("--in", rank_opts.in_path, "library FASTA")->required();
    cmd_rank->add_option("--out", rank_opts.out_path, "kept sequences FASTA")->required();
    cmd_rank->add_option("--keep", rank_opts.keep, "fraction to keep")
        ->check(CLI::Range(0.0, 1.0));
    cmd_rank->add_option("--scores", rank_opts.scores_path, "per-sequence score CSV");
    cmd_rank->add_option("--ref", rank_opts.ref_path, "reference FASTA for identity histogram");
    cmd_rank->add_option("--svg", rank_opts.svg_path, "identity histogram SVG (needs --ref)");
    cmd_rank->add_option("--direction", rank_opts.direction, "scoring direction")
        ->check(CLI::IsMember({"n2c", "c2n", "mean-both"}));
    cmd_rank->add_flag("--unnormalized", rank_opts.unnormalized,
                       "score by summed instead of mean per-token log-likelihood");
    add_format_flag(cmd_rank, rank_opts.common);
    add_threads_flag(cmd_rank, rank_opts.common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (cmd_prep->parsed()) {
            prep.seed = resolve_seed(prep_seed, prep.seed);
            return run_prep(prep);
        }
        if (cmd_train->parsed()) return run_train(train_opts, /*finetune=*/false);
        if (cmd_finetune->parsed()) return run_train(ft_opts, /*finetune=*/true);
        if (cmd_sample->parsed()) {
            sample_opts.seed = resolve_seed(sample_seed, sample_opts.seed);
            return run_sample(sample_opts);
        }
        if (cmd_eval->parsed()) return run_eval(eval_opts);
        if (cmd_fitness->parsed()) return run_fitness(fitness_opts);
        if (cmd_rank->parsed()) return run_rank(rank_opts);
        std::cerr << "error: no subcommand\n";
        return kExitUsage;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const DivergenceError& e) {
        std::cerr << "error: training diverged: " << e.what() << '\n';
        if (!e.last_checkpoint.empty()) {
            std::cerr << "last healthy checkpoint: " << e.last_checkpoint << '\n';
        }
        return kExitDivergence;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const MetricError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kExitInternal;
    }
}

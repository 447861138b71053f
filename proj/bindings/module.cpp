#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "plmforge/eval/fitness.hpp"
#include "plmforge/eval/metrics.hpp"
#include "plmforge/eval/scoring.hpp"
#include "plmforge/sample/sweep.hpp"
#include "plmforge/seqdata/clustering.hpp"
#include "plmforge/seqdata/fasta.hpp"
#include "plmforge/seqdata/identity.hpp"
#include "plmforge/seqdata/packing.hpp"
#include "plmforge/seqdata/split.hpp"
#include "plmforge/train/checkpoint.hpp"
#include "plmforge/train/schedule.hpp"

namespace py = pybind11;
using namespace plmforge;

namespace {

seq::Direction direction_from(const std::string& s) {
    if (s == "n2c") return seq::Direction::N2C;
    if (s == "c2n") return seq::Direction::C2N;
    throw ConfigError("direction must be n2c or c2n");
}

// Checkpoint-backed scorer/generator handle for python callers.
class Model {
public:
    explicit Model(const std::string& checkpoint_dir)
        : ck_(train::load_checkpoint(checkpoint_dir)) {}

    double perplexity(const std::string& residues, const std::string& direction) const {
        const auto ts = seq::tokenize(seq::Vocabulary::standard(), residues,
                                      direction_from(direction));
        return eval::perplexity(ck_.params, ts);
    }

    double log_likelihood(const std::string& residues, const std::string& mode,
                          bool normalize) const {
        return eval::log_likelihood(ck_.params, seq::Vocabulary::standard(), residues,
                                    eval::score_mode_from_string(mode), normalize);
    }

    py::dict generate(double temperature, double top_p, int max_new_tokens,
                      const std::string& prompt, const std::string& direction,
                      std::uint64_t seed) const {
        sample::SamplerConfig cfg;
        cfg.temperature = temperature;
        cfg.top_p = top_p;
        cfg.max_new_tokens = max_new_tokens;
        cfg.prompt = prompt;
        cfg.direction = direction_from(direction);
        cfg.seed = seed;
        const auto rec = sample::generate(ck_.params, seq::Vocabulary::standard(), cfg);
        py::dict out;
        out["residues"] = rec.residues;
        out["log_probs"] = rec.log_probs;
        out["termination"] =
            rec.termination == sample::Termination::StopToken ? "stop" : "max-length";
        return out;
    }

    long step() const { return ck_.step; }

private:
    train::Checkpoint ck_;
};

} // namespace

PYBIND11_MODULE(plmforge, m) {
    m.doc() = "protein language model toolkit: data prep, scoring and sampling primitives";

    py::register_exception<UsageError>(m, "UsageError");
    py::register_exception<DataError>(m, "DataError");
    py::register_exception<MetricError>(m, "MetricError");

    // tokenization
    m.def(
        "tokenize",
        [](const std::string& residues, const std::string& direction) {
            const auto t = seq::tokenize(seq::Vocabulary::standard(), residues,
                                         direction_from(direction));
            return t.tokens;
        },
        py::arg("residues"), py::arg("direction") = "n2c");
    m.def(
        "detokenize",
        [](const std::vector<std::uint16_t>& tokens, const std::string& direction) {
            seq::TokenizedSequence t;
            t.tokens = tokens;
            t.direction = direction_from(direction);
            return seq::detokenize(seq::Vocabulary::standard(), t);
        },
        py::arg("tokens"), py::arg("direction") = "n2c");
    m.def("vocabulary", [] { return seq::Vocabulary::standard().token_strings(); });

    m.def(
        "pack",
        [](const std::vector<std::string>& residues, std::size_t context_len) {
            std::vector<seq::TokenizedSequence> seqs;
            std::vector<std::string> ids;
            for (std::size_t i = 0; i < residues.size(); ++i) {
                seqs.push_back(seq::tokenize(seq::Vocabulary::standard(), residues[i],
                                             seq::Direction::N2C));
                ids.push_back(std::to_string(i));
            }
            const auto batch = seq::pack(seqs, ids, context_len);
            py::dict out;
            out["n_rows"] = batch.n_rows;
            out["inputs"] = batch.inputs;
            out["targets"] = batch.targets;
            out["loss_mask"] = batch.loss_mask;
            out["non_pad_tokens"] = batch.non_pad_tokens();
            return out;
        },
        py::arg("residues"), py::arg("context_len"));

    m.def("sequence_identity", &seq::sequence_identity, py::arg("a"), py::arg("b"));
    m.def(
        "cluster_greedy",
        [](const std::vector<std::string>& residues, double threshold) {
            std::vector<seq::SequenceRecord> records;
            for (std::size_t i = 0; i < residues.size(); ++i) {
                records.push_back({std::to_string(i), residues[i], ""});
            }
            const auto result = seq::cluster_greedy(records, threshold);
            py::dict out;
            out["representatives"] = result.representatives;
            out["assignment"] = result.assignment;
            return out;
        },
        py::arg("residues"), py::arg("threshold"));

    m.def(
        "lr_schedule",
        [](long step, double peak_lr, int warmup_steps, int total_steps, double min_lr_ratio) {
            train::TrainConfig c;
            c.peak_lr = peak_lr;
            c.warmup_steps = warmup_steps;
            c.total_steps = total_steps;
            c.min_lr_ratio = min_lr_ratio;
            return train::lr_schedule(step, c);
        },
        py::arg("step"), py::arg("peak_lr"), py::arg("warmup_steps"), py::arg("total_steps"),
        py::arg("min_lr_ratio") = 0.1);

    m.def("apply_temperature", &sample::apply_temperature, py::arg("logits"),
          py::arg("temperature"));
    m.def("softmax", &sample::softmax_probs, py::arg("logits"));
    m.def("nucleus_filter", &sample::nucleus_filter, py::arg("probs"), py::arg("p"));

    m.def("spearman", &eval::spearman, py::arg("scores"), py::arg("measurements"));
    m.def(
        "auc",
        [](const std::vector<double>& scores, const std::vector<int>& labels) {
            std::vector<std::uint8_t> l(labels.size());
            for (std::size_t i = 0; i < labels.size(); ++i) l[i] = labels[i] ? 1 : 0;
            return eval::auc(scores, l);
        },
        py::arg("scores"), py::arg("labels"));
    m.def("topk_avg", &eval::topk_avg, py::arg("scores"), py::arg("measurements"), py::arg("k"));
    m.def("ensemble_scores", &eval::ensemble_scores, py::arg("per_model_scores"));

    py::class_<Model>(m, "Model")
        .def(py::init<const std::string&>(), py::arg("checkpoint_dir"))
        .def("perplexity", &Model::perplexity, py::arg("residues"), py::arg("direction") = "n2c")
        .def("log_likelihood", &Model::log_likelihood, py::arg("residues"),
             py::arg("mode") = "n2c", py::arg("normalize") = true)
        .def("generate", &Model::generate, py::arg("temperature") = 1.0, py::arg("top_p") = 1.0,
             py::arg("max_new_tokens") = 128, py::arg("prompt") = "",
             py::arg("direction") = "n2c", py::arg("seed") = 0)
        .def_property_readonly("step", &Model::step);
}

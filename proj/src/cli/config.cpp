#include "plmforge/cli/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "plmforge/errors.hpp"

namespace plmforge::cli {

namespace {

enum class KeyType { Int, Real, Bool };

struct SchemaEntry {
    const char* key;
    KeyType type;
    const char* doc;
};

// The published configuration schema for train/finetune runs.
constexpr SchemaEntry kSchema[] = {
    {"model.n_layers", KeyType::Int, "decoder layers"},
    {"model.n_heads", KeyType::Int, "attention heads"},
    {"model.head_dim", KeyType::Int, "per-head dimension"},
    {"model.rotary_dim", KeyType::Int, "rotary channels (-1 = head_dim)"},
    {"model.tie_lm_head", KeyType::Bool, "tie LM head to the embedding"},
    {"train.peak_lr", KeyType::Real, "peak learning rate"},
    {"train.warmup_steps", KeyType::Int, "linear warm-up steps"},
    {"train.total_steps", KeyType::Int, "total optimizer steps"},
    {"train.min_lr_ratio", KeyType::Real, "cosine floor as a fraction of peak"},
    {"train.weight_decay", KeyType::Real, "decoupled weight decay"},
    {"train.clip_norm", KeyType::Real, "global gradient norm clip"},
    {"train.batch_size_tokens", KeyType::Int, "token budget per step"},
    {"train.grad_accum", KeyType::Int, "micro-batches per optimizer step"},
    {"train.seed", KeyType::Int, "training seed"},
    {"train.checkpoint_every", KeyType::Int, "checkpoint cadence in steps"},
};

const SchemaEntry* find_schema(const std::string& key) {
    for (const auto& e : kSchema) {
        if (key == e.key) return &e;
    }
    return nullptr;
}

std::string trimmed(std::string s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    return s;
}

} // namespace

void RunConfig::set_checked(const std::string& key, const std::string& value) {
    const SchemaEntry* entry = find_schema(key);
    if (!entry) {
        throw UsageError("unknown configuration key '" + key + "'\n" + schema_help());
    }
    try {
        std::size_t used = 0;
        switch (entry->type) {
            case KeyType::Int:
                (void)std::stol(value, &used);
                break;
            case KeyType::Real:
                (void)std::stod(value, &used);
                break;
            case KeyType::Bool:
                if (value != "true" && value != "false" && value != "0" && value != "1") {
                    throw std::invalid_argument(value);
                }
                used = value.size();
                break;
        }
        if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
        throw UsageError("bad value '" + value + "' for configuration key '" + key + "'");
    }
    values_[key] = value;
}

RunConfig RunConfig::load(const std::string& config_path,
                          const std::vector<std::string>& overrides) {
    RunConfig cfg;
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw UsageError("cannot open config file: " + config_path);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = trimmed(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw UsageError("expected 'key = value' at " + config_path + ":" +
                                 std::to_string(line_no));
            }
            cfg.set_checked(trimmed(line.substr(0, eq)), trimmed(line.substr(eq + 1)));
        }
    }
    for (const auto& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos) {
            throw UsageError("--set expects key=value, got '" + ov + "'");
        }
        cfg.set_checked(trimmed(ov.substr(0, eq)), trimmed(ov.substr(eq + 1)));
    }
    return cfg;
}

long RunConfig::get_int(const std::string& key, long fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : std::stol(it->second);
}

double RunConfig::get_real(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : std::stod(it->second);
}

bool RunConfig::get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return it->second == "true" || it->second == "1";
}

model::ModelConfig RunConfig::model_config(int context_len, int vocab_size) const {
    model::ModelConfig c;
    c.n_layers = static_cast<int>(get_int("model.n_layers", 4));
    c.n_heads = static_cast<int>(get_int("model.n_heads", 4));
    c.head_dim = static_cast<int>(get_int("model.head_dim", 16));
    c.rotary_dim = static_cast<int>(get_int("model.rotary_dim", -1));
    c.tie_lm_head = get_bool("model.tie_lm_head", false);
    c.context_len = context_len;
    c.vocab_size = vocab_size;
    c.validate();
    return c;
}

train::TrainConfig RunConfig::train_config(std::uint64_t default_seed, bool validate) const {
    train::TrainConfig c;
    c.peak_lr = get_real("train.peak_lr", 6.0e-4);
    c.warmup_steps = static_cast<int>(get_int("train.warmup_steps", 100));
    c.total_steps = static_cast<int>(get_int("train.total_steps", 1000));
    c.min_lr_ratio = get_real("train.min_lr_ratio", 0.1);
    c.weight_decay = get_real("train.weight_decay", 0.1);
    c.clip_norm = get_real("train.clip_norm", 1.0);
    c.batch_size_tokens = get_int("train.batch_size_tokens", 4096);
    c.grad_accum = static_cast<int>(get_int("train.grad_accum", 1));
    c.seed = static_cast<std::uint64_t>(get_int("train.seed", static_cast<long>(default_seed)));
    c.checkpoint_every = static_cast<int>(get_int("train.checkpoint_every", 500));
    if (validate) c.validate();
    return c;
}

std::string RunConfig::schema_help() {
    std::ostringstream os;
    os << "configuration keys:\n";
    for (const auto& e : kSchema) {
        os << "  " << e.key << "  ("
           << (e.type == KeyType::Int ? "int" : e.type == KeyType::Real ? "real" : "bool") << ") "
           << e.doc << '\n';
    }
    return os.str();
}

std::uint64_t env_seed(std::uint64_t fallback) {
    const char* v = std::getenv("PLM_FORGE_SEED");
    if (!v || !*v) return fallback;
    char* end = nullptr;
    const unsigned long long parsed = std::strtoull(v, &end, 10);
    if (end == v || *end != '\0') return fallback;
    return static_cast<std::uint64_t>(parsed);
}

} // namespace plmforge::cli

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "plmforge/model/config.hpp"
#include "plmforge/train/schedule.hpp"

namespace plmforge::cli {

// Flat key-value run configuration ("key = value" lines, '#' comments).
// Keys are validated against the published schema before any work starts;
// --set overrides win over file values (last one wins).
class RunConfig {
public:
    static RunConfig load(const std::string& config_path,
                          const std::vector<std::string>& overrides);

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    long get_int(const std::string& key, long fallback) const;
    double get_real(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    model::ModelConfig model_config(int context_len, int vocab_size) const;
    // validate=false defers the semantic checks (finetune_init rewrites the
    // schedule and validates the result itself).
    train::TrainConfig train_config(std::uint64_t default_seed, bool validate = true) const;

    static std::string schema_help();

private:
    void set_checked(const std::string& key, const std::string& value);

    std::map<std::string, std::string> values_;
};

// PLM_FORGE_SEED env fallback; returns fallback when unset/unparseable.
std::uint64_t env_seed(std::uint64_t fallback);

} // namespace plmforge::cli

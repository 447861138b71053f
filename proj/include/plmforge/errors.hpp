#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace plmforge {

// Error taxonomy maps onto the CLI exit codes:
//   UsageError/ConfigError -> 1, DataError -> 2, DivergenceError -> 3,
//   ContractError and anything unexpected -> 4.

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid configuration value (bad temperature, odd rotary dim, ...).
struct ConfigError : UsageError {
    using UsageError::UsageError;
};

// Malformed input data: FASTA, CSV, checkpoints, manifests.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Training blew up (non-finite loss or gradient). Carries the last
// checkpoint known to be healthy, empty if none was written yet.
struct DivergenceError : std::runtime_error {
    DivergenceError(const std::string& msg, std::string checkpoint)
        : std::runtime_error(msg), last_checkpoint(std::move(checkpoint)) {}
    std::string last_checkpoint;
};

// API misuse inside the process: shape mismatches, non-scalar backward roots.
struct ContractError : std::logic_error {
    using std::logic_error::logic_error;
};

struct ShapeError : ContractError {
    using ContractError::ContractError;
};

// Metric cannot be computed on this input (zero rank variance, single class).
struct MetricError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace plmforge

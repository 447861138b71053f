#pragma once

#include <iosfwd>

#include "plmforge/sample/sampler.hpp"

namespace plmforge::sample {

struct SweepCell {
    double temperature = 1.0;
    double top_p = 1.0;
    int index = 0;                // position within the cell
    std::uint64_t seed = 0;       // derived stream seed
};

struct SweepRecord {
    SweepCell cell;
    GeneratedRecord record;
    std::string id; // e.g. gen_T0.2_P0.9_0007
};

// Cartesian (T, P) library: n_per_cell generations per pair. Cell seeds are
// a stable 64-bit mix of (base seed, T, P, index), so cells are independent
// and the whole library is reproducible; cells may run concurrently.
std::vector<SweepRecord> sweep(const model::ModelParams<float>& params,
                               const seq::Vocabulary& vocab,
                               const std::vector<double>& temperatures,
                               const std::vector<double>& top_ps,
                               int n_per_cell, const SamplerConfig& base, int threads = 1);

std::uint64_t cell_seed(std::uint64_t base_seed, double temperature, double top_p, int index);

// FASTA headers carry provenance: id|T=..|P=..|seed=..|term=..
void write_library_fasta(std::ostream& out, const std::vector<SweepRecord>& records);

// Sidecar: id,temperature,top_p,seed,termination,n_tokens,mean_log_prob
void write_library_csv(std::ostream& out, const std::vector<SweepRecord>& records);

std::vector<SweepRecord> dedupe_library(std::vector<SweepRecord> records);

} // namespace plmforge::sample

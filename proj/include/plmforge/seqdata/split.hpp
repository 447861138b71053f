#pragma once

#include <cstdint>
#include <vector>

#include "plmforge/seqdata/clustering.hpp"
#include "plmforge/seqdata/records.hpp"

namespace plmforge::seq {

struct SplitSpec {
    double identity_threshold = 0.9; // e.g. 0.9 / 0.5 mirror max90 / max50 style splits
    double holdout_fraction = 0.1;
    std::uint64_t seed = 0;
};

struct SplitResult {
    std::vector<std::size_t> train;   // record indices
    std::vector<std::size_t> heldout; // record indices
    ClusterResult clusters;
};

// Clusters at spec.identity_threshold and holds out whole clusters (a seeded
// shuffle picks holdout_fraction of them). Afterwards any heldout cluster
// whose members reach identity >= threshold to a train representative is
// moved back to train, so the cross-split guarantee holds unconditionally.
SplitResult make_split(const std::vector<SequenceRecord>& records, const SplitSpec& spec,
                       int threads = 1);

} // namespace plmforge::seq

#pragma once

#include <map>
#include <string>

#include "plmforge/seqdata/clustering.hpp"
#include "plmforge/seqdata/packing.hpp"
#include "plmforge/seqdata/split.hpp"

namespace plmforge::seq {

// Dataset directory written by prep and consumed by train/eval:
//   dataset.json   -- context length, seed, per-partition packed entries
//   <part>.bin     -- "PLMD" magic, u32 version/context_len/n_rows, u16 tokens
//   split.json     -- record ids per partition plus the SplitSpec used
//   clusters.tsv   -- representative_id \t member_id \t identity
struct Dataset {
    std::size_t context_len = 0;
    std::uint64_t seed = 0;
    std::map<std::string, PackedBatch> partitions; // "train", "heldout"
};

void write_dataset(const std::string& dir, const Dataset& ds,
                   const std::vector<SequenceRecord>& records, const SplitSpec& split_spec,
                   const SplitResult& split);

Dataset load_dataset(const std::string& dir);

PackedBatch load_partition(const std::string& dir, const std::string& name);

} // namespace plmforge::seq

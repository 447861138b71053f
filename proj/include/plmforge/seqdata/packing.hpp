#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "plmforge/seqdata/records.hpp"

namespace plmforge::seq {

enum class LongPolicy : std::uint8_t { Truncate, Skip };

// Context-length token matrix built by greedy first-fit concatenation.
// targets is inputs shifted left by one; loss_mask is true exactly where
// both the input and the target are non-PAD. Sequences never straddle rows;
// boundaries reconstruct every packed sequence exactly.
struct PackedBatch {
    struct Boundary {
        std::size_t begin = 0;      // column of first token
        std::size_t end = 0;        // one past the last token
        std::uint32_t entry = 0;    // index into entry_ids / directions
    };

    std::size_t context_len = 0;
    std::size_t n_rows = 0;
    std::vector<std::uint16_t> inputs;  // [n_rows, context_len]
    std::vector<std::uint16_t> targets; // shifted left, PAD-filled tail
    std::vector<std::uint8_t> loss_mask;
    std::vector<std::vector<Boundary>> boundaries; // per row
    std::vector<std::string> entry_ids;
    std::vector<Direction> directions;

    std::size_t non_pad_tokens() const;
    std::size_t masked_positions() const;
    const std::uint16_t* row(std::size_t r) const { return inputs.data() + r * context_len; }
};

struct PackStats {
    std::size_t truncated = 0;
    std::size_t skipped = 0;
};

// ids[i] names sequences[i]; used for boundary bookkeeping.
PackedBatch pack(const std::vector<TokenizedSequence>& sequences,
                 const std::vector<std::string>& ids,
                 std::size_t context_len,
                 LongPolicy policy = LongPolicy::Truncate,
                 PackStats* stats = nullptr);

// Inverse via boundaries: one TokenizedSequence per packed entry, in
// boundary order. Lossless for sequences that were not truncated.
std::vector<TokenizedSequence> unpack(const PackedBatch& batch,
                                      std::vector<std::string>* ids_out = nullptr);

} // namespace plmforge::seq

#include "plmforge/seqdata/packing.hpp"

#include "plmforge/errors.hpp"

namespace plmforge::seq {

std::size_t PackedBatch::non_pad_tokens() const {
    std::size_t n = 0;
    for (auto t : inputs) n += t != Vocabulary::kPad ? 1 : 0;
    return n;
}

std::size_t PackedBatch::masked_positions() const {
    std::size_t n = 0;
    for (auto m : loss_mask) n += m ? 1 : 0;
    return n;
}

PackedBatch pack(const std::vector<TokenizedSequence>& sequences,
                 const std::vector<std::string>& ids,
                 std::size_t context_len, LongPolicy policy, PackStats* stats) {
    if (context_len < 2) throw ConfigError("context length must be at least 2");
    if (ids.size() != sequences.size()) {
        throw ContractError("pack: ids and sequences length mismatch");
    }

    PackedBatch batch;
    batch.context_len = context_len;

    std::vector<std::vector<std::uint16_t>> rows;
    std::vector<std::size_t> row_fill;
    PackStats local;

    for (std::size_t s = 0; s < sequences.size(); ++s) {
        std::vector<std::uint16_t> tokens = sequences[s].tokens;
        if (tokens.empty()) continue;
        if (tokens.size() > context_len) {
            if (policy == LongPolicy::Skip) {
                ++local.skipped;
                continue;
            }
            tokens.resize(context_len);
            ++local.truncated;
        }

        // first fit: earliest row with room, else open a new one
        std::size_t target = rows.size();
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (row_fill[r] + tokens.size() <= context_len) {
                target = r;
                break;
            }
        }
        if (target == rows.size()) {
            rows.emplace_back();
            rows.back().reserve(context_len);
            row_fill.push_back(0);
            batch.boundaries.emplace_back();
        }

        const std::size_t begin = row_fill[target];
        rows[target].insert(rows[target].end(), tokens.begin(), tokens.end());
        row_fill[target] += tokens.size();

        const auto entry = static_cast<std::uint32_t>(batch.entry_ids.size());
        batch.entry_ids.push_back(ids[s]);
        batch.directions.push_back(sequences[s].direction);
        batch.boundaries[target].push_back({begin, row_fill[target], entry});
    }

    batch.n_rows = rows.size();
    batch.inputs.assign(batch.n_rows * context_len, Vocabulary::kPad);
    batch.targets.assign(batch.n_rows * context_len, Vocabulary::kPad);
    batch.loss_mask.assign(batch.n_rows * context_len, 0);

    for (std::size_t r = 0; r < batch.n_rows; ++r) {
        std::uint16_t* in = batch.inputs.data() + r * context_len;
        for (std::size_t c = 0; c < rows[r].size(); ++c) in[c] = rows[r][c];

        std::uint16_t* tg = batch.targets.data() + r * context_len;
        std::uint8_t* mk = batch.loss_mask.data() + r * context_len;
        for (std::size_t c = 0; c + 1 < context_len; ++c) tg[c] = in[c + 1];
        for (std::size_t c = 0; c < context_len; ++c) {
            mk[c] = (in[c] != Vocabulary::kPad && tg[c] != Vocabulary::kPad) ? 1 : 0;
        }
    }

    if (stats) *stats = local;
    return batch;
}

std::vector<TokenizedSequence> unpack(const PackedBatch& batch, std::vector<std::string>* ids_out) {
    std::vector<TokenizedSequence> out;
    if (ids_out) ids_out->clear();
    for (std::size_t r = 0; r < batch.n_rows; ++r) {
        const std::uint16_t* row = batch.row(r);
        for (const auto& b : batch.boundaries[r]) {
            TokenizedSequence t;
            t.tokens.assign(row + b.begin, row + b.end);
            t.direction = batch.directions[b.entry];
            out.push_back(std::move(t));
            if (ids_out) ids_out->push_back(batch.entry_ids[b.entry]);
        }
    }
    return out;
}

} // namespace plmforge::seq

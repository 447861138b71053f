#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "plmforge/errors.hpp"

namespace plmforge::seq {

// Token alphabet: PAD, the two terminal markers, then the residue letters.
// The residue set is the 20 canonical amino acids plus B, Z, X, U, O --
// every uppercase letter except J. Ordering is fixed and persisted with
// checkpoints; a checkpoint with a different ordering fails to load.
class Vocabulary {
public:
    static constexpr std::uint16_t kPad = 0;
    static constexpr std::uint16_t kNTerm = 1; // '1', N-terminal marker
    static constexpr std::uint16_t kCTerm = 2; // '2', C-terminal marker

    static const Vocabulary& standard();

    std::size_t size() const { return residues_.size() + 3; }

    bool is_residue_char(char c) const {
        return c >= 'A' && c <= 'Z' && char_to_index_[c - 'A'] >= 0;
    }

    // Residue char -> token index; throws on characters outside the alphabet.
    std::uint16_t residue_token(char c) const {
        if (c < 'A' || c > 'Z' || char_to_index_[c - 'A'] < 0) {
            throw DataError(std::string("residue character outside vocabulary: '") + c + "'");
        }
        return static_cast<std::uint16_t>(char_to_index_[c - 'A'] + 3);
    }

    char residue_char(std::uint16_t token) const {
        if (token < 3 || token >= size()) {
            throw ContractError("token index is not a residue");
        }
        return residues_[token - 3];
    }

    bool is_residue(std::uint16_t token) const { return token >= 3 && token < size(); }

    // Manifest form, e.g. ["<pad>","1","2","A",...].
    std::vector<std::string> token_strings() const;
    static void validate_token_strings(const std::vector<std::string>& tokens);

private:
    Vocabulary();

    std::string residues_;
    std::array<int, 26> char_to_index_{};
};

} // namespace plmforge::seq

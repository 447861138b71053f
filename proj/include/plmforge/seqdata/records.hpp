#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "plmforge/seqdata/vocabulary.hpp"

namespace plmforge::seq {

struct SequenceRecord {
    std::string id;
    std::string residues;
    std::string source; // free-form provenance tag, may be empty
};

enum class Direction : std::uint8_t { N2C, C2N };

inline const char* direction_name(Direction d) { return d == Direction::N2C ? "n2c" : "c2n"; }

// N2C form is ['1', residues..., '2']; C2N is ['2', reversed residues..., '1'].
struct TokenizedSequence {
    std::vector<std::uint16_t> tokens;
    Direction direction = Direction::N2C;

    std::size_t size() const { return tokens.size(); }
};

enum class UnknownPolicy : std::uint8_t { Replace, Reject };

// Uppercases and maps characters outside the residue alphabet to 'X'
// (Replace) or throws DataError (Reject). Returns the replacement count.
std::size_t sanitize_residues(std::string& residues, const Vocabulary& vocab, UnknownPolicy policy);

TokenizedSequence tokenize(const Vocabulary& vocab, const std::string& residues, Direction d);

inline TokenizedSequence tokenize(const Vocabulary& vocab, const SequenceRecord& r, Direction d) {
    return tokenize(vocab, r.residues, d);
}

// Inverse of tokenize for either direction: residues in N-to-C order.
std::string detokenize(const Vocabulary& vocab, const TokenizedSequence& t);

// Reverses the token order (markers swap ends) and toggles the direction
// flag. Involution: flip(flip(t)) == t.
TokenizedSequence flip(const TokenizedSequence& t);

} // namespace plmforge::seq

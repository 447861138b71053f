#include "plmforge/seqdata/records.hpp"

#include <algorithm>
#include <cctype>

namespace plmforge::seq {

std::size_t sanitize_residues(std::string& residues, const Vocabulary& vocab, UnknownPolicy policy) {
    std::size_t replaced = 0;
    for (char& c : residues) {
        c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        if (!vocab.is_residue_char(c)) {
            if (policy == UnknownPolicy::Reject) {
                throw DataError(std::string("residue character outside alphabet: '") + c + "'");
            }
            c = 'X';
            ++replaced;
        }
    }
    return replaced;
}

TokenizedSequence tokenize(const Vocabulary& vocab, const std::string& residues, Direction d) {
    if (residues.empty()) throw DataError("cannot tokenize an empty sequence");
    TokenizedSequence t;
    t.direction = d;
    t.tokens.reserve(residues.size() + 2);
    if (d == Direction::N2C) {
        t.tokens.push_back(Vocabulary::kNTerm);
        for (char c : residues) t.tokens.push_back(vocab.residue_token(c));
        t.tokens.push_back(Vocabulary::kCTerm);
    } else {
        t.tokens.push_back(Vocabulary::kCTerm);
        for (auto it = residues.rbegin(); it != residues.rend(); ++it) {
            t.tokens.push_back(vocab.residue_token(*it));
        }
        t.tokens.push_back(Vocabulary::kNTerm);
    }
    return t;
}

std::string detokenize(const Vocabulary& vocab, const TokenizedSequence& t) {
    if (t.tokens.size() < 2) throw DataError("tokenized sequence too short");
    std::string out;
    out.reserve(t.tokens.size() - 2);
    for (std::size_t i = 1; i + 1 < t.tokens.size(); ++i) {
        out.push_back(vocab.residue_char(t.tokens[i]));
    }
    if (t.direction == Direction::C2N) std::reverse(out.begin(), out.end());
    return out;
}

TokenizedSequence flip(const TokenizedSequence& t) {
    TokenizedSequence out;
    out.tokens.assign(t.tokens.rbegin(), t.tokens.rend());
    out.direction = t.direction == Direction::N2C ? Direction::C2N : Direction::N2C;
    return out;
}

} // namespace plmforge::seq

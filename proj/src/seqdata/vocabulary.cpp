#include "plmforge/seqdata/vocabulary.hpp"

namespace plmforge::seq {

Vocabulary::Vocabulary() {
    char_to_index_.fill(-1);
    for (char c = 'A'; c <= 'Z'; ++c) {
        if (c == 'J') continue; // not an amino-acid code
        char_to_index_[c - 'A'] = static_cast<int>(residues_.size());
        residues_.push_back(c);
    }
}

const Vocabulary& Vocabulary::standard() {
    static const Vocabulary v;
    return v;
}

std::vector<std::string> Vocabulary::token_strings() const {
    std::vector<std::string> out;
    out.reserve(size());
    out.emplace_back("<pad>");
    out.emplace_back("1");
    out.emplace_back("2");
    for (char c : residues_) out.emplace_back(1, c);
    return out;
}

void Vocabulary::validate_token_strings(const std::vector<std::string>& tokens) {
    const auto expected = standard().token_strings();
    if (tokens != expected) {
        throw DataError("checkpoint vocabulary does not match this build's token ordering");
    }
}

} // namespace plmforge::seq

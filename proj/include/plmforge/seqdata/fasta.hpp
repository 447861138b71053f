#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "plmforge/seqdata/records.hpp"

namespace plmforge::seq {

struct FastaParseStats {
    std::size_t records = 0;
    std::size_t replaced_chars = 0; // residues mapped to 'X'
};

// Parses FASTA: '>' header lines, wrapped sequence lines allowed. Whitespace
// is stripped and residues uppercased. An empty stream yields an empty list;
// sequence data before any header is a DataError carrying the line number.
std::vector<SequenceRecord> parse_fasta(std::istream& in, const Vocabulary& vocab,
                                        UnknownPolicy policy = UnknownPolicy::Replace,
                                        FastaParseStats* stats = nullptr);

std::vector<SequenceRecord> parse_fasta_file(const std::string& path, const Vocabulary& vocab,
                                             UnknownPolicy policy = UnknownPolicy::Replace,
                                             FastaParseStats* stats = nullptr);

// 62-character line wrap; header is ">id" or ">id source" when source is set.
void write_fasta(std::ostream& out, const std::vector<SequenceRecord>& records,
                 std::size_t wrap = 62);

void write_fasta_file(const std::string& path, const std::vector<SequenceRecord>& records,
                      std::size_t wrap = 62);

} // namespace plmforge::seq

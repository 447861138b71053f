#include "plmforge/seqdata/fasta.hpp"

#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>

namespace plmforge::seq {

namespace {

void strip_whitespace(std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
    }
    s = std::move(out);
}

} // namespace

std::vector<SequenceRecord> parse_fasta(std::istream& in, const Vocabulary& vocab,
                                        UnknownPolicy policy, FastaParseStats* stats) {
    std::vector<SequenceRecord> records;
    SequenceRecord current;
    bool in_record = false;
    std::size_t replaced = 0;

    auto finish = [&] {
        if (!in_record) return;
        if (current.residues.empty()) {
            throw DataError("FASTA record '" + current.id + "' has no sequence");
        }
        replaced += sanitize_residues(current.residues, vocab, policy);
        records.push_back(std::move(current));
        current = SequenceRecord{};
    };

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '>') {
            finish();
            in_record = true;
            const std::string header = line.substr(1);
            const std::size_t sp = header.find_first_of(" \t");
            current.id = header.substr(0, sp);
            if (sp != std::string::npos) {
                std::size_t rest = header.find_first_not_of(" \t", sp);
                if (rest != std::string::npos) current.source = header.substr(rest);
            }
            if (current.id.empty()) {
                throw DataError("FASTA header with empty id at line " + std::to_string(line_no));
            }
        } else {
            if (!in_record) {
                throw DataError("FASTA sequence data before any header at line " +
                                std::to_string(line_no));
            }
            strip_whitespace(line);
            current.residues += line;
        }
    }
    finish();

    if (stats) {
        stats->records = records.size();
        stats->replaced_chars = replaced;
    }
    return records;
}

std::vector<SequenceRecord> parse_fasta_file(const std::string& path, const Vocabulary& vocab,
                                             UnknownPolicy policy, FastaParseStats* stats) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open FASTA file: " + path);
    return parse_fasta(in, vocab, policy, stats);
}

void write_fasta(std::ostream& out, const std::vector<SequenceRecord>& records, std::size_t wrap) {
    for (const auto& r : records) {
        out << '>' << r.id;
        if (!r.source.empty()) out << ' ' << r.source;
        out << '\n';
        for (std::size_t i = 0; i < r.residues.size(); i += wrap) {
            out << r.residues.substr(i, wrap) << '\n';
        }
    }
}

void write_fasta_file(const std::string& path, const std::vector<SequenceRecord>& records,
                      std::size_t wrap) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write FASTA file: " + path);
    write_fasta(out, records, wrap);
}

} // namespace plmforge::seq

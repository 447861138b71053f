#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "plmforge/seqdata/records.hpp"

namespace plmforge::seq {

// Greedy identity clustering: records are visited in length-descending order
// (ties keep input order); each joins the first representative with identity
// >= threshold, otherwise becomes a new representative.
struct ClusterResult {
    std::vector<std::size_t> representatives;     // record indices, creation order
    std::vector<std::size_t> assignment;          // record index -> representative record index
    std::vector<double> identity_to_rep;          // record index -> identity to its representative
    std::vector<std::vector<std::size_t>> members; // per representative (same order), incl. itself

    std::size_t n_clusters() const { return representatives.size(); }
};

ClusterResult cluster_greedy(const std::vector<SequenceRecord>& records, double threshold,
                             int threads = 1);

// TSV rows: representative_id \t member_id \t identity
void write_clusters_tsv(std::ostream& out, const std::vector<SequenceRecord>& records,
                        const ClusterResult& clusters);

} // namespace plmforge::seq

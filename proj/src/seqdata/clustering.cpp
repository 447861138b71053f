#include "plmforge/seqdata/clustering.hpp"

#include <algorithm>
#include <limits>
#include <ostream>

#include "plmforge/errors.hpp"
#include "plmforge/parallel.hpp"
#include "plmforge/seqdata/identity.hpp"

namespace plmforge::seq {

ClusterResult cluster_greedy(const std::vector<SequenceRecord>& records, double threshold,
                             int threads) {
    if (threshold <= 0.0 || threshold > 1.0) {
        throw ConfigError("clustering threshold must be in (0,1]");
    }

    std::vector<std::size_t> order(records.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return records[a].residues.size() > records[b].residues.size();
    });

    ClusterResult result;
    result.assignment.assign(records.size(), 0);
    result.identity_to_rep.assign(records.size(), 0.0);

    std::vector<double> ident; // scratch: identity against each representative
    for (std::size_t idx : order) {
        const std::string& seq = records[idx].residues;
        const std::size_t n_reps = result.representatives.size();
        ident.assign(n_reps, 0.0);
        parallel_for(n_reps, threads, [&](std::size_t r) {
            ident[r] = sequence_identity(seq, records[result.representatives[r]].residues);
        });
        // first (lowest-index) representative wins, independent of thread count
        std::size_t hit = n_reps;
        for (std::size_t r = 0; r < n_reps; ++r) {
            if (ident[r] >= threshold) {
                hit = r;
                break;
            }
        }
        if (hit == n_reps) {
            result.representatives.push_back(idx);
            result.members.emplace_back();
            result.members.back().push_back(idx);
            result.assignment[idx] = idx;
            result.identity_to_rep[idx] = 1.0;
        } else {
            result.members[hit].push_back(idx);
            result.assignment[idx] = result.representatives[hit];
            result.identity_to_rep[idx] = ident[hit];
        }
    }
    return result;
}

void write_clusters_tsv(std::ostream& out, const std::vector<SequenceRecord>& records,
                        const ClusterResult& clusters) {
    for (std::size_t r = 0; r < clusters.representatives.size(); ++r) {
        const std::string& rep_id = records[clusters.representatives[r]].id;
        for (std::size_t member : clusters.members[r]) {
            out << rep_id << '\t' << records[member].id << '\t'
                << clusters.identity_to_rep[member] << '\n';
        }
    }
}

} // namespace plmforge::seq

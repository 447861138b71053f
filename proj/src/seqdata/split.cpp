#include "plmforge/seqdata/split.hpp"

#include <algorithm>
#include <cmath>

#include "plmforge/errors.hpp"
#include "plmforge/parallel.hpp"
#include "plmforge/rng.hpp"
#include "plmforge/seqdata/identity.hpp"

namespace plmforge::seq {

SplitResult make_split(const std::vector<SequenceRecord>& records, const SplitSpec& spec,
                       int threads) {
    if (spec.holdout_fraction <= 0.0 || spec.holdout_fraction >= 1.0) {
        throw ConfigError("holdout fraction must be in (0,1)");
    }

    SplitResult result;
    result.clusters = cluster_greedy(records, spec.identity_threshold, threads);
    const std::size_t n_clusters = result.clusters.n_clusters();
    if (n_clusters < 2) {
        throw DataError("cannot split: clustering produced fewer than 2 clusters");
    }

    std::vector<std::size_t> cluster_order(n_clusters);
    for (std::size_t i = 0; i < n_clusters; ++i) cluster_order[i] = i;
    Rng rng(mix64(spec.seed, 0x73706c6974ull)); // "split"
    rng.shuffle(cluster_order.begin(), cluster_order.end());

    std::size_t n_holdout = static_cast<std::size_t>(
        std::llround(spec.holdout_fraction * static_cast<double>(n_clusters)));
    n_holdout = std::max<std::size_t>(1, std::min(n_holdout, n_clusters - 1));

    std::vector<std::size_t> heldout_clusters(cluster_order.begin(),
                                              cluster_order.begin() + n_holdout);
    std::vector<std::size_t> train_clusters(cluster_order.begin() + n_holdout,
                                            cluster_order.end());

    // Greedy clustering only compares each record against earlier
    // representatives, so a heldout member may still be close to a later
    // train representative. Move such clusters back to train until the
    // guarantee holds; the heldout set shrinks monotonically, so this ends.
    bool moved = true;
    while (moved && heldout_clusters.size() > 0) {
        moved = false;
        for (std::size_t hi = 0; hi < heldout_clusters.size() && !moved; ++hi) {
            const auto& members = result.clusters.members[heldout_clusters[hi]];
            std::vector<std::uint8_t> close(members.size(), 0);
            parallel_for(members.size(), threads, [&](std::size_t mi) {
                const std::string& seq = records[members[mi]].residues;
                for (std::size_t tc : train_clusters) {
                    const std::size_t rep = result.clusters.representatives[tc];
                    if (sequence_identity(seq, records[rep].residues) >= spec.identity_threshold) {
                        close[mi] = 1;
                        return;
                    }
                }
            });
            if (std::find(close.begin(), close.end(), 1) != close.end()) {
                train_clusters.push_back(heldout_clusters[hi]);
                heldout_clusters.erase(heldout_clusters.begin() +
                                       static_cast<std::ptrdiff_t>(hi));
                moved = true;
            }
        }
    }
    if (heldout_clusters.empty()) {
        throw DataError("cannot split: every candidate holdout cluster overlaps train "
                        "representatives at the identity threshold");
    }

    std::sort(heldout_clusters.begin(), heldout_clusters.end());
    std::sort(train_clusters.begin(), train_clusters.end());
    for (std::size_t c : train_clusters) {
        for (std::size_t r : result.clusters.members[c]) result.train.push_back(r);
    }
    for (std::size_t c : heldout_clusters) {
        for (std::size_t r : result.clusters.members[c]) result.heldout.push_back(r);
    }
    std::sort(result.train.begin(), result.train.end());
    std::sort(result.heldout.begin(), result.heldout.end());
    return result;
}

} // namespace plmforge::seq

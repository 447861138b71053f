#include "plmforge/seqdata/identity.hpp"

#include <algorithm>
#include <cstdint>
#include <vector>

#include "plmforge/errors.hpp"

namespace plmforge::seq {

namespace {

struct Cell {
    std::int32_t score;
    std::int32_t matches;

    bool operator<(const Cell& o) const {
        return score != o.score ? score < o.score : matches < o.matches;
    }
};

} // namespace

double sequence_identity(std::string_view a, std::string_view b) {
    if (a.empty() || b.empty()) throw ContractError("sequence_identity: empty sequence");
    // Two-row DP; lexicographic (score, matches) so the match count is the
    // maximum over score-optimal alignments.
    const std::size_t n = a.size(), m = b.size();
    std::vector<Cell> prev(m + 1), cur(m + 1);
    for (std::size_t j = 0; j <= m; ++j) prev[j] = {-static_cast<std::int32_t>(j), 0};

    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = {-static_cast<std::int32_t>(i), 0};
        for (std::size_t j = 1; j <= m; ++j) {
            const bool eq = a[i - 1] == b[j - 1];
            Cell best = {prev[j - 1].score + (eq ? 1 : 0), prev[j - 1].matches + (eq ? 1 : 0)};
            const Cell up = {prev[j].score - 1, prev[j].matches};
            const Cell left = {cur[j - 1].score - 1, cur[j - 1].matches};
            if (best < up) best = up;
            if (best < left) best = left;
            cur[j] = best;
        }
        std::swap(prev, cur);
    }
    const double denom = static_cast<double>(std::max(n, m));
    return static_cast<double>(prev[m].matches) / denom;
}

} // namespace plmforge::seq

#pragma once

#include <string_view>

namespace plmforge::seq {

// Global-alignment sequence identity: matches from a Needleman-Wunsch
// alignment (match=1, mismatch=0, gap=-1, linear gaps) divided by
// max(len(a), len(b)). Among score-optimal alignments the one with the most
// matches is counted, which makes the value deterministic. Symmetric, in [0,1].
double sequence_identity(std::string_view a, std::string_view b);

} // namespace plmforge::seq

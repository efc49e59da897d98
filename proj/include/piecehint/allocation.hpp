#pragma once

#include <span>
#include <vector>

#include "piecehint/corpus.hpp"

namespace piecehint::allocation {

struct AllocationParams {
    int k_max = 3;      // budget for the hardest tier
    double beta1 = 0.15; // hard tier boundary
    double beta2 = 0.35; // medium tier boundary
    int m = 16;          // attempts behind the success counts

    void validate() const;
};

// Three-tier initial piece budget from the training-model success count c:
//   c in [0, beta1*m]        -> k_max
//   c in (beta1*m, beta2*m]  -> floor(k_max / 2)
//   c in (beta2*m, m]        -> 0
// Boundaries are exact real comparisons against beta*m.
int allocate_budget(int c, const AllocationParams& params);

// Picks the k0 pieces with the largest normalized values (the subset of size
// k0 maximizing the value sum; top-k attains it). Equal values prefer the
// earlier solution position. Positions are returned sorted in solution order
// for prompt construction. k0 beyond the piece count is clamped.
std::vector<int> select_hints(std::span<const corpus::PieceRecord> pieces, int k0);

} // namespace piecehint::allocation

#include "piecehint/allocation.hpp"

#include <algorithm>
#include <numeric>

#include "piecehint/errors.hpp"

namespace piecehint::allocation {

void AllocationParams::validate() const {
    if (k_max < 0) throw ValidationError("allocation: k_max must be >= 0");
    if (m < 1) throw ValidationError("allocation: m must be >= 1");
    if (beta1 < 0.0 || beta2 > 1.0 || beta1 > beta2) {
        throw ValidationError("allocation: need 0 <= beta1 <= beta2 <= 1");
    }
}

int allocate_budget(int c, const AllocationParams& params) {
    params.validate();
    if (c < 0 || c > params.m) {
        throw ValidationError("allocate_budget: c must lie in [0, m]");
    }
    const double count = static_cast<double>(c);
    if (count <= params.beta1 * static_cast<double>(params.m)) return params.k_max;
    if (count <= params.beta2 * static_cast<double>(params.m)) return params.k_max / 2;
    return 0;
}

std::vector<int> select_hints(std::span<const corpus::PieceRecord> pieces, int k0) {
    if (k0 < 0) throw ValidationError("select_hints: k0 must be >= 0");
    for (const auto& piece : pieces) {
        if (!piece.norm_value) {
            throw ValidationError("select_hints: piece " + std::to_string(piece.position) +
                                  " has no normalized value");
        }
    }
    const int n = static_cast<int>(pieces.size());
    const int take = std::min(k0, n); // short solutions clamp rather than abort

    std::vector<int> order(pieces.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (*pieces[a].norm_value != *pieces[b].norm_value) {
            return *pieces[a].norm_value > *pieces[b].norm_value;
        }
        return pieces[a].position < pieces[b].position;
    });

    std::vector<int> selected;
    selected.reserve(take);
    for (int i = 0; i < take; ++i) selected.push_back(pieces[order[i]].position);
    std::sort(selected.begin(), selected.end());
    return selected;
}

} // namespace piecehint::allocation

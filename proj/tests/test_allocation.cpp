#include "doctest.h"

#include <algorithm>
#include <vector>

#include "fixtures.hpp"
#include "piecehint/allocation.hpp"
#include "piecehint/errors.hpp"
#include "piecehint/rng.hpp"

using namespace piecehint;

namespace {

std::vector<corpus::PieceRecord> pieces_with_values(const std::vector<double>& values) {
    std::vector<corpus::PieceRecord> pieces;
    for (std::size_t i = 0; i < values.size(); ++i) {
        corpus::PieceRecord piece;
        piece.position = static_cast<int>(i);
        piece.text = "p" + std::to_string(i);
        piece.norm_value = values[i];
        pieces.push_back(std::move(piece));
    }
    return pieces;
}

// Exhaustive size-k subset maximizer of the value sum, for checking the
// greedy top-k selection.
double best_subset_sum(const std::vector<double>& values, int k) {
    const int n = static_cast<int>(values.size());
    double best = -1.0;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        if (__builtin_popcount(mask) != k) continue;
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
            if (mask & (1u << i)) sum += values[i];
        }
        best = std::max(best, sum);
    }
    return best;
}

} // namespace

TEST_CASE("allocate_budget reference points with default parameters") {
    allocation::AllocationParams params; // k_max 3, beta 0.15/0.35, m 16
    CHECK(allocation::allocate_budget(2, params) == 3);
    CHECK(allocation::allocate_budget(4, params) == 1);
    CHECK(allocation::allocate_budget(6, params) == 0);
}

TEST_CASE("allocate_budget full tier table for m = 16") {
    allocation::AllocationParams params; // boundaries at 2.4 and 5.6
    for (int c = 0; c <= 16; ++c) {
        const int expected = c <= 2 ? 3 : (c <= 5 ? 1 : 0);
        CHECK(allocation::allocate_budget(c, params) == expected);
    }
}

TEST_CASE("allocate_budget boundary semantics") {
    allocation::AllocationParams params;
    CHECK(allocation::allocate_budget(0, params) == params.k_max);
    CHECK(allocation::allocate_budget(params.m, params) == 0); // beta2 < 1

    // the medium tier takes the floor of half the budget, even when that is 0
    params.k_max = 1;
    CHECK(allocation::allocate_budget(4, params) == 0);
    params.k_max = 5;
    CHECK(allocation::allocate_budget(4, params) == 2);
}

TEST_CASE("allocate_budget rejects counts outside [0, m]") {
    allocation::AllocationParams params;
    CHECK_THROWS_AS(allocation::allocate_budget(-1, params), ValidationError);
    CHECK_THROWS_AS(allocation::allocate_budget(17, params), ValidationError);
}

TEST_CASE("allocate_budget is non-increasing in the success count") {
    auto engine = rng::make_engine(5, "allocation-property", 0);
    for (int trial = 0; trial < 200; ++trial) {
        allocation::AllocationParams params;
        params.m = 1 + rng::uniform_below(engine, 32);
        params.k_max = rng::uniform_below(engine, 8);
        const double a = rng::uniform01(engine);
        const double b = rng::uniform01(engine);
        params.beta1 = std::min(a, b);
        params.beta2 = std::max(a, b);
        int previous = params.k_max;
        for (int c = 0; c <= params.m; ++c) {
            const int budget = allocation::allocate_budget(c, params);
            CHECK(budget <= previous);
            previous = budget;
        }
    }
}

TEST_CASE("select_hints picks the three reference steps on the fixture") {
    const auto problem = fixtures::seven_piece_problem();
    const auto hints = allocation::select_hints(problem.pieces, 3);
    // 0-indexed {3,4,5}: steps 4, 5 and 6 in 1-indexed terms
    CHECK(hints == std::vector<int>{3, 4, 5});
}

TEST_CASE("select_hints identity and clamping cases") {
    const auto problem = fixtures::seven_piece_problem();
    CHECK(allocation::select_hints(problem.pieces, 0).empty());
    CHECK(allocation::select_hints(problem.pieces, 99).size() == problem.pieces.size());
    CHECK_THROWS_AS(allocation::select_hints(problem.pieces, -1), ValidationError);
}

TEST_CASE("select_hints requires normalized values") {
    auto pieces = pieces_with_values({0.5, 0.25});
    pieces[1].norm_value.reset();
    CHECK_THROWS_AS(allocation::select_hints(pieces, 1), ValidationError);
}

TEST_CASE("select_hints breaks value ties toward the earlier position") {
    const auto pieces = pieces_with_values({0.5, 0.9, 0.5, 0.2});
    CHECK(allocation::select_hints(pieces, 2) == std::vector<int>{0, 1});
}

TEST_CASE("select_hints output is ordered by solution position") {
    const auto pieces = pieces_with_values({0.1, 0.9, 0.2, 0.8, 0.3});
    const auto hints = allocation::select_hints(pieces, 3);
    CHECK(std::is_sorted(hints.begin(), hints.end()));
    CHECK(hints == std::vector<int>{1, 3, 4});
}

TEST_CASE("top-k selection matches the exhaustive subset maximum for n <= 10") {
    auto engine = rng::make_engine(17, "select-hints-oracle", 0);
    for (int trial = 0; trial < 300; ++trial) {
        const int n = 1 + rng::uniform_below(engine, 10);
        std::vector<double> values(n);
        for (double& v : values) {
            // quantized values produce frequent ties
            v = rng::uniform_below(engine, 5) / 4.0;
        }
        const auto pieces = pieces_with_values(values);
        for (int k = 0; k <= n; ++k) {
            const auto hints = allocation::select_hints(pieces, k);
            CHECK(static_cast<int>(hints.size()) == std::min(k, n));
            double sum = 0.0;
            for (int pos : hints) sum += values[pos];
            CHECK(sum == doctest::Approx(best_subset_sum(values, k)).epsilon(1e-12));
        }
    }
}

TEST_CASE("allocation params validate their ranges") {
    allocation::AllocationParams params;
    params.beta1 = 0.5;
    params.beta2 = 0.2;
    CHECK_THROWS_AS(params.validate(), ValidationError);
    params = {};
    params.k_max = -1;
    CHECK_THROWS_AS(params.validate(), ValidationError);
}

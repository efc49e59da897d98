#pragma once

// Shared test fixtures: a 7-piece problem whose normalized piece values
// reproduce the reference hint-selection scenario, plus helpers for building
// synthetic problems by hand.

#include <string>
#include <vector>

#include "piecehint/allocation.hpp"
#include "piecehint/corpus.hpp"

namespace fixtures {

// Seven ordered pieces with normalized values
//   [0.25, 0.25, 0.25, 0.94, 0.56, 0.75, 0.00]
// so the top-3 hint set is positions {3,4,5} (0-indexed) and least-value
// withdrawal proceeds 4 -> 5 -> 3.
inline piecehint::corpus::Problem seven_piece_problem() {
    piecehint::corpus::Problem problem;
    problem.id = "seven-piece";
    problem.statement = "A counting puzzle whose solution has seven steps.";
    problem.answer = "14";
    const double values[7] = {0.25, 0.25, 0.25, 0.94, 0.56, 0.75, 0.00};
    for (int i = 0; i < 7; ++i) {
        piecehint::corpus::PieceRecord piece;
        piece.position = i;
        piece.text = "solution step " + std::to_string(i + 1);
        piece.raw_value = 3;
        piece.norm_value = values[i];
        problem.pieces.push_back(std::move(piece));
    }
    return problem;
}

inline piecehint::corpus::RegistryEntry seven_piece_entry(int k0 = 3) {
    const auto problem = seven_piece_problem();
    piecehint::corpus::RegistryEntry entry;
    entry.problem_id = problem.id;
    entry.pieces = problem.pieces;
    entry.c_weak = 1;
    entry.c_train = 2;
    entry.initial_hints = piecehint::allocation::select_hints(entry.pieces, k0);
    entry.k0 = static_cast<int>(entry.initial_hints.size());
    return entry;
}

// Synthetic problem with explicit branching factors and correct choices.
inline piecehint::corpus::Problem synthetic_problem(
    const std::string& id, const std::vector<int>& branching,
    const std::vector<int>& correct) {
    piecehint::corpus::Problem problem;
    problem.id = id;
    problem.statement = "synthetic task " + id;
    piecehint::corpus::SyntheticSpec spec;
    std::string answer;
    for (std::size_t j = 0; j < branching.size(); ++j) {
        spec.steps.push_back({branching[j], correct[j]});
        if (j > 0) answer += ',';
        answer += std::to_string(correct[j]);

        piecehint::corpus::PieceRecord piece;
        piece.position = static_cast<int>(j);
        piece.text = piecehint::corpus::synthetic_piece_text(static_cast<int>(j),
                                                             correct[j]);
        problem.pieces.push_back(std::move(piece));
    }
    problem.answer = answer;
    problem.env_spec = std::move(spec);
    return problem;
}

inline piecehint::corpus::Problem uniform_synthetic_problem(
    const std::string& id, const std::vector<int>& branching) {
    return synthetic_problem(id, branching, std::vector<int>(branching.size(), 0));
}

} // namespace fixtures

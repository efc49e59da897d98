#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "piecehint/corpus.hpp"

namespace piecehint::curriculum {

// Per-problem curriculum bookkeeping: how many times the problem has been
// sampled and which hint pieces are still live. The live set starts at the
// registry's initial hint set and only ever shrinks.
struct CurriculumState {
    std::string problem_id;
    std::uint64_t s = 0;         // sampling counter
    std::vector<int> live_hints; // piece positions, sorted ascending
    int n_check = 2;             // withdrawal period
};

CurriculumState make_state(const corpus::RegistryEntry& entry, int n_check);

// Registers one sample of the problem: increments s, then, when s is a
// multiple of n_check and hints remain, withdraws the live piece with the
// smallest normalized value (equal values withdraw the latest solution
// position first, keeping earlier context longer). A budget of k0 pieces is
// therefore exhausted after exactly k0 * n_check samples.
void on_sample(CurriculumState& state, const corpus::RegistryEntry& entry);

struct AugmentedPrompt {
    std::string problem_id;
    std::vector<std::string> hint_texts; // ordered by piece position
    std::string statement;
    std::string rendered;
};

// Renders the frozen prompt template:
//   "Hint:\n<piece>\n...\n\nProblem:\n<statement>"
// An empty live set renders to the bare statement, byte for byte.
AugmentedPrompt build_prompt(const CurriculumState& state,
                             const corpus::Problem& problem);

enum class CorruptionMode {
    wrong_boundaries, // shift text across a fraction of piece boundaries
    random_scores,    // rescore uniformly at random, renormalize, reselect
    worst_pieces,     // replace the hint set with the bottom-k0 by value
    fraction_corrupt, // mangle the text of a fraction of the selected hints
    contradictory,    // rewrite every selected hint to assert a wrong result
};

CorruptionMode corruption_mode_from_string(std::string_view text);
std::string to_string(CorruptionMode mode);

// Returns a corrupted copy of the entry; the input is never modified and the
// output is deterministic in (mode, fraction, seed). fraction applies to
// wrong_boundaries and fraction_corrupt and is ignored otherwise.
corpus::RegistryEntry corrupt_hints(const corpus::RegistryEntry& entry,
                                    CorruptionMode mode, double fraction,
                                    std::uint64_t seed);

// Checkpoint file: one {problem_id, s, live_hint_positions} record per line.
void save_states(std::span<const CurriculumState> states,
                 const std::filesystem::path& path);
std::vector<CurriculumState> load_states(const std::filesystem::path& path,
                                         int n_check);

} // namespace piecehint::curriculum

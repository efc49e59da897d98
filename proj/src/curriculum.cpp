#include "piecehint/curriculum.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "json.hpp"
#include "piecehint/allocation.hpp"
#include "piecehint/errors.hpp"
#include "piecehint/rng.hpp"
#include "piecehint/scoring.hpp"

namespace piecehint::curriculum {

namespace {

double norm_value_at(const corpus::RegistryEntry& entry, int position) {
    if (position < 0 || position >= static_cast<int>(entry.pieces.size())) {
        throw ValidationError("curriculum: hint position " + std::to_string(position) +
                              " out of range for '" + entry.problem_id + "'");
    }
    const auto& piece = entry.pieces[position];
    if (!piece.norm_value) {
        throw ValidationError("curriculum: piece " + std::to_string(position) + " of '" +
                              entry.problem_id + "' has no normalized value");
    }
    return *piece.norm_value;
}

} // namespace

CurriculumState make_state(const corpus::RegistryEntry& entry, int n_check) {
    if (n_check < 1) throw ValidationError("curriculum: n_check must be >= 1");
    CurriculumState state;
    state.problem_id = entry.problem_id;
    state.live_hints = entry.initial_hints;
    std::sort(state.live_hints.begin(), state.live_hints.end());
    state.n_check = n_check;
    return state;
}

void on_sample(CurriculumState& state, const corpus::RegistryEntry& entry) {
    if (state.problem_id != entry.problem_id) {
        throw ValidationError("on_sample: state for '" + state.problem_id +
                              "' paired with registry entry '" + entry.problem_id + "'");
    }
    state.s += 1;
    if (state.s % static_cast<std::uint64_t>(state.n_check) != 0) return;
    if (state.live_hints.empty()) return;

    // withdraw the least valuable live piece; on ties the latest solution
    // position goes first so earlier context survives longer
    std::size_t victim = 0;
    double victim_value = norm_value_at(entry, state.live_hints[0]);
    for (std::size_t i = 1; i < state.live_hints.size(); ++i) {
        const double value = norm_value_at(entry, state.live_hints[i]);
        if (value <= victim_value) {
            victim = i;
            victim_value = value;
        }
    }
    state.live_hints.erase(state.live_hints.begin() + static_cast<std::ptrdiff_t>(victim));
}

AugmentedPrompt build_prompt(const CurriculumState& state,
                             const corpus::Problem& problem) {
    AugmentedPrompt prompt;
    prompt.problem_id = problem.id;
    prompt.statement = problem.statement;

    std::vector<int> positions = state.live_hints;
    std::sort(positions.begin(), positions.end());
    for (int pos : positions) {
        if (pos < 0 || pos >= static_cast<int>(problem.pieces.size())) {
            throw ValidationError("build_prompt: hint position out of range for '" +
                                  problem.id + "'");
        }
        prompt.hint_texts.push_back(problem.pieces[pos].text);
    }

    if (prompt.hint_texts.empty()) {
        prompt.rendered = problem.statement;
        return prompt;
    }
    prompt.rendered = "Hint:\n";
    for (const auto& text : prompt.hint_texts) {
        prompt.rendered += text;
        prompt.rendered += '\n';
    }
    prompt.rendered += "\nProblem:\n";
    prompt.rendered += problem.statement;
    return prompt;
}

// ------------------------------- corruption --------------------------------

CorruptionMode corruption_mode_from_string(std::string_view text) {
    if (text == "wrong_boundaries") return CorruptionMode::wrong_boundaries;
    if (text == "random_scores") return CorruptionMode::random_scores;
    if (text == "worst_pieces") return CorruptionMode::worst_pieces;
    if (text == "fraction_corrupt") return CorruptionMode::fraction_corrupt;
    if (text == "contradictory") return CorruptionMode::contradictory;
    throw ValidationError("unknown corruption mode '" + std::string(text) + "'");
}

std::string to_string(CorruptionMode mode) {
    switch (mode) {
        case CorruptionMode::wrong_boundaries: return "wrong_boundaries";
        case CorruptionMode::random_scores: return "random_scores";
        case CorruptionMode::worst_pieces: return "worst_pieces";
        case CorruptionMode::fraction_corrupt: return "fraction_corrupt";
        case CorruptionMode::contradictory: return "contradictory";
    }
    throw ValidationError("unknown corruption mode");
}

namespace {

// Moves one word across the boundary between pieces a and b, simulating a
// mis-parsed piece split. Falls back to a no-op when neither side has a
// word to spare.
void shift_boundary(corpus::PieceRecord& a, corpus::PieceRecord& b) {
    std::size_t cut = a.text.find_last_of(' ');
    if (cut != std::string::npos && cut + 1 < a.text.size()) {
        b.text = a.text.substr(cut + 1) + " " + b.text;
        a.text.erase(cut);
        return;
    }
    cut = b.text.find_first_of(' ');
    if (cut != std::string::npos && cut > 0) {
        a.text += " " + b.text.substr(0, cut);
        b.text.erase(0, cut + 1);
    }
}

void renormalize(corpus::RegistryEntry& entry) {
    std::vector<int> raw;
    raw.reserve(entry.pieces.size());
    for (const auto& piece : entry.pieces) raw.push_back(piece.raw_value);
    std::vector<double> normalized = scoring::normalize_values(raw);
    for (std::size_t i = 0; i < entry.pieces.size(); ++i) {
        entry.pieces[i].norm_value = normalized[i];
    }
}

std::string contradict(const std::string& text) {
    int step = 0;
    int choice = 0;
    if (std::sscanf(text.c_str(), "step %d -> choice %d", &step, &choice) == 2) {
        return corpus::synthetic_piece_text(step, choice == 0 ? 1 : 0);
    }
    return "it is not the case that " + text;
}

} // namespace

corpus::RegistryEntry corrupt_hints(const corpus::RegistryEntry& entry,
                                    CorruptionMode mode, double fraction,
                                    std::uint64_t seed) {
    corpus::RegistryEntry corrupted = entry;
    auto engine = rng::make_engine(seed, "corrupt/" + entry.problem_id,
                                   static_cast<std::uint64_t>(mode));
    switch (mode) {
        case CorruptionMode::wrong_boundaries: {
            for (std::size_t i = 0; i + 1 < corrupted.pieces.size(); ++i) {
                if (rng::bernoulli(engine, fraction)) {
                    shift_boundary(corrupted.pieces[i], corrupted.pieces[i + 1]);
                }
            }
            break;
        }
        case CorruptionMode::random_scores: {
            for (auto& piece : corrupted.pieces) {
                piece.raw_value = 1 + rng::uniform_below(engine, 5);
            }
            renormalize(corrupted);
            corrupted.initial_hints =
                allocation::select_hints(corrupted.pieces, corrupted.k0);
            break;
        }
        case CorruptionMode::worst_pieces: {
            std::vector<std::size_t> order(corrupted.pieces.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                const double da = corrupted.pieces[a].norm_value.value_or(0.0);
                const double db = corrupted.pieces[b].norm_value.value_or(0.0);
                if (da != db) return da < db;
                return corrupted.pieces[a].position < corrupted.pieces[b].position;
            });
            corrupted.initial_hints.clear();
            const std::size_t take =
                std::min<std::size_t>(corrupted.k0, corrupted.pieces.size());
            for (std::size_t i = 0; i < take; ++i) {
                corrupted.initial_hints.push_back(corrupted.pieces[order[i]].position);
            }
            std::sort(corrupted.initial_hints.begin(), corrupted.initial_hints.end());
            corrupted.k0 = static_cast<int>(corrupted.initial_hints.size());
            break;
        }
        case CorruptionMode::fraction_corrupt: {
            for (int pos : corrupted.initial_hints) {
                if (rng::bernoulli(engine, fraction)) {
                    corrupted.pieces[pos].text =
                        "corrupted segment " + std::to_string(pos);
                }
            }
            break;
        }
        case CorruptionMode::contradictory: {
            for (int pos : corrupted.initial_hints) {
                corrupted.pieces[pos].text = contradict(corrupted.pieces[pos].text);
            }
            break;
        }
    }
    return corrupted;
}

// ------------------------------ persistence --------------------------------

void save_states(std::span<const CurriculumState> states,
                 const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write curriculum checkpoint: " + path.string());
    for (const auto& state : states) {
        nlohmann::json record = {{"problem_id", state.problem_id},
                                 {"s", state.s},
                                 {"live_hint_positions", state.live_hints}};
        out << record.dump() << '\n';
    }
}

std::vector<CurriculumState> load_states(const std::filesystem::path& path,
                                         int n_check) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open curriculum checkpoint: " + path.string());
    std::vector<CurriculumState> states;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        try {
            nlohmann::json record = nlohmann::json::parse(line);
            CurriculumState state;
            state.problem_id = record.at("problem_id").get<std::string>();
            state.s = record.at("s").get<std::uint64_t>();
            state.live_hints = record.at("live_hint_positions").get<std::vector<int>>();
            state.n_check = n_check;
            states.push_back(std::move(state));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string() + ":" + std::to_string(line_number) + ": " +
                             e.what());
        }
    }
    return states;
}

} // namespace piecehint::curriculum

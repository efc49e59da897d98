#include "doctest.h"

#include <algorithm>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "test_util.hpp"
#include "piecehint/allocation.hpp"
#include "piecehint/curriculum.hpp"
#include "piecehint/errors.hpp"
#include "piecehint/rng.hpp"

using namespace piecehint;

namespace {

corpus::RegistryEntry entry_with_values(const std::vector<double>& values, int k0) {
    corpus::RegistryEntry entry;
    entry.problem_id = "e";
    for (std::size_t i = 0; i < values.size(); ++i) {
        corpus::PieceRecord piece;
        piece.position = static_cast<int>(i);
        piece.text = "piece " + std::to_string(i);
        piece.norm_value = values[i];
        entry.pieces.push_back(std::move(piece));
    }
    entry.initial_hints = allocation::select_hints(entry.pieces, k0);
    entry.k0 = static_cast<int>(entry.initial_hints.size());
    return entry;
}

} // namespace

TEST_CASE("withdrawal schedule for k0 = 3, n_check = 2") {
    const auto entry = fixtures::seven_piece_entry(3);
    auto state = curriculum::make_state(entry, 2);
    const std::vector<std::size_t> expected = {3, 2, 2, 1, 1, 0};
    for (std::size_t i = 0; i < expected.size(); ++i) {
        curriculum::on_sample(state, entry);
        CHECK(state.s == i + 1);
        CHECK(state.live_hints.size() == expected[i]);
    }
}

TEST_CASE("live hint count follows max(0, k0 - floor(s / n_check)) exactly") {
    for (int k0 = 0; k0 <= 5; ++k0) {
        for (int n_check = 1; n_check <= 4; ++n_check) {
            const auto entry =
                entry_with_values({0.1, 0.9, 0.4, 0.6, 0.2, 0.8, 0.0}, k0);
            auto state = curriculum::make_state(entry, n_check);
            const int horizon = k0 * n_check + 3;
            for (int s = 1; s <= horizon; ++s) {
                curriculum::on_sample(state, entry);
                const int expected = std::max(0, k0 - s / n_check);
                CHECK(static_cast<int>(state.live_hints.size()) == expected);
                // the live set empties at exactly s = k0 * n_check
                if (s < k0 * n_check) CHECK(!state.live_hints.empty());
                if (s >= k0 * n_check) CHECK(state.live_hints.empty());
            }
        }
    }
}

TEST_CASE("withdrawal removes pieces in ascending value order") {
    const auto entry = fixtures::seven_piece_entry(3); // hints {3,4,5}, D .94/.56/.75
    auto state = curriculum::make_state(entry, 1);

    curriculum::on_sample(state, entry); // drops position 4 (0.56)
    CHECK(state.live_hints == std::vector<int>{3, 5});
    curriculum::on_sample(state, entry); // drops position 5 (0.75)
    CHECK(state.live_hints == std::vector<int>{3});
    curriculum::on_sample(state, entry); // the bottleneck goes last
    CHECK(state.live_hints.empty());
}

TEST_CASE("withdrawal ties remove the latest position first") {
    const auto entry = entry_with_values({0.5, 0.5, 0.5}, 3);
    auto state = curriculum::make_state(entry, 1);
    curriculum::on_sample(state, entry);
    CHECK(state.live_hints == std::vector<int>{0, 1});
    curriculum::on_sample(state, entry);
    CHECK(state.live_hints == std::vector<int>{0});
}

TEST_CASE("replayed removal order equals sorting by (value asc, position desc)") {
    auto engine = piecehint::rng::make_engine(71, "removal-replay", 0);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 2 + piecehint::rng::uniform_below(engine, 6);
        std::vector<double> values(n);
        for (double& v : values) {
            v = piecehint::rng::uniform_below(engine, 4) / 3.0; // frequent ties
        }
        const int k0 = 1 + piecehint::rng::uniform_below(engine, n);
        const auto entry = entry_with_values(values, k0);
        const int n_check = 1 + piecehint::rng::uniform_below(engine, 3);

        auto state = curriculum::make_state(entry, n_check);
        std::vector<int> removed;
        while (!state.live_hints.empty()) {
            const auto before = state.live_hints;
            curriculum::on_sample(state, entry);
            for (int pos : before) {
                if (std::find(state.live_hints.begin(), state.live_hints.end(), pos) ==
                    state.live_hints.end()) {
                    removed.push_back(pos);
                }
            }
        }

        auto expected = entry.initial_hints;
        std::sort(expected.begin(), expected.end(), [&](int a, int b) {
            if (values[a] != values[b]) return values[a] < values[b];
            return a > b;
        });
        CHECK(removed == expected);
    }
}

TEST_CASE("on_sample with no hints only advances the counter") {
    const auto entry = entry_with_values({0.3, 0.7}, 0);
    auto state = curriculum::make_state(entry, 2);
    for (int i = 0; i < 5; ++i) curriculum::on_sample(state, entry);
    CHECK(state.s == 5);
    CHECK(state.live_hints.empty());
}

TEST_CASE("on_sample rejects a mismatched registry entry") {
    const auto entry = entry_with_values({0.3}, 1);
    auto state = curriculum::make_state(entry, 2);
    auto other = entry;
    other.problem_id = "different";
    CHECK_THROWS_AS(curriculum::on_sample(state, other), ValidationError);
}

TEST_CASE("build_prompt with no hints renders the bare statement byte for byte") {
    const auto problem = fixtures::seven_piece_problem();
    const auto entry = fixtures::seven_piece_entry(0);
    const auto state = curriculum::make_state(entry, 2);
    const auto prompt = curriculum::build_prompt(state, problem);
    CHECK(prompt.rendered == problem.statement);
    CHECK(prompt.hint_texts.empty());
}

TEST_CASE("build_prompt renders hint texts in solution-position order") {
    const auto problem = fixtures::seven_piece_problem();
    const auto entry = fixtures::seven_piece_entry(3);
    curriculum::CurriculumState state = curriculum::make_state(entry, 2);
    state.live_hints = {5, 3, 4}; // intentionally scrambled
    const auto prompt = curriculum::build_prompt(state, problem);
    REQUIRE(prompt.hint_texts.size() == 3);
    CHECK(prompt.hint_texts[0] == problem.pieces[3].text);
    CHECK(prompt.hint_texts[1] == problem.pieces[4].text);
    CHECK(prompt.hint_texts[2] == problem.pieces[5].text);
}

TEST_CASE("build_prompt uses the frozen template") {
    corpus::Problem problem;
    problem.id = "t";
    problem.statement = "What is x?";
    problem.answer = "x";
    problem.pieces.push_back({0, "G=C", 3, 1.0});

    corpus::RegistryEntry entry;
    entry.problem_id = "t";
    entry.pieces = problem.pieces;
    entry.k0 = 1;
    entry.initial_hints = {0};

    const auto state = curriculum::make_state(entry, 2);
    const auto prompt = curriculum::build_prompt(state, problem);
    CHECK(prompt.rendered == "Hint:\nG=C\n\nProblem:\nWhat is x?");

    // identical inputs render identical bytes
    const auto again = curriculum::build_prompt(state, problem);
    CHECK(prompt.rendered == again.rendered);
}

TEST_CASE("corrupt_hints worst_pieces takes the bottom-k0 by value") {
    const auto entry = fixtures::seven_piece_entry(3);
    const auto corrupted =
        curriculum::corrupt_hints(entry, curriculum::CorruptionMode::worst_pieces, 0.0, 1);
    // lowest values are position 6 (0.00) and the 0.25 tie broken by position
    CHECK(corrupted.initial_hints == std::vector<int>{0, 1, 6});
    CHECK(entry.initial_hints == std::vector<int>{3, 4, 5}); // original untouched
}

TEST_CASE("corrupt_hints fraction_corrupt(0) is the identity") {
    const auto entry = fixtures::seven_piece_entry(3);
    const auto corrupted = curriculum::corrupt_hints(
        entry, curriculum::CorruptionMode::fraction_corrupt, 0.0, 1);
    CHECK(corrupted.initial_hints == entry.initial_hints);
    for (std::size_t i = 0; i < entry.pieces.size(); ++i) {
        CHECK(corrupted.pieces[i].text == entry.pieces[i].text);
    }
}

TEST_CASE("corrupt_hints fraction_corrupt(1) mangles every selected hint") {
    const auto entry = fixtures::seven_piece_entry(3);
    const auto corrupted = curriculum::corrupt_hints(
        entry, curriculum::CorruptionMode::fraction_corrupt, 1.0, 1);
    for (int pos : entry.initial_hints) {
        CHECK(corrupted.pieces[pos].text != entry.pieces[pos].text);
    }
    CHECK(corrupted.pieces[0].text == entry.pieces[0].text); // unselected pieces intact
}

TEST_CASE("corrupt_hints random_scores is deterministic and renormalizes") {
    const auto entry = fixtures::seven_piece_entry(3);
    const auto a =
        curriculum::corrupt_hints(entry, curriculum::CorruptionMode::random_scores, 0.0, 9);
    const auto b =
        curriculum::corrupt_hints(entry, curriculum::CorruptionMode::random_scores, 0.0, 9);
    REQUIRE(a.pieces.size() == b.pieces.size());
    for (std::size_t i = 0; i < a.pieces.size(); ++i) {
        CHECK(a.pieces[i].raw_value == b.pieces[i].raw_value);
        CHECK(a.pieces[i].norm_value == b.pieces[i].norm_value);
        CHECK(*a.pieces[i].norm_value >= 0.0);
        CHECK(*a.pieces[i].norm_value <= 1.0);
    }
    CHECK(a.initial_hints == b.initial_hints);
    CHECK(a.initial_hints.size() == entry.initial_hints.size());
}

TEST_CASE("corrupt_hints contradictory flips synthetic choices") {
    auto problem = fixtures::synthetic_problem("s", {2, 2}, {1, 0});
    corpus::RegistryEntry entry;
    entry.problem_id = "s";
    entry.pieces = problem.pieces;
    for (auto& piece : entry.pieces) piece.norm_value = 0.5;
    entry.k0 = 2;
    entry.initial_hints = {0, 1};

    const auto corrupted = curriculum::corrupt_hints(
        entry, curriculum::CorruptionMode::contradictory, 0.0, 1);
    CHECK(corrupted.pieces[0].text == corpus::synthetic_piece_text(0, 0));
    CHECK(corrupted.pieces[1].text == corpus::synthetic_piece_text(1, 1));
}

TEST_CASE("corrupt_hints wrong_boundaries shifts words across boundaries") {
    corpus::RegistryEntry entry;
    entry.problem_id = "w";
    entry.pieces.push_back({0, "first piece text", 3, 0.5});
    entry.pieces.push_back({1, "second piece text", 3, 0.5});
    entry.k0 = 0;

    const auto corrupted = curriculum::corrupt_hints(
        entry, curriculum::CorruptionMode::wrong_boundaries, 1.0, 1);
    REQUIRE(corrupted.pieces.size() == 2);
    CHECK(corrupted.pieces[0].text == "first piece");
    CHECK(corrupted.pieces[1].text == "text second piece text");
}

TEST_CASE("curriculum states round-trip through the checkpoint file") {
    testutil::TempDir dir;
    const auto entry = fixtures::seven_piece_entry(3);
    auto state = curriculum::make_state(entry, 2);
    curriculum::on_sample(state, entry);
    curriculum::on_sample(state, entry);

    curriculum::save_states(std::vector<curriculum::CurriculumState>{state},
                            dir.file("curriculum.jsonl"));
    const auto loaded = curriculum::load_states(dir.file("curriculum.jsonl"), 2);
    REQUIRE(loaded.size() == 1);
    CHECK(loaded[0].problem_id == state.problem_id);
    CHECK(loaded[0].s == 2);
    CHECK(loaded[0].live_hints == state.live_hints);
}

TEST_CASE("corruption modes parse from strings") {
    CHECK(curriculum::corruption_mode_from_string("worst_pieces") ==
          curriculum::CorruptionMode::worst_pieces);
    CHECK(curriculum::to_string(curriculum::CorruptionMode::contradictory) ==
          "contradictory");
    CHECK_THROWS_AS(curriculum::corruption_mode_from_string("bogus"), ValidationError);
}

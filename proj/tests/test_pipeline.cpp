#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <vector>

#include "fixtures.hpp"
#include "test_util.hpp"
#include "piecehint/corpus.hpp"
#include "piecehint/curriculum.hpp"
#include "piecehint/errors.hpp"
#include "piecehint/pipeline.hpp"
#include "piecehint/rng.hpp"
#include "piecehint/simenv.hpp"

using namespace piecehint;
using testutil::TempDir;
using testutil::read_file;

namespace {

// Enumeration oracle: fraction of size-k subsets of n samples (the first c
// of which succeed) that contain at least one success.
double pass_at_k_by_enumeration(int n, int c, int k) {
    long total = 0;
    long with_success = 0;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        if (__builtin_popcount(mask) != k) continue;
        ++total;
        bool any = false;
        for (int i = 0; i < c; ++i) {
            if (mask & (1u << i)) any = true;
        }
        if (any) ++with_success;
    }
    return static_cast<double>(with_success) / static_cast<double>(total);
}

pipeline::ExperimentConfig tiny_config(const TempDir& dir, std::uint64_t seed) {
    pipeline::ExperimentConfig config;
    config.corpus_path = dir.file("corpus.jsonl").string();
    config.run_dir = dir.file("run").string();
    // keep-all selection bounds: the uniform initial policy rarely solves
    // synthetic problems, so the capability band must include zero
    config.alpha1 = 1.0;
    config.alpha2 = 0.0;
    config.alpha3 = 1.0;
    config.scorer = "oracle";
    config.seed = seed;
    return config;
}

void write_tiny_corpus(const TempDir& dir, int n_problems, std::uint64_t seed) {
    simenv::BranchingProfile profile;
    profile.base = 2;
    profile.bottleneck = 8;
    const auto problems = simenv::generate_corpus(n_problems, {3, 3}, profile, seed);
    corpus::save_corpus(problems, dir.file("corpus.jsonl"));
}

} // namespace

TEST_CASE("pass@k estimator endpoint values") {
    for (int k = 1; k <= 8; ++k) {
        CHECK(pipeline::pass_at_k_estimate(8, 8, k) == 1.0);
        CHECK(pipeline::pass_at_k_estimate(8, 0, k) == 0.0);
    }
    // 1 - C(2,2)/C(4,2) = 1 - 1/6
    CHECK(pipeline::pass_at_k_estimate(4, 2, 2) ==
          doctest::Approx(5.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("pass@k estimator equals subset enumeration for n <= 12") {
    for (int n = 1; n <= 12; ++n) {
        for (int c = 0; c <= n; ++c) {
            for (int k = 1; k <= n; ++k) {
                CHECK(pipeline::pass_at_k_estimate(n, c, k) ==
                      doctest::Approx(pass_at_k_by_enumeration(n, c, k))
                          .epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("pass@k is non-decreasing in k and validates its arguments") {
    auto engine = rng::make_engine(3, "passk-mono", 0);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + rng::uniform_below(engine, 30);
        const int c = rng::uniform_below(engine, n + 1);
        double previous = 0.0;
        for (int k = 1; k <= n; ++k) {
            const double value = pipeline::pass_at_k_estimate(n, c, k);
            CHECK(value >= previous - 1e-15);
            previous = value;
        }
    }
    CHECK_THROWS_AS(pipeline::pass_at_k_estimate(4, 2, 5), ConfigError);
    CHECK_THROWS_AS(pipeline::pass_at_k_estimate(4, 5, 2), ConfigError);
}

TEST_CASE("eval_pass_at_k rejects k beyond the sample budget") {
    const auto problem = fixtures::uniform_synthetic_problem("e", {2});
    simenv::Policy policy(std::vector<corpus::Problem>{problem}, 1.0);
    const std::vector<int> ks = {1, 8};
    CHECK_THROWS_AS(pipeline::eval_pass_at_k(std::vector<corpus::Problem>{problem},
                                             policy, 4, ks, 1),
                    ConfigError);
}

TEST_CASE("baseline selectors implement the reference hint sets") {
    auto entry = fixtures::seven_piece_entry(3);
    entry.pieces.pop_back(); // 6 pieces for the prefix checks
    entry.initial_hints = {3, 4, 5};

    CHECK(pipeline::baseline_hint_selector("prefix_fraction", 0.5, entry, 1) ==
          std::vector<int>{0, 1, 2});
    CHECK(pipeline::baseline_hint_selector("prefix_fraction", 0.25, entry, 1) ==
          std::vector<int>{0, 1});
    CHECK(pipeline::baseline_hint_selector("no_hint", 0.5, entry, 1).empty());
    CHECK(pipeline::baseline_hint_selector("piecehint", 0.5, entry, 1) ==
          std::vector<int>{3, 4, 5});

    const auto random_a = pipeline::baseline_hint_selector("random_pieces", 0.5, entry, 7);
    const auto random_b = pipeline::baseline_hint_selector("random_pieces", 0.5, entry, 7);
    CHECK(random_a == random_b);
    CHECK(random_a.size() == 3);
    CHECK(std::is_sorted(random_a.begin(), random_a.end()));
    for (int pos : random_a) {
        CHECK(pos >= 0);
        CHECK(pos < 6);
    }
    CHECK_THROWS_AS(pipeline::baseline_hint_selector("bogus", 0.5, entry, 1),
                    ConfigError);
}

TEST_CASE("random piece selection covers different subsets across problems") {
    auto entry = fixtures::seven_piece_entry(3);
    std::set<std::vector<int>> seen;
    for (int i = 0; i < 30; ++i) {
        entry.problem_id = "p" + std::to_string(i);
        seen.insert(pipeline::baseline_hint_selector("random_pieces", 0.5, entry, 7));
    }
    CHECK(seen.size() > 3);
}

TEST_CASE("config parsing is strict and seed is mandatory") {
    nlohmann::json record = {{"seed", 1}, {"m", 8}};
    const auto config = pipeline::config_from_json(record);
    CHECK(config.m == 8);
    CHECK(config.seed == 1);

    CHECK_THROWS_AS(pipeline::config_from_json({{"seed", 1}, {"bogus_key", 2}}),
                    ConfigError);
    CHECK_THROWS_AS(pipeline::config_from_json({{"m", 8}}), ConfigError);
    CHECK_THROWS_AS(pipeline::config_from_json({{"seed", 1}, {"m", 0}}), ConfigError);
    CHECK_THROWS_AS(
        pipeline::config_from_json({{"seed", 1}, {"baseline", "mystery"}}),
        ConfigError);
}

TEST_CASE("config round-trips through JSON and hashes canonically") {
    pipeline::ExperimentConfig config;
    config.seed = 42;
    config.baseline = "random_pieces";
    config.learning_rate = 0.25;
    const auto round = pipeline::config_from_json(pipeline::config_to_json(config));
    CHECK(pipeline::config_to_json(round) == pipeline::config_to_json(config));

    const auto hash_a = pipeline::config_hash(config);
    config.learning_rate = 0.5;
    const auto hash_b = pipeline::config_hash(config);
    CHECK(hash_a != hash_b);
    CHECK(hash_a.size() == 16);
}

TEST_CASE("run_pipeline with zero updates writes preprocessing artifacts only") {
    TempDir dir;
    write_tiny_corpus(dir, 6, 11);
    auto config = tiny_config(dir, 11);
    config.total_updates = 0;

    const auto summary = pipeline::run_pipeline(config);
    CHECK(summary.n_problems == 6);
    CHECK(summary.n_train == 6);
    CHECK(std::filesystem::exists(dir.file("run") / "registry.jsonl"));
    CHECK(std::filesystem::exists(dir.file("run") / "success_counts.jsonl"));
    CHECK(std::filesystem::exists(dir.file("run") / "train_ids.txt"));
    CHECK(std::filesystem::exists(dir.file("run") / "manifest.json"));
    CHECK(!std::filesystem::exists(dir.file("run") / "metrics.csv"));

    const auto registry = corpus::load_registry(dir.file("run") / "registry.jsonl");
    CHECK(registry.entries.size() == 6);
    CHECK(registry.params_hash == summary.config_hash);
    for (const auto& entry : registry.entries) {
        CHECK(entry.k0 == static_cast<int>(entry.initial_hints.size()));
        for (const auto& piece : entry.pieces) CHECK(piece.norm_value.has_value());
    }
}

TEST_CASE("run_pipeline trains, logs metrics and checkpoints deterministically") {
    TempDir dir;
    write_tiny_corpus(dir, 8, 21);
    auto config = tiny_config(dir, 21);
    config.total_updates = 12;
    config.rollout_batch = 4;
    config.update_batch = 2;
    config.eval_every = 6;
    config.eval_samples = 8;
    config.checkpoint_every = 6;
    config.learning_rate = 0.5;
    config.grad_clip_norm = 5.0;

    const auto summary = pipeline::run_pipeline(config);
    REQUIRE(std::filesystem::exists(summary.metrics_path));

    std::ifstream metrics(summary.metrics_path);
    std::string header;
    std::getline(metrics, header);
    CHECK(header == pipeline::kMetricsHeader);
    int rows = 0;
    std::string line;
    std::string last;
    while (std::getline(metrics, line)) {
        if (!line.empty()) {
            ++rows;
            last = line;
        }
    }
    CHECK(rows == 12);
    // the final row always carries evaluation columns
    CHECK(last.find(",,") == std::string::npos);

    CHECK(std::filesystem::exists(dir.file("run") / "checkpoints" /
                                  "step-12-policy.json"));
    CHECK(std::filesystem::exists(dir.file("run") / "checkpoints" /
                                  "step-12-curriculum.jsonl"));

    // identical config and seed reproduce the metrics byte for byte
    auto rerun_config = config;
    rerun_config.run_dir = dir.file("rerun").string();
    const auto rerun = pipeline::run_pipeline(rerun_config);
    CHECK(read_file(summary.metrics_path) == read_file(rerun.metrics_path));

    // a different seed changes the stream
    auto other_config = config;
    other_config.run_dir = dir.file("other").string();
    other_config.seed = 1234;
    const auto other = pipeline::run_pipeline(other_config);
    CHECK(read_file(summary.metrics_path) != read_file(other.metrics_path));
}

TEST_CASE("run_pipeline aborts with the stage name on failure") {
    TempDir dir;
    auto config = tiny_config(dir, 3);
    config.corpus_path = dir.file("missing.jsonl").string();
    try {
        pipeline::run_pipeline(config);
        FAIL("expected failure");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find("stage 'load'") != std::string::npos);
    }
}

TEST_CASE("manifest records the config hash and completed stages") {
    TempDir dir;
    write_tiny_corpus(dir, 4, 31);
    auto config = tiny_config(dir, 31);
    config.total_updates = 2;
    config.rollout_batch = 2;
    config.update_batch = 2;
    config.eval_samples = 8;
    config.learning_rate = 0.1;

    const auto summary = pipeline::run_pipeline(config);
    std::ifstream in(dir.file("run") / "manifest.json");
    nlohmann::json manifest;
    in >> manifest;
    CHECK(manifest.at("config_hash").get<std::string>() == summary.config_hash);
    CHECK(manifest.at("seed").get<std::uint64_t>() == 31);
    const auto stages = manifest.at("stages").get<std::vector<std::string>>();
    for (const char* stage : {"load", "select", "score", "allocate", "train", "done"}) {
        CHECK(std::find(stages.begin(), stages.end(), stage) != stages.end());
    }
    CHECK(manifest.at("config").at("baseline").get<std::string>() == "piecehint");
}

TEST_CASE("render_metrics_svg draws the requested series") {
    TempDir dir;
    write_tiny_corpus(dir, 4, 41);
    auto config = tiny_config(dir, 41);
    config.total_updates = 4;
    config.rollout_batch = 2;
    config.update_batch = 2;
    config.eval_every = 2;
    config.eval_samples = 8;
    config.learning_rate = 0.1;
    const auto summary = pipeline::run_pipeline(config);

    const std::vector<std::string> columns = {"mean_reward", "eval_success"};
    pipeline::render_metrics_svg(summary.metrics_path, dir.file("plot.svg"), columns);
    const auto svg = read_file(dir.file("plot.svg"));
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("polyline") != std::string::npos);
    CHECK(svg.find("mean_reward") != std::string::npos);

    const std::vector<std::string> missing = {"not_a_column"};
    CHECK_THROWS_AS(
        pipeline::render_metrics_svg(summary.metrics_path, dir.file("x.svg"), missing),
        ConfigError);
}

TEST_CASE("counting each rollout as a sample withdraws hints group_size times "
          "faster") {
    TempDir dir;
    write_tiny_corpus(dir, 4, 61);
    auto config = tiny_config(dir, 61);
    config.total_updates = 4;
    config.rollout_batch = 4;
    config.update_batch = 4;
    config.eval_samples = 8;
    config.group_size = 16;
    config.n_check = 2;
    config.learning_rate = 0.1;
    config.sample_unit = "rollout";

    pipeline::run_pipeline(config);
    // after 4 phases each problem has 4 * 16 rollout-samples, so every
    // initial budget (at most k_max = 3 < 64 / n_check) is fully withdrawn
    const auto states = curriculum::load_states(
        dir.file("run") / "checkpoints" / "step-4-curriculum.jsonl", config.n_check);
    REQUIRE(!states.empty());
    for (const auto& state : states) {
        CHECK(state.s == 64);
        CHECK(state.live_hints.empty());
    }
}

TEST_CASE("selection stage filters by both models") {
    TempDir dir;
    write_tiny_corpus(dir, 10, 51);
    auto config = tiny_config(dir, 51);
    // a stub weak model that always succeeds marks everything easy
    config.weak_policy = "stub";
    config.weak_stub_p = 1.0;
    config.alpha1 = 0.2;

    const auto problems = corpus::load_corpus(config.corpus_path);
    const auto result = pipeline::run_selection(config, problems);
    CHECK(result.hard_ids.empty());
    CHECK(result.train_ids.empty());
}

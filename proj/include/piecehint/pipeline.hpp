#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <map>
#include <set>

#include "json.hpp"
#include "piecehint/corpus.hpp"
#include "piecehint/scoring.hpp"
#include "piecehint/selection.hpp"
#include "piecehint/simenv.hpp"

namespace piecehint::pipeline {

// Full experiment configuration. Every key can appear in the config file and
// be overridden by a command-line flag of the same name; seed is mandatory.
struct ExperimentConfig {
    // problem selection
    int m = 16;
    double alpha1 = 0.2;
    double alpha2 = 0.1;
    double alpha3 = 0.4;
    // piece allocation
    int k_max = 3;
    double beta1 = 0.15;
    double beta2 = 0.35;
    // optimization
    double epsilon = 0.2;
    int group_size = 16;
    double learning_rate = 1e-6;
    double grad_clip_norm = 1.0;
    double std_floor = 1e-8;
    double temperature = 1.0;
    // curriculum
    int n_check = 2;
    bool withdraw = true;              // disable to keep hints fixed for ablations
    std::string sample_unit = "group"; // "group" or "rollout"
    // run layout
    std::string corpus_path;
    std::string run_dir = "run";
    std::string scorer = "oracle"; // oracle | heuristic | external
    std::string scoring_url;       // external scorer endpoint
    std::string baseline = "piecehint"; // piecehint | no_hint | prefix_fraction | random_pieces
    double prefix_fraction = 0.5;
    std::string weak_policy = "simenv"; // simenv | stub
    double weak_stub_p = 0.0;
    // schedule
    int total_updates = 0;
    int rollout_batch = 8;
    int update_batch = 4;
    int eval_every = 100;
    int eval_samples = 16;
    int checkpoint_every = 500;
    std::uint64_t seed = 0;

    void validate() const;
};

nlohmann::json config_to_json(const ExperimentConfig& config);
// Strict parsing: unknown keys are errors, seed is required.
ExperimentConfig config_from_json(const nlohmann::json& record);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_hash(const ExperimentConfig& config);

// Unbiased pass@k from n samples with c successes:
//   pass@k = 1 - C(n-c, k) / C(n, k)
double pass_at_k_estimate(int n, int c, int k);

struct PassAtKTable {
    std::vector<int> ks;
    std::vector<double> values; // mean over problems, aligned with ks
};

// Samples n hint-free trajectories per problem and applies the unbiased
// estimator; evaluation never sees hints.
PassAtKTable eval_pass_at_k(std::span<const corpus::Problem> problems,
                            const simenv::Policy& policy, int n,
                            std::span<const int> ks, std::uint64_t seed);

// Mean exact hint-free success probability over the problem set.
double mean_success_probability(std::span<const corpus::Problem> problems,
                                const simenv::Policy& policy);

// Initial hint set under a baseline mode. piecehint delegates to the
// value-driven top-k selection; prefix_fraction takes the first
// ceil(f * n) pieces; random_pieces draws k0 pieces with the run seed.
std::vector<int> baseline_hint_selector(std::string_view mode, double prefix_fraction,
                                        const corpus::RegistryEntry& entry,
                                        std::uint64_t seed);

struct SelectionResult {
    std::vector<selection::SuccessCount> weak_counts;
    std::vector<selection::SuccessCount> train_counts;
    std::set<std::string> hard_ids;
    std::set<std::string> train_ids;
};

// Estimates success counts for the weak and training reference models and
// applies the two filters. Counts for the two models come from independent
// derived streams.
SelectionResult run_selection(const ExperimentConfig& config,
                              std::span<const corpus::Problem> problems);

// Builds the frozen registry from scored problems: budgets from the
// training-model counts, hint sets from the configured baseline mode. The
// stored k0 always equals the actual hint-set size.
corpus::RegistryFile build_registry(const ExperimentConfig& config,
                                    std::span<const corpus::Problem> scored_problems,
                                    const std::map<std::string, int>& c_weak,
                                    const std::map<std::string, int>& c_train);

struct RunSummary {
    std::string run_dir;
    std::string config_hash;
    std::string registry_path;
    std::string metrics_path;
    int n_problems = 0;
    int n_hard = 0;
    int n_train = 0;
    double final_eval_success = 0.0;
    double final_pass_at_1 = 0.0;
    double final_pass_at_8 = 0.0;
    double param_delta_norm = 0.0;
    long total_groups = 0;
    long zero_variance_groups = 0;
};

// Executes the stages in order (load, select, score, allocate, train) inside
// config.run_dir, writing the registry, metrics CSV, checkpoints and a
// manifest. Deterministic for a fixed config and seed. A stage failure
// aborts with the stage name; artifacts written so far stay on disk.
RunSummary run_pipeline(const ExperimentConfig& config,
                        scoring::ScoringChannel* scoring_channel = nullptr);

// Renders simple SVG line charts for the given metrics columns.
void render_metrics_svg(const std::filesystem::path& metrics_csv,
                        const std::filesystem::path& out_svg,
                        std::span<const std::string> columns);

// Shortest round-trip decimal representation, used for all CSV numbers.
std::string format_double(double value);

inline constexpr const char* kMetricsHeader =
    "step,mean_reward,zero_var_frac,loss,grad_norm,mean_live_hints,"
    "eval_success,pass_at_1,pass_at_8";

} // namespace piecehint::pipeline

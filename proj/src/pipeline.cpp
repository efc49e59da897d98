#include "piecehint/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <utility>

#include "piecehint/allocation.hpp"
#include "piecehint/curriculum.hpp"
#include "piecehint/errors.hpp"
#include "piecehint/grpo.hpp"
#include "piecehint/rng.hpp"
#include "piecehint/selection.hpp"

namespace piecehint::pipeline {

namespace fs = std::filesystem;

// ------------------------------ configuration ------------------------------

void ExperimentConfig::validate() const {
    try {
        selection::SelectionParams{m, alpha1, alpha2, alpha3}.validate();
        allocation::AllocationParams{k_max, beta1, beta2, m}.validate();
        grpo::GrpoParams{epsilon, group_size, learning_rate, grad_clip_norm, std_floor}
            .validate();
    } catch (const ValidationError& e) {
        throw ConfigError(e.what());
    }
    if (temperature <= 0.0) throw ConfigError("temperature must be > 0");
    if (n_check < 1) throw ConfigError("n_check must be >= 1");
    if (sample_unit != "group" && sample_unit != "rollout") {
        throw ConfigError("sample_unit must be 'group' or 'rollout'");
    }
    if (scorer != "oracle" && scorer != "heuristic" && scorer != "external") {
        throw ConfigError("scorer must be oracle, heuristic or external");
    }
    if (baseline != "piecehint" && baseline != "no_hint" &&
        baseline != "prefix_fraction" && baseline != "random_pieces") {
        throw ConfigError("unknown baseline mode '" + baseline + "'");
    }
    if (prefix_fraction < 0.0 || prefix_fraction > 1.0) {
        throw ConfigError("prefix_fraction must lie in [0,1]");
    }
    if (weak_policy != "simenv" && weak_policy != "stub") {
        throw ConfigError("weak_policy must be 'simenv' or 'stub'");
    }
    if (weak_stub_p < 0.0 || weak_stub_p > 1.0) {
        throw ConfigError("weak_stub_p must lie in [0,1]");
    }
    if (total_updates < 0) throw ConfigError("total_updates must be >= 0");
    if (rollout_batch < 1) throw ConfigError("rollout_batch must be >= 1");
    if (update_batch < 1) throw ConfigError("update_batch must be >= 1");
    if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
    if (eval_samples < 8) {
        throw ConfigError("eval_samples must be >= 8 (pass@8 is reported)");
    }
    if (checkpoint_every < 1) throw ConfigError("checkpoint_every must be >= 1");
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
    return {{"m", c.m},
            {"alpha1", c.alpha1},
            {"alpha2", c.alpha2},
            {"alpha3", c.alpha3},
            {"k_max", c.k_max},
            {"beta1", c.beta1},
            {"beta2", c.beta2},
            {"epsilon", c.epsilon},
            {"group_size", c.group_size},
            {"learning_rate", c.learning_rate},
            {"grad_clip_norm", c.grad_clip_norm},
            {"std_floor", c.std_floor},
            {"temperature", c.temperature},
            {"n_check", c.n_check},
            {"withdraw", c.withdraw},
            {"sample_unit", c.sample_unit},
            {"corpus_path", c.corpus_path},
            {"run_dir", c.run_dir},
            {"scorer", c.scorer},
            {"scoring_url", c.scoring_url},
            {"baseline", c.baseline},
            {"prefix_fraction", c.prefix_fraction},
            {"weak_policy", c.weak_policy},
            {"weak_stub_p", c.weak_stub_p},
            {"total_updates", c.total_updates},
            {"rollout_batch", c.rollout_batch},
            {"update_batch", c.update_batch},
            {"eval_every", c.eval_every},
            {"eval_samples", c.eval_samples},
            {"checkpoint_every", c.checkpoint_every},
            {"seed", c.seed}};
}

ExperimentConfig config_from_json(const nlohmann::json& record) {
    if (!record.is_object()) throw ConfigError("config must be a JSON object");
    ExperimentConfig c;
    bool seed_present = false;
    for (const auto& [key, value] : record.items()) {
        try {
            if (key == "m") c.m = value.get<int>();
            else if (key == "alpha1") c.alpha1 = value.get<double>();
            else if (key == "alpha2") c.alpha2 = value.get<double>();
            else if (key == "alpha3") c.alpha3 = value.get<double>();
            else if (key == "k_max") c.k_max = value.get<int>();
            else if (key == "beta1") c.beta1 = value.get<double>();
            else if (key == "beta2") c.beta2 = value.get<double>();
            else if (key == "epsilon") c.epsilon = value.get<double>();
            else if (key == "group_size") c.group_size = value.get<int>();
            else if (key == "learning_rate") c.learning_rate = value.get<double>();
            else if (key == "grad_clip_norm") c.grad_clip_norm = value.get<double>();
            else if (key == "std_floor") c.std_floor = value.get<double>();
            else if (key == "temperature") c.temperature = value.get<double>();
            else if (key == "n_check") c.n_check = value.get<int>();
            else if (key == "withdraw") c.withdraw = value.get<bool>();
            else if (key == "sample_unit") c.sample_unit = value.get<std::string>();
            else if (key == "corpus_path") c.corpus_path = value.get<std::string>();
            else if (key == "run_dir") c.run_dir = value.get<std::string>();
            else if (key == "scorer") c.scorer = value.get<std::string>();
            else if (key == "scoring_url") c.scoring_url = value.get<std::string>();
            else if (key == "baseline") c.baseline = value.get<std::string>();
            else if (key == "prefix_fraction") c.prefix_fraction = value.get<double>();
            else if (key == "weak_policy") c.weak_policy = value.get<std::string>();
            else if (key == "weak_stub_p") c.weak_stub_p = value.get<double>();
            else if (key == "total_updates") c.total_updates = value.get<int>();
            else if (key == "rollout_batch") c.rollout_batch = value.get<int>();
            else if (key == "update_batch") c.update_batch = value.get<int>();
            else if (key == "eval_every") c.eval_every = value.get<int>();
            else if (key == "eval_samples") c.eval_samples = value.get<int>();
            else if (key == "checkpoint_every") c.checkpoint_every = value.get<int>();
            else if (key == "seed") {
                c.seed = value.get<std::uint64_t>();
                seed_present = true;
            } else {
                throw ConfigError("unknown config key '" + key + "'");
            }
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("bad value for config key '" + key + "': " + e.what());
        }
    }
    if (!seed_present) throw ConfigError("config is missing the mandatory 'seed' key");
    c.validate();
    return c;
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path.string());
    nlohmann::json record;
    try {
        in >> record;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return config_from_json(record);
}

std::string config_hash(const ExperimentConfig& config) {
    // nlohmann objects serialize with sorted keys, giving a canonical string
    const std::uint64_t h = rng::fnv1a(config_to_json(config).dump());
    char buffer[17];
    std::snprintf(buffer, sizeof(buffer), "%016llx",
                  static_cast<unsigned long long>(h));
    return buffer;
}

std::string format_double(double value) {
    char buffer[64];
    auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    if (ec != std::errc()) throw ValidationError("format_double failed");
    return std::string(buffer, end);
}

// ------------------------------- evaluation --------------------------------

double pass_at_k_estimate(int n, int c, int k) {
    if (n < 1 || c < 0 || c > n) throw ConfigError("pass@k: need 0 <= c <= n");
    if (k < 1 || k > n) throw ConfigError("pass@k: need 1 <= k <= n");
    if (c == 0) return 0.0;
    if (n - c < k) return 1.0; // every size-k subset contains a success
    double miss = 1.0;
    for (int i = 0; i < k; ++i) {
        miss *= static_cast<double>(n - c - i) / static_cast<double>(n - i);
    }
    return 1.0 - miss;
}

PassAtKTable eval_pass_at_k(std::span<const corpus::Problem> problems,
                            const simenv::Policy& policy, int n,
                            std::span<const int> ks, std::uint64_t seed) {
    for (int k : ks) {
        if (k > n) {
            throw ConfigError("pass@k: k=" + std::to_string(k) + " exceeds n=" +
                              std::to_string(n));
        }
    }
    PassAtKTable table;
    table.ks.assign(ks.begin(), ks.end());
    table.values.assign(ks.size(), 0.0);
    if (problems.empty()) return table;

    curriculum::CurriculumState bare; // empty live set: evaluation sees no hints
    for (const auto& problem : problems) {
        const auto prompt = curriculum::build_prompt(bare, problem);
        int successes = 0;
        for (int i = 0; i < n; ++i) {
            auto engine = rng::make_engine(seed, "eval/" + problem.id,
                                           static_cast<std::uint64_t>(i));
            const auto trajectory =
                simenv::sample_trajectory(policy, prompt, problem, engine);
            successes += grpo::reward(problem, trajectory);
        }
        for (std::size_t j = 0; j < table.ks.size(); ++j) {
            table.values[j] += pass_at_k_estimate(n, successes, table.ks[j]);
        }
    }
    for (double& value : table.values) {
        value /= static_cast<double>(problems.size());
    }
    return table;
}

double mean_success_probability(std::span<const corpus::Problem> problems,
                                const simenv::Policy& policy) {
    if (problems.empty()) return 0.0;
    double total = 0.0;
    for (const auto& problem : problems) {
        total += simenv::success_probability(policy, {}, problem);
    }
    return total / static_cast<double>(problems.size());
}

// -------------------------------- baselines --------------------------------

std::vector<int> baseline_hint_selector(std::string_view mode, double prefix_fraction,
                                        const corpus::RegistryEntry& entry,
                                        std::uint64_t seed) {
    const int n = static_cast<int>(entry.pieces.size());
    if (mode == "piecehint") {
        return allocation::select_hints(entry.pieces, entry.k0);
    }
    if (mode == "no_hint") {
        return {};
    }
    if (mode == "prefix_fraction") {
        const int take = std::min(
            n, static_cast<int>(std::ceil(prefix_fraction * static_cast<double>(n))));
        std::vector<int> hints(take);
        for (int i = 0; i < take; ++i) hints[i] = i;
        return hints;
    }
    if (mode == "random_pieces") {
        const int take = std::min(entry.k0, n);
        std::vector<int> positions(n);
        for (int i = 0; i < n; ++i) positions[i] = i;
        auto engine = rng::make_engine(seed, "baseline/" + entry.problem_id, 0);
        for (int i = 0; i < take; ++i) { // partial Fisher-Yates
            const int j = i + rng::uniform_below(engine, n - i);
            std::swap(positions[i], positions[j]);
        }
        std::vector<int> hints(positions.begin(), positions.begin() + take);
        std::sort(hints.begin(), hints.end());
        return hints;
    }
    throw ConfigError("unknown baseline mode '" + std::string(mode) + "'");
}

// ----------------------------- pipeline stages -----------------------------

SelectionResult run_selection(const ExperimentConfig& config,
                              std::span<const corpus::Problem> problems) {
    const selection::SelectionParams params{config.m, config.alpha1, config.alpha2,
                                            config.alpha3};
    params.validate();

    simenv::Policy initial_policy(problems, config.temperature);
    simenv::EnvPolicyHandle env_handle(initial_policy);
    selection::StubPolicy stub_handle(config.weak_stub_p);
    selection::PolicyHandle& weak_handle =
        config.weak_policy == "stub"
            ? static_cast<selection::PolicyHandle&>(stub_handle)
            : static_cast<selection::PolicyHandle&>(env_handle);

    const std::uint64_t weak_seed = rng::derive_stream(config.seed, "select/weak", 0);
    const std::uint64_t train_seed = rng::derive_stream(config.seed, "select/train", 0);

    SelectionResult result;
    for (const auto& problem : problems) {
        result.weak_counts.push_back(selection::estimate_success(
            problem, weak_handle, config.m, weak_seed, selection::ModelTag::weak));
        result.train_counts.push_back(selection::estimate_success(
            problem, env_handle, config.m, train_seed, selection::ModelTag::train));
    }
    result.hard_ids = selection::filter_hard(result.weak_counts, params);
    result.train_ids =
        selection::filter_capability(result.train_counts, result.hard_ids, params);
    return result;
}

corpus::RegistryFile build_registry(const ExperimentConfig& config,
                                    std::span<const corpus::Problem> scored_problems,
                                    const std::map<std::string, int>& c_weak,
                                    const std::map<std::string, int>& c_train) {
    const allocation::AllocationParams params{config.k_max, config.beta1, config.beta2,
                                              config.m};
    corpus::RegistryFile registry;
    registry.m = config.m;
    registry.params_hash = config_hash(config);
    for (const auto& problem : scored_problems) {
        corpus::RegistryEntry entry;
        entry.problem_id = problem.id;
        entry.pieces = problem.pieces;
        entry.c_weak = c_weak.at(problem.id);
        entry.c_train = c_train.at(problem.id);
        entry.k0 = allocation::allocate_budget(entry.c_train, params);
        entry.initial_hints = baseline_hint_selector(config.baseline,
                                                     config.prefix_fraction, entry,
                                                     config.seed);
        entry.k0 = static_cast<int>(entry.initial_hints.size());
        registry.entries.push_back(std::move(entry));
    }
    return registry;
}

// ------------------------------- run pipeline ------------------------------

namespace {

struct MetricsWriter {
    explicit MetricsWriter(const fs::path& path) : out(path) {
        if (!out) throw IoError("cannot write metrics file: " + path.string());
        out << kMetricsHeader << '\n';
    }

    void row(int step, double mean_reward, double zero_var_frac, double loss,
             double grad_norm, double mean_live_hints, bool has_eval,
             double eval_success, double pass_at_1, double pass_at_8) {
        out << step << ',' << format_double(mean_reward) << ','
            << format_double(zero_var_frac) << ',' << format_double(loss) << ','
            << format_double(grad_norm) << ',' << format_double(mean_live_hints) << ',';
        if (has_eval) {
            out << format_double(eval_success) << ',' << format_double(pass_at_1) << ','
                << format_double(pass_at_8);
        } else {
            out << ",,";
        }
        out << '\n';
    }

    std::ofstream out;
};

void save_policy_checkpoint(const simenv::Policy& policy, const fs::path& path) {
    nlohmann::json record = {{"temperature", policy.temperature()},
                             {"params", policy.flatten()}};
    std::ofstream out(path);
    if (!out) throw IoError("cannot write policy checkpoint: " + path.string());
    out << record.dump() << '\n';
}

std::unique_ptr<scoring::Scorer> make_scorer(const ExperimentConfig& config,
                                             scoring::ScoringChannel* channel) {
    if (config.scorer == "oracle") return std::make_unique<scoring::OracleScorer>();
    if (config.scorer == "heuristic") return std::make_unique<scoring::HeuristicScorer>();
    if (channel == nullptr) {
        throw ConfigError("external scorer requires a scoring channel "
                          "(set scoring_url or pass a channel)");
    }
    return std::make_unique<scoring::ExternalServiceScorer>(*channel);
}

} // namespace

RunSummary run_pipeline(const ExperimentConfig& config,
                        scoring::ScoringChannel* scoring_channel) {
    config.validate();
    if (config.corpus_path.empty()) throw ConfigError("corpus_path is required");

    const fs::path run_dir(config.run_dir);
    fs::create_directories(run_dir);

    RunSummary summary;
    summary.run_dir = run_dir.string();
    summary.config_hash = config_hash(config);

    nlohmann::json manifest = {{"config", config_to_json(config)},
                               {"config_hash", summary.config_hash},
                               {"seed", config.seed},
                               {"stages", nlohmann::json::array()}};
    auto write_manifest = [&](const std::string& stage) {
        manifest["stages"].push_back(stage);
        std::ofstream out(run_dir / "manifest.json");
        if (!out) throw IoError("cannot write manifest");
        out << manifest.dump(2) << '\n';
    };
    auto stage_guard = [&](const std::string& stage, auto&& body) {
        try {
            body();
        } catch (const std::exception& e) {
            throw std::runtime_error("pipeline stage '" + stage + "' failed: " + e.what());
        }
        write_manifest(stage);
    };

    // ---- load ----
    std::vector<corpus::Problem> problems;
    stage_guard("load", [&] {
        problems = corpus::load_corpus(config.corpus_path);
        if (problems.empty()) throw ValidationError("corpus is empty");
        summary.n_problems = static_cast<int>(problems.size());
        manifest["n_problems"] = problems.size();
    });

    // ---- select ----
    std::map<std::string, int> c_weak;
    std::map<std::string, int> c_train;
    std::set<std::string> train_ids;
    stage_guard("select", [&] {
        SelectionResult result = run_selection(config, problems);
        for (const auto& count : result.weak_counts) c_weak[count.problem_id] = count.count;
        for (const auto& count : result.train_counts) {
            c_train[count.problem_id] = count.count;
        }
        std::vector<selection::SuccessCount> all_counts = result.weak_counts;
        all_counts.insert(all_counts.end(), result.train_counts.begin(),
                          result.train_counts.end());
        selection::save_counts(all_counts, run_dir / "success_counts.jsonl");

        train_ids = result.train_ids;
        summary.n_hard = static_cast<int>(result.hard_ids.size());
        summary.n_train = static_cast<int>(train_ids.size());

        std::ofstream ids_out(run_dir / "train_ids.txt");
        for (const auto& id : train_ids) ids_out << id << '\n';
        manifest["n_hard"] = result.hard_ids.size();
        manifest["n_train"] = train_ids.size();
    });

    std::vector<corpus::Problem> train_problems;
    for (const auto& problem : problems) {
        if (train_ids.count(problem.id)) train_problems.push_back(problem);
    }

    // ---- score ----
    stage_guard("score", [&] {
        auto scorer = make_scorer(config, scoring_channel);
        for (auto& problem : train_problems) {
            scoring::apply_scores(problem, *scorer);
        }
    });

    // ---- allocate ----
    corpus::RegistryFile registry;
    stage_guard("allocate", [&] {
        registry = build_registry(config, train_problems, c_weak, c_train);
        corpus::save_registry(registry, run_dir / "registry.jsonl");
        summary.registry_path = (run_dir / "registry.jsonl").string();
    });

    // ---- train ----
    if (config.total_updates == 0) {
        // preprocessing-only run
        if (!train_problems.empty()) {
            simenv::Policy policy(train_problems, config.temperature);
            summary.final_eval_success = mean_success_probability(train_problems, policy);
        }
        manifest["summary"] = {{"n_train", summary.n_train},
                               {"final_eval_success", summary.final_eval_success}};
        write_manifest("done");
        return summary;
    }

    stage_guard("train", [&] {
        if (train_problems.empty()) {
            throw ValidationError("training set is empty; widen the selection bounds");
        }
        std::map<std::string, const corpus::Problem*> problem_by_id;
        std::map<std::string, const corpus::RegistryEntry*> entry_by_id;
        for (const auto& problem : train_problems) problem_by_id[problem.id] = &problem;
        for (const auto& entry : registry.entries) entry_by_id[entry.problem_id] = &entry;

        simenv::Policy policy(train_problems, config.temperature);
        const std::vector<double> initial_params = policy.flatten();

        std::map<std::string, curriculum::CurriculumState> states;
        for (const auto& entry : registry.entries) {
            states.emplace(entry.problem_id,
                           curriculum::make_state(entry, config.n_check));
        }
        auto mean_live_hints = [&] {
            double total = 0.0;
            for (const auto& [id, state] : states) {
                total += static_cast<double>(state.live_hints.size());
            }
            return total / static_cast<double>(states.size());
        };

        const grpo::GrpoParams grpo_params{config.epsilon, config.group_size,
                                           config.learning_rate, config.grad_clip_norm,
                                           config.std_floor};
        const std::vector<int> eval_ks = {1, 8};

        MetricsWriter metrics(run_dir / "metrics.csv");
        summary.metrics_path = (run_dir / "metrics.csv").string();
        const fs::path checkpoint_dir = run_dir / "checkpoints";
        fs::create_directories(checkpoint_dir);

        std::vector<std::string> epoch_order;
        for (const auto& id : train_ids) epoch_order.push_back(id);
        std::size_t cursor = epoch_order.size(); // forces a shuffle on first use
        std::uint64_t epoch_index = 0;

        std::vector<double> gradient(policy.flat_size(), 0.0);
        int update = 0;
        std::uint64_t phase = 0;
        int last_checkpoint = 0;

        while (update < config.total_updates) {
            // assemble the next rollout batch from the epoch ordering
            std::vector<std::string> batch;
            while (static_cast<int>(batch.size()) < config.rollout_batch) {
                if (cursor == epoch_order.size()) {
                    if (!batch.empty()) break; // epochs never straddle a batch
                    auto engine = rng::make_engine(config.seed, "epoch", epoch_index++);
                    for (std::size_t i = epoch_order.size(); i > 1; --i) {
                        const std::size_t j =
                            static_cast<std::size_t>(rng::uniform_below(
                                engine, static_cast<int>(i)));
                        std::swap(epoch_order[i - 1], epoch_order[j]);
                    }
                    cursor = 0;
                }
                batch.push_back(epoch_order[cursor++]);
            }

            // rollout phase: the policy is frozen while groups are sampled
            std::vector<grpo::RolloutGroup> groups;
            groups.reserve(batch.size());
            const std::string phase_label = std::to_string(phase);
            for (const auto& id : batch) {
                const corpus::Problem& problem = *problem_by_id.at(id);
                grpo::RolloutGroup group;
                group.prompt = curriculum::build_prompt(states.at(id), problem);
                for (int i = 0; i < config.group_size; ++i) {
                    auto engine = rng::make_engine(config.seed,
                                                   "rollout/" + phase_label + "/" + id,
                                                   static_cast<std::uint64_t>(i));
                    group.trajectories.push_back(
                        simenv::sample_trajectory(policy, group.prompt, problem, engine));
                    group.rewards.push_back(grpo::reward(problem, group.trajectories.back()));
                }
                group.advantages = grpo::compute_advantages(group.rewards, config.std_floor);
                groups.push_back(std::move(group));
            }

            // minibatch updates over the phase's groups
            for (std::size_t begin = 0;
                 begin < groups.size() && update < config.total_updates;
                 begin += static_cast<std::size_t>(config.update_batch)) {
                const std::size_t end = std::min(
                    begin + static_cast<std::size_t>(config.update_batch), groups.size());
                const double chunk_weight = 1.0 / static_cast<double>(end - begin);

                std::fill(gradient.begin(), gradient.end(), 0.0);
                double loss = 0.0;
                double reward_sum = 0.0;
                int zero_var = 0;
                for (std::size_t g = begin; g < end; ++g) {
                    grpo::accumulate_loss_gradient(groups[g], policy, config.epsilon,
                                                   chunk_weight, gradient);
                    loss += chunk_weight *
                            grpo::surrogate_loss(groups[g], policy, config.epsilon);
                    for (int r : groups[g].rewards) reward_sum += r;
                    const bool degenerate =
                        std::all_of(groups[g].advantages.begin(),
                                    groups[g].advantages.end(),
                                    [](double a) { return a == 0.0; });
                    if (degenerate) ++zero_var;
                    ++summary.total_groups;
                }
                summary.zero_variance_groups += zero_var;

                const double grad_norm = grpo::l2_norm(gradient);
                grpo::update_step(policy.mutable_params(), gradient, grpo_params);
                ++update;

                const double mean_reward =
                    reward_sum / (static_cast<double>(end - begin) *
                                  static_cast<double>(config.group_size));
                const bool do_eval =
                    update % config.eval_every == 0 || update == config.total_updates;
                double eval_success = 0.0;
                double pass1 = 0.0;
                double pass8 = 0.0;
                if (do_eval) {
                    eval_success = mean_success_probability(train_problems, policy);
                    const auto table = eval_pass_at_k(
                        train_problems, policy, config.eval_samples, eval_ks,
                        rng::derive_stream(config.seed, "eval",
                                           static_cast<std::uint64_t>(update)));
                    pass1 = table.values[0];
                    pass8 = table.values[1];
                    summary.final_eval_success = eval_success;
                    summary.final_pass_at_1 = pass1;
                    summary.final_pass_at_8 = pass8;
                }
                metrics.row(update, mean_reward,
                            static_cast<double>(zero_var) /
                                static_cast<double>(end - begin),
                            loss, grad_norm, mean_live_hints(), do_eval, eval_success,
                            pass1, pass8);
            }

            // curriculum bookkeeping for every problem sampled this phase
            if (config.withdraw) {
                const int increments =
                    config.sample_unit == "rollout" ? config.group_size : 1;
                for (const auto& id : batch) {
                    for (int i = 0; i < increments; ++i) {
                        curriculum::on_sample(states.at(id), *entry_by_id.at(id));
                    }
                }
            }

            if (update - last_checkpoint >= config.checkpoint_every ||
                update >= config.total_updates) {
                last_checkpoint = update;
                const std::string tag = "step-" + std::to_string(update);
                save_policy_checkpoint(policy, checkpoint_dir / (tag + "-policy.json"));
                std::vector<curriculum::CurriculumState> snapshot;
                for (const auto& [id, state] : states) snapshot.push_back(state);
                curriculum::save_states(snapshot,
                                        checkpoint_dir / (tag + "-curriculum.jsonl"));
            }
            ++phase;
        }

        const std::vector<double> final_params = policy.flatten();
        double delta = 0.0;
        for (std::size_t i = 0; i < final_params.size(); ++i) {
            const double d = final_params[i] - initial_params[i];
            delta += d * d;
        }
        summary.param_delta_norm = std::sqrt(delta);
    });

    manifest["summary"] = {{"n_train", summary.n_train},
                           {"final_eval_success", summary.final_eval_success},
                           {"final_pass_at_1", summary.final_pass_at_1},
                           {"final_pass_at_8", summary.final_pass_at_8},
                           {"param_delta_norm", summary.param_delta_norm},
                           {"total_groups", summary.total_groups},
                           {"zero_variance_groups", summary.zero_variance_groups}};
    write_manifest("done");
    return summary;
}

// --------------------------------- plotting --------------------------------

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream stream(line);
    while (std::getline(stream, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

} // namespace

void render_metrics_svg(const fs::path& metrics_csv, const fs::path& out_svg,
                        std::span<const std::string> columns) {
    std::ifstream in(metrics_csv);
    if (!in) throw IoError("cannot open metrics file: " + metrics_csv.string());

    std::string line;
    if (!std::getline(in, line)) throw ParseError("metrics file is empty");
    const auto header = split_csv_line(line);

    std::vector<std::size_t> column_index;
    for (const auto& wanted : columns) {
        auto it = std::find(header.begin(), header.end(), wanted);
        if (it == header.end()) {
            throw ConfigError("metrics file has no column '" + wanted + "'");
        }
        column_index.push_back(static_cast<std::size_t>(it - header.begin()));
    }

    // series[i] = (step, value) pairs for columns[i], skipping empty cells
    std::vector<std::vector<std::pair<double, double>>> series(columns.size());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        const double step = std::stod(cells.at(0));
        for (std::size_t i = 0; i < column_index.size(); ++i) {
            if (column_index[i] >= cells.size()) continue;
            const std::string& cell = cells[column_index[i]];
            if (cell.empty()) continue;
            series[i].emplace_back(step, std::stod(cell));
        }
    }

    double x_max = 1.0;
    double y_max = 1e-9;
    for (const auto& s : series) {
        for (const auto& [x, y] : s) {
            x_max = std::max(x_max, x);
            y_max = std::max(y_max, y);
        }
    }

    constexpr double width = 720.0;
    constexpr double height = 400.0;
    constexpr double margin = 50.0;
    const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd"};

    std::ofstream out(out_svg);
    if (!out) throw IoError("cannot write svg: " + out_svg.string());
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\""
        << width - margin << "\" y2=\"" << height - margin
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin
        << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";

    auto to_x = [&](double x) {
        return margin + (width - 2 * margin) * (x / x_max);
    };
    auto to_y = [&](double y) {
        return height - margin - (height - 2 * margin) * (y / y_max);
    };
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (series[i].empty()) continue;
        out << "<polyline fill=\"none\" stroke=\"" << palette[i % 5]
            << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& [x, y] : series[i]) {
            out << to_x(x) << ',' << to_y(y) << ' ';
        }
        out << "\"/>\n";
        out << "<text x=\"" << margin + 10 << "\" y=\"" << margin + 16 * (i + 1)
            << "\" fill=\"" << palette[i % 5] << "\" font-size=\"12\">" << columns[i]
            << "</text>\n";
    }
    out << "<text x=\"" << width / 2 << "\" y=\"" << height - 12
        << "\" font-size=\"12\" text-anchor=\"middle\">step</text>\n";
    out << "</svg>\n";
}

} // namespace piecehint::pipeline

// Command-line driver for the PieceHint pipeline: corpus generation,
// problem selection, piece scoring, hint allocation, GRPO training with the
// withdrawal curriculum, hint-free evaluation, metric plots and hint
// corruption experiments.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "httplib.h"
#include "json.hpp"

#include "piecehint/allocation.hpp"
#include "piecehint/corpus.hpp"
#include "piecehint/curriculum.hpp"
#include "piecehint/errors.hpp"
#include "piecehint/pipeline.hpp"
#include "piecehint/scoring.hpp"
#include "piecehint/selection.hpp"
#include "piecehint/simenv.hpp"

namespace ph = piecehint;

namespace {

// POSTs score requests to <url>/score and returns the reply body.
class HttpScoringChannel : public ph::scoring::ScoringChannel {
public:
    explicit HttpScoringChannel(const std::string& url) {
        const auto split = url.find('/', url.find("//") + 2);
        host_ = split == std::string::npos ? url : url.substr(0, split);
        path_ = split == std::string::npos ? "/score" : url.substr(split);
    }

    std::string exchange(const std::string& request_json) override {
        httplib::Client client(host_);
        auto response = client.Post(path_, request_json, "application/json");
        if (!response) {
            throw ph::IoError("scoring service unreachable: " + host_ + path_);
        }
        if (response->status != 200) {
            throw ph::IoError("scoring service returned HTTP " +
                              std::to_string(response->status));
        }
        return response->body;
    }

private:
    std::string host_;
    std::string path_;
};

// Collects --key overrides so a config file value only changes when the flag
// is actually present on the command line.
struct ConfigCli {
    std::string config_path;
    nlohmann::json overrides = nlohmann::json::object();

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file");
        add<int>(cmd, "m");
        add<double>(cmd, "alpha1");
        add<double>(cmd, "alpha2");
        add<double>(cmd, "alpha3");
        add<int>(cmd, "k_max");
        add<double>(cmd, "beta1");
        add<double>(cmd, "beta2");
        add<double>(cmd, "epsilon");
        add<int>(cmd, "group_size");
        add<double>(cmd, "learning_rate");
        add<double>(cmd, "grad_clip_norm");
        add<double>(cmd, "std_floor");
        add<double>(cmd, "temperature");
        add<int>(cmd, "n_check");
        add<bool>(cmd, "withdraw");
        add<std::string>(cmd, "sample_unit");
        add<std::string>(cmd, "corpus_path");
        add<std::string>(cmd, "run_dir");
        add<std::string>(cmd, "scorer");
        add<std::string>(cmd, "scoring_url");
        add<std::string>(cmd, "baseline");
        add<double>(cmd, "prefix_fraction");
        add<std::string>(cmd, "weak_policy");
        add<double>(cmd, "weak_stub_p");
        add<int>(cmd, "total_updates");
        add<int>(cmd, "rollout_batch");
        add<int>(cmd, "update_batch");
        add<int>(cmd, "eval_every");
        add<int>(cmd, "eval_samples");
        add<int>(cmd, "checkpoint_every");
        add<std::uint64_t>(cmd, "seed");
    }

    ph::pipeline::ExperimentConfig resolve() const {
        nlohmann::json merged = nlohmann::json::object();
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw ph::IoError("cannot open config file: " + config_path);
            in >> merged;
        }
        for (const auto& [key, value] : overrides.items()) merged[key] = value;
        return ph::pipeline::config_from_json(merged);
    }

private:
    template <typename T>
    void add(CLI::App* cmd, const std::string& key) {
        cmd->add_option_function<T>(
            "--" + key, [this, key](const T& value) { overrides[key] = value; });
    }
};

std::unique_ptr<ph::scoring::ScoringChannel> make_channel(
    const ph::pipeline::ExperimentConfig& config) {
    if (config.scorer == "external" && !config.scoring_url.empty()) {
        return std::make_unique<HttpScoringChannel>(config.scoring_url);
    }
    return nullptr;
}

ph::simenv::Policy load_policy(const std::string& checkpoint_path,
                               std::span<const ph::corpus::Problem> problems,
                               double temperature) {
    if (checkpoint_path.empty()) {
        return ph::simenv::Policy(problems, temperature);
    }
    std::ifstream in(checkpoint_path);
    if (!in) throw ph::IoError("cannot open policy checkpoint: " + checkpoint_path);
    nlohmann::json record;
    in >> record;
    ph::simenv::Policy policy(problems, record.at("temperature").get<double>());
    const auto params = record.at("params").get<std::vector<double>>();
    policy.load_flat(params);
    return policy;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"PieceHint curriculum engine"};
    app.require_subcommand(1);

    // ---- gen-corpus ----
    auto* gen = app.add_subcommand("gen-corpus", "generate a synthetic corpus");
    int gen_n = 200;
    int gen_min_steps = 5;
    int gen_max_steps = 5;
    std::string gen_profile = "bottleneck";
    int gen_base = 2;
    int gen_bottleneck = 32;
    int gen_mid = 0;
    int gen_mid_count = 0;
    std::uint64_t gen_seed = 0;
    std::string gen_out = "corpus.jsonl";
    gen->add_option("--n", gen_n, "number of problems");
    gen->add_option("--min-steps", gen_min_steps);
    gen->add_option("--max-steps", gen_max_steps);
    gen->add_option("--profile", gen_profile, "uniform | bottleneck");
    gen->add_option("--base", gen_base, "branching of regular steps");
    gen->add_option("--bottleneck-branching", gen_bottleneck);
    gen->add_option("--mid-branching", gen_mid);
    gen->add_option("--mid-count", gen_mid_count);
    gen->add_option("--seed", gen_seed)->required();
    gen->add_option("--out", gen_out);

    // ---- select ----
    auto* select = app.add_subcommand("select", "estimate success counts and filter");
    ConfigCli select_cfg;
    select_cfg.attach(select);
    std::string select_counts = "success_counts.jsonl";
    std::string select_ids = "train_ids.txt";
    select->add_option("--out-counts", select_counts);
    select->add_option("--out-ids", select_ids);

    // ---- score ----
    auto* score = app.add_subcommand("score", "score pieces and normalize values");
    ConfigCli score_cfg;
    score_cfg.attach(score);
    std::string score_out = "scored.jsonl";
    score->add_option("--out", score_out);

    // ---- allocate ----
    auto* allocate = app.add_subcommand("allocate", "build the hint registry");
    ConfigCli allocate_cfg;
    allocate_cfg.attach(allocate);
    std::string allocate_counts;
    std::string allocate_ids;
    std::string allocate_out = "registry.jsonl";
    allocate->add_option("--counts", allocate_counts, "success-count file")->required();
    allocate->add_option("--ids", allocate_ids, "training-id file (optional subset)");
    allocate->add_option("--out", allocate_out);

    // ---- train ----
    auto* train = app.add_subcommand("train", "run the full pipeline");
    ConfigCli train_cfg;
    train_cfg.attach(train);

    // ---- eval ----
    auto* eval = app.add_subcommand("eval", "hint-free pass@k evaluation");
    std::string eval_corpus;
    std::string eval_ids;
    std::string eval_policy;
    int eval_n = 16;
    std::vector<int> eval_ks = {1, 8};
    double eval_temperature = 1.0;
    std::uint64_t eval_seed = 0;
    eval->add_option("--corpus", eval_corpus)->required();
    eval->add_option("--ids", eval_ids, "restrict to ids listed in this file");
    eval->add_option("--policy", eval_policy, "policy checkpoint (default: uniform)");
    eval->add_option("--n", eval_n, "samples per problem");
    eval->add_option("--ks", eval_ks, "k values");
    eval->add_option("--temperature", eval_temperature);
    eval->add_option("--seed", eval_seed)->required();

    // ---- plot ----
    auto* plot = app.add_subcommand("plot", "render SVG charts from a metrics CSV");
    std::string plot_metrics;
    std::string plot_out = "metrics.svg";
    std::vector<std::string> plot_columns = {"mean_reward", "mean_live_hints",
                                             "eval_success"};
    plot->add_option("--metrics", plot_metrics)->required();
    plot->add_option("--out", plot_out);
    plot->add_option("--columns", plot_columns);

    // ---- corrupt ----
    auto* corrupt = app.add_subcommand("corrupt", "inject errors into a registry");
    std::string corrupt_in;
    std::string corrupt_out = "registry_corrupted.jsonl";
    std::string corrupt_mode = "worst_pieces";
    double corrupt_fraction = 0.25;
    std::uint64_t corrupt_seed = 0;
    corrupt->add_option("--registry", corrupt_in)->required();
    corrupt->add_option("--out", corrupt_out);
    corrupt->add_option("--mode", corrupt_mode,
                        "wrong_boundaries | random_scores | worst_pieces | "
                        "fraction_corrupt | contradictory");
    corrupt->add_option("--fraction", corrupt_fraction);
    corrupt->add_option("--seed", corrupt_seed)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            ph::simenv::BranchingProfile profile;
            profile.kind = ph::simenv::profile_kind_from_string(gen_profile);
            profile.base = gen_base;
            profile.bottleneck = gen_bottleneck;
            profile.mid = gen_mid;
            profile.mid_count = gen_mid_count;
            const auto problems = ph::simenv::generate_corpus(
                gen_n, {gen_min_steps, gen_max_steps}, profile, gen_seed);
            ph::corpus::save_corpus(problems, gen_out);
            std::cout << "wrote " << problems.size() << " problems to " << gen_out
                      << "\n";
        } else if (*select) {
            const auto config = select_cfg.resolve();
            const auto problems = ph::corpus::load_corpus(config.corpus_path);
            const auto result = ph::pipeline::run_selection(config, problems);
            std::vector<ph::selection::SuccessCount> all = result.weak_counts;
            all.insert(all.end(), result.train_counts.begin(), result.train_counts.end());
            ph::selection::save_counts(all, select_counts);
            std::ofstream ids_out(select_ids);
            for (const auto& id : result.train_ids) ids_out << id << '\n';
            std::cout << "hard: " << result.hard_ids.size()
                      << ", train: " << result.train_ids.size() << " of "
                      << problems.size() << "\n";
        } else if (*score) {
            const auto config = score_cfg.resolve();
            auto problems = ph::corpus::load_corpus(config.corpus_path);
            auto channel = make_channel(config);
            std::unique_ptr<ph::scoring::Scorer> scorer;
            if (config.scorer == "oracle") {
                scorer = std::make_unique<ph::scoring::OracleScorer>();
            } else if (config.scorer == "heuristic") {
                scorer = std::make_unique<ph::scoring::HeuristicScorer>();
            } else if (channel) {
                scorer = std::make_unique<ph::scoring::ExternalServiceScorer>(*channel);
            } else {
                throw ph::ConfigError("external scorer requires --scoring_url");
            }
            for (auto& problem : problems) ph::scoring::apply_scores(problem, *scorer);
            ph::corpus::save_corpus(problems, score_out);
            std::cout << "scored " << problems.size() << " problems -> " << score_out
                      << "\n";
        } else if (*allocate) {
            const auto config = allocate_cfg.resolve();
            auto problems = ph::corpus::load_corpus(config.corpus_path);
            if (!allocate_ids.empty()) {
                std::ifstream ids_in(allocate_ids);
                if (!ids_in) throw ph::IoError("cannot open ids file: " + allocate_ids);
                std::set<std::string> keep;
                std::string line;
                while (std::getline(ids_in, line)) {
                    if (!line.empty()) keep.insert(line);
                }
                std::erase_if(problems,
                              [&](const auto& p) { return keep.count(p.id) == 0; });
            }
            std::map<std::string, int> c_weak;
            std::map<std::string, int> c_train;
            for (const auto& count : ph::selection::load_counts(allocate_counts)) {
                if (count.model_tag == ph::selection::ModelTag::weak) {
                    c_weak[count.problem_id] = count.count;
                } else {
                    c_train[count.problem_id] = count.count;
                }
            }
            const auto registry =
                ph::pipeline::build_registry(config, problems, c_weak, c_train);
            ph::corpus::save_registry(registry, allocate_out);
            std::cout << "registry with " << registry.entries.size() << " entries -> "
                      << allocate_out << "\n";
        } else if (*train) {
            const auto config = train_cfg.resolve();
            auto channel = make_channel(config);
            const auto summary = ph::pipeline::run_pipeline(config, channel.get());
            std::cout << "run dir:            " << summary.run_dir << "\n"
                      << "config hash:        " << summary.config_hash << "\n"
                      << "problems:           " << summary.n_problems << " (hard "
                      << summary.n_hard << ", train " << summary.n_train << ")\n"
                      << "final eval success: " << summary.final_eval_success << "\n"
                      << "final pass@1:       " << summary.final_pass_at_1 << "\n"
                      << "final pass@8:       " << summary.final_pass_at_8 << "\n";
        } else if (*eval) {
            auto problems = ph::corpus::load_corpus(eval_corpus);
            if (!eval_ids.empty()) {
                std::ifstream ids_in(eval_ids);
                if (!ids_in) throw ph::IoError("cannot open ids file: " + eval_ids);
                std::set<std::string> keep;
                std::string line;
                while (std::getline(ids_in, line)) {
                    if (!line.empty()) keep.insert(line);
                }
                std::erase_if(problems,
                              [&](const auto& p) { return keep.count(p.id) == 0; });
            }
            const auto policy = load_policy(eval_policy, problems, eval_temperature);
            const auto table =
                ph::pipeline::eval_pass_at_k(problems, policy, eval_n, eval_ks, eval_seed);
            std::cout << "problems: " << problems.size() << "\n";
            std::cout << "exact mean success: "
                      << ph::pipeline::mean_success_probability(problems, policy) << "\n";
            for (std::size_t i = 0; i < table.ks.size(); ++i) {
                std::cout << "pass@" << table.ks[i] << ": " << table.values[i] << "\n";
            }
        } else if (*plot) {
            ph::pipeline::render_metrics_svg(plot_metrics, plot_out, plot_columns);
            std::cout << "wrote " << plot_out << "\n";
        } else if (*corrupt) {
            auto registry = ph::corpus::load_registry(corrupt_in);
            const auto mode = ph::curriculum::corruption_mode_from_string(corrupt_mode);
            for (auto& entry : registry.entries) {
                entry = ph::curriculum::corrupt_hints(entry, mode, corrupt_fraction,
                                                      corrupt_seed);
            }
            ph::corpus::save_registry(registry, corrupt_out);
            std::cout << "corrupted registry (" << corrupt_mode << ") -> " << corrupt_out
                      << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

#include "piecehint/simenv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_set>

#include "piecehint/errors.hpp"
#include "piecehint/rng.hpp"

namespace piecehint::simenv {

Policy::Policy(std::span<const corpus::Problem> problems, double temperature)
    : temperature_(temperature) {
    if (temperature_ <= 0.0) throw ValidationError("policy temperature must be > 0");
    for (const auto& problem : problems) {
        if (!problem.env_spec) {
            throw ValidationError("policy requires env_spec on problem '" + problem.id +
                                  "'");
        }
        Table table;
        for (const auto& step : problem.env_spec->steps) {
            table.branching.push_back(step.branching_factor);
        }
        tables_.emplace(problem.id, std::move(table));
    }
    // offsets follow sorted problem ids so the flat layout is reproducible
    std::size_t offset = 0;
    for (auto& [id, table] : tables_) {
        table.offset = offset;
        for (int b : table.branching) offset += static_cast<std::size_t>(b);
    }
    params_.assign(offset, 0.0); // uniform policy
}

void Policy::load_flat(std::span<const double> params) {
    if (params.size() != params_.size()) {
        throw ValidationError("load_flat: parameter size mismatch");
    }
    for (double p : params) {
        if (!std::isfinite(p)) throw ValidationError("load_flat: non-finite logit");
    }
    params_.assign(params.begin(), params.end());
}

const Policy::Table& Policy::table(const std::string& problem_id) const {
    auto it = tables_.find(problem_id);
    if (it == tables_.end()) {
        throw ValidationError("policy has no problem '" + problem_id + "'");
    }
    return it->second;
}

bool Policy::has_problem(const std::string& problem_id) const {
    return tables_.count(problem_id) != 0;
}

int Policy::step_count(const std::string& problem_id) const {
    return static_cast<int>(table(problem_id).branching.size());
}

int Policy::branching(const std::string& problem_id, int step) const {
    const Table& t = table(problem_id);
    if (step < 0 || step >= static_cast<int>(t.branching.size())) {
        throw ValidationError("step index out of range for '" + problem_id + "'");
    }
    return t.branching[step];
}

std::size_t Policy::flat_index(const std::string& problem_id, int step,
                               int choice) const {
    const Table& t = table(problem_id);
    if (step < 0 || step >= static_cast<int>(t.branching.size())) {
        throw ValidationError("step index out of range for '" + problem_id + "'");
    }
    if (choice < 0 || choice >= t.branching[step]) {
        throw ValidationError("choice index out of range for '" + problem_id + "'");
    }
    std::size_t offset = t.offset;
    for (int j = 0; j < step; ++j) offset += static_cast<std::size_t>(t.branching[j]);
    return offset + static_cast<std::size_t>(choice);
}

double Policy::log_prob(const std::string& problem_id, int step, int choice) const {
    const std::size_t base = flat_index(problem_id, step, 0);
    const int b = branching(problem_id, step);

    double max_logit = params_[base] / temperature_;
    for (int k = 1; k < b; ++k) {
        max_logit = std::max(max_logit, params_[base + k] / temperature_);
    }
    double sum = 0.0;
    for (int k = 0; k < b; ++k) {
        sum += std::exp(params_[base + k] / temperature_ - max_logit);
    }
    return params_[base + choice] / temperature_ - max_logit - std::log(sum);
}

std::vector<double> Policy::step_probs(const std::string& problem_id, int step) const {
    const std::size_t base = flat_index(problem_id, step, 0);
    const int b = branching(problem_id, step);

    double max_logit = params_[base] / temperature_;
    for (int k = 1; k < b; ++k) {
        max_logit = std::max(max_logit, params_[base + k] / temperature_);
    }
    std::vector<double> probs(b);
    double sum = 0.0;
    for (int k = 0; k < b; ++k) {
        probs[k] = std::exp(params_[base + k] / temperature_ - max_logit);
        sum += probs[k];
    }
    for (double& p : probs) p /= sum;
    return probs;
}

int Policy::sample_choice(const std::string& problem_id, int step,
                          std::mt19937_64& engine) const {
    std::vector<double> probs = step_probs(problem_id, step);
    return rng::sample_categorical(probs, engine);
}

// ------------------------------- trajectories ------------------------------

std::string render_completion(const Trajectory& trajectory) {
    std::string text = "answer: ";
    for (std::size_t i = 0; i < trajectory.choices.size(); ++i) {
        if (i > 0) text += ',';
        text += std::to_string(trajectory.choices[i]);
    }
    return text;
}

Trajectory sample_trajectory(const Policy& policy,
                             const curriculum::AugmentedPrompt& prompt,
                             const corpus::Problem& problem,
                             std::mt19937_64& engine) {
    if (!problem.env_spec) {
        throw ValidationError("sample_trajectory: problem '" + problem.id +
                              "' has no env_spec");
    }
    std::unordered_set<std::string> hinted_texts(prompt.hint_texts.begin(),
                                                 prompt.hint_texts.end());
    const auto& steps = problem.env_spec->steps;

    Trajectory trajectory;
    trajectory.choices.resize(steps.size());
    for (std::size_t j = 0; j < steps.size(); ++j) {
        const bool hinted = hinted_texts.count(problem.pieces[j].text) != 0;
        if (hinted) {
            trajectory.choices[j] = steps[j].correct_choice;
            continue;
        }
        const int choice = policy.sample_choice(problem.id, static_cast<int>(j), engine);
        trajectory.choices[j] = choice;
        trajectory.sampled_steps.push_back(static_cast<int>(j));
        trajectory.old_log_probs.push_back(
            policy.log_prob(problem.id, static_cast<int>(j), choice));
    }
    return trajectory;
}

double success_probability(const Policy& policy, const std::set<int>& hinted_steps,
                           const corpus::Problem& problem) {
    if (!problem.env_spec) {
        throw ValidationError("success_probability: problem '" + problem.id +
                              "' has no env_spec");
    }
    const auto& steps = problem.env_spec->steps;
    double product = 1.0;
    for (std::size_t j = 0; j < steps.size(); ++j) {
        if (hinted_steps.count(static_cast<int>(j)) != 0) continue;
        product *= std::exp(
            policy.log_prob(problem.id, static_cast<int>(j), steps[j].correct_choice));
    }
    return product;
}

// ------------------------------ corpus generation --------------------------

BranchingProfile::Kind profile_kind_from_string(std::string_view text) {
    if (text == "uniform") return BranchingProfile::Kind::uniform;
    if (text == "bottleneck") return BranchingProfile::Kind::bottleneck;
    throw ValidationError("unknown branching profile '" + std::string(text) + "'");
}

std::vector<corpus::Problem> generate_corpus(int n_problems,
                                             std::pair<int, int> step_count_range,
                                             const BranchingProfile& profile,
                                             std::uint64_t seed) {
    if (n_problems < 1) throw ValidationError("generate_corpus: need n_problems >= 1");
    if (step_count_range.first < 1 || step_count_range.second < step_count_range.first) {
        throw ValidationError("generate_corpus: bad step count range");
    }
    if (profile.base < 2 || (profile.kind == BranchingProfile::Kind::bottleneck &&
                             profile.bottleneck < 2)) {
        throw ValidationError("generate_corpus: branching factors must be >= 2");
    }
    if (profile.mid_count > 0 && profile.mid < 2) {
        throw ValidationError("generate_corpus: mid branching must be >= 2");
    }

    auto engine = rng::make_engine(seed, "gen-corpus", 0);
    std::vector<corpus::Problem> problems;
    problems.reserve(n_problems);

    for (int p = 0; p < n_problems; ++p) {
        const int n_steps =
            step_count_range.first +
            rng::uniform_below(engine, step_count_range.second - step_count_range.first + 1);

        std::vector<int> branching(n_steps, profile.base);
        if (profile.kind == BranchingProfile::Kind::bottleneck && n_steps >= 1) {
            // bottleneck lives in the second half of the solution
            const int lo = n_steps / 2;
            const int pos = lo + rng::uniform_below(engine, n_steps - lo);
            branching[pos] = profile.bottleneck;
            if (profile.mid_count > 0) {
                std::vector<int> open;
                for (int j = 0; j < n_steps; ++j) {
                    if (j != pos) open.push_back(j);
                }
                const int mids = std::min<int>(profile.mid_count,
                                               static_cast<int>(open.size()));
                for (int i = 0; i < mids; ++i) {
                    const int pick =
                        rng::uniform_below(engine, static_cast<int>(open.size()));
                    branching[open[pick]] = profile.mid;
                    open.erase(open.begin() + pick);
                }
            }
        }

        corpus::Problem problem;
        char id[32];
        std::snprintf(id, sizeof(id), "synthetic-%04d", p);
        problem.id = id;

        corpus::SyntheticSpec spec;
        std::string answer;
        std::string options;
        for (int j = 0; j < n_steps; ++j) {
            const int correct = rng::uniform_below(engine, branching[j]);
            spec.steps.push_back({branching[j], correct});
            if (j > 0) {
                answer += ',';
                options += ',';
            }
            answer += std::to_string(correct);
            options += std::to_string(branching[j]);

            corpus::PieceRecord piece;
            piece.position = j;
            piece.text = corpus::synthetic_piece_text(j, correct);
            problem.pieces.push_back(std::move(piece));
        }
        problem.statement = "Choose the correct option at each of " +
                            std::to_string(n_steps) + " steps (options per step: " +
                            options + "). Reply with \"answer: \" followed by the " +
                            "comma-separated choices.";
        problem.answer = answer;
        problem.env_spec = std::move(spec);
        problem.validate();
        problems.push_back(std::move(problem));
    }
    return problems;
}

bool EnvPolicyHandle::attempt(const corpus::Problem& problem, std::mt19937_64& engine) {
    if (!problem.env_spec) {
        throw ValidationError("attempt: problem '" + problem.id + "' has no env_spec");
    }
    const auto& steps = problem.env_spec->steps;
    for (std::size_t j = 0; j < steps.size(); ++j) {
        const int choice = policy_.sample_choice(problem.id, static_cast<int>(j), engine);
        if (choice != steps[j].correct_choice) return false;
    }
    return true;
}

} // namespace piecehint::simenv

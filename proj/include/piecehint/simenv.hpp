#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "piecehint/corpus.hpp"
#include "piecehint/curriculum.hpp"
#include "piecehint/selection.hpp"

namespace piecehint::simenv {

// Tabular softmax policy over synthetic problems: one logit per
// (problem, step, choice), sampled at a fixed temperature. Parameters live
// in a single flat vector so optimizers and finite-difference checks can
// treat the policy as a plain parameter vector.
class Policy {
public:
    Policy(std::span<const corpus::Problem> problems, double temperature = 1.0);

    double temperature() const { return temperature_; }
    std::size_t flat_size() const { return params_.size(); }

    std::vector<double> flatten() const { return params_; }
    void load_flat(std::span<const double> params);
    std::span<double> mutable_params() { return params_; }
    std::span<const double> params() const { return params_; }

    bool has_problem(const std::string& problem_id) const;
    int step_count(const std::string& problem_id) const;
    int branching(const std::string& problem_id, int step) const;
    std::size_t flat_index(const std::string& problem_id, int step, int choice) const;

    double log_prob(const std::string& problem_id, int step, int choice) const;
    std::vector<double> step_probs(const std::string& problem_id, int step) const;
    int sample_choice(const std::string& problem_id, int step,
                      std::mt19937_64& engine) const;

private:
    struct Table {
        std::size_t offset = 0;
        std::vector<int> branching; // per step
    };
    const Table& table(const std::string& problem_id) const;

    double temperature_;
    std::map<std::string, Table> tables_;
    std::vector<double> params_;
};

// One solution attempt. Hinted steps are prompt content, not policy actions:
// their choices are forced and carry no log-probability; only sampled steps
// contribute tokens to the loss.
struct Trajectory {
    std::vector<int> choices;          // emitted choice at every step
    std::vector<int> sampled_steps;    // steps the policy actually sampled
    std::vector<double> old_log_probs; // rollout-time log-prob per sampled step
};

// Renders the trajectory's textual completion, e.g. "answer: 0,3,1".
std::string render_completion(const Trajectory& trajectory);

// Samples a trajectory for the augmented prompt. A step counts as hinted
// when its ground-truth piece text appears verbatim among the prompt's
// hints; hinted steps emit the correct choice deterministically.
Trajectory sample_trajectory(const Policy& policy,
                             const curriculum::AugmentedPrompt& prompt,
                             const corpus::Problem& problem,
                             std::mt19937_64& engine);

// Exact success probability: the product over unhinted steps of the softmax
// probability of the correct choice. Hinting a step removes its factor, so
// adding hints can only raise the result.
double success_probability(const Policy& policy, const std::set<int>& hinted_steps,
                           const corpus::Problem& problem);

struct BranchingProfile {
    enum class Kind { uniform, bottleneck };
    Kind kind = Kind::bottleneck;
    int base = 2;        // branching of regular steps
    int bottleneck = 32; // branching of the single bottleneck step
    int mid = 0;         // optional middle tier branching (0 = none)
    int mid_count = 0;   // number of middle tier steps
};

BranchingProfile::Kind profile_kind_from_string(std::string_view text);

// Deterministic synthetic corpus. The bottleneck profile places its
// highest-branching step uniformly in the second half of the solution, so
// prefix-based hinting frequently misses it.
std::vector<corpus::Problem> generate_corpus(int n_problems,
                                             std::pair<int, int> step_count_range,
                                             const BranchingProfile& profile,
                                             std::uint64_t seed);

// Hint-free attempts against the synthetic environment, for success-count
// estimation.
class EnvPolicyHandle : public selection::PolicyHandle {
public:
    explicit EnvPolicyHandle(const Policy& policy) : policy_(policy) {}
    bool attempt(const corpus::Problem& problem, std::mt19937_64& engine) override;

private:
    const Policy& policy_;
};

} // namespace piecehint::simenv

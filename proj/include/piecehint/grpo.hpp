#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "piecehint/corpus.hpp"
#include "piecehint/curriculum.hpp"
#include "piecehint/simenv.hpp"

namespace piecehint::grpo {

struct GrpoParams {
    double epsilon = 0.2;        // surrogate clip ratio
    int group_size = 16;         // rollouts per prompt
    double learning_rate = 1e-6;
    double grad_clip_norm = 1.0;
    double std_floor = 1e-8;     // guard for tiny-but-positive reward std

    void validate() const;
};

// The G rollouts drawn for one augmented prompt, with binary rewards and
// group-normalized advantages (one advantage per trajectory, shared by all
// of its tokens).
struct RolloutGroup {
    curriculum::AugmentedPrompt prompt;
    std::vector<simenv::Trajectory> trajectories;
    std::vector<int> rewards;
    std::vector<double> advantages;
};

// Pulls the final answer out of a completion: everything after the first
// "answer:" marker, trimmed. No marker means the output is malformed.
std::optional<std::string> extract_answer(std::string_view completion);

// Binary outcome reward: 1 iff the completion is well formed and its
// extracted answer matches the canonical answer exactly.
int reward_completion(const corpus::Problem& problem, std::string_view completion);
int reward(const corpus::Problem& problem, const simenv::Trajectory& trajectory);

// Group-normalized advantages A_i = (R_i - mean) / std using the population
// standard deviation. A zero-variance group carries no learning signal and
// yields exactly zero advantages; std_floor only guards the division when
// the deviation is positive but smaller than the floor.
std::vector<double> compute_advantages(std::span<const int> rewards, double std_floor);

// Clipped surrogate objective, token-normalized over the group:
//   (1 / sum_i |o_i|) * sum_i sum_t min(r_it * A_i, clip(r_it, 1-eps, 1+eps) * A_i)
// with r_it the ratio of current to rollout-time token probability. There is
// no KL term. A group with no sampled tokens contributes zero.
double surrogate_loss(const RolloutGroup& group, const simenv::Policy& policy,
                      double epsilon);

// Exact gradient of surrogate_loss with respect to the policy's flat
// parameter vector. Where the clipped branch is active the contribution is
// zero (the clip is saturated and constant); on the boundary the unclipped
// branch is taken.
std::vector<double> loss_gradient(const RolloutGroup& group,
                                  const simenv::Policy& policy, double epsilon);
void accumulate_loss_gradient(const RolloutGroup& group, const simenv::Policy& policy,
                              double epsilon, double weight, std::span<double> out);

double l2_norm(std::span<const double> values);

// Plain clipped gradient ascent: params += lr * clip_by_norm(gradient).
// Aborts on non-finite gradient entries.
void update_step(std::span<double> params, std::span<const double> gradient,
                 const GrpoParams& config);

} // namespace piecehint::grpo

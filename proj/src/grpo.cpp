#include "piecehint/grpo.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "piecehint/errors.hpp"

namespace piecehint::grpo {

void GrpoParams::validate() const {
    if (epsilon <= 0.0) throw ValidationError("grpo: epsilon must be > 0");
    if (group_size < 2) throw ValidationError("grpo: group_size must be >= 2");
    if (std_floor <= 0.0) throw ValidationError("grpo: std_floor must be > 0");
    if (learning_rate < 0.0) throw ValidationError("grpo: learning_rate must be >= 0");
    if (grad_clip_norm <= 0.0) throw ValidationError("grpo: grad_clip_norm must be > 0");
}

std::optional<std::string> extract_answer(std::string_view completion) {
    constexpr std::string_view marker = "answer:";
    const std::size_t at = completion.find(marker);
    if (at == std::string_view::npos) return std::nullopt;
    std::string_view rest = completion.substr(at + marker.size());
    while (!rest.empty() && std::isspace(static_cast<unsigned char>(rest.front()))) {
        rest.remove_prefix(1);
    }
    while (!rest.empty() && std::isspace(static_cast<unsigned char>(rest.back()))) {
        rest.remove_suffix(1);
    }
    return std::string(rest);
}

int reward_completion(const corpus::Problem& problem, std::string_view completion) {
    const auto answer = extract_answer(completion);
    if (!answer) return 0; // malformed output earns nothing
    return *answer == problem.answer ? 1 : 0;
}

int reward(const corpus::Problem& problem, const simenv::Trajectory& trajectory) {
    return reward_completion(problem, simenv::render_completion(trajectory));
}

std::vector<double> compute_advantages(std::span<const int> rewards, double std_floor) {
    if (rewards.size() < 2) {
        throw ValidationError("compute_advantages: group size must be >= 2");
    }
    if (std_floor <= 0.0) throw ValidationError("compute_advantages: std_floor must be > 0");

    double mean = 0.0;
    for (int r : rewards) {
        if (r != 0 && r != 1) {
            throw ValidationError("compute_advantages: rewards must be binary");
        }
        mean += static_cast<double>(r);
    }
    mean /= static_cast<double>(rewards.size());

    double variance = 0.0;
    for (int r : rewards) {
        const double d = static_cast<double>(r) - mean;
        variance += d * d;
    }
    variance /= static_cast<double>(rewards.size());
    const double sigma = std::sqrt(variance);

    std::vector<double> advantages(rewards.size(), 0.0);
    if (sigma == 0.0) return advantages; // zero-variance group: no signal
    const double denom = std::max(sigma, std_floor);
    for (std::size_t i = 0; i < rewards.size(); ++i) {
        advantages[i] = (static_cast<double>(rewards[i]) - mean) / denom;
    }
    return advantages;
}

namespace {

std::size_t validate_group(const RolloutGroup& group) {
    if (group.trajectories.size() != group.rewards.size() ||
        group.trajectories.size() != group.advantages.size()) {
        throw ValidationError("rollout group: trajectories, rewards and advantages "
                              "must have equal length");
    }
    if (group.trajectories.size() < 2) {
        throw ValidationError("rollout group: need at least 2 trajectories");
    }
    std::size_t tokens = 0;
    for (const auto& trajectory : group.trajectories) {
        if (trajectory.sampled_steps.size() != trajectory.old_log_probs.size()) {
            throw ValidationError("rollout group: trajectory token/log-prob mismatch");
        }
        tokens += trajectory.sampled_steps.size();
    }
    return tokens;
}

} // namespace

double surrogate_loss(const RolloutGroup& group, const simenv::Policy& policy,
                      double epsilon) {
    const std::size_t total_tokens = validate_group(group);
    if (total_tokens == 0) return 0.0;

    const std::string& id = group.prompt.problem_id;
    double sum = 0.0;
    for (std::size_t i = 0; i < group.trajectories.size(); ++i) {
        const auto& trajectory = group.trajectories[i];
        const double advantage = group.advantages[i];
        for (std::size_t t = 0; t < trajectory.sampled_steps.size(); ++t) {
            const int step = trajectory.sampled_steps[t];
            const int choice = trajectory.choices[step];
            const double ratio =
                std::exp(policy.log_prob(id, step, choice) - trajectory.old_log_probs[t]);
            const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
            sum += std::min(ratio * advantage, clipped * advantage);
        }
    }
    return sum / static_cast<double>(total_tokens);
}

void accumulate_loss_gradient(const RolloutGroup& group, const simenv::Policy& policy,
                              double epsilon, double weight, std::span<double> out) {
    if (out.size() != policy.flat_size()) {
        throw ValidationError("accumulate_loss_gradient: output size mismatch");
    }
    const std::size_t total_tokens = validate_group(group);
    if (total_tokens == 0) return;

    const std::string& id = group.prompt.problem_id;
    const double temperature = policy.temperature();
    const double scale = weight / static_cast<double>(total_tokens);

    for (std::size_t i = 0; i < group.trajectories.size(); ++i) {
        const auto& trajectory = group.trajectories[i];
        const double advantage = group.advantages[i];
        if (advantage == 0.0) continue;
        for (std::size_t t = 0; t < trajectory.sampled_steps.size(); ++t) {
            const int step = trajectory.sampled_steps[t];
            const int choice = trajectory.choices[step];
            const double ratio =
                std::exp(policy.log_prob(id, step, choice) - trajectory.old_log_probs[t]);
            const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
            // gradient flows only through the unclipped branch; clipped and
            // selected means the term is constant in theta
            if (ratio * advantage > clipped * advantage) continue;

            const double coef = scale * advantage * ratio / temperature;
            const std::vector<double> probs = policy.step_probs(id, step);
            const std::size_t base = policy.flat_index(id, step, 0);
            for (std::size_t k = 0; k < probs.size(); ++k) {
                const double indicator = (static_cast<int>(k) == choice) ? 1.0 : 0.0;
                out[base + k] += coef * (indicator - probs[k]);
            }
        }
    }
}

std::vector<double> loss_gradient(const RolloutGroup& group,
                                  const simenv::Policy& policy, double epsilon) {
    std::vector<double> gradient(policy.flat_size(), 0.0);
    accumulate_loss_gradient(group, policy, epsilon, 1.0, gradient);
    return gradient;
}

double l2_norm(std::span<const double> values) {
    double sum = 0.0;
    for (double v : values) sum += v * v;
    return std::sqrt(sum);
}

void update_step(std::span<double> params, std::span<const double> gradient,
                 const GrpoParams& config) {
    config.validate();
    if (params.size() != gradient.size()) {
        throw ValidationError("update_step: parameter/gradient size mismatch");
    }
    for (std::size_t i = 0; i < gradient.size(); ++i) {
        if (!std::isfinite(gradient[i])) {
            throw ValidationError("update_step: non-finite gradient at index " +
                                  std::to_string(i));
        }
    }
    const double norm = l2_norm(gradient);
    const double scale = norm > config.grad_clip_norm ? config.grad_clip_norm / norm : 1.0;
    const double step = config.learning_rate * scale;
    for (std::size_t i = 0; i < params.size(); ++i) {
        params[i] += step * gradient[i];
    }
}

} // namespace piecehint::grpo

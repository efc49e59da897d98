#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "piecehint/corpus.hpp"

namespace piecehint::selection {

// Which policy produced a success count: the weak selection model or the
// training model's initial checkpoint.
enum class ModelTag { weak, train };

std::string to_string(ModelTag tag);
ModelTag model_tag_from_string(std::string_view text);

struct SelectionParams {
    int m = 16;          // attempts per problem
    double alpha1 = 0.2; // hard filter: keep c_weak <= alpha1 * m
    double alpha2 = 0.1; // capability band lower bound
    double alpha3 = 0.4; // capability band upper bound

    void validate() const;
};

struct SuccessCount {
    std::string problem_id;
    int count = 0;
    ModelTag model_tag = ModelTag::weak;
};

// One hint-free solution attempt. Implementations draw every random decision
// from the supplied engine so attempts are reproducible in isolation.
class PolicyHandle {
public:
    virtual ~PolicyHandle() = default;
    virtual bool attempt(const corpus::Problem& problem, std::mt19937_64& engine) = 0;
};

// Fixed per-attempt success probability; used for tests and as a stand-in
// weak model.
class StubPolicy : public PolicyHandle {
public:
    explicit StubPolicy(double success_prob) : success_prob_(success_prob) {}
    bool attempt(const corpus::Problem& problem, std::mt19937_64& engine) override;

private:
    double success_prob_;
};

// Samples m hint-free attempts and counts successes. Attempt i draws from
// the stream (seed, problem_id, i), so the count is independent of
// evaluation order and parallel scheduling.
SuccessCount estimate_success(const corpus::Problem& problem, PolicyHandle& policy,
                              int m, std::uint64_t seed, ModelTag tag);

// Hard-problem filter: { q : c_weak(q) <= alpha1 * m }. The comparison uses
// the exact real product, never a rounded integer threshold.
std::set<std::string> filter_hard(std::span<const SuccessCount> weak_counts,
                                  const SelectionParams& params);

// Capability filter over the hard set:
// { q in hard_ids : alpha2 * m <= c_train(q) <= alpha3 * m }, inclusive.
std::set<std::string> filter_capability(std::span<const SuccessCount> train_counts,
                                        const std::set<std::string>& hard_ids,
                                        const SelectionParams& params);

void save_counts(std::span<const SuccessCount> counts,
                 const std::filesystem::path& path);
std::vector<SuccessCount> load_counts(const std::filesystem::path& path);

} // namespace piecehint::selection

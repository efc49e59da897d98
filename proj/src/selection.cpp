#include "piecehint/selection.hpp"

#include <fstream>
#include <map>

#include "json.hpp"
#include "piecehint/errors.hpp"
#include "piecehint/rng.hpp"

namespace piecehint::selection {

std::string to_string(ModelTag tag) {
    return tag == ModelTag::weak ? "weak" : "train";
}

ModelTag model_tag_from_string(std::string_view text) {
    if (text == "weak") return ModelTag::weak;
    if (text == "train") return ModelTag::train;
    throw ValidationError("unknown model tag '" + std::string(text) + "'");
}

void SelectionParams::validate() const {
    if (m < 1) throw ValidationError("selection: m must be >= 1");
    for (double a : {alpha1, alpha2, alpha3}) {
        if (a < 0.0 || a > 1.0) {
            throw ValidationError("selection: alpha thresholds must lie in [0,1]");
        }
    }
    if (alpha2 > alpha3) throw ValidationError("selection: alpha2 must be <= alpha3");
}

bool StubPolicy::attempt(const corpus::Problem&, std::mt19937_64& engine) {
    return rng::bernoulli(engine, success_prob_);
}

SuccessCount estimate_success(const corpus::Problem& problem, PolicyHandle& policy,
                              int m, std::uint64_t seed, ModelTag tag) {
    if (m < 1) throw ValidationError("estimate_success: m must be >= 1");
    SuccessCount result;
    result.problem_id = problem.id;
    result.model_tag = tag;
    for (int i = 0; i < m; ++i) {
        auto engine = rng::make_engine(seed, problem.id, static_cast<std::uint64_t>(i));
        try {
            if (policy.attempt(problem, engine)) ++result.count;
        } catch (const std::exception& e) {
            throw ValidationError("policy evaluation failed on problem '" + problem.id +
                                  "': " + e.what());
        }
    }
    return result;
}

std::set<std::string> filter_hard(std::span<const SuccessCount> weak_counts,
                                  const SelectionParams& params) {
    params.validate();
    std::set<std::string> kept;
    const double threshold = params.alpha1 * static_cast<double>(params.m);
    for (const auto& count : weak_counts) {
        if (count.model_tag != ModelTag::weak) {
            throw ValidationError("filter_hard: count for '" + count.problem_id +
                                  "' does not come from the weak model");
        }
        if (count.count < 0 || count.count > params.m) {
            throw ValidationError("filter_hard: count out of range for '" +
                                  count.problem_id + "'");
        }
        if (static_cast<double>(count.count) <= threshold) kept.insert(count.problem_id);
    }
    return kept;
}

std::set<std::string> filter_capability(std::span<const SuccessCount> train_counts,
                                        const std::set<std::string>& hard_ids,
                                        const SelectionParams& params) {
    params.validate();
    std::map<std::string, int> by_id;
    for (const auto& count : train_counts) {
        if (count.model_tag != ModelTag::train) {
            throw ValidationError("filter_capability: count for '" + count.problem_id +
                                  "' does not come from the training model");
        }
        by_id[count.problem_id] = count.count;
    }

    std::set<std::string> kept;
    const double lo = params.alpha2 * static_cast<double>(params.m);
    const double hi = params.alpha3 * static_cast<double>(params.m);
    for (const auto& id : hard_ids) {
        auto it = by_id.find(id);
        if (it == by_id.end()) {
            throw ValidationError("filter_capability: no training count for '" + id + "'");
        }
        const double c = static_cast<double>(it->second);
        if (lo <= c && c <= hi) kept.insert(id);
    }
    return kept;
}

void save_counts(std::span<const SuccessCount> counts,
                 const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write counts file: " + path.string());
    for (const auto& count : counts) {
        nlohmann::json record = {{"problem_id", count.problem_id},
                                 {"count", count.count},
                                 {"model_tag", to_string(count.model_tag)}};
        out << record.dump() << '\n';
    }
}

std::vector<SuccessCount> load_counts(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open counts file: " + path.string());
    std::vector<SuccessCount> counts;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        try {
            nlohmann::json record = nlohmann::json::parse(line);
            SuccessCount count;
            count.problem_id = record.at("problem_id").get<std::string>();
            count.count = record.at("count").get<int>();
            count.model_tag = model_tag_from_string(record.at("model_tag").get<std::string>());
            counts.push_back(std::move(count));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string() + ":" + std::to_string(line_number) + ": " +
                             e.what());
        }
    }
    return counts;
}

} // namespace piecehint::selection

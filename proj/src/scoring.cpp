#include "piecehint/scoring.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>

#include "json.hpp"
#include "piecehint/errors.hpp"

namespace piecehint::scoring {

ValueBounds compute_value_bounds(std::span<const int> raw_scores) {
    if (raw_scores.empty()) throw ValidationError("compute_value_bounds: empty scores");
    auto [lo, hi] = std::minmax_element(raw_scores.begin(), raw_scores.end());
    return {*lo, *hi};
}

std::vector<double> normalize_values(std::span<const int> raw_scores) {
    if (raw_scores.empty()) throw ValidationError("normalize_values: empty scores");
    ValueBounds bounds = compute_value_bounds(raw_scores);
    std::vector<double> normalized(raw_scores.size());
    if (bounds.v_min == bounds.v_max) {
        std::fill(normalized.begin(), normalized.end(), 0.5);
        return normalized;
    }
    const double span = static_cast<double>(bounds.v_max - bounds.v_min);
    for (std::size_t i = 0; i < raw_scores.size(); ++i) {
        normalized[i] = static_cast<double>(raw_scores[i] - bounds.v_min) / span;
    }
    return normalized;
}

std::vector<int> score_pieces(const corpus::Problem& problem, Scorer& scorer) {
    if (problem.pieces.empty()) {
        throw ValidationError("score_pieces: problem '" + problem.id + "' has no pieces");
    }
    std::vector<int> scores;
    scores.reserve(problem.pieces.size());
    for (const auto& piece : problem.pieces) {
        int value = scorer.score(problem, piece);
        if (value < 1 || value > 5) {
            throw ScoringError("scorer '" + std::string(scorer.kind()) +
                                   "' returned out-of-range score " +
                                   std::to_string(value) + " for piece " +
                                   std::to_string(piece.position),
                               piece.position, /*retryable=*/false);
        }
        scores.push_back(value);
    }
    return scores;
}

void apply_scores(corpus::Problem& problem, Scorer& scorer) {
    std::vector<int> raw = score_pieces(problem, scorer);
    std::vector<double> normalized = normalize_values(raw);
    for (std::size_t i = 0; i < problem.pieces.size(); ++i) {
        problem.pieces[i].raw_value = raw[i];
        problem.pieces[i].norm_value = normalized[i];
    }
}

// --------------------------- heuristic scorer ------------------------------

namespace {

bool contains_word(const std::string& text, std::string_view word) {
    auto lower = text;
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return lower.find(word) != std::string::npos;
}

bool has_derivation_marker(const std::string& text) {
    if (contains_word(text, "therefore") || contains_word(text, "implies") ||
        contains_word(text, "thus") || contains_word(text, "hence")) {
        return true;
    }
    return std::count(text.begin(), text.end(), '=') >= 2;
}

} // namespace

int HeuristicScorer::score(const corpus::Problem& problem,
                           const corpus::PieceRecord& piece) {
    const std::size_t n = problem.pieces.size();
    double relative_rank = 1.0;
    if (n > 1) {
        // rank pieces by (length, position); rank 0 = shortest
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0u);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const auto& pa = problem.pieces[a];
            const auto& pb = problem.pieces[b];
            if (pa.text.size() != pb.text.size()) return pa.text.size() < pb.text.size();
            return pa.position < pb.position;
        });
        std::size_t rank = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (problem.pieces[order[i]].position == piece.position) {
                rank = i;
                break;
            }
        }
        relative_rank = static_cast<double>(rank) / static_cast<double>(n - 1);
    }
    const double bonus = has_derivation_marker(piece.text) ? 1.25 : 1.0;
    const long value = 1 + std::lround(4.0 * relative_rank * bonus);
    return static_cast<int>(std::clamp(value, 1l, 5l));
}

// ----------------------------- oracle scorer -------------------------------

int OracleScorer::score(const corpus::Problem& problem,
                        const corpus::PieceRecord& piece) {
    if (!problem.env_spec) {
        throw ValidationError("oracle scorer requires env_spec on problem '" +
                              problem.id + "'");
    }
    const auto& steps = problem.env_spec->steps;
    if (piece.position < 0 || piece.position >= static_cast<int>(steps.size())) {
        throw ValidationError("oracle scorer: piece position out of range for '" +
                              problem.id + "'");
    }
    std::set<int> distinct;
    for (const auto& step : steps) distinct.insert(step.branching_factor);
    if (distinct.size() == 1) return 3;

    // dense rank from the top: largest branching -> 5, next -> 4, ...,
    // everything five or more ranks down -> 1
    const int branching = steps[piece.position].branching_factor;
    int above = 0;
    for (auto it = distinct.rbegin(); it != distinct.rend(); ++it) {
        if (*it == branching) break;
        ++above;
    }
    return std::max(1, 5 - above);
}

// ------------------------- external service scorer -------------------------

std::string score_request_to_json(const ScoreRequest& request) {
    nlohmann::json record = {{"problem_statement", request.problem_statement},
                             {"piece_text", request.piece_text},
                             {"rubric_version", request.rubric_version}};
    return record.dump();
}

ScoreRequest score_request_from_json(const std::string& payload) {
    nlohmann::json record = nlohmann::json::parse(payload);
    ScoreRequest request;
    request.problem_statement = record.at("problem_statement").get<std::string>();
    request.piece_text = record.at("piece_text").get<std::string>();
    request.rubric_version = record.at("rubric_version").get<std::string>();
    return request;
}

std::string render_scoring_prompt(std::string_view problem_statement,
                                  std::string_view piece_text) {
    std::string prompt;
    prompt += "Rate the importance of this reasoning step on a scale of 1-5.\n\n";
    prompt += "Consider three criteria (prioritize Impact):\n";
    prompt += "- Novelty: Is this insight non-trivial or creative?\n";
    prompt += "- Difficulty: Does it require mathematical maturity?\n";
    prompt += "- Impact: Do subsequent steps critically depend on it?\n\n";
    prompt += "Scoring guidelines:\n";
    prompt += "- 1 = Trivial (e.g., restating the answer)\n";
    prompt += "- 2 = Routine (standard manipulations)\n";
    prompt += "- 3 = Moderate (requires reasoning, not critical)\n";
    prompt += "- 4 = Important (valuable insight)\n";
    prompt += "- 5 = Critical bottleneck (blocks solution if missing)\n\n";
    prompt += "Problem: ";
    prompt += problem_statement;
    prompt += "\n\nReasoning step: ";
    prompt += piece_text;
    prompt += "\n\nOutput: A single integer from 1 to 5\n";
    return prompt;
}

std::string LoopbackChannel::exchange(const std::string& request_json) {
    return handler_(score_request_from_json(request_json));
}

int parse_score_reply(const std::string& reply) {
    // structured response first
    auto parsed = nlohmann::json::parse(reply, nullptr, /*allow_exceptions=*/false);
    if (parsed.is_object() && parsed.contains("score") &&
        parsed["score"].is_number_integer()) {
        return parsed["score"].get<int>();
    }
    // otherwise take the first integer in the text
    for (std::size_t i = 0; i < reply.size(); ++i) {
        if (std::isdigit(static_cast<unsigned char>(reply[i]))) {
            std::size_t j = i;
            while (j < reply.size() && std::isdigit(static_cast<unsigned char>(reply[j]))) {
                ++j;
            }
            return std::stoi(reply.substr(i, j - i));
        }
    }
    return -1;
}

int ExternalServiceScorer::score(const corpus::Problem& problem,
                                 const corpus::PieceRecord& piece) {
    ScoreRequest request;
    request.problem_statement = problem.statement;
    request.piece_text = piece.text;
    const std::string payload = score_request_to_json(request);

    std::string last_error;
    for (int attempt = 0; attempt <= max_retries_; ++attempt) {
        std::string reply;
        try {
            reply = channel_.exchange(payload);
        } catch (const std::exception& e) {
            last_error = e.what();
            continue;
        }
        int value = parse_score_reply(reply);
        if (value >= 1 && value <= 5) return value;
        last_error = value < 0 ? "no integer score in reply"
                               : "score " + std::to_string(value) + " outside [1,5]";
    }
    throw ScoringError("scoring service failed for piece " +
                           std::to_string(piece.position) + " of '" + problem.id +
                           "': " + last_error,
                       piece.position, /*retryable=*/true);
}

} // namespace piecehint::scoring

#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "piecehint/corpus.hpp"

namespace piecehint::scoring {

// Raw score range within one problem.
struct ValueBounds {
    int v_min = 1;
    int v_max = 5;
};

ValueBounds compute_value_bounds(std::span<const int> raw_scores);

// Per-problem min-max normalization of raw 1-5 scores into [0,1].
// Degenerate all-equal inputs map to 0.5 for every piece, keeping values in
// range and letting downstream tie-breaks take over.
std::vector<double> normalize_values(std::span<const int> raw_scores);

// A scorer assigns each piece a discrete importance score in {1..5}.
class Scorer {
public:
    virtual ~Scorer() = default;
    virtual int score(const corpus::Problem& problem,
                      const corpus::PieceRecord& piece) = 0;
    virtual std::string_view kind() const = 0;
};

// Scores every piece of a problem. Any score outside {1..5} is a protocol
// violation and throws ScoringError with the piece index.
std::vector<int> score_pieces(const corpus::Problem& problem, Scorer& scorer);

// Runs the scorer and normalization, writing raw_value/norm_value in place.
void apply_scores(corpus::Problem& problem, Scorer& scorer);

// Deterministic zero-dependency fallback:
//   score = clamp(1 + round(4 * relative_length_rank * keyword_bonus), 1, 5)
// where longer pieces rank higher and pieces containing derivation markers
// ("therefore", "implies", "thus", "hence", or two or more '=') get a 1.25x
// bonus. It stands in for an LLM rubric; it does not approximate one.
class HeuristicScorer : public Scorer {
public:
    int score(const corpus::Problem& problem, const corpus::PieceRecord& piece) override;
    std::string_view kind() const override { return "heuristic"; }
};

// Ground-truth scorer for synthetic problems: branching factors are
// dense-ranked and mapped onto {1..5} from the top down, so the unique
// largest-branching step always receives a strictly higher score than every
// other step. All-equal branching maps to 3 everywhere.
class OracleScorer : public Scorer {
public:
    int score(const corpus::Problem& problem, const corpus::PieceRecord& piece) override;
    std::string_view kind() const override { return "oracle"; }
};

// ---------------------------------------------------------------------------
// External scoring service protocol.
//
// Request record:  {"problem_statement", "piece_text", "rubric_version"}
// Response record: {"score": <integer 1-5>}  (free-text replies containing an
// integer are also accepted; the first integer found is used)
// ---------------------------------------------------------------------------

constexpr std::string_view kRubricVersion = "rubric-v1";

struct ScoreRequest {
    std::string problem_statement;
    std::string piece_text;
    std::string rubric_version = std::string(kRubricVersion);
};

std::string score_request_to_json(const ScoreRequest& request);
ScoreRequest score_request_from_json(const std::string& payload);

// The instruction text a service-backed scorer submits for one piece, with
// the problem statement and piece text substituted in.
std::string render_scoring_prompt(std::string_view problem_statement,
                                  std::string_view piece_text);

// Transport abstraction: one request payload in, one reply out. Throws on
// transport failure.
class ScoringChannel {
public:
    virtual ~ScoringChannel() = default;
    virtual std::string exchange(const std::string& request_json) = 0;
};

// In-process channel for tests and offline runs: a handler maps the parsed
// request record to a reply string.
class LoopbackChannel : public ScoringChannel {
public:
    using Handler = std::function<std::string(const ScoreRequest&)>;
    explicit LoopbackChannel(Handler handler) : handler_(std::move(handler)) {}
    std::string exchange(const std::string& request_json) override;

private:
    Handler handler_;
};

// Scorer backed by a remote service through a pluggable channel. Replies
// that fail to parse or fall outside {1..5} are protocol errors, retried up
// to max_retries times before a retryable ScoringError is raised with the
// failing piece index.
class ExternalServiceScorer : public Scorer {
public:
    explicit ExternalServiceScorer(ScoringChannel& channel, int max_retries = 3)
        : channel_(channel), max_retries_(max_retries) {}

    int score(const corpus::Problem& problem, const corpus::PieceRecord& piece) override;
    std::string_view kind() const override { return "external-service"; }

private:
    ScoringChannel& channel_;
    int max_retries_;
};

// Parses a service reply: JSON {"score": n} first, otherwise the first
// integer in the text. Returns -1 when no integer is present.
int parse_score_reply(const std::string& reply);

} // namespace piecehint::scoring

#pragma once

#include <stdexcept>
#include <string>

namespace piecehint {

// Malformed input data (bad JSON line, unreadable record).
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Well-formed input violating a contract (duplicate id, count out of range).
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Scoring backend failure. Carries the piece index so callers can retry
// or report the exact piece that failed.
struct ScoringError : std::runtime_error {
    ScoringError(const std::string& message, int piece_index_, bool retryable_)
        : std::runtime_error(message), piece_index(piece_index_), retryable(retryable_) {}

    int piece_index = -1;
    bool retryable = false;
};

} // namespace piecehint

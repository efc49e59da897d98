#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace piecehint::corpus {

// One decision point of a synthetic reasoning task: the solver picks one of
// branching_factor options and only correct_choice continues the solution.
struct SyntheticStep {
    int branching_factor = 2;
    int correct_choice = 0;
};

struct SyntheticSpec {
    std::vector<SyntheticStep> steps;
};

// A single reasoning piece of a ground-truth solution. raw_value is the
// discrete 1-5 importance score; norm_value is its per-problem min-max
// normalization, absent until normalization has run.
struct PieceRecord {
    int position = 0;
    std::string text;
    int raw_value = 3; // neutral prior until a scorer runs
    std::optional<double> norm_value;
};

struct Problem {
    std::string id;
    std::string statement;
    std::string answer;
    std::vector<PieceRecord> pieces;
    std::optional<SyntheticSpec> env_spec;

    void validate() const;
};

// Frozen preprocessing output for one training problem: scored pieces,
// success counts from both reference models, the initial hint budget and
// the initial hint set (piece positions).
struct RegistryEntry {
    std::string problem_id;
    std::vector<PieceRecord> pieces;
    int c_weak = 0;
    int c_train = 0;
    int k0 = 0;
    std::vector<int> initial_hints;

    void validate(int m) const;
};

constexpr int kRegistrySchemaVersion = 1;

struct RegistryFile {
    int schema_version = kRegistrySchemaVersion;
    int m = 16;
    std::string params_hash;
    std::vector<RegistryEntry> entries;
};

// Line-delimited problem files. Throws ParseError with the offending line
// number, ValidationError on duplicate ids.
std::vector<Problem> load_corpus(const std::filesystem::path& path);
void save_corpus(std::span<const Problem> problems, const std::filesystem::path& path);

// Splits a solution text into ordered pieces on a literal delimiter.
// Empty segments are dropped; zero resulting pieces is an error.
std::vector<PieceRecord> split_solution(std::string_view solution_text,
                                        std::string_view delimiter);

// Registry persistence: a header line carrying {schema_version, m,
// params_hash} followed by one entry per line. Round-trips all fields
// including norm_value at full precision.
void save_registry(const RegistryFile& registry, const std::filesystem::path& path);
RegistryFile load_registry(const std::filesystem::path& path);

nlohmann::json problem_to_json(const Problem& problem);
Problem problem_from_json(const nlohmann::json& record);
nlohmann::json entry_to_json(const RegistryEntry& entry);
RegistryEntry entry_from_json(const nlohmann::json& record);

// Canonical piece text for one synthetic step, e.g. "step 2 -> choice 1".
std::string synthetic_piece_text(int step, int choice);

} // namespace piecehint::corpus

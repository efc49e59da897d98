#include "piecehint/corpus.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "piecehint/errors.hpp"

namespace piecehint::corpus {

namespace {

const nlohmann::json& require_field(const nlohmann::json& record, const char* key) {
    auto it = record.find(key);
    if (it == record.end()) {
        throw ParseError(std::string("missing field '") + key + "'");
    }
    return *it;
}

nlohmann::json spec_to_json(const SyntheticSpec& spec) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& step : spec.steps) {
        steps.push_back({{"branching_factor", step.branching_factor},
                         {"correct_choice", step.correct_choice}});
    }
    return {{"steps", steps}};
}

SyntheticSpec spec_from_json(const nlohmann::json& record) {
    SyntheticSpec spec;
    for (const auto& step : require_field(record, "steps")) {
        spec.steps.push_back({step.at("branching_factor").get<int>(),
                              step.at("correct_choice").get<int>()});
    }
    return spec;
}

} // namespace

void Problem::validate() const {
    if (id.empty()) throw ValidationError("problem with empty id");
    if (pieces.empty()) throw ValidationError("problem '" + id + "' has no pieces");
    for (std::size_t i = 0; i < pieces.size(); ++i) {
        if (pieces[i].position != static_cast<int>(i)) {
            throw ValidationError("problem '" + id + "': piece positions must be 0.." +
                                  std::to_string(pieces.size() - 1) + " in order");
        }
        if (pieces[i].raw_value < 1 || pieces[i].raw_value > 5) {
            throw ValidationError("problem '" + id + "': raw_value outside [1,5]");
        }
        if (pieces[i].norm_value &&
            (*pieces[i].norm_value < 0.0 || *pieces[i].norm_value > 1.0)) {
            throw ValidationError("problem '" + id + "': norm_value outside [0,1]");
        }
    }
    if (env_spec) {
        if (env_spec->steps.size() != pieces.size()) {
            throw ValidationError("problem '" + id + "': piece count must equal step count");
        }
        for (const auto& step : env_spec->steps) {
            if (step.branching_factor < 2) {
                throw ValidationError("problem '" + id + "': branching_factor must be >= 2");
            }
            if (step.correct_choice < 0 || step.correct_choice >= step.branching_factor) {
                throw ValidationError("problem '" + id + "': correct_choice out of range");
            }
        }
    }
}

void RegistryEntry::validate(int m) const {
    if (problem_id.empty()) throw ValidationError("registry entry with empty problem_id");
    if (pieces.empty()) {
        throw ValidationError("registry entry '" + problem_id + "' has no pieces");
    }
    if (c_weak < 0 || c_weak > m || c_train < 0 || c_train > m) {
        throw ValidationError("registry entry '" + problem_id +
                              "': success counts must lie in [0, m]");
    }
    if (k0 != static_cast<int>(initial_hints.size())) {
        throw ValidationError("registry entry '" + problem_id +
                              "': |initial_hints| must equal k0");
    }
    std::set<int> seen;
    for (int pos : initial_hints) {
        if (pos < 0 || pos >= static_cast<int>(pieces.size())) {
            throw ValidationError("registry entry '" + problem_id +
                                  "': hint position out of range");
        }
        if (!seen.insert(pos).second) {
            throw ValidationError("registry entry '" + problem_id +
                                  "': duplicate hint position");
        }
    }
}

nlohmann::json problem_to_json(const Problem& problem) {
    nlohmann::json pieces = nlohmann::json::array();
    for (const auto& piece : problem.pieces) {
        nlohmann::json p = {{"position", piece.position},
                            {"text", piece.text},
                            {"raw_value", piece.raw_value}};
        if (piece.norm_value) p["norm_value"] = *piece.norm_value;
        pieces.push_back(std::move(p));
    }
    nlohmann::json record = {{"id", problem.id},
                             {"statement", problem.statement},
                             {"answer", problem.answer},
                             {"pieces", pieces}};
    if (problem.env_spec) record["env_spec"] = spec_to_json(*problem.env_spec);
    return record;
}

Problem problem_from_json(const nlohmann::json& record) {
    Problem problem;
    problem.id = require_field(record, "id").get<std::string>();
    problem.statement = require_field(record, "statement").get<std::string>();
    problem.answer = require_field(record, "answer").get<std::string>();
    for (const auto& p : require_field(record, "pieces")) {
        PieceRecord piece;
        piece.position = require_field(p, "position").get<int>();
        piece.text = require_field(p, "text").get<std::string>();
        if (p.contains("raw_value")) piece.raw_value = p["raw_value"].get<int>();
        if (p.contains("norm_value")) piece.norm_value = p["norm_value"].get<double>();
        problem.pieces.push_back(std::move(piece));
    }
    if (record.contains("env_spec")) problem.env_spec = spec_from_json(record["env_spec"]);
    return problem;
}

nlohmann::json entry_to_json(const RegistryEntry& entry) {
    nlohmann::json pieces = nlohmann::json::array();
    for (const auto& piece : entry.pieces) {
        nlohmann::json p = {{"position", piece.position},
                            {"text", piece.text},
                            {"raw_value", piece.raw_value}};
        if (piece.norm_value) p["norm_value"] = *piece.norm_value;
        pieces.push_back(std::move(p));
    }
    return {{"problem_id", entry.problem_id}, {"pieces", pieces},
            {"c_weak", entry.c_weak},         {"c_train", entry.c_train},
            {"k0", entry.k0},                 {"initial_hints", entry.initial_hints}};
}

RegistryEntry entry_from_json(const nlohmann::json& record) {
    RegistryEntry entry;
    entry.problem_id = require_field(record, "problem_id").get<std::string>();
    for (const auto& p : require_field(record, "pieces")) {
        PieceRecord piece;
        piece.position = require_field(p, "position").get<int>();
        piece.text = require_field(p, "text").get<std::string>();
        if (p.contains("raw_value")) piece.raw_value = p["raw_value"].get<int>();
        if (p.contains("norm_value")) piece.norm_value = p["norm_value"].get<double>();
        entry.pieces.push_back(std::move(piece));
    }
    entry.c_weak = require_field(record, "c_weak").get<int>();
    entry.c_train = require_field(record, "c_train").get<int>();
    entry.k0 = require_field(record, "k0").get<int>();
    entry.initial_hints =
        require_field(record, "initial_hints").get<std::vector<int>>();
    return entry;
}

std::vector<Problem> load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open corpus file: " + path.string());

    std::vector<Problem> problems;
    std::set<std::string> ids;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        Problem problem;
        try {
            problem = problem_from_json(nlohmann::json::parse(line));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string() + ":" + std::to_string(line_number) + ": " +
                             e.what());
        } catch (const ParseError& e) {
            throw ParseError(path.string() + ":" + std::to_string(line_number) + ": " +
                             e.what());
        }
        problem.validate();
        if (!ids.insert(problem.id).second) {
            throw ValidationError(path.string() + ":" + std::to_string(line_number) +
                                  ": duplicate problem id '" + problem.id + "'");
        }
        problems.push_back(std::move(problem));
    }
    return problems;
}

void save_corpus(std::span<const Problem> problems, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write corpus file: " + path.string());
    for (const auto& problem : problems) {
        out << problem_to_json(problem).dump() << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

std::string synthetic_piece_text(int step, int choice) {
    return "step " + std::to_string(step) + " -> choice " + std::to_string(choice);
}

std::vector<PieceRecord> split_solution(std::string_view solution_text,
                                        std::string_view delimiter) {
    if (delimiter.empty()) throw ValidationError("split_solution: empty delimiter");

    std::vector<PieceRecord> pieces;
    std::size_t start = 0;
    auto emit = [&](std::string_view segment) {
        if (segment.empty()) return; // tolerate doubled delimiters
        PieceRecord piece;
        piece.position = static_cast<int>(pieces.size());
        piece.text = std::string(segment);
        pieces.push_back(std::move(piece));
    };
    while (start <= solution_text.size()) {
        std::size_t pos = solution_text.find(delimiter, start);
        if (pos == std::string_view::npos) {
            emit(solution_text.substr(start));
            break;
        }
        emit(solution_text.substr(start, pos - start));
        start = pos + delimiter.size();
    }
    if (pieces.empty()) {
        throw ValidationError("split_solution: solution yields zero pieces");
    }
    return pieces;
}

void save_registry(const RegistryFile& registry, const std::filesystem::path& path) {
    for (const auto& entry : registry.entries) entry.validate(registry.m);

    std::ofstream out(path);
    if (!out) throw IoError("cannot write registry file: " + path.string());
    nlohmann::json header = {{"schema_version", registry.schema_version},
                             {"m", registry.m},
                             {"params_hash", registry.params_hash}};
    out << header.dump() << '\n';
    for (const auto& entry : registry.entries) {
        out << entry_to_json(entry).dump() << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

RegistryFile load_registry(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open registry file: " + path.string());

    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError(path.string() + ": missing registry header");
    }
    RegistryFile registry;
    try {
        nlohmann::json header = nlohmann::json::parse(line);
        registry.schema_version = require_field(header, "schema_version").get<int>();
        registry.m = require_field(header, "m").get<int>();
        registry.params_hash = require_field(header, "params_hash").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ":1: " + e.what());
    }
    if (registry.schema_version != kRegistrySchemaVersion) {
        throw ValidationError(path.string() + ": unsupported registry schema version " +
                              std::to_string(registry.schema_version) + " (expected " +
                              std::to_string(kRegistrySchemaVersion) + ")");
    }

    std::size_t line_number = 1;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        try {
            registry.entries.push_back(entry_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string() + ":" + std::to_string(line_number) + ": " +
                             e.what());
        } catch (const ParseError& e) {
            throw ParseError(path.string() + ":" + std::to_string(line_number) + ": " +
                             e.what());
        }
        registry.entries.back().validate(registry.m);
    }
    return registry;
}

} // namespace piecehint::corpus

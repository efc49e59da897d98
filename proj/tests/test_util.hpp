#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

namespace testutil {

// Self-cleaning scratch directory for file-based tests.
struct TempDir {
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("piecehint-test-" + std::to_string(::getpid()) + "-" +
                std::to_string(counter++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::filesystem::path file(const std::string& name) const { return path / name; }

    std::filesystem::path path;
    static inline int counter = 0;
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
}

} // namespace testutil

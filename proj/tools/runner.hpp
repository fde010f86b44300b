#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"

namespace qfragile::cli {

inline constexpr const char* kVersion = "0.1.0";

struct RunOptions {
    std::filesystem::path out_dir = ".";
    std::optional<int> threads;
    std::optional<std::uint64_t> seed;
};

struct Table {
    std::string header;
    std::vector<std::vector<std::string>> rows;
};

struct RunOutput {
    Table table;
    Json metadata = Json::object();
};

struct RunResult {
    std::filesystem::path csv;
    std::filesystem::path manifest;
    std::size_t rows = 0;
};

// Formats with 17 significant digits.
std::string format_number(double v);

// Computes the experiment without touching the filesystem. The config must already be valid.
RunOutput compute_experiment(const Json& config, int threads, std::uint64_t seed);

// Validates, computes, then writes <output> and <stem>.manifest.json under out_dir.
// Throws ConfigError with the violation list when the config is invalid.
RunResult run_experiment(const Json& config, const RunOptions& options);

}  // namespace qfragile::cli

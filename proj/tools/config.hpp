#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace qfragile::cli {

using Json = nlohmann::ordered_json;

// Unreadable file or malformed JSON.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline const std::vector<std::string> kExperimentKinds = {
    "sweep-cfi",    "discontinuities", "jensen",     "local-noise-jensen", "sphere-scan",
    "mle-bias",     "bosonic-sweep",   "qubit-demo", "echo-demo",          "hpa-scaling"};

Json load_config(const std::filesystem::path& path);

// Every schema violation as "<field path>: <message>"; empty when the config is valid.
std::vector<std::string> validate_config(const Json& config);

// Largest spin the dense routines accept.
inline constexpr double kMaxSpin = 64.0;
inline constexpr int kMaxLocalQubits = 10;

}  // namespace qfragile::cli

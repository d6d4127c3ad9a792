#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "impctl/model.hpp"

namespace impctl {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Numerics {
    int depth = 10;
    double tol = 1e-12;
    std::optional<int> budget;
};

/// A full problem as read from a JSON config file:
///
///   {"process": {"x0", "T", "sigma", "drift"|null},
///    "impulse": {"U", "psi": {"<value>": cost}, "c", "gamma", "h"},
///    "control": {"V", "f"} | null,
///    "numerics": {"depth", "tol", "budget"|null}}
struct Problem {
    ProcessModel process;
    ImpulseModel impulse;
    std::optional<ControlGrid> control;
    Numerics numerics;
    nlohmann::json source;
};

Problem parse_config(const nlohmann::json& j);
Problem load_config(const std::filesystem::path& path);

/// FNV-1a 64 of the canonical dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& j);

}  // namespace impctl

#pragma once

#include "nb/experiments.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace nb {

/// Invalid configuration; `line` is 1-based, 0 when unknown.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& message, int line)
      : std::runtime_error(line > 0 ? "config line " + std::to_string(line) + ": " + message : "config: " + message),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct ExperimentRequest {
  std::string id;
  nlohmann::json overrides = nlohmann::json::object();
};

struct RunConfig {
  std::uint64_t seed = 20240611;
  PartitionVariant pou = PartitionVariant::standard;
  std::filesystem::path output = "nb_out";
  /// 0 selects the number of available cores.
  int jobs = 0;
  /// Empty selects the default suite (all experiments except negative controls).
  std::vector<ExperimentRequest> experiments;
  /// Replaces the "basis" parameter of every experiment that has one; keys
  /// come from the "domain" and "resolution" sections.
  std::optional<nlohmann::json> basis_override;

  /// Specs for every requested experiment, defaults merged with overrides.
  std::vector<ExperimentSpec> specs() const;
};

/// Output directory default: $NB_OUT, else "nb_out".
std::filesystem::path default_output_directory();

/// Parses and validates a JSON config. Throws ConfigError with the offending
/// line for syntax errors, unknown keys and invalid values.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// JSON Schema (draft 2020-12) describing the config format.
const std::string& config_schema();

}  // namespace nb

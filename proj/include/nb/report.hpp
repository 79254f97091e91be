#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nb {

enum class Verdict { pass, fail, inconclusive };

std::string to_string(Verdict verdict);
Verdict verdict_from_string(const std::string& name);

/// Least-squares line y = slope x + intercept; residual is the RMS misfit.
struct Fit {
  std::string name;
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;
  int count = 0;
};

Fit least_squares(std::span<const double> x, std::span<const double> y, std::string name = "");

/// One named tolerance test. `relation` documents the comparison, e.g. "<=".
struct Check {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  std::string relation;
  bool pass = false;
};

/// A table of measured points; written as CSV, and its first two columns as a
/// plot-ready two-column file.
struct PointTable {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add(std::vector<double> row);
};

struct EstimateReport {
  std::string id;
  nlohmann::json params = nlohmann::json::object();
  std::deque<PointTable> tables;
  std::optional<Fit> fit;
  std::vector<Fit> fits;
  std::vector<Check> checks;
  std::vector<std::string> notes;
  std::uint64_t seed = 0;
  double runtime_seconds = 0.0;
  /// Set when the data do not support a verdict (e.g. too few usable points).
  bool inconclusive = false;

  Check& check(std::string name, double value, std::string relation, double threshold);
  /// Records a boolean condition as a check with value 1/0.
  Check& require_true(std::string name, bool condition);
  void note(std::string text) { notes.push_back(std::move(text)); }
  PointTable& table(std::string name, std::vector<std::string> columns);
  const Check* find_check(const std::string& name) const;

  /// fail if any check fails, else inconclusive if flagged, else pass.
  Verdict verdict() const;
};

nlohmann::json to_json(const EstimateReport& report);

/// Writes <id>.json, <id>_<table>.csv and <id>_<table>.dat into `directory`.
void write_report(const EstimateReport& report, const std::filesystem::path& directory);

/// JSON numbers cannot hold inf/nan; those are written as strings.
nlohmann::json json_number(double value);

}  // namespace nb

#include "nb/report.hpp"
#include "nb/types.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

namespace nb {

std::string to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "unknown";
}

Verdict verdict_from_string(const std::string& name) {
  if (name == "pass") return Verdict::pass;
  if (name == "fail") return Verdict::fail;
  if (name == "inconclusive") return Verdict::inconclusive;
  throw std::invalid_argument("unknown verdict '" + name + "'");
}

Fit least_squares(std::span<const double> x, std::span<const double> y, std::string name) {
  require(x.size() == y.size(), "least_squares: size mismatch");
  Fit f;
  f.name = std::move(name);
  f.count = static_cast<int>(x.size());
  if (x.size() < 2) return f;
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  require(sxx > 0.0, "least_squares: abscissae are all equal");
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) ss += std::pow(y[i] - f.slope * x[i] - f.intercept, 2);
  f.residual = std::sqrt(ss / n);
  return f;
}

void PointTable::add(std::vector<double> row) {
  require(row.size() == columns.size(), "PointTable: row width does not match columns of " + name);
  rows.push_back(std::move(row));
}

Check& EstimateReport::check(std::string name, double value, std::string relation, double threshold) {
  bool ok = false;
  if (relation == "<=") ok = value <= threshold;
  else if (relation == "<") ok = value < threshold;
  else if (relation == ">=") ok = value >= threshold;
  else if (relation == ">") ok = value > threshold;
  else throw std::invalid_argument("unknown check relation '" + relation + "'");
  checks.push_back({std::move(name), value, threshold, std::move(relation), ok && !std::isnan(value)});
  return checks.back();
}

Check& EstimateReport::require_true(std::string name, bool condition) {
  checks.push_back({std::move(name), condition ? 1.0 : 0.0, 1.0, "==", condition});
  return checks.back();
}

PointTable& EstimateReport::table(std::string name, std::vector<std::string> columns) {
  tables.push_back({std::move(name), std::move(columns), {}});
  return tables.back();
}

const Check* EstimateReport::find_check(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

Verdict EstimateReport::verdict() const {
  for (const auto& c : checks)
    if (!c.pass) return Verdict::fail;
  if (inconclusive || checks.empty()) return Verdict::inconclusive;
  return Verdict::pass;
}

nlohmann::json json_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  return value;
}

namespace {

nlohmann::json fit_json(const Fit& f) {
  return {{"name", f.name},
          {"slope", json_number(f.slope)},
          {"intercept", json_number(f.intercept)},
          {"residual", json_number(f.residual)},
          {"count", f.count}};
}

}  // namespace

nlohmann::json to_json(const EstimateReport& r) {
  nlohmann::json j;
  j["id"] = r.id;
  j["params"] = r.params;
  nlohmann::json points = nlohmann::json::array();
  if (!r.tables.empty()) {
    const PointTable& t = r.tables.front();
    for (const auto& row : t.rows) {
      nlohmann::json p;
      for (std::size_t c = 0; c < t.columns.size(); ++c) p[t.columns[c]] = json_number(row[c]);
      points.push_back(p);
    }
  }
  j["points"] = points;
  j["fit"] = r.fit ? fit_json(*r.fit) : nlohmann::json(nullptr);
  j["fits"] = nlohmann::json::array();
  for (const auto& f : r.fits) j["fits"].push_back(fit_json(f));
  j["checks"] = nlohmann::json::array();
  for (const auto& c : r.checks)
    j["checks"].push_back({{"name", c.name},
                           {"value", json_number(c.value)},
                           {"relation", c.relation},
                           {"threshold", json_number(c.threshold)},
                           {"pass", c.pass}});
  j["tables"] = nlohmann::json::array();
  for (const auto& t : r.tables) j["tables"].push_back({{"name", t.name}, {"columns", t.columns}, {"rows", t.rows.size()}});
  j["notes"] = r.notes;
  j["verdict"] = to_string(r.verdict());
  j["seed"] = r.seed;
  j["runtime_seconds"] = r.runtime_seconds;
  return j;
}

void write_report(const EstimateReport& r, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  {
    std::ofstream out(directory / (r.id + ".json"));
    require(out.good(), "cannot write report into " + directory.string());
    out << to_json(r).dump(2) << '\n';
  }
  for (const auto& t : r.tables) {
    std::ofstream csv(directory / (r.id + "_" + t.name + ".csv"));
    for (std::size_t c = 0; c < t.columns.size(); ++c) csv << (c ? "," : "") << t.columns[c];
    csv << '\n' << std::setprecision(17);
    for (const auto& row : t.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) csv << (c ? "," : "") << row[c];
      csv << '\n';
    }
    if (t.columns.size() < 2) continue;
    std::ofstream plot(directory / (r.id + "_" + t.name + ".dat"));
    plot << "# " << t.columns[0] << ' ' << t.columns[1] << '\n' << std::setprecision(17);
    for (const auto& row : t.rows) plot << row[0] << ' ' << row[1] << '\n';
  }
}

}  // namespace nb

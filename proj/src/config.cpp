#include "nb/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace nb {

namespace {

int line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

// Line of the first `"key"` token at or after `from`; 0 if absent.
int line_of_key(const std::string& text, const std::string& key, std::size_t from = 0) {
  const std::size_t at = text.find('"' + key + '"', from);
  return at == std::string::npos ? 0 : line_of_offset(text, at);
}

class Validator {
 public:
  explicit Validator(const std::string& text) : text_(text) {}

  [[noreturn]] void fail(const std::string& message, const std::string& key) const {
    throw ConfigError(message, line_of_key(text_, key));
  }

  void only_keys(const nlohmann::json& object, const std::set<std::string>& allowed, const std::string& where,
                 const std::string& anchor) const {
    if (!object.is_object()) fail(where + " must be an object", anchor);
    for (const auto& [key, value] : object.items())
      if (!allowed.count(key)) fail("unknown key '" + key + "' in " + where, key);
  }

 private:
  const std::string& text_;
};

const std::set<std::string> kTopKeys = {"seed", "pou", "output", "jobs", "experiments", "domain", "resolution"};
const std::set<std::string> kDomainKeys = {"shape", "L", "Lx", "Ly", "h"};
const std::set<std::string> kResolutionKeys = {"N", "Nx", "Ny", "K"};
const std::set<std::string> kExperimentKeys = {"id", "params"};

}  // namespace

std::filesystem::path default_output_directory() {
  const char* env = std::getenv("NB_OUT");
  return env && *env ? std::filesystem::path(env) : std::filesystem::path("nb_out");
}

RunConfig parse_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what(), line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0));
  }
  const Validator v(text);
  v.only_keys(j, kTopKeys, "the top level", "");

  RunConfig c;
  c.output = default_output_directory();
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) v.fail("seed must be a nonnegative integer", "seed");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("pou")) {
    const auto& p = j["pou"];
    if (!p.is_string() || (p != "standard" && p != "perturbed"))
      v.fail("pou must be \"standard\" or \"perturbed\"", "pou");
    c.pou = partition_variant_from_string(p.get<std::string>());
  }
  if (j.contains("output")) {
    if (!j["output"].is_string() || j["output"].get<std::string>().empty())
      v.fail("output must be a nonempty string", "output");
    c.output = j["output"].get<std::string>();
  }
  if (j.contains("jobs")) {
    if (!j["jobs"].is_number_integer() || j["jobs"].get<int>() < 0) v.fail("jobs must be an integer >= 0", "jobs");
    c.jobs = j["jobs"].get<int>();
  }
  if (j.contains("experiments")) {
    const auto& list = j["experiments"];
    if (!list.is_array()) v.fail("experiments must be an array", "experiments");
    std::size_t cursor = text.find("\"experiments\"");
    for (const auto& item : list) {
      ExperimentRequest req;
      if (item.is_string()) {
        req.id = item.get<std::string>();
      } else {
        v.only_keys(item, kExperimentKeys, "an experiment entry", "experiments");
        if (!item.contains("id") || !item["id"].is_string()) v.fail("experiment entry needs a string id", "experiments");
        req.id = item["id"].get<std::string>();
        if (item.contains("params")) req.overrides = item["params"];
      }
      const std::size_t at = text.find('"' + req.id + '"', cursor);
      const int line = at == std::string::npos ? line_of_key(text, "experiments") : line_of_offset(text, at);
      if (at != std::string::npos) cursor = at + 1;
      if (!find_experiment(req.id)) throw ConfigError("unknown experiment '" + req.id + "'", line);
      try {
        make_spec(req.id, req.overrides);
      } catch (const std::exception& e) {
        std::string key;
        if (req.overrides.is_object())
          for (const auto& [k, value] : req.overrides.items())
            if (std::string(e.what()).find('\'' + k + '\'') != std::string::npos) key = k;
        const int key_line = key.empty() ? 0 : line_of_key(text, key, at == std::string::npos ? 0 : at);
        throw ConfigError(e.what(), key_line ? key_line : line);
      }
      c.experiments.push_back(std::move(req));
    }
  }
  if (j.contains("domain") || j.contains("resolution")) {
    nlohmann::json basis = nlohmann::json::object();
    if (j.contains("domain")) {
      v.only_keys(j["domain"], kDomainKeys, "domain", "domain");
      basis.update(j["domain"]);
    }
    if (j.contains("resolution")) {
      v.only_keys(j["resolution"], kResolutionKeys, "resolution", "resolution");
      basis.update(j["resolution"]);
    }
    try {
      BasisSpec::from_json(basis);
    } catch (const std::exception& e) {
      throw ConfigError(e.what(), line_of_key(text, j.contains("domain") ? "domain" : "resolution"));
    }
    c.basis_override = basis;
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string(), 0);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::vector<ExperimentSpec> RunConfig::specs() const {
  std::vector<ExperimentRequest> requests = experiments;
  if (requests.empty())
    for (const auto& info : experiment_registry())
      if (!info.negative_control) requests.push_back({info.id, nlohmann::json::object()});
  std::vector<ExperimentSpec> out;
  for (const auto& req : requests) {
    nlohmann::json overrides = req.overrides;
    const ExperimentInfo* info = find_experiment(req.id);
    if (basis_override && info && info->defaults.contains("basis") && !overrides.contains("basis")) {
      nlohmann::json basis = info->defaults["basis"];
      // A new shape starts from a clean spec so stale keys do not leak across.
      if (basis_override->contains("shape") && (*basis_override)["shape"] != basis["shape"])
        basis = nlohmann::json::object();
      basis.update(*basis_override);
      overrides["basis"] = basis;
    }
    ExperimentSpec spec = make_spec(req.id, overrides);
    spec.seed = seed;
    spec.variant = pou;
    out.push_back(std::move(spec));
  }
  return out;
}

const std::string& config_schema() {
  static const std::string schema = R"({
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "title": "nb run configuration",
  "type": "object",
  "additionalProperties": false,
  "properties": {
    "seed": {"type": "integer", "minimum": 0},
    "pou": {"enum": ["standard", "perturbed"]},
    "output": {"type": "string", "minLength": 1},
    "jobs": {"type": "integer", "minimum": 0},
    "experiments": {
      "type": "array",
      "items": {
        "oneOf": [
          {"type": "string"},
          {
            "type": "object",
            "additionalProperties": false,
            "required": ["id"],
            "properties": {"id": {"type": "string"}, "params": {"type": "object"}}
          }
        ]
      }
    },
    "domain": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "shape": {"enum": ["interval", "rectangle", "lshape"]},
        "L": {"type": "number", "exclusiveMinimum": 0},
        "Lx": {"type": "number", "exclusiveMinimum": 0},
        "Ly": {"type": "number", "exclusiveMinimum": 0},
        "h": {"type": "number", "exclusiveMinimum": 0}
      }
    },
    "resolution": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "N": {"type": "integer", "minimum": 2},
        "Nx": {"type": "integer", "minimum": 2},
        "Ny": {"type": "integer", "minimum": 2},
        "K": {"type": "integer"}
      }
    }
  }
}
)";
  return schema;
}

}  // namespace nb

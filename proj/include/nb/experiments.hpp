#pragma once

#include "nb/norms.hpp"
#include "nb/report.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace nb {

/// Serializable recipe for a basis. K <= 0 selects every resolved mode
/// (analytic shapes only).
struct BasisSpec {
  std::string shape = "interval";  // interval | rectangle | lshape
  double L = 3.141592653589793;
  double Lx = 3.141592653589793;
  double Ly = 3.141592653589793;
  Index N = 512;
  Index Nx = 32;
  Index Ny = 32;
  double h = 1.0 / 32.0;
  Index K = 64;

  EigenBasis build() const;
  /// Twice the resolution: N (or Nx, Ny) doubled, h halved, K doubled within
  /// the resolved band.
  BasisSpec refined() const;
  nlohmann::json to_json() const;
  /// Keys not listed above are rejected.
  static BasisSpec from_json(const nlohmann::json& j);
};

/// Largest K an analytic basis of this spec can hold.
Index max_resolved_modes(const BasisSpec& spec);

struct ExperimentSpec {
  std::string id;
  std::uint64_t seed = 20240611;
  PartitionVariant variant = PartitionVariant::standard;
  /// Experiment parameters; defaults come from the registry and overrides are
  /// validated against them.
  nlohmann::json params = nlohmann::json::object();
};

using ExperimentFn = std::function<EstimateReport(const ExperimentSpec&)>;

struct ExperimentInfo {
  std::string id;
  std::string summary;
  ExperimentFn run;
  nlohmann::json defaults;
  /// Deliberately violated setups; excluded from the default suite and
  /// expected to fail.
  bool negative_control = false;
};

const std::vector<ExperimentInfo>& experiment_registry();
const ExperimentInfo* find_experiment(const std::string& id);

/// Spec with the registry defaults; `overrides` keys must exist in the defaults.
ExperimentSpec make_spec(const std::string& id, const nlohmann::json& overrides = nlohmann::json::object());

/// Runs one experiment, filling id, seed, params and runtime. Exceptions turn
/// into a failed check carrying the message.
EstimateReport run_experiment(const ExperimentSpec& spec);

EstimateReport exp_partition(const ExperimentSpec& spec);
EstimateReport exp_reconstruction(const ExperimentSpec& spec);
EstimateReport exp_heat_l2(const ExperimentSpec& spec);
EstimateReport exp_multiplier_scaling(const ExperimentSpec& spec);
EstimateReport exp_low_freq_decay(const ExperimentSpec& spec);
EstimateReport exp_heat_gaussian(const ExperimentSpec& spec);
EstimateReport exp_gradient(const ExperimentSpec& spec);
EstimateReport exp_embeddings(const ExperimentSpec& spec);
EstimateReport exp_duality(const ExperimentSpec& spec);
EstimateReport exp_leibniz(const ExperimentSpec& spec);
EstimateReport exp_partition_independence(const ExperimentSpec& spec);
EstimateReport exp_amalgam(const ExperimentSpec& spec);
EstimateReport exp_resolvent_gamma(const ExperimentSpec& spec);
EstimateReport exp_moment_decay(const ExperimentSpec& spec);

EstimateReport neg_broken_partition(const ExperimentSpec& spec);
EstimateReport neg_fake_gap(const ExperimentSpec& spec);
EstimateReport neg_reversed_inequality(const ExperimentSpec& spec);

}  // namespace nb

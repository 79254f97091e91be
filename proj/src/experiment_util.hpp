#pragma once

// Helpers shared by the experiment translation units.

#include "nb/experiments.hpp"

#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace nb::detail {

inline double param_double(const ExperimentSpec& s, const std::string& key) {
  const auto& v = s.params.at(key);
  if (v.is_string()) {
    const std::string text = v.get<std::string>();
    if (text == "inf") return kInf;
    return std::stod(text);
  }
  return v.get<double>();
}

inline int param_int(const ExperimentSpec& s, const std::string& key) { return s.params.at(key).get<int>(); }

inline BasisSpec param_basis(const ExperimentSpec& s, const std::string& key) {
  return BasisSpec::from_json(s.params.at(key));
}

inline std::vector<double> param_list(const ExperimentSpec& s, const std::string& key) {
  std::vector<double> out;
  for (const auto& v : s.params.at(key)) {
    if (v.is_string()) out.push_back(v.get<std::string>() == "inf" ? kInf : std::stod(v.get<std::string>()));
    else out.push_back(v.get<double>());
  }
  return out;
}

/// Gaussian coefficients on the first `modes` modes, zero elsewhere.
inline Eigen::VectorXd random_coefficients(Index size, Index modes, std::mt19937_64& rng, bool mean_zero) {
  std::normal_distribution<double> gauss;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(size);
  for (Index k = 0; k < std::min(size, modes); ++k) c(k) = gauss(rng);
  if (mean_zero) c(0) = 0.0;
  return c;
}

/// Synthesizes coefficients given on a prefix of the modes.
inline Eigen::VectorXd from_coefficients(const EigenBasis& basis, const Eigen::VectorXd& c) {
  Eigen::VectorXd full = Eigen::VectorXd::Zero(basis.size());
  const Index n = std::min(basis.size(), c.size());
  full.head(n) = c.head(n);
  return synthesize(basis, full);
}

/// max / min of positive values (inf if some value is zero).
inline double variation(const std::vector<double>& values) {
  if (values.empty()) return 1.0;
  double lo = kInf, hi = 0.0;
  for (const double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return lo > 0.0 ? hi / lo : kInf;
}

/// Block j lies inside the retained spectrum: it is nonzero somewhere below
/// lambda_K and negligible (< 1e-12) beyond it.
inline bool block_usable(const PartitionOfUnity& pou, const EigenBasis& basis, int j) {
  const double top = std::sqrt(basis.eigenvalues()(basis.size() - 1));
  return std::ldexp(1.0, j) < top && pou.phi(j, top) < 1e-12;
}

inline std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

inline std::string exponent_name(double p) { return std::isinf(p) ? "inf" : fmt(p); }

}  // namespace nb::detail

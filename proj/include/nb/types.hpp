#pragma once

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace nb {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Samples of a function at the nodes of a Grid (real or complex).
template <typename Scalar>
using GridFunction = Vector<Scalar>;

/// Pointwise vector field on a Grid, one column per coordinate axis.
template <typename Scalar>
using VectorField = Matrix<Scalar>;

using Index = Eigen::Index;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Hoelder conjugate p' with 1/p + 1/p' = 1.
inline double conjugate_exponent(double p) {
  if (p == 1.0) return kInf;
  if (std::isinf(p)) return 1.0;
  return p / (p - 1.0);
}

/// 1/p, with 1/inf = 0.
inline double reciprocal_exponent(double p) { return std::isinf(p) ? 0.0 : 1.0 / p; }

inline void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

inline void require_exponent(double p, const char* name = "p") {
  require(p >= 1.0 && !std::isnan(p), std::string("exponent ") + name + " must lie in [1, inf]");
}

}  // namespace nb

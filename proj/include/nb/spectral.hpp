#pragma once

#include "nb/basis.hpp"
#include "nb/partition.hpp"

#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>

namespace nb {

/// Scalar map lambda -> phi(lambda) on [0, inf), evaluated on eigenvalues of H.
struct Symbol {
  std::function<double(double)> fn;
  std::string tag;
  /// Support in lambda, when compactly supported.
  std::optional<std::pair<double, double>> support;

  double operator()(double lambda) const { return fn(lambda); }

  static Symbol constant(double value);
  /// lambda^alpha (0 at lambda = 0 unless alpha == 0).
  static Symbol power(double alpha);
  /// e^{-t lambda}.
  static Symbol heat(double t);
  /// (theta lambda + M)^{-beta}.
  static Symbol resolvent(double beta, double shift, double theta = 1.0);
  /// lambda^alpha phi_j(sqrt lambda).
  static Symbol block(const PartitionOfUnity& pou, int j, double alpha = 0.0);
  /// psi(theta lambda).
  static Symbol low_pass(const PartitionOfUnity& pou, double theta = 1.0);
  /// chi(theta lambda): the smooth compactly supported cutoff behind the partition.
  static Symbol bump(const PartitionOfUnity& pou, double theta = 1.0);
  /// chi_{(0, inf)}(lambda) phi(lambda): composition with the projection P.
  static Symbol projected(Symbol inner);
};

Symbol operator*(const Symbol& a, const Symbol& b);

/// phi(lambda_k) for every retained mode; throws if any value is non-finite.
Eigen::VectorXd symbol_values(const Symbol& symbol, const EigenBasis& basis);

/// Coefficients c_k = sum_i w_i f_i e_k(x_i).
template <typename Derived>
Vector<typename Derived::Scalar> analyze(const EigenBasis& basis, const Eigen::MatrixBase<Derived>& f) {
  using Scalar = typename Derived::Scalar;
  require(f.cols() == 1 && f.rows() == basis.grid_size(), "analyze: function does not match basis grid");
  const auto& w = basis.grid().weights;
  if constexpr (std::is_same_v<Scalar, double>) {
    return basis.modes().transpose() * w.cwiseProduct(f.derived());
  } else {
    const Eigen::VectorXd re = f.derived().real().template cast<double>();
    const Eigen::VectorXd im = f.derived().imag().template cast<double>();
    Vector<Scalar> out(basis.size());
    out.real() = basis.modes().transpose() * w.cwiseProduct(re);
    out.imag() = basis.modes().transpose() * w.cwiseProduct(im);
    return out;
  }
}

/// Expansion sum_k c_k e_k on the grid.
template <typename Derived>
GridFunction<typename Derived::Scalar> synthesize(const EigenBasis& basis,
                                                  const Eigen::MatrixBase<Derived>& c) {
  using Scalar = typename Derived::Scalar;
  require(c.cols() == 1 && c.rows() == basis.size(), "synthesize: coefficient count does not match basis");
  if constexpr (std::is_same_v<Scalar, double>) {
    return basis.modes() * c.derived();
  } else {
    GridFunction<Scalar> out(basis.grid_size());
    out.real() = basis.modes() * c.derived().real().template cast<double>();
    out.imag() = basis.modes() * c.derived().imag().template cast<double>();
    return out;
  }
}

/// phi(H) f = sum_k phi(lambda_k) c_k e_k.
template <typename Derived>
GridFunction<typename Derived::Scalar> apply_multiplier(const Symbol& symbol,
                                                        const Eigen::MatrixBase<Derived>& f,
                                                        const EigenBasis& basis) {
  using Scalar = typename Derived::Scalar;
  const Eigen::VectorXd m = symbol_values(symbol, basis);
  const Vector<Scalar> c = analyze(basis, f);
  return synthesize(basis, Vector<Scalar>(c.cwiseProduct(m.template cast<Scalar>())));
}

/// e^{-tH} f, t > 0.
Eigen::VectorXd heat(double t, const Eigen::VectorXd& f, const EigenBasis& basis);

struct MeanDecomposition {
  double mean = 0.0;        // f_0 = mean * 1
  double zero_mode = 0.0;   // |f_0| as an L^2 quantity: |mean| |Omega|^{1/2}
  Eigen::VectorXd orthogonal;  // f_0^perp = f - f_0
};

MeanDecomposition decompose_mean(const Eigen::VectorXd& f, const Grid& grid);

/// P f with P = chi_{(0,inf)}(H): removes the zero mode (mean).
Eigen::VectorXd project_P(const Eigen::VectorXd& f, const Grid& grid);

struct GammaQuadrature {
  int nodes = 400;
  /// Lower limit; <= 0 selects it from the spectrum so the omitted head is
  /// below 1e-13 relative.
  double t_lower = 0.0;
  double tolerance = 1e-8;
};

struct ResolventResult {
  Eigen::VectorXd value;
  double error_estimate = 0.0;  // relative L^2 change against the half-resolution rule
  bool within_tolerance = false;
  double t_lower = 0.0, t_upper = 0.0;
};

/// (H + M)^{-beta} f = Gamma(beta)^{-1} int_0^inf t^{beta-1} e^{-Mt} e^{-tH} f dt,
/// trapezoidal in log t.
ResolventResult resolvent_gamma(double beta, double shift, const Eigen::VectorXd& f,
                                const EigenBasis& basis, const GammaQuadrature& quadrature = {});

/// Spatial gradient, N x dim. Analytic bases differentiate the cosine expansion
/// termwise; finite-difference bases use centered differences with one-sided
/// second-order stencils at boundary cells.
Eigen::MatrixXd gradient(const Eigen::VectorXd& f, const EigenBasis& basis);

/// Finite-difference derivative along one axis on a cell lattice.
Eigen::VectorXd lattice_derivative(const Grid& grid, const Eigen::VectorXd& f, int axis);

}  // namespace nb

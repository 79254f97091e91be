#pragma once

#include "nb/spectral.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace nb {

/// Dense integral kernel: (A f)(x_i) = sum_j w_j K(x_i, y_j) f(y_j).
struct OperatorKernel {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd row_weights;
  Eigen::VectorXd col_weights;
  std::string tag;
  std::uint64_t grid_id = 0;
  /// Bound on sup |K - K_truncated| from modes beyond the basis.
  double tail_bound = 0.0;
  /// Exact L^2 -> L^2 norm when known from the symbol (max_k |phi(lambda_k)|).
  std::optional<double> spectral_l2;

  Index rows() const { return matrix.rows(); }
  Index cols() const { return matrix.cols(); }
  Eigen::VectorXd apply(const Eigen::VectorXd& f) const { return matrix * col_weights.cwiseProduct(f); }
};

/// K = E diag(phi(lambda)) E^T.
OperatorKernel multiplier_kernel(const Symbol& symbol, const EigenBasis& basis);
OperatorKernel heat_kernel(double t, const EigenBasis& basis);
/// Kernel of the identity on the grid: diag(1 / w).
OperatorKernel identity_kernel(const Grid& grid);

/// Kernels of the components of grad phi(H), one per axis.
std::vector<OperatorKernel> gradient_kernels(const Symbol& symbol, const EigenBasis& basis);

struct EndpointNorms {
  double l1_l1 = 0.0;
  double l1_linf = 0.0;
  double linf_linf = 0.0;
  double l2_l2 = 0.0;
};

EndpointNorms endpoint_norms(const OperatorKernel& kernel);

double norm_l1_l1(const OperatorKernel& kernel);
double norm_l1_linf(const OperatorKernel& kernel);
double norm_linf_linf(const OperatorKernel& kernel);
/// Largest singular value of W_r^{1/2} K W_c^{1/2}.
double norm_l2_l2(const OperatorKernel& kernel);

struct NormBounds {
  double lower = 0.0;
  double upper = 0.0;
  bool exact = false;
};

/// ||A||_{L^p -> L^q}: exact at the endpoints (1,1), (1,inf), (inf,inf), (2,2);
/// otherwise a Riesz-Thorin upper bound from the endpoints and a lower bound
/// from seeded random probes.
NormBounds operator_norm(const OperatorKernel& kernel, const Grid& domain_grid, const Grid& range_grid, double p,
                         double q, std::uint64_t seed = 1, int probes = 64);

struct PowerIterationResult {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Largest singular value of a dense matrix by power iteration on M^T M.
PowerIterationResult largest_singular_value(const Eigen::MatrixXd& m, int max_iterations = 10000,
                                            double tolerance = 1e-12);

/// Sup-norm contribution of modes beyond the basis, sum_{k > K} |phi(lambda_k)|
/// sup|e_k|^2. Analytic bases use their exact spectrum; finite-difference
/// bases use 2^n |Omega|^{-1} with Weyl-law eigenvalues (an estimate).
/// Returns inf when the series does not visibly converge.
double kernel_tail_bound(const Symbol& symbol, const EigenBasis& basis);

/// Weyl-law estimate of lambda_k (k is 1-based).
double weyl_eigenvalue(const Domain& domain, Index k);

/// sup_x K(x, x) = sup_{x,y} |K(x, y)| for a symbol with phi(lambda_k) >= 0.
double psd_kernel_sup(const Symbol& symbol, const EigenBasis& basis);

/// sup |K| of a nonnegative multiplier on a rectangle built from two interval
/// bases, without forming the product basis. All product modes with
/// lambda <= cutoff are included.
double separable_kernel_sup(const Symbol& symbol, const EigenBasis& x_basis, const EigenBasis& y_basis,
                            double cutoff);

/// Norms of a vector-valued operator f -> (A_1 f, ..., A_d f) with the
/// Euclidean norm pointwise.
double vector_norm_l2_l2(const std::vector<OperatorKernel>& components);
/// L^inf -> L^inf norm: max_i sup_{|u|=1} sum_j w_j |u . G(x_i, y_j)|. In 2-D the
/// inner sup is taken over 256 directions (relative error below 2.5%).
double vector_norm_linf_linf(const std::vector<OperatorKernel>& components);

/// Binary kernel dump: magic, JSON header {tag, grid_id, rows, cols, tail_bound},
/// row weights, column weights, row-major matrix.
void save_kernel(const OperatorKernel& kernel, const std::filesystem::path& path);
OperatorKernel load_kernel(const std::filesystem::path& path);

}  // namespace nb

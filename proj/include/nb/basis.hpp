#pragma once

#include "nb/domain.hpp"

#include <filesystem>
#include <vector>

namespace nb {

/// Raw contents of an EigenBasis. Eigenfunction samples are stored column-wise:
/// modes(i, k) = e_k(x_i).
struct BasisData {
  Domain domain = Domain::interval(1.0);
  Grid grid;
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd modes;
  /// Exact partial derivatives of each mode, one N x K matrix per axis
  /// (analytic bases only).
  std::vector<Eigen::MatrixXd> gradient_modes;
  /// Cosine indices (a) or (a, b) per mode, K x dim (analytic bases only).
  Eigen::MatrixXi mode_indices;
  bool analytic = true;
  double lambda_max = 0.0;
};

/// Sorted Neumann eigenpairs sampled on a quadrature grid. Immutable; the
/// constructor checks the basis invariants and throws on violation.
class EigenBasis {
 public:
  explicit EigenBasis(BasisData data);

  const Domain& domain() const { return data_.domain; }
  const Grid& grid() const { return data_.grid; }
  const Eigen::VectorXd& eigenvalues() const { return data_.eigenvalues; }
  const Eigen::MatrixXd& modes() const { return data_.modes; }
  const std::vector<Eigen::MatrixXd>& gradient_modes() const { return data_.gradient_modes; }
  const Eigen::MatrixXi& mode_indices() const { return data_.mode_indices; }
  bool analytic() const { return data_.analytic; }
  double lambda_max() const { return data_.lambda_max; }
  int dim() const { return data_.grid.dim; }
  /// Number of retained modes K.
  Index size() const { return data_.eigenvalues.size(); }
  /// Number of grid nodes N.
  Index grid_size() const { return data_.grid.size(); }
  const BasisData& data() const { return data_; }

  /// max |<e_j, e_k> - delta_jk| over the retained modes.
  double gram_defect() const;

 private:
  BasisData data_;
};

/// Resolution cutoff (pi / (2 h))^2 of the coarsest axis.
double resolution_cutoff(const Grid& grid);

/// Neumann cosines on [0, L]: lambda_k = ((k-1) pi / L)^2.
EigenBasis build_interval_basis(double length, Index modes, Index nodes);

/// Tensor-product cosines on [0, Lx] x [0, Ly]; the K lowest modes, ties broken
/// lexicographically in (a, b).
EigenBasis build_rectangle_basis(double lx, double ly, Index modes, Index nx, Index ny);

/// Lowest K eigenpairs of the 5-point Neumann Laplacian (ghost-point
/// reflection) on a cell-centered mesh covering an axis-aligned polygon.
EigenBasis build_fd_basis(const Domain& polygon, double h, Index modes);

/// Copy of a basis with replaced eigenvalues (eigenfunctions unchanged). Used to
/// build synthetic spectra for negative controls.
EigenBasis with_eigenvalues(const EigenBasis& basis, const Eigen::VectorXd& eigenvalues);

/// Binary basis file: magic, JSON header, raw little-endian doubles.
void save_basis(const EigenBasis& basis, const std::filesystem::path& path);
EigenBasis load_basis(const std::filesystem::path& path);

}  // namespace nb

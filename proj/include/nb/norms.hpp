#pragma once

#include "nb/kernel.hpp"

#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace nb {

struct BesovParams {
  double s = 0.0;
  double p = 2.0;
  double q = 2.0;
  /// Defaults: j_min = -ceil(log2(1/h)) - 2, j_max = ceil(log2 sqrt(lambda_K)).
  std::optional<int> j_min;
  std::optional<int> j_max;
};

struct NormValue {
  double value = 0.0;
  /// Contribution of dyadic blocks below j_min (homogeneous norms), evaluated
  /// on the retained spectrum.
  double tail_bound = 0.0;
  /// False when the requested j-range misses part of f's spectral content.
  bool resolved = true;
  std::string note;
};

/// L^p norms of the dyadic pieces phi_j(sqrt H) f for j = j_lo..j_hi, plus
/// ||psi(H) f||_p.
struct BlockNorms {
  int j_lo = 0;
  int j_hi = -1;
  double p = 2.0;
  std::vector<double> blocks;
  double psi_norm = 0.0;
  double coverage_defect = 0.0;
  double inhom_defect = 0.0;

  double block(int j) const { return blocks.at(static_cast<std::size_t>(j - j_lo)); }
  /// || {2^{sj} b_j}_{j=from..to} ||_{l^q}.
  double lq(double s, double q, int from, int to) const;
};

/// The pieces phi_j(sqrt H) f (one column per j) and psi(H) f, so that norms
/// for several exponents can share one decomposition.
struct BlockPieces {
  int j_lo = 0;
  int j_hi = -1;
  Eigen::MatrixXd pieces;
  Eigen::VectorXd psi_piece;
  /// max over active modes with lambda_k > 0 of |1 - sum_{j_lo..j_hi} phi_j|.
  double coverage_defect = 0.0;
  /// max over active modes of |1 - psi(lambda_k) - sum_{1..j_hi} phi_j|.
  double inhom_defect = 0.0;

  BlockNorms norms(const Grid& grid, double p) const;
};

BlockPieces decompose_blocks(const Eigen::VectorXd& f, const PartitionOfUnity& pou, const EigenBasis& basis,
                             int j_lo, int j_hi);

BlockNorms block_norms(const Eigen::VectorXd& f, double p, const PartitionOfUnity& pou, const EigenBasis& basis,
                       int j_lo, int j_hi);

int default_j_max(const EigenBasis& basis);
int default_j_min(const EigenBasis& basis);
/// Lowest block that can be nonzero on e_2..e_K (2^{j+1} > sqrt lambda_2).
int lowest_active_block(const EigenBasis& basis);

/// ||psi(H) f||_p + || {2^{sj} ||phi_j(sqrt H) f||_p}_{j=1..j_max} ||_{l^q}.
NormValue besov_inhom(const Eigen::VectorXd& f, const BesovParams& params, const PartitionOfUnity& pou,
                      const EigenBasis& basis);

/// || {2^{sj} ||phi_j(sqrt H) f||_p}_{j=j_min..j_max} ||_{l^q}.
NormValue besov_hom(const Eigen::VectorXd& f, const BesovParams& params, const PartitionOfUnity& pou,
                    const EigenBasis& basis);

/// Besov values from precomputed blocks (blocks must cover 1..j_max, resp.
/// j_lo..j_max including the tail below j_min).
NormValue besov_inhom_from(const BlockNorms& blocks, double s, double q, int j_max);
NormValue besov_hom_from(const BlockNorms& blocks, double s, double q, int j_min, int j_max);

/// ||f||_1 + sup_{j >= 1} 2^{Mj} ||phi_j(sqrt H) f||_1.
NormValue seminorm_pM(const Eigen::VectorXd& f, int M, const PartitionOfUnity& pou, const EigenBasis& basis);

/// ||f||_1 + sup_{j in Z} 2^{M|j|} (|f_0| + ||phi_j(sqrt H) f||_1). A nonzero
/// zero-mode gives +inf with the note "not in Z".
NormValue seminorm_qM(const Eigen::VectorXd& f, int M, const PartitionOfUnity& pou, const EigenBasis& basis);

struct AmalgamParams {
  double p = 1.0;
  double q = 2.0;
  double theta = 1.0;
};

/// Cube C_theta(m) of side theta^{1/2} centered at theta^{1/2} m, intersected
/// with the grid. Node i belongs to the cube with m = round(x_i / theta^{1/2}).
struct CubeCell {
  Eigen::Vector2i m = Eigen::Vector2i::Zero();
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  std::vector<Index> nodes;
};

std::vector<CubeCell> cube_cells(const Grid& grid, double theta);

/// l^p over m of ||f||_{L^q(C_theta(m))}; empty cells skipped.
double amalgam_norm(const Grid& grid, const Eigen::VectorXd& f, const AmalgamParams& params);

struct TripleNormResult {
  double value = 0.0;
  bool converged = true;
  int max_iterations = 0;
  Index cells = 0;
};

/// sup_m || |x - theta^{1/2} m|^alpha A chi_{C_theta(m)} ||_{B(L^2)}, each
/// localized norm by power iteration (at most 10^4 steps).
TripleNormResult triple_norm(const OperatorKernel& kernel, const Grid& grid, double alpha, double theta);

struct NormRow {
  std::string id;
  std::string params;
  double value = 0.0;
  double tail_bound = 0.0;
};

void write_norm_csv_header(std::ostream& out);
void write_norm_csv_row(std::ostream& out, const NormRow& row);

}  // namespace nb

#include "nb/norms.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>

namespace nb {

double BlockNorms::lq(double s, double q, int from, int to) const {
  require_exponent(q, "q");
  from = std::max(from, j_lo);
  to = std::min(to, j_hi);
  if (from > to) return 0.0;
  Eigen::ArrayXd terms(to - from + 1);
  for (int j = from; j <= to; ++j) terms(j - from) = std::exp2(s * j) * block(j);
  const double top = terms.maxCoeff();
  if (std::isinf(q) || top == 0.0) return top;
  return top * std::pow((terms / top).pow(q).sum(), 1.0 / q);
}

BlockNorms BlockPieces::norms(const Grid& grid, double p) const {
  BlockNorms out;
  out.j_lo = j_lo;
  out.j_hi = j_hi;
  out.p = p;
  out.blocks.reserve(static_cast<std::size_t>(pieces.cols()));
  for (Index c = 0; c < pieces.cols(); ++c) out.blocks.push_back(lp_norm(grid, pieces.col(c), p));
  out.psi_norm = lp_norm(grid, psi_piece, p);
  out.coverage_defect = coverage_defect;
  out.inhom_defect = inhom_defect;
  return out;
}

BlockPieces decompose_blocks(const Eigen::VectorXd& f, const PartitionOfUnity& pou, const EigenBasis& basis,
                             int j_lo, int j_hi) {
  require(j_hi - j_lo <= 4000, "decompose_blocks: dyadic range too long");
  const Eigen::VectorXd c = analyze(basis, f);
  const Eigen::VectorXd& lambda = basis.eigenvalues();
  const Index k = basis.size();
  const double scale = c.cwiseAbs().maxCoeff();

  BlockPieces out;
  out.j_lo = j_lo;
  out.j_hi = j_hi;
  const int count = std::max(0, j_hi - j_lo + 1);
  Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(k, count);
  Eigen::VectorXd psi(k);
  for (Index i = 0; i < k; ++i) {
    const double root = std::sqrt(std::max(lambda(i), 0.0));
    psi(i) = pou.psi(lambda(i));
    double total = 0.0, high = 0.0;
    if (root > 0.0) {
      // Only blocks with 2^{j-1} < root < 2^{j+1} can be nonzero.
      const int top = PartitionOfUnity::top_block(root);
      for (int j = std::max(j_lo, top - 3); j <= std::min(j_hi, top + 1); ++j) {
        const double v = pou.phi(j, root);
        weights(i, j - j_lo) = v;
        total += v;
        if (j >= 1) high += v;
      }
    }
    if (std::abs(c(i)) <= 1e-14 * scale) continue;
    if (lambda(i) > 0.0) out.coverage_defect = std::max(out.coverage_defect, std::abs(1.0 - total));
    out.inhom_defect = std::max(out.inhom_defect, std::abs(1.0 - psi(i) - high));
  }
  out.pieces = basis.modes() * (weights.array().colwise() * c.array()).matrix();
  out.psi_piece = basis.modes() * psi.cwiseProduct(c);
  return out;
}

BlockNorms block_norms(const Eigen::VectorXd& f, double p, const PartitionOfUnity& pou, const EigenBasis& basis,
                       int j_lo, int j_hi) {
  return decompose_blocks(f, pou, basis, j_lo, j_hi).norms(basis.grid(), p);
}

int default_j_max(const EigenBasis& basis) {
  const double top = basis.eigenvalues()(basis.size() - 1);
  if (top <= 0.0) return 1;
  return std::max(1, PartitionOfUnity::top_block(std::sqrt(top)));
}

int default_j_min(const EigenBasis& basis) {
  const double h = basis.grid().h();
  return -static_cast<int>(std::ceil(std::log2(1.0 / h))) - 2;
}

int lowest_active_block(const EigenBasis& basis) {
  if (basis.size() < 2) return 0;
  const double root = std::sqrt(basis.eigenvalues()(1));
  return static_cast<int>(std::floor(std::log2(root))) - 1;
}

namespace {

void check_range(const EigenBasis& basis, int j_max) {
  const double cutoff = std::sqrt(basis.lambda_max());
  require(std::ldexp(1.0, j_max - 1) <= cutoff, "j_max lies beyond the resolved band (2^{j_max-1} > sqrt(Lambda_max))");
}

}  // namespace

NormValue besov_inhom_from(const BlockNorms& b, double s, double q, int j_max) {
  NormValue v;
  v.value = b.psi_norm + b.lq(s, q, 1, j_max);
  if (b.inhom_defect > 1e-10) {
    v.resolved = false;
    v.note = "unresolved band: blocks 1.." + std::to_string(j_max) + " miss part of the spectrum";
  }
  return v;
}

NormValue besov_hom_from(const BlockNorms& b, double s, double q, int j_min, int j_max) {
  NormValue v;
  v.value = b.lq(s, q, j_min, j_max);
  v.tail_bound = b.lq(s, q, b.j_lo, j_min - 1);
  if (b.coverage_defect > 1e-10) {
    v.resolved = false;
    v.note = "unresolved band: blocks " + std::to_string(b.j_lo) + ".." + std::to_string(j_max) +
             " miss part of the spectrum";
  } else if (v.tail_bound > 0.0) {
    v.note = "blocks below j_min are nonzero; see tail_bound";
  }
  return v;
}

NormValue besov_inhom(const Eigen::VectorXd& f, const BesovParams& params, const PartitionOfUnity& pou,
                      const EigenBasis& basis) {
  require_exponent(params.p);
  require_exponent(params.q, "q");
  const int j_max = params.j_max.value_or(default_j_max(basis));
  check_range(basis, j_max);
  const BlockNorms b = block_norms(f, params.p, pou, basis, 1, j_max);
  return besov_inhom_from(b, params.s, params.q, j_max);
}

NormValue besov_hom(const Eigen::VectorXd& f, const BesovParams& params, const PartitionOfUnity& pou,
                    const EigenBasis& basis) {
  require_exponent(params.p);
  require_exponent(params.q, "q");
  const int j_max = params.j_max.value_or(default_j_max(basis));
  const int j_min = params.j_min.value_or(default_j_min(basis));
  require(j_min <= 0 && 0 < j_max, "besov_hom: need j_min <= 0 < j_max");
  check_range(basis, j_max);
  const int j_lo = std::min(j_min, lowest_active_block(basis));
  const BlockNorms b = block_norms(f, params.p, pou, basis, j_lo, j_max);
  return besov_hom_from(b, params.s, params.q, j_min, j_max);
}

NormValue seminorm_pM(const Eigen::VectorXd& f, int M, const PartitionOfUnity& pou, const EigenBasis& basis) {
  require(M >= 0, "seminorm_pM: M must be a nonnegative integer");
  const int j_max = default_j_max(basis);
  const BlockNorms b = block_norms(f, 1.0, pou, basis, 1, j_max);
  NormValue v;
  double sup = 0.0;
  for (int j = 1; j <= j_max; ++j) sup = std::max(sup, std::exp2(M * j) * b.block(j));
  v.value = lp_norm(basis.grid(), f, 1.0) + sup;
  if (b.inhom_defect > 1e-10) {
    v.resolved = false;
    v.note = "unresolved band";
  } else {
    v.note = "j truncated to 1.." + std::to_string(j_max) + " (higher blocks vanish on the retained spectrum)";
  }
  return v;
}

NormValue seminorm_qM(const Eigen::VectorXd& f, int M, const PartitionOfUnity& pou, const EigenBasis& basis) {
  require(M >= 0, "seminorm_qM: M must be a nonnegative integer");
  const MeanDecomposition d = decompose_mean(f, basis.grid());
  NormValue v;
  if (d.zero_mode > 1e-12 * std::max(1.0, lp_norm(basis.grid(), f, 2.0))) {
    v.value = kInf;
    v.note = "not in Z: nonzero zero-mode component";
    return v;
  }
  const int j_max = default_j_max(basis);
  const int j_lo = std::min(0, lowest_active_block(basis));
  const BlockNorms b = block_norms(f, 1.0, pou, basis, j_lo, j_max);
  double sup = 0.0;
  for (int j = j_lo; j <= j_max; ++j) sup = std::max(sup, std::exp2(M * std::abs(j)) * (d.zero_mode + b.block(j)));
  v.value = lp_norm(basis.grid(), f, 1.0) + sup;
  if (b.coverage_defect > 1e-10) {
    v.resolved = false;
    v.note = "unresolved band";
  } else {
    v.note = "j truncated to " + std::to_string(j_lo) + ".." + std::to_string(j_max) +
             " (other blocks vanish on the retained spectrum)";
  }
  return v;
}

std::vector<CubeCell> cube_cells(const Grid& grid, double theta) {
  require(theta > 0.0, "cube_cells: theta must be positive");
  const double side = std::sqrt(theta);
  require(side >= grid.h() * (1.0 - 1e-12), "cube_cells: theta^{1/2} must be at least the grid spacing");
  std::map<std::pair<long, long>, std::size_t> index;
  std::vector<CubeCell> cells;
  for (Index i = 0; i < grid.size(); ++i) {
    const long mx = std::lround(grid.nodes(i, 0) / side);
    const long my = grid.dim == 2 ? std::lround(grid.nodes(i, 1) / side) : 0;
    auto [it, inserted] = index.try_emplace({mx, my}, cells.size());
    if (inserted) {
      CubeCell c;
      c.m = {static_cast<int>(mx), static_cast<int>(my)};
      c.center = {side * static_cast<double>(mx), side * static_cast<double>(my)};
      cells.push_back(std::move(c));
    }
    cells[it->second].nodes.push_back(i);
  }
  // Order by lattice index so reductions are deterministic.
  std::sort(cells.begin(), cells.end(), [](const CubeCell& a, const CubeCell& b) {
    return std::make_pair(a.m.y(), a.m.x()) < std::make_pair(b.m.y(), b.m.x());
  });
  return cells;
}

double amalgam_norm(const Grid& grid, const Eigen::VectorXd& f, const AmalgamParams& params) {
  require_exponent(params.p);
  require_exponent(params.q, "q");
  require(f.size() == grid.size(), "amalgam_norm: function does not match grid");
  const std::vector<CubeCell> cells = cube_cells(grid, params.theta);
  Eigen::ArrayXd local(static_cast<Index>(cells.size()));
  for (std::size_t c = 0; c < cells.size(); ++c) {
    double value = 0.0;
    if (std::isinf(params.q)) {
      for (const Index i : cells[c].nodes) value = std::max(value, std::abs(f(i)));
    } else {
      for (const Index i : cells[c].nodes) value += grid.weights(i) * std::pow(std::abs(f(i)), params.q);
      value = std::pow(value, 1.0 / params.q);
    }
    local(static_cast<Index>(c)) = value;
  }
  const double top = local.maxCoeff();
  if (std::isinf(params.p) || top == 0.0) return top;
  return top * std::pow((local / top).pow(params.p).sum(), 1.0 / params.p);
}

TripleNormResult triple_norm(const OperatorKernel& kernel, const Grid& grid, double alpha, double theta) {
  require(alpha > 0.0, "triple_norm: alpha must be positive");
  require(kernel.rows() == grid.size() && kernel.cols() == grid.size(), "triple_norm: kernel does not match grid");
  TripleNormResult out;
  const std::vector<CubeCell> cells = cube_cells(grid, theta);
  out.cells = static_cast<Index>(cells.size());
  const Eigen::VectorXd root_w = grid.weights.cwiseSqrt();
  for (const CubeCell& cell : cells) {
    const Index n = static_cast<Index>(cell.nodes.size());
    Eigen::MatrixXd local(grid.size(), n);
    for (Index i = 0; i < grid.size(); ++i) {
      double distance2 = 0.0;
      for (int a = 0; a < grid.dim; ++a) distance2 += std::pow(grid.nodes(i, a) - cell.center(a), 2);
      const double factor = root_w(i) * std::pow(distance2, alpha / 2.0);
      for (Index c = 0; c < n; ++c) {
        const Index j = cell.nodes[static_cast<std::size_t>(c)];
        local(i, c) = factor * kernel.matrix(i, j) * root_w(j);
      }
    }
    const PowerIterationResult r = largest_singular_value(local, 10000, 1e-12);
    out.value = std::max(out.value, r.value);
    out.converged = out.converged && r.converged;
    out.max_iterations = std::max(out.max_iterations, r.iterations);
  }
  return out;
}

void write_norm_csv_header(std::ostream& out) { out << "norm_id,params,value,tail_bound\n"; }

void write_norm_csv_row(std::ostream& out, const NormRow& row) {
  out << row.id << ",\"" << row.params << "\"," << std::setprecision(17) << row.value << ',' << row.tail_bound
      << '\n';
}

}  // namespace nb

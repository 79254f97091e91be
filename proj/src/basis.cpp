#include "nb/basis.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <random>

namespace nb {

namespace {

constexpr double kPi = std::numbers::pi;

double cosine_norm(int index, double length) {
  return index == 0 ? 1.0 / std::sqrt(length) : std::sqrt(2.0 / length);
}

}  // namespace

EigenBasis::EigenBasis(BasisData data) : data_(std::move(data)) {
  const Grid& g = data_.grid;
  const Index n = g.size();
  const Index k = data_.eigenvalues.size();
  require(n > 0 && k > 0, "basis: empty grid or mode set");
  require(g.nodes.rows() == n && g.nodes.cols() == g.dim, "basis: node array has wrong shape");
  require(data_.modes.rows() == n && data_.modes.cols() == k, "basis: mode samples have wrong shape");
  require(g.dim == data_.domain.dim(), "basis: grid and domain dimension differ");
  require((g.weights.array() > 0.0).all(), "basis: quadrature weights must be positive");
  require(std::abs(g.weights.sum() - data_.domain.volume()) <= 1e-12 * data_.domain.volume() * 4,
          "basis: quadrature weights do not sum to |Omega|");
  require(data_.eigenvalues.allFinite() && data_.modes.allFinite(), "basis: non-finite entries");
  require(std::abs(data_.eigenvalues(0)) <= 1e-10, "basis: lambda_1 must be zero");
  for (Index i = 1; i < k; ++i)
    require(data_.eigenvalues(i) >= data_.eigenvalues(i - 1), "basis: eigenvalues must be sorted");
  if (k > 1) require(data_.eigenvalues(1) > 1e-10, "basis: zero eigenvalue is not simple");
  require(data_.eigenvalues(k - 1) <= data_.lambda_max * (1.0 + 1e-12),
          "basis: retained eigenvalue exceeds the resolution cutoff");
  if (data_.analytic) {
    require(static_cast<int>(data_.gradient_modes.size()) == g.dim, "basis: missing gradient modes");
    for (const auto& d : data_.gradient_modes)
      require(d.rows() == n && d.cols() == k, "basis: gradient modes have wrong shape");
  }

  // Zero mode must be the normalized constant.
  const Eigen::VectorXd e1 = data_.modes.col(0);
  const double mean = e1.mean();
  const double spread = std::sqrt((e1.array() - mean).square().mean());
  require(spread <= 1e-6 * std::abs(mean), "basis: first mode is not constant");
  require(std::abs(std::abs(mean) * std::sqrt(data_.domain.volume()) - 1.0) < 1e-8,
          "basis: first mode is not |Omega|^{-1/2}");

  const double tolerance = data_.analytic ? 1e-8 : 1e-6;
  require(gram_defect() <= tolerance, "basis: eigenfunctions are not quadrature-orthonormal");
}

double EigenBasis::gram_defect() const {
  const Eigen::MatrixXd weighted = data_.grid.weights.asDiagonal() * data_.modes;
  Eigen::MatrixXd gram = data_.modes.transpose() * weighted;
  gram.diagonal().array() -= 1.0;
  return gram.cwiseAbs().maxCoeff();
}

double resolution_cutoff(const Grid& grid) {
  const double h = grid.h();
  return std::pow(kPi / (2.0 * h), 2);
}

EigenBasis build_interval_basis(double length, Index modes, Index nodes) {
  require(nodes >= 1 && modes >= 1, "interval basis: need at least one node and one mode");
  require(modes <= nodes, "interval basis: more modes than grid nodes (K > N)");
  BasisData data;
  data.domain = Domain::interval(length);
  data.grid = cell_centered_grid(data.domain, nodes);
  data.lambda_max = resolution_cutoff(data.grid);
  data.analytic = true;
  data.eigenvalues.resize(modes);
  data.modes.resize(nodes, modes);
  data.gradient_modes.assign(1, Eigen::MatrixXd(nodes, modes));
  data.mode_indices.resize(modes, 1);
  const Eigen::ArrayXd x = data.grid.nodes.col(0).array();
  for (Index k = 0; k < modes; ++k) {
    const double wave = static_cast<double>(k) * kPi / length;
    data.eigenvalues(k) = wave * wave;
    require(data.eigenvalues(k) <= data.lambda_max * (1.0 + 1e-12),
            "interval basis: requested modes exceed the resolution cutoff (K - 1 > N / 2)");
    const double c = cosine_norm(static_cast<int>(k), length);
    data.modes.col(k) = c * (wave * x).cos();
    data.gradient_modes[0].col(k) = -c * wave * (wave * x).sin();
    data.mode_indices(k, 0) = static_cast<int>(k);
  }
  return EigenBasis(std::move(data));
}

EigenBasis build_rectangle_basis(double lx, double ly, Index modes, Index nx, Index ny) {
  require(nx >= 1 && ny >= 1 && modes >= 1, "rectangle basis: need nodes and modes");
  BasisData data;
  data.domain = Domain::rectangle(lx, ly);
  data.grid = cell_centered_grid(data.domain, nx, ny);
  data.lambda_max = resolution_cutoff(data.grid);
  data.analytic = true;

  struct Mode {
    int a, b;
    double lambda;
  };
  std::vector<Mode> candidates;
  for (int a = 0; a <= nx / 2; ++a) {
    for (int b = 0; b <= ny / 2; ++b) {
      const double lambda = std::pow(a * kPi / lx, 2) + std::pow(b * kPi / ly, 2);
      if (lambda <= data.lambda_max * (1.0 + 1e-12)) candidates.push_back({a, b, lambda});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Mode& u, const Mode& v) {
    const double scale = std::max({1.0, u.lambda, v.lambda});
    if (std::abs(u.lambda - v.lambda) > 1e-12 * scale) return u.lambda < v.lambda;
    return std::pair(u.a, u.b) < std::pair(v.a, v.b);
  });
  // Degenerate pairs such as (1,7) and (5,5) differ only by roundoff; give a
  // tie group one value so the sequence is sorted.
  for (std::size_t k = 1; k < candidates.size(); ++k) {
    const double scale = std::max(1.0, candidates[k].lambda);
    if (std::abs(candidates[k].lambda - candidates[k - 1].lambda) <= 1e-12 * scale)
      candidates[k].lambda = candidates[k - 1].lambda;
  }
  require(static_cast<Index>(candidates.size()) >= modes,
          "rectangle basis: requested modes exceed the resolved spectrum");

  const Index n = data.grid.size();
  data.eigenvalues.resize(modes);
  data.modes.resize(n, modes);
  data.gradient_modes.assign(2, Eigen::MatrixXd(n, modes));
  data.mode_indices.resize(modes, 2);
  const Eigen::ArrayXd x = data.grid.nodes.col(0).array();
  const Eigen::ArrayXd y = data.grid.nodes.col(1).array();
  for (Index k = 0; k < modes; ++k) {
    const Mode& m = candidates[static_cast<std::size_t>(k)];
    const double kx = m.a * kPi / lx, ky = m.b * kPi / ly;
    const double c = cosine_norm(m.a, lx) * cosine_norm(m.b, ly);
    data.eigenvalues(k) = m.lambda;
    data.mode_indices.row(k) << m.a, m.b;
    data.modes.col(k) = c * (kx * x).cos() * (ky * y).cos();
    data.gradient_modes[0].col(k) = -c * kx * (kx * x).sin() * (ky * y).cos();
    data.gradient_modes[1].col(k) = -c * ky * (kx * x).cos() * (ky * y).sin();
  }
  data.eigenvalues(0) = 0.0;
  return EigenBasis(std::move(data));
}

namespace {

using SparseMatrix = Eigen::SparseMatrix<double>;

// Lattice lookup: cell (ix, iy) -> node index or -1.
std::vector<Index> cell_table(const Grid& grid) {
  std::vector<Index> table(static_cast<std::size_t>(grid.extent.x()) * grid.extent.y(), -1);
  for (Index i = 0; i < grid.size(); ++i)
    table[static_cast<std::size_t>(grid.cells(i, 0) + grid.extent.x() * grid.cells(i, 1))] = i;
  return table;
}

template <typename Visit>
void for_each_neighbor(const Grid& grid, const std::vector<Index>& table, Index i, Visit visit) {
  static constexpr int dx[4] = {1, -1, 0, 0};
  static constexpr int dy[4] = {0, 0, 1, -1};
  for (int d = 0; d < 4; ++d) {
    const int cx = grid.cells(i, 0) + dx[d], cy = grid.cells(i, 1) + dy[d];
    if (cx < 0 || cy < 0 || cx >= grid.extent.x() || cy >= grid.extent.y()) continue;
    const Index j = table[static_cast<std::size_t>(cx + grid.extent.x() * cy)];
    if (j >= 0) visit(j);
  }
}

int component_count(const Grid& grid, const std::vector<Index>& table) {
  std::vector<char> seen(static_cast<std::size_t>(grid.size()), 0);
  int components = 0;
  for (Index start = 0; start < grid.size(); ++start) {
    if (seen[static_cast<std::size_t>(start)]) continue;
    ++components;
    std::queue<Index> frontier;
    frontier.push(start);
    seen[static_cast<std::size_t>(start)] = 1;
    while (!frontier.empty()) {
      const Index i = frontier.front();
      frontier.pop();
      for_each_neighbor(grid, table, i, [&](Index j) {
        if (!seen[static_cast<std::size_t>(j)]) {
          seen[static_cast<std::size_t>(j)] = 1;
          frontier.push(j);
        }
      });
    }
  }
  return components;
}

// Ghost-point reflection: a missing neighbor mirrors the cell itself, so the
// boundary face contributes no flux.
SparseMatrix neumann_laplacian(const Grid& grid, const std::vector<Index>& table) {
  const double inv_h2 = 1.0 / (grid.spacing(0) * grid.spacing(0));
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(grid.size()) * 5);
  for (Index i = 0; i < grid.size(); ++i) {
    int degree = 0;
    for_each_neighbor(grid, table, i, [&](Index j) {
      entries.emplace_back(i, j, -inv_h2);
      ++degree;
    });
    entries.emplace_back(i, i, degree * inv_h2);
  }
  SparseMatrix a(grid.size(), grid.size());
  a.setFromTriplets(entries.begin(), entries.end());
  return a;
}

struct Eigenpairs {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;  // Euclidean-orthonormal columns, constant mode excluded
};

void remove_constant(Eigen::Ref<Eigen::MatrixXd> x) {
  const double inv_n = 1.0 / static_cast<double>(x.rows());
  x.rowwise() -= x.colwise().sum() * inv_n;
}

Eigenpairs dense_pairs(const SparseMatrix& a, Index count) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver{Eigen::MatrixXd(a)};
  require(solver.info() == Eigen::Success, "fd basis: dense eigensolver failed");
  Eigenpairs out;
  out.values = solver.eigenvalues().segment(1, count);
  out.vectors = solver.eigenvectors().middleCols(1, count);
  return out;
}

// Shift-invert block subspace iteration with Rayleigh-Ritz, constant mode
// deflated. Handles repeated eigenvalues.
Eigenpairs sparse_pairs(const SparseMatrix& a, Index count) {
  const Index n = a.rows();
  const Index block = std::min<Index>(n - 1, count + std::max<Index>(12, count / 2));
  const double shift = 1.0;
  SparseMatrix shifted = a;
  for (Index i = 0; i < n; ++i) shifted.coeffRef(i, i) += shift;
  Eigen::SimplicialLDLT<SparseMatrix> factor(shifted);
  require(factor.info() == Eigen::Success, "fd basis: factorization failed");

  std::mt19937_64 rng(20240611);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(n, block);
  for (Index j = 0; j < block; ++j)
    for (Index i = 0; i < n; ++i) x(i, j) = normal(rng);

  Eigenpairs out;
  const double scale = a.diagonal().maxCoeff();
  for (int iteration = 0; iteration < 500; ++iteration) {
    x = factor.solve(x);
    remove_constant(x);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
    x = qr.householderQ() * Eigen::MatrixXd::Identity(n, block);
    const Eigen::MatrixXd ax = a * x;
    const Eigen::MatrixXd projected = x.transpose() * ax;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(0.5 * (projected + projected.transpose()));
    x = x * ritz.eigenvectors();
    const Eigen::MatrixXd residual = a * x.leftCols(count) - x.leftCols(count) * ritz.eigenvalues().head(count).asDiagonal();
    const double worst = residual.colwise().norm().maxCoeff();
    if (worst <= 1e-9 * scale) {
      out.values = ritz.eigenvalues().head(count);
      out.vectors = x.leftCols(count);
      return out;
    }
  }
  throw std::runtime_error("fd basis: subspace iteration did not converge");
}

// Weighted Gram-Schmidt inside clusters of (numerically) equal eigenvalues and
// a sign convention: the first entry of largest magnitude is positive.
void canonicalize(Eigen::MatrixXd& modes, const Eigen::VectorXd& values, const Eigen::VectorXd& w) {
  const Index k = modes.cols();
  const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
  Index start = 0;
  while (start < k) {
    Index stop = start + 1;
    while (stop < k && std::abs(values(stop) - values(start)) < 1e-8 * scale) ++stop;
    for (Index c = start; c < stop; ++c) {
      for (Index b = 0; b < c; ++b) {
        const double overlap = (w.array() * modes.col(b).array() * modes.col(c).array()).sum();
        modes.col(c) -= overlap * modes.col(b);
      }
      modes.col(c) /= std::sqrt((w.array() * modes.col(c).array().square()).sum());
    }
    start = stop;
  }
  for (Index c = 0; c < k; ++c) {
    Index where = 0;
    modes.col(c).cwiseAbs().maxCoeff(&where);
    if (modes(where, c) < 0.0) modes.col(c) *= -1.0;
  }
}

}  // namespace

EigenBasis build_fd_basis(const Domain& polygon, double h, Index modes) {
  require(polygon.shape() == Shape::polygon, "fd basis: domain must be a polygon");
  require(modes >= 1, "fd basis: need at least one mode");
  BasisData data;
  data.domain = polygon;
  data.grid = polygon_grid(polygon, h);
  data.lambda_max = resolution_cutoff(data.grid);
  data.analytic = false;
  const Index n = data.grid.size();
  require(modes <= n, "fd basis: more modes than mesh cells");

  const std::vector<Index> table = cell_table(data.grid);
  require(component_count(data.grid, table) == 1,
          "fd basis: mesh is disconnected (zero eigenvalue is not simple)");
  const SparseMatrix a = neumann_laplacian(data.grid, table);

  data.eigenvalues = Eigen::VectorXd::Zero(modes);
  data.modes.resize(n, modes);
  data.modes.col(0).setConstant(1.0 / std::sqrt(polygon.volume()));
  if (modes > 1) {
    const bool dense = n <= 1500 || 8 * modes > n;
    const Eigenpairs pairs = dense ? dense_pairs(a, modes - 1) : sparse_pairs(a, modes - 1);
    require(pairs.values(0) > 1e-8, "fd basis: zero eigenvalue is not simple");
    data.eigenvalues.tail(modes - 1) = pairs.values;
    Eigen::MatrixXd vectors = pairs.vectors;
    remove_constant(vectors);
    const Eigen::VectorXd w = data.grid.weights;
    canonicalize(vectors, pairs.values, w);
    data.modes.rightCols(modes - 1) = vectors;
    require(data.eigenvalues(modes - 1) <= data.lambda_max,
            "fd basis: requested modes exceed the resolution cutoff");
  }
  return EigenBasis(std::move(data));
}

EigenBasis with_eigenvalues(const EigenBasis& basis, const Eigen::VectorXd& eigenvalues) {
  require(eigenvalues.size() == basis.size(), "with_eigenvalues: size mismatch");
  BasisData data = basis.data();
  data.eigenvalues = eigenvalues;
  return EigenBasis(std::move(data));
}

}  // namespace nb

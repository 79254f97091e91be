#include "nb/kernel.hpp"
#include "nb/io.hpp"

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>

namespace nb {

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::MatrixXd weighted(const OperatorKernel& k) {
  return k.row_weights.cwiseSqrt().asDiagonal() * k.matrix * k.col_weights.cwiseSqrt().asDiagonal();
}

double top_eigenvalue(const Eigen::MatrixXd& symmetric) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric, Eigen::EigenvaluesOnly);
  require(solver.info() == Eigen::Success, "eigenvalue solver failed");
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

OperatorKernel multiplier_kernel(const Symbol& symbol, const EigenBasis& basis) {
  const Eigen::VectorXd m = symbol_values(symbol, basis);
  OperatorKernel k;
  k.matrix = basis.modes() * m.asDiagonal() * basis.modes().transpose();
  k.row_weights = basis.grid().weights;
  k.col_weights = basis.grid().weights;
  k.tag = symbol.tag;
  k.grid_id = grid_id(basis.grid());
  k.tail_bound = kernel_tail_bound(symbol, basis);
  k.spectral_l2 = m.cwiseAbs().maxCoeff();
  return k;
}

OperatorKernel heat_kernel(double t, const EigenBasis& basis) {
  require(t > 0.0, "heat_kernel: t must be positive");
  return multiplier_kernel(Symbol::heat(t), basis);
}

OperatorKernel identity_kernel(const Grid& grid) {
  OperatorKernel k;
  k.matrix = grid.weights.cwiseInverse().asDiagonal();
  k.row_weights = grid.weights;
  k.col_weights = grid.weights;
  k.tag = "identity";
  k.grid_id = grid_id(grid);
  k.spectral_l2 = 1.0;
  return k;
}

std::vector<OperatorKernel> gradient_kernels(const Symbol& symbol, const EigenBasis& basis) {
  const Eigen::VectorXd m = symbol_values(symbol, basis);
  std::vector<OperatorKernel> out;
  const double tail = kernel_tail_bound(symbol * Symbol::power(0.5), basis);
  Eigen::MatrixXd full;
  if (!basis.analytic()) full = basis.modes() * m.asDiagonal() * basis.modes().transpose();
  for (int a = 0; a < basis.dim(); ++a) {
    OperatorKernel k;
    if (basis.analytic()) {
      k.matrix = basis.gradient_modes()[static_cast<std::size_t>(a)] * m.asDiagonal() * basis.modes().transpose();
    } else {
      k.matrix.resize(full.rows(), full.cols());
      for (Index j = 0; j < full.cols(); ++j)
        k.matrix.col(j) = lattice_derivative(basis.grid(), full.col(j), a);
    }
    k.row_weights = basis.grid().weights;
    k.col_weights = basis.grid().weights;
    k.tag = "grad" + std::to_string(a) + "*" + symbol.tag;
    k.grid_id = grid_id(basis.grid());
    k.tail_bound = tail;
    out.push_back(std::move(k));
  }
  return out;
}

double norm_l1_l1(const OperatorKernel& k) {
  return (k.row_weights.transpose() * k.matrix.cwiseAbs()).maxCoeff();
}

double norm_l1_linf(const OperatorKernel& k) { return k.matrix.cwiseAbs().maxCoeff(); }

double norm_linf_linf(const OperatorKernel& k) { return (k.matrix.cwiseAbs() * k.col_weights).maxCoeff(); }

double norm_l2_l2(const OperatorKernel& k) {
  const Eigen::MatrixXd m = weighted(k);
  if (m.rows() == m.cols() && (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * m.cwiseAbs().maxCoeff())
    return top_eigenvalue(m);
  const Eigen::MatrixXd gram = m.rows() >= m.cols() ? Eigen::MatrixXd(m.transpose() * m)
                                                    : Eigen::MatrixXd(m * m.transpose());
  return std::sqrt(top_eigenvalue(gram));
}

EndpointNorms endpoint_norms(const OperatorKernel& k) {
  EndpointNorms n;
  n.l1_l1 = norm_l1_l1(k);
  n.l1_linf = norm_l1_linf(k);
  n.linf_linf = norm_linf_linf(k);
  n.l2_l2 = k.spectral_l2 ? *k.spectral_l2 : norm_l2_l2(k);
  return n;
}

NormBounds operator_norm(const OperatorKernel& kernel, const Grid& domain_grid, const Grid& range_grid, double p,
                         double q, std::uint64_t seed, int probes) {
  require_exponent(p);
  require_exponent(q, "q");
  require(kernel.cols() == domain_grid.size() && kernel.rows() == range_grid.size(),
          "operator_norm: kernel does not match grids");
  const double a = reciprocal_exponent(p), b = reciprocal_exponent(q);
  NormBounds out;
  auto exact = [&](double v) {
    out.lower = out.upper = v;
    out.exact = true;
    return out;
  };
  if (a == 1.0 && b == 1.0) return exact(norm_l1_l1(kernel));
  if (a == 1.0 && b == 0.0) return exact(norm_l1_linf(kernel));
  if (a == 0.0 && b == 0.0) return exact(norm_linf_linf(kernel));
  if (a == 0.5 && b == 0.5) return exact(kernel.spectral_l2 ? *kernel.spectral_l2 : norm_l2_l2(kernel));

  // Riesz-Thorin over triangles of endpoint pairs in (1/p, 1/q) coordinates.
  // Targets above the diagonal (q < p) go through L^p -> L^p and Hoelder on
  // the bounded range.
  const EndpointNorms e = endpoint_norms(kernel);
  const double holder = b > a ? std::pow(range_grid.measure(), b - a) : 1.0;
  const double bb = std::min(a, b);
  const std::array<Eigen::Vector2d, 4> vertex = {Eigen::Vector2d(1, 1), Eigen::Vector2d(1, 0),
                                                 Eigen::Vector2d(0, 0), Eigen::Vector2d(0.5, 0.5)};
  const std::array<double, 4> value = {e.l1_l1, e.l1_linf, e.linf_linf, e.l2_l2};
  double upper = kInf;
  const Eigen::Vector2d target(a, bb);
  for (int skip = 0; skip < 4; ++skip) {
    std::array<int, 3> idx{};
    int c = 0;
    for (int v = 0; v < 4; ++v)
      if (v != skip) idx[static_cast<std::size_t>(c++)] = v;
    Eigen::Matrix3d system;
    for (int col = 0; col < 3; ++col) {
      system.col(col) << vertex[static_cast<std::size_t>(idx[static_cast<std::size_t>(col)])], 1.0;
    }
    if (std::abs(system.determinant()) < 1e-14) continue;
    const Eigen::Vector3d weights = system.fullPivLu().solve(Eigen::Vector3d(target.x(), target.y(), 1.0));
    if ((weights.array() < -1e-12).any()) continue;
    double bound = 1.0;
    for (int col = 0; col < 3; ++col) {
      const double theta = std::max(0.0, weights(col));
      if (theta > 0.0) bound *= std::pow(value[static_cast<std::size_t>(idx[static_cast<std::size_t>(col)])], theta);
    }
    upper = std::min(upper, bound);
  }
  out.upper = holder * upper;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_int_distribution<Index> pick(0, kernel.cols() - 1);
  const Index n = kernel.cols();
  double lower = 0.0;
  for (int r = 0; r < probes; ++r) {
    Eigen::VectorXd f(n);
    switch (r % 4) {
      case 0:
        for (Index i = 0; i < n; ++i) f(i) = gauss(rng);
        break;
      case 1: {
        const Index row = std::uniform_int_distribution<Index>(0, kernel.rows() - 1)(rng);
        f = kernel.matrix.row(row).transpose().unaryExpr([](double v) { return v >= 0.0 ? 1.0 : -1.0; });
        break;
      }
      case 2:
        f.setZero();
        f(pick(rng)) = 1.0;
        break;
      default:
        for (Index i = 0; i < n; ++i) f(i) = std::pow(std::abs(gauss(rng)), 4);
        break;
    }
    const double denominator = lp_norm(domain_grid, f, p);
    if (denominator <= 0.0) continue;
    lower = std::max(lower, lp_norm(range_grid, kernel.apply(f), q) / denominator);
  }
  out.lower = lower;
  return out;
}

PowerIterationResult largest_singular_value(const Eigen::MatrixXd& m, int max_iterations, double tolerance) {
  PowerIterationResult r;
  if (m.size() == 0 || m.cwiseAbs().maxCoeff() == 0.0) {
    r.converged = true;
    return r;
  }
  // Iterate on the smaller Gram matrix.
  const Eigen::MatrixXd gram = m.rows() >= m.cols() ? Eigen::MatrixXd(m.transpose() * m)
                                                    : Eigen::MatrixXd(m * m.transpose());
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> gauss;
  Eigen::VectorXd v(gram.cols());
  for (Index i = 0; i < v.size(); ++i) v(i) = gauss(rng);
  v.normalize();
  double previous = 0.0;
  for (int it = 1; it <= max_iterations; ++it) {
    const Eigen::VectorXd w = gram * v;
    const double rayleigh = v.dot(w);
    const double size = w.norm();
    r.iterations = it;
    if (size == 0.0) {
      r.value = 0.0;
      r.converged = true;
      return r;
    }
    v = w / size;
    r.value = std::sqrt(std::max(rayleigh, 0.0));
    if (it > 1 && std::abs(rayleigh - previous) <= tolerance * rayleigh) {
      r.converged = true;
      break;
    }
    previous = rayleigh;
  }
  return r;
}

double weyl_eigenvalue(const Domain& domain, Index k) {
  const double index = static_cast<double>(k - 1);
  if (domain.dim() == 1) return std::pow(index * kPi / domain.length(0), 2);
  return 4.0 * kPi * index / domain.volume();
}

namespace {

// Exact lattice spectrum of a Neumann rectangle: sum of |phi(lambda_ab)| sup|e_ab|^2
// over the modes not retained, accumulated in shells of doubling lambda.
double rectangle_tail(const Symbol& symbol, const EigenBasis& basis) {
  const Domain& d = basis.domain();
  const double lx = d.length(0), ly = d.length(1);
  std::set<std::pair<int, int>> retained;
  for (Index k = 0; k < basis.size(); ++k) retained.emplace(basis.mode_indices()(k, 0), basis.mode_indices()(k, 1));
  auto sup2 = [](int a, double length) { return (a == 0 ? 1.0 : 2.0) / length; };
  double sum = 0.0, lower = 0.0;
  double upper = 2.0 * std::max(1.0, basis.eigenvalues()(basis.size() - 1));
  for (int shell = 0; shell < 14; ++shell) {
    double part = 0.0;
    const int a_max = static_cast<int>(std::sqrt(upper) * lx / kPi);
    for (int a = 0; a <= a_max; ++a) {
      const double rest = upper - std::pow(a * kPi / lx, 2);
      const int b_max = static_cast<int>(std::sqrt(std::max(rest, 0.0)) * ly / kPi);
      for (int b = 0; b <= b_max; ++b) {
        const double lambda = std::pow(a * kPi / lx, 2) + std::pow(b * kPi / ly, 2);
        if (lambda <= lower || lambda > upper || retained.count({a, b})) continue;
        const double term = std::abs(symbol(lambda));
        if (!std::isfinite(term)) return kInf;
        part += term * sup2(a, lx) * sup2(b, ly);
      }
    }
    sum += part;
    if (symbol.support && upper >= symbol.support->second) return sum;
    if (part <= 1e-17 * sum || (part == 0.0 && shell > 0)) return sum;
    lower = upper;
    upper *= 2.0;
  }
  return kInf;
}

}  // namespace

double kernel_tail_bound(const Symbol& symbol, const EigenBasis& basis) {
  const Domain& d = basis.domain();
  if (basis.analytic() && d.shape() == Shape::rectangle) return rectangle_tail(symbol, basis);
  const double scale = std::pow(2.0, d.dim()) / d.volume();
  const Index first = basis.size() + 1;
  const Index limit = first + 200000;
  double sum = 0.0, last_chunk = 0.0;
  Index quiet = 0;
  for (Index k = first; k < limit; ++k) {
    const double lambda = weyl_eigenvalue(d, k);
    if (symbol.support && lambda > symbol.support->second) return scale * sum;
    const double term = std::abs(symbol(lambda));
    if (!std::isfinite(term)) return kInf;
    sum += term;
    if (k >= limit - 1000) last_chunk += term;
    quiet = term <= 1e-17 * sum || term < 1e-300 ? quiet + 1 : 0;
    if (quiet >= 1000) return scale * sum;
  }
  if (last_chunk > 1e-12 * std::max(sum, 1e-300)) return kInf;
  return scale * sum;
}

double psd_kernel_sup(const Symbol& symbol, const EigenBasis& basis) {
  const Eigen::VectorXd m = symbol_values(symbol, basis);
  require((m.array() >= 0.0).all(), "psd_kernel_sup: symbol must be nonnegative on the spectrum");
  return (basis.modes().array().square().matrix() * m).maxCoeff();
}

double separable_kernel_sup(const Symbol& symbol, const EigenBasis& x_basis, const EigenBasis& y_basis,
                            double cutoff) {
  require(x_basis.dim() == 1 && y_basis.dim() == 1, "separable_kernel_sup: needs two interval bases");
  const Eigen::VectorXd& lx = x_basis.eigenvalues();
  const Eigen::VectorXd& ly = y_basis.eigenvalues();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(lx.size(), ly.size());
  for (Index a = 0; a < lx.size(); ++a) {
    for (Index b = 0; b < ly.size(); ++b) {
      const double lambda = lx(a) + ly(b);
      if (lambda > cutoff * (1.0 + 1e-12)) continue;
      m(a, b) = symbol(lambda);
      require(std::isfinite(m(a, b)) && m(a, b) >= 0.0, "separable_kernel_sup: symbol must be finite and nonnegative");
    }
  }
  const Eigen::MatrixXd sx = x_basis.modes().array().square().matrix();
  const Eigen::MatrixXd sy = y_basis.modes().array().square().matrix();
  return (sx * m * sy.transpose()).maxCoeff();
}

double vector_norm_l2_l2(const std::vector<OperatorKernel>& components) {
  require(!components.empty(), "vector_norm_l2_l2: no components");
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(components[0].cols(), components[0].cols());
  for (const auto& c : components) {
    const Eigen::MatrixXd m = weighted(c);
    gram.noalias() += m.transpose() * m;
  }
  return std::sqrt(top_eigenvalue(gram));
}

double vector_norm_linf_linf(const std::vector<OperatorKernel>& components) {
  require(!components.empty(), "vector_norm_linf_linf: no components");
  if (components.size() == 1) return norm_linf_linf(components[0]);
  require(components.size() == 2, "vector_norm_linf_linf: only 1-D and 2-D fields are supported");
  const Eigen::MatrixXd gx = components[0].matrix * components[0].col_weights.asDiagonal();
  const Eigen::MatrixXd gy = components[1].matrix * components[1].col_weights.asDiagonal();
  constexpr int directions = 256;
  double best = 0.0;
  // F(u) = sum_j |u . g_j| has period pi in the angle of u.
  for (int d = 0; d < directions; ++d) {
    const double angle = kPi * d / directions;
    const double c = std::cos(angle), s = std::sin(angle);
    best = std::max(best, (c * gx + s * gy).cwiseAbs().rowwise().sum().maxCoeff());
  }
  return best;
}

namespace {
constexpr char kKernelMagic[9] = "NBKERNL1";
}

void save_kernel(const OperatorKernel& kernel, const std::filesystem::path& path) {
  nlohmann::json header;
  header["format"] = "nb-kernel";
  header["tag"] = kernel.tag;
  header["grid_id"] = kernel.grid_id;
  header["rows"] = kernel.rows();
  header["cols"] = kernel.cols();
  header["tail_bound"] = std::isfinite(kernel.tail_bound) ? nlohmann::json(kernel.tail_bound) : nlohmann::json("inf");
  if (kernel.spectral_l2) header["spectral_l2"] = *kernel.spectral_l2;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), "cannot open kernel file for writing: " + path.string());
  io::write_header(out, kKernelMagic, header.dump());
  io::write_doubles(out, kernel.row_weights.data(), static_cast<std::size_t>(kernel.row_weights.size()));
  io::write_doubles(out, kernel.col_weights.data(), static_cast<std::size_t>(kernel.col_weights.size()));
  io::write_row_major(out, kernel.matrix);
  require(out.good(), "failed writing kernel file: " + path.string());
}

OperatorKernel load_kernel(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open kernel file: " + path.string());
  const auto header = nlohmann::json::parse(io::read_header(in, kKernelMagic));
  OperatorKernel k;
  k.tag = header.at("tag").get<std::string>();
  k.grid_id = header.at("grid_id").get<std::uint64_t>();
  const Index rows = header.at("rows").get<Index>(), cols = header.at("cols").get<Index>();
  const auto& tail = header.at("tail_bound");
  k.tail_bound = tail.is_string() ? kInf : tail.get<double>();
  if (header.contains("spectral_l2")) k.spectral_l2 = header.at("spectral_l2").get<double>();
  k.row_weights.resize(rows);
  k.col_weights.resize(cols);
  io::read_doubles(in, k.row_weights.data(), static_cast<std::size_t>(rows));
  io::read_doubles(in, k.col_weights.data(), static_cast<std::size_t>(cols));
  k.matrix = io::read_row_major(in, rows, cols);
  return k;
}

}  // namespace nb

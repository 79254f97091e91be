#include "nb/spectral.hpp"

#include <cmath>
#include <sstream>

namespace nb {

namespace {

std::string format_number(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

}  // namespace

Symbol Symbol::constant(double value) {
  return {[value](double) { return value; }, "const(" + format_number(value) + ")", std::nullopt};
}

Symbol Symbol::power(double alpha) {
  return {[alpha](double lambda) {
            if (alpha == 0.0) return 1.0;
            return lambda <= 0.0 ? 0.0 : std::pow(lambda, alpha);
          },
          "pow(" + format_number(alpha) + ")", std::nullopt};
}

Symbol Symbol::heat(double t) {
  require(t > 0.0, "heat symbol: t must be positive");
  return {[t](double lambda) { return std::exp(-t * lambda); }, "heat(t=" + format_number(t) + ")",
          std::nullopt};
}

Symbol Symbol::resolvent(double beta, double shift, double theta) {
  require(beta > 0.0 && shift > 0.0 && theta > 0.0, "resolvent symbol: beta, M, theta must be positive");
  return {[=](double lambda) { return std::pow(theta * lambda + shift, -beta); },
          "resolvent(beta=" + format_number(beta) + ",M=" + format_number(shift) +
              ",theta=" + format_number(theta) + ")",
          std::nullopt};
}

Symbol Symbol::block(const PartitionOfUnity& pou, int j, double alpha) {
  const double lo = std::ldexp(0.5, j), hi = std::ldexp(2.0, j);
  return {[pou, j, alpha](double lambda) {
            if (lambda <= 0.0) return 0.0;
            const double v = pou.phi(j, std::sqrt(lambda));
            if (v == 0.0 || alpha == 0.0) return v;
            return v * std::pow(lambda, alpha);
          },
          "block(j=" + std::to_string(j) + ",alpha=" + format_number(alpha) + "," + to_string(pou.variant()) + ")",
          std::make_pair(lo * lo, hi * hi)};
}

Symbol Symbol::low_pass(const PartitionOfUnity& pou, double theta) {
  require(theta > 0.0, "low-pass symbol: theta must be positive");
  return {[pou, theta](double lambda) { return pou.psi(theta * lambda); },
          "psi(theta=" + format_number(theta) + ")", std::make_pair(0.0, 4.0 / theta)};
}

Symbol Symbol::bump(const PartitionOfUnity& pou, double theta) {
  require(theta > 0.0, "bump symbol: theta must be positive");
  return {[pou, theta](double lambda) { return pou.chi(theta * lambda); },
          "chi(theta=" + format_number(theta) + ")", std::make_pair(0.0, 2.0 / theta)};
}

Symbol Symbol::projected(Symbol inner) {
  auto fn = inner.fn;
  return {[fn](double lambda) { return lambda > 0.0 ? fn(lambda) : 0.0; }, "P*" + inner.tag, inner.support};
}

Symbol operator*(const Symbol& a, const Symbol& b) {
  auto fa = a.fn, fb = b.fn;
  std::optional<std::pair<double, double>> support;
  if (a.support && b.support) {
    support = std::make_pair(std::max(a.support->first, b.support->first),
                             std::min(a.support->second, b.support->second));
  } else {
    support = a.support ? a.support : b.support;
  }
  return {[fa, fb](double lambda) { return fa(lambda) * fb(lambda); }, a.tag + "*" + b.tag, support};
}

Eigen::VectorXd symbol_values(const Symbol& symbol, const EigenBasis& basis) {
  const Eigen::VectorXd& lambda = basis.eigenvalues();
  Eigen::VectorXd out(lambda.size());
  for (Index k = 0; k < lambda.size(); ++k) {
    out(k) = symbol(lambda(k));
    require(std::isfinite(out(k)), "symbol " + symbol.tag + " is not finite at lambda_" + std::to_string(k + 1));
  }
  return out;
}

Eigen::VectorXd heat(double t, const Eigen::VectorXd& f, const EigenBasis& basis) {
  require(t > 0.0, "heat: t must be positive");
  return apply_multiplier(Symbol::heat(t), f, basis);
}

MeanDecomposition decompose_mean(const Eigen::VectorXd& f, const Grid& grid) {
  require(f.size() == grid.size(), "decompose_mean: function does not match grid");
  MeanDecomposition d;
  const double volume = grid.measure();
  d.mean = grid.weights.dot(f) / volume;
  d.zero_mode = std::abs(d.mean) * std::sqrt(volume);
  d.orthogonal = f.array() - d.mean;
  return d;
}

Eigen::VectorXd project_P(const Eigen::VectorXd& f, const Grid& grid) {
  return decompose_mean(f, grid).orthogonal;
}

ResolventResult resolvent_gamma(double beta, double shift, const Eigen::VectorXd& f, const EigenBasis& basis,
                                const GammaQuadrature& quadrature) {
  require(beta > 0.0 && shift > 0.0, "resolvent_gamma: beta and M must be positive");
  require(quadrature.nodes >= 8, "resolvent_gamma: too few quadrature nodes");
  const Eigen::VectorXd& lambda = basis.eigenvalues();
  const double top = lambda.maxCoeff() + shift;

  ResolventResult r;
  // The head int_0^a t^{beta-1} e^{-ct} dt <= a^beta / beta stays below
  // 1e-13 Gamma(beta) c^{-beta} for every retained c <= top.
  r.t_lower = quadrature.t_lower > 0.0 ? quadrature.t_lower
                                       : std::pow(1e-13 * std::tgamma(beta + 1.0), 1.0 / beta) / top;
  // Tail cut: past the peak, e^{-MT} T^{beta-1} < 1e-14 and decreasing.
  double t_upper = std::max(1.0, 2.0 * beta / shift);
  while (std::exp(-shift * t_upper) * std::pow(t_upper, beta - 1.0) >= 1e-14 * std::min(1.0, std::pow(shift, -beta)))
    t_upper *= 1.25;
  r.t_upper = t_upper;

  const Eigen::VectorXd c = analyze(basis, f);
  const double u0 = std::log(r.t_lower), u1 = std::log(r.t_upper);
  auto integrate = [&](int nodes) {
    Eigen::VectorXd factor = Eigen::VectorXd::Zero(lambda.size());
    const double du = (u1 - u0) / (nodes - 1);
    for (int i = 0; i < nodes; ++i) {
      const double t = std::exp(u0 + du * i);
      const double end = (i == 0 || i == nodes - 1) ? 0.5 : 1.0;
      // dt = t du, so the weight carries t^{beta}.
      const double weight = end * du * std::pow(t, beta) * std::exp(-shift * t);
      factor.array() += weight * (-t * lambda.array()).exp();
    }
    return Eigen::VectorXd(factor / std::tgamma(beta));
  };
  const Eigen::VectorXd fine = integrate(quadrature.nodes);
  const Eigen::VectorXd coarse = integrate(quadrature.nodes / 2);
  r.value = synthesize(basis, Eigen::VectorXd(fine.cwiseProduct(c)));
  const Eigen::VectorXd rough = synthesize(basis, Eigen::VectorXd(coarse.cwiseProduct(c)));
  const double scale = lp_norm(basis.grid(), r.value, 2.0);
  r.error_estimate = scale > 0.0 ? lp_norm(basis.grid(), Eigen::VectorXd(r.value - rough), 2.0) / scale : 0.0;
  r.within_tolerance = r.error_estimate <= quadrature.tolerance;
  return r;
}

Eigen::VectorXd lattice_derivative(const Grid& grid, const Eigen::VectorXd& f, int axis) {
  require(axis >= 0 && axis < grid.dim, "lattice_derivative: bad axis");
  require(f.size() == grid.size(), "lattice_derivative: function does not match grid");
  const int ex = grid.extent.x(), ey = std::max(1, grid.extent.y());
  std::vector<Index> table(static_cast<std::size_t>(ex) * ey, -1);
  auto cell = [&](Index i, int a) { return a < grid.dim ? grid.cells(i, a) : 0; };
  for (Index i = 0; i < grid.size(); ++i) table[static_cast<std::size_t>(cell(i, 0) + ex * cell(i, 1))] = i;
  auto lookup = [&](Index i, int offset) -> Index {
    int cx = cell(i, 0), cy = cell(i, 1);
    (axis == 0 ? cx : cy) += offset;
    if (cx < 0 || cy < 0 || cx >= ex || cy >= ey) return -1;
    return table[static_cast<std::size_t>(cx + ex * cy)];
  };
  const double h = grid.spacing(axis);
  Eigen::VectorXd d(grid.size());
  for (Index i = 0; i < grid.size(); ++i) {
    const Index p1 = lookup(i, 1), m1 = lookup(i, -1);
    if (p1 >= 0 && m1 >= 0) {
      d(i) = (f(p1) - f(m1)) / (2.0 * h);
      continue;
    }
    const Index p2 = lookup(i, 2), m2 = lookup(i, -2);
    if (p1 >= 0 && p2 >= 0) {
      d(i) = (-3.0 * f(i) + 4.0 * f(p1) - f(p2)) / (2.0 * h);
    } else if (m1 >= 0 && m2 >= 0) {
      d(i) = (3.0 * f(i) - 4.0 * f(m1) + f(m2)) / (2.0 * h);
    } else if (p1 >= 0) {
      d(i) = (f(p1) - f(i)) / h;
    } else if (m1 >= 0) {
      d(i) = (f(i) - f(m1)) / h;
    } else {
      d(i) = 0.0;
    }
  }
  return d;
}

Eigen::MatrixXd gradient(const Eigen::VectorXd& f, const EigenBasis& basis) {
  const int dim = basis.dim();
  Eigen::MatrixXd out(basis.grid_size(), dim);
  if (basis.analytic()) {
    const Eigen::VectorXd c = analyze(basis, f);
    for (int a = 0; a < dim; ++a) out.col(a) = basis.gradient_modes()[static_cast<std::size_t>(a)] * c;
  } else {
    for (int a = 0; a < dim; ++a) out.col(a) = lattice_derivative(basis.grid(), f, a);
  }
  return out;
}

}  // namespace nb

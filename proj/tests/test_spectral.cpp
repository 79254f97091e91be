#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nb/kernel.hpp"
#include "nb/report.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

using namespace nb;

namespace {

constexpr double pi = std::numbers::pi;

const EigenBasis& interval() {
  static const EigenBasis b = build_interval_basis(pi, 64, 512);
  return b;
}

const EigenBasis& rectangle() {
  static const EigenBasis b = build_rectangle_basis(pi, 2.0, 120, 48, 32);
  return b;
}

const EigenBasis& lshape() {
  static const EigenBasis b = build_fd_basis(Domain::l_shape(), 1.0 / 16, 40);
  return b;
}

// Random band-limited function with Gaussian coefficients on the first `modes`.
Eigen::VectorXd band_limited(const EigenBasis& b, std::mt19937_64& rng, Index modes = -1) {
  std::normal_distribution<double> g;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(b.size());
  for (Index k = 0; k < (modes < 0 ? b.size() : modes); ++k) c(k) = g(rng);
  return synthesize(b, c);
}

double rel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

}  // namespace

TEST_CASE("analyze and synthesize") {
  const EigenBasis& b = interval();
  const Eigen::VectorXd f = 3.0 * b.modes().col(1);
  const Eigen::VectorXd c = analyze(b, f);
  CHECK(c(1) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK((c.array().abs() > 1e-12).count() == 1);

  const Eigen::VectorXd one = Eigen::VectorXd::Ones(b.grid_size());
  const Eigen::VectorXd c1 = analyze(b, one);
  CHECK(c1(0) == doctest::Approx(std::sqrt(pi)).epsilon(1e-12));
  CHECK(c1.tail(c1.size() - 1).cwiseAbs().maxCoeff() < 1e-8);

  std::mt19937_64 rng(1);
  for (const EigenBasis* basis : {&interval(), &rectangle(), &lshape()}) {
    const Eigen::VectorXd g = band_limited(*basis, rng);
    CHECK(rel(synthesize(*basis, analyze(*basis, g)), g) < 1e-10);
  }
}

TEST_CASE("complex scalars go through the same calculus") {
  const EigenBasis& b = interval();
  std::mt19937_64 rng(2);
  const Eigen::VectorXd re = band_limited(b, rng), im = band_limited(b, rng);
  Eigen::VectorXcd f(b.grid_size());
  f.real() = re;
  f.imag() = im;
  const Eigen::VectorXcd out = apply_multiplier(Symbol::heat(0.1), f, b);
  CHECK((out.real() - heat(0.1, re, b)).norm() < 1e-12 * re.norm());
  CHECK((out.imag() - heat(0.1, im, b)).norm() < 1e-12 * im.norm());
  CHECK(std::abs(inner_product(b.grid(), f, f).imag()) < 1e-12);
}

TEST_CASE("apply_multiplier examples") {
  const EigenBasis& b = interval();
  std::mt19937_64 rng(3);
  const Eigen::VectorXd f = band_limited(b, rng);
  CHECK(rel(apply_multiplier(Symbol::constant(1.0), f, b), f) < 1e-12);

  const PartitionOfUnity pou;
  const int j = PartitionOfUnity::top_block(std::sqrt(b.eigenvalues().maxCoeff())) + 1;
  CHECK(apply_multiplier(Symbol::block(pou, j), f, b).cwiseAbs().maxCoeff() == 0.0);

  const Eigen::VectorXd e2 = b.modes().col(1);
  CHECK(rel(apply_multiplier(Symbol::power(1.0), e2, b), b.eigenvalues()(1) * e2) < 1e-10);
  CHECK(apply_multiplier(Symbol::power(0.5), Eigen::VectorXd(b.modes().col(0)), b).cwiseAbs().maxCoeff() < 1e-12);
  // Negative powers act on the range of P only.
  const Eigen::VectorXd inverse = symbol_values(Symbol::power(-1.0), b);
  CHECK(inverse(0) == 0.0);
  CHECK(inverse(2) == doctest::Approx(0.25));
}

TEST_CASE("property: multiplier algebra, self-adjointness and the semigroup law") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> time(0.001, 2.0);
  const PartitionOfUnity pou;
  for (const EigenBasis* basis : {&interval(), &rectangle(), &lshape()}) {
    const EigenBasis& b = *basis;
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::VectorXd f = band_limited(b, rng), g = band_limited(b, rng);
      const double s = time(rng), t = time(rng);
      CHECK(rel(heat(t, heat(s, f, b), b), heat(t + s, f, b)) < 1e-10);

      const Symbol phi = Symbol::block(pou, trial % 5 - 1, 0.5), eta = Symbol::resolvent(0.75, 1.0);
      CHECK(rel(apply_multiplier(phi, apply_multiplier(eta, f, b), b), apply_multiplier(phi * eta, f, b)) < 1e-10);

      const double lhs = inner_product(b.grid(), apply_multiplier(eta, f, b), g);
      const double rhs = inner_product(b.grid(), f, apply_multiplier(eta, g, b));
      CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(lhs)));

      // Mass conservation and projected decay.
      const Eigen::VectorXd u = heat(t, f, b);
      CHECK(std::abs(b.grid().weights.dot(u) - b.grid().weights.dot(f)) < 1e-10 * f.norm());
      const double l2 = lp_norm(b.grid(), project_P(f, b.grid()), 2);
      CHECK(lp_norm(b.grid(), project_P(u, b.grid()), 2) <= std::exp(-b.eigenvalues()(1) * t) * l2 * (1 + 1e-12));
    }
  }
}

TEST_CASE("projected semigroup is sharp on e_2") {
  const EigenBasis& b = rectangle();
  const Eigen::VectorXd e2 = b.modes().col(1);
  for (const double t : {0.01, 0.3, 4.0}) {
    const double value = lp_norm(b.grid(), project_P(heat(t, e2, b), b.grid()), 2);
    CHECK(value == doctest::Approx(std::exp(-b.eigenvalues()(1) * t)).epsilon(1e-12));
    const OperatorKernel pk = multiplier_kernel(Symbol::projected(Symbol::heat(t)), b);
    CHECK(std::abs(norm_l2_l2(pk) - std::exp(-b.eigenvalues()(1) * t)) < 1e-10);
  }
}

TEST_CASE("mean decomposition") {
  const EigenBasis& b = interval();
  const Grid& g = b.grid();
  const Eigen::VectorXd five = Eigen::VectorXd::Constant(g.size(), 5.0);
  CHECK(project_P(five, g).cwiseAbs().maxCoeff() < 1e-13);
  const Eigen::VectorXd e3 = b.modes().col(2);
  CHECK(rel(project_P(e3, g), e3) < 1e-12);
  const MeanDecomposition d = decompose_mean(Eigen::VectorXd(e3 + five), g);
  CHECK(d.mean == doctest::Approx(5.0).epsilon(1e-13));
  CHECK(d.zero_mode == doctest::Approx(5.0 * std::sqrt(pi)).epsilon(1e-13));
  CHECK(rel(d.orthogonal, e3) < 1e-12);
}

TEST_CASE("heat kernel limits and positivity") {
  const EigenBasis& b = interval();
  const OperatorKernel late = heat_kernel(50.0, b);
  CHECK((late.matrix.array() - 1.0 / pi).abs().maxCoeff() < 1e-15 + std::exp(-50.0));
  for (const double t : {b.grid().h() * b.grid().h(), 0.01, 1.0}) {
    const OperatorKernel k = heat_kernel(t, b);
    CHECK(k.matrix.minCoeff() >= -k.tail_bound - 1e-12 * k.matrix.maxCoeff());
    CHECK((k.matrix - k.matrix.transpose()).cwiseAbs().maxCoeff() < 1e-8 * k.matrix.cwiseAbs().maxCoeff());
    CHECK(norm_l1_l1(k) == doctest::Approx(1.0).epsilon(1e-6 + k.tail_bound * pi));
  }
}

TEST_CASE("resolvent via the Gamma integral") {
  const EigenBasis& b = interval();
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(b.grid_size());
  const ResolventResult r1 = resolvent_gamma(1.0, 2.0, one, b);
  CHECK((r1.value - 0.5 * one).cwiseAbs().maxCoeff() < 1e-6);

  const Eigen::VectorXd e2 = b.modes().col(1);
  const ResolventResult r2 = resolvent_gamma(0.5, 1.0, e2, b);
  CHECK(rel(r2.value, std::pow(b.eigenvalues()(1) + 1.0, -0.5) * e2) < 1e-6);

  std::mt19937_64 rng(5);
  const Eigen::VectorXd f = band_limited(b, rng);
  const ResolventResult r3 = resolvent_gamma(0.75, 0.5, f, b);
  CHECK(rel(r3.value, apply_multiplier(Symbol::resolvent(0.75, 0.5), f, b)) < 1e-6);
  CHECK(r3.within_tolerance);
  CHECK(r3.t_lower > 0.0);
  CHECK(r3.t_upper > r3.t_lower);
  CHECK_THROWS(resolvent_gamma(0.0, 1.0, f, b));
}

TEST_CASE("gradient") {
  const EigenBasis& b = interval();
  const Eigen::MatrixXd g = gradient(Eigen::VectorXd(b.modes().col(1)), b);
  CHECK(g.cols() == 1);
  for (Index i = 0; i < b.grid_size(); ++i)
    CHECK(g(i, 0) == doctest::Approx(-std::sqrt(2.0 / pi) * std::sin(b.grid().nodes(i, 0))).epsilon(1e-12));
  CHECK(std::abs(g.cwiseAbs().maxCoeff() - std::sqrt(2.0 / pi)) < b.grid().h() * b.grid().h());

  for (const EigenBasis* basis : {&interval(), &rectangle()}) {
    const Eigen::VectorXd c = Eigen::VectorXd::Constant(basis->grid_size(), 4.0);
    CHECK(gradient(c, *basis).cwiseAbs().maxCoeff() < 1e-10);
    for (Index k = 0; k < basis->size(); ++k) {
      const Eigen::MatrixXd gk = gradient(Eigen::VectorXd(basis->modes().col(k)), *basis);
      const double energy = (basis->grid().weights.asDiagonal() * gk.cwiseAbs2()).sum();
      CHECK(std::abs(energy - basis->eigenvalues()(k)) <= 1e-6 * std::max(1.0, basis->eigenvalues()(k)));
    }
  }
  // Finite-difference bases: second-order stencils on a smooth field.
  const EigenBasis& l = lshape();
  const Eigen::VectorXd x = l.grid().nodes.col(0);
  const Eigen::MatrixXd gl = gradient(Eigen::VectorXd(x.array().square()), l);
  CHECK((gl.col(0) - 2.0 * x).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(gl.col(1).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("endpoint norms") {
  const EigenBasis& b = interval();
  std::mt19937_64 rng(6);
  const OperatorKernel id = multiplier_kernel(Symbol::constant(1.0), b);
  CHECK(norm_l2_l2(id) == doctest::Approx(1.0).epsilon(1e-10));

  const OperatorKernel grid_id_kernel = identity_kernel(b.grid());
  const EndpointNorms e = endpoint_norms(grid_id_kernel);
  CHECK(e.l1_l1 == doctest::Approx(1.0));
  CHECK(e.linf_linf == doctest::Approx(1.0));
  CHECK(e.l2_l2 == doctest::Approx(1.0));

  const PartitionOfUnity pou;
  for (int j = 0; j <= 4; ++j) {
    const OperatorKernel k = multiplier_kernel(Symbol::block(pou, j, 0.5), b);
    const EndpointNorms n = endpoint_norms(k);
    CHECK(n.l2_l2 <= std::sqrt(n.l1_l1 * n.linf_linf) * (1 + 1e-8));
    CHECK(n.l1_l1 == doctest::Approx(n.linf_linf).epsilon(1e-10));
    CHECK(n.l2_l2 == doctest::Approx(*k.spectral_l2).epsilon(1e-8));
    // Endpoint norms dominate what random probes see.
    for (int probe = 0; probe < 5; ++probe) {
      const Eigen::VectorXd f = band_limited(b, rng);
      const Eigen::VectorXd af = k.apply(f);
      CHECK(lp_norm(b.grid(), af, kInf) <= n.l1_linf * lp_norm(b.grid(), f, 1) * (1 + 1e-10));
      CHECK(lp_norm(b.grid(), af, 1) <= n.l1_l1 * lp_norm(b.grid(), f, 1) * (1 + 1e-10));
      CHECK(lp_norm(b.grid(), af, 2) <= n.l2_l2 * lp_norm(b.grid(), f, 2) * (1 + 1e-10));
    }
  }
}

TEST_CASE("operator_norm bounds bracket the exact endpoints") {
  const EigenBasis& b = interval();
  const OperatorKernel k = heat_kernel(0.05, b);
  const NormBounds exact = operator_norm(k, b.grid(), b.grid(), 1.0, kInf);
  CHECK(exact.exact);
  CHECK(exact.lower == exact.upper);
  const NormBounds mid = operator_norm(k, b.grid(), b.grid(), 1.5, 3.0, 9, 64);
  CHECK_FALSE(mid.exact);
  CHECK(mid.lower > 0.0);
  CHECK(mid.lower <= mid.upper);
}

TEST_CASE("power iteration matches the SVD") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(30, 20);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  const PowerIterationResult r = largest_singular_value(m);
  CHECK(r.converged);
  CHECK(r.value == doctest::Approx(Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0)).epsilon(1e-8));
}

TEST_CASE("multiplier kernel L1 -> Linf scales as 2^{nj}") {
  const EigenBasis b = build_interval_basis(pi, 256, 2048);
  const PartitionOfUnity pou;
  std::vector<double> js, logs;
  for (int j = 2; j <= 6; ++j) {
    js.push_back(j);
    logs.push_back(std::log2(norm_l1_linf(multiplier_kernel(Symbol::block(pou, j), b))));
  }
  const Fit f = least_squares(js, logs);
  CHECK(std::abs(f.slope - 1.0) < 0.15);
}

TEST_CASE("kernel tail bounds") {
  const EigenBasis& b = interval();
  CHECK(kernel_tail_bound(Symbol::heat(1.0), b) < 1e-300);
  const double early = kernel_tail_bound(Symbol::heat(1e-4), b);
  CHECK(early > 0.0);
  CHECK(std::isfinite(early));
  CHECK(std::isinf(kernel_tail_bound(Symbol::constant(1.0), b)));
  const PartitionOfUnity pou;
  CHECK(kernel_tail_bound(Symbol::block(pou, 2), b) == 0.0);
  // Exact rectangle tail: direct lattice sum as the oracle.
  const EigenBasis r = build_rectangle_basis(1.0, 1.0, 20, 32, 32);
  const double t = 0.01;
  double oracle = 0.0;
  for (int a = 0; a < 400; ++a)
    for (int c = 0; c < 400; ++c) {
      bool retained = false;
      for (Index k = 0; k < r.size(); ++k) retained = retained || (r.mode_indices()(k, 0) == a && r.mode_indices()(k, 1) == c);
      if (retained) continue;
      oracle += std::exp(-t * pi * pi * (a * a + c * c)) * (a ? 2.0 : 1.0) * (c ? 2.0 : 1.0);
    }
  CHECK(kernel_tail_bound(Symbol::heat(t), r) == doctest::Approx(oracle).epsilon(1e-6));
  CHECK(weyl_eigenvalue(Domain::rectangle(1.0, 1.0), 1) == 0.0);
  CHECK(weyl_eigenvalue(Domain::rectangle(1.0, 1.0), 101) == doctest::Approx(400 * pi).epsilon(1e-12));
}

TEST_CASE("separable kernel sup agrees with the product basis") {
  const EigenBasis x = build_interval_basis(pi, 25, 48), y = build_interval_basis(2.0, 17, 32);
  const EigenBasis r = build_rectangle_basis(pi, 2.0, 150, 48, 32);
  const double cutoff = r.eigenvalues().maxCoeff();
  const Symbol s = Symbol::heat(0.05);
  CHECK(separable_kernel_sup(s, x, y, cutoff) ==
        doctest::Approx(multiplier_kernel(s, r).matrix.cwiseAbs().maxCoeff()).epsilon(1e-10));
  CHECK(psd_kernel_sup(s, r) == doctest::Approx(multiplier_kernel(s, r).matrix.cwiseAbs().maxCoeff()).epsilon(1e-12));
}

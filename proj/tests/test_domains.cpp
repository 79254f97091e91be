#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nb/basis.hpp"
#include "nb/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <random>

using namespace nb;

namespace {

constexpr double pi = std::numbers::pi;

// Independent oracle: cell-centered 1-D Neumann second-difference matrix.
Eigen::VectorXd fd_interval_eigenvalues(double length, int n) {
  const double h = length / n;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    if (i > 0) { a(i, i) += 1; a(i, i - 1) -= 1; }
    if (i + 1 < n) { a(i, i) += 1; a(i, i + 1) -= 1; }
  }
  a /= h * h;
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a).eigenvalues();
}

Eigen::VectorXd random_vector(std::mt19937_64& rng, Index n) {
  std::normal_distribution<double> g;
  Eigen::VectorXd v(n);
  for (Index i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

Domain unit_square_polygon() { return Domain::polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}}); }

}  // namespace

TEST_CASE("domain geometry") {
  const Domain d = Domain::rectangle(2.0, 3.0);
  CHECK(d.volume() == doctest::Approx(6.0));
  CHECK(d.diameter() == doctest::Approx(std::sqrt(13.0)));
  CHECK(d.dim() == 2);

  const Domain l = Domain::l_shape();
  CHECK(l.volume() == doctest::Approx(3.0));
  CHECK(l.contains(Eigen::Vector2d(0.5, 1.5)));
  CHECK_FALSE(l.contains(Eigen::Vector2d(1.5, 1.5)));

  CHECK_THROWS(Domain::interval(0.0));
  CHECK_THROWS(Domain::rectangle(-1.0, 1.0));
  CHECK_THROWS(Domain::polygon({{0, 0}, {1, 1}, {0, 1}, {0, 0.5}}));
  CHECK(shape_from_string(to_string(Shape::rectangle)) == Shape::rectangle);
}

TEST_CASE("grid weights sum to the volume and nodes lie inside") {
  for (const auto& [domain, grid] :
       {std::pair{Domain::interval(pi), cell_centered_grid(Domain::interval(pi), 100)},
        std::pair{Domain::rectangle(1.0, 2.0), cell_centered_grid(Domain::rectangle(1.0, 2.0), 12, 20)},
        std::pair{Domain::l_shape(), polygon_grid(Domain::l_shape(), 1.0 / 16)}}) {
    CHECK(std::abs(grid.measure() - domain.volume()) <= 1e-12 * domain.volume());
    for (Index i = 0; i < grid.size(); ++i) CHECK(domain.contains(grid.nodes.row(i).transpose()));
  }
  CHECK(polygon_grid(Domain::l_shape(), 1.0 / 16).size() == 3 * 256);
}

TEST_CASE("grid id is a fingerprint") {
  const Grid a = cell_centered_grid(Domain::interval(1.0), 64);
  const Grid b = cell_centered_grid(Domain::interval(1.0), 64);
  const Grid c = cell_centered_grid(Domain::interval(1.0), 65);
  CHECK(grid_id(a) == grid_id(b));
  CHECK(grid_id(a) != grid_id(c));
}

TEST_CASE("interval basis closed form") {
  const EigenBasis b = build_interval_basis(pi, 4, 256);
  for (int k = 0; k < 4; ++k) CHECK(b.eigenvalues()(k) == doctest::Approx(k * k).epsilon(1e-14));
  CHECK((b.modes().col(0).array() - 1.0 / std::sqrt(pi)).abs().maxCoeff() < 1e-14);
  CHECK(std::abs(inner_product(b.grid(), Eigen::VectorXd(b.modes().col(1)), Eigen::VectorXd(b.modes().col(2)))) <
        1e-12);
  CHECK(b.gram_defect() < 1e-12);
}

TEST_CASE("interval lambda_2 against a finite-difference oracle") {
  const EigenBasis b = build_interval_basis(1.0, 10, 256);
  const Eigen::VectorXd fd = fd_interval_eigenvalues(1.0, 256);
  CHECK(std::abs(fd(0)) < 1e-9);
  CHECK(std::abs(b.eigenvalues()(1) - fd(1)) / fd(1) < 1e-3);
  // Frozen closed form of the same matrix, (2/h^2)(1 - cos(pi h)).
  const double h = 1.0 / 256;
  CHECK(fd(1) == doctest::Approx(2.0 / (h * h) * (1.0 - std::cos(pi * h))).epsilon(1e-10));
}

TEST_CASE("rectangle basis closed form") {
  const EigenBasis sq = build_rectangle_basis(pi, pi, 3, 16, 16);
  CHECK(sq.eigenvalues()(0) == doctest::Approx(0.0));
  CHECK(sq.eigenvalues()(1) == doctest::Approx(1.0));
  CHECK(sq.eigenvalues()(2) == doctest::Approx(1.0));
  // Degenerate pair ordered lexicographically: (0,1) before (1,0).
  CHECK(sq.mode_indices()(1, 0) == 0);
  CHECK(sq.mode_indices()(1, 1) == 1);
  CHECK(sq.mode_indices()(2, 0) == 1);

  const EigenBasis wide = build_rectangle_basis(pi, 2 * pi, 2, 16, 32);
  CHECK(wide.eigenvalues()(1) == doctest::Approx(0.25));
}

TEST_CASE("rectangle Weyl count") {
  const EigenBasis b = build_rectangle_basis(1.0, 1.0, 50, 64, 64);
  const double top = b.eigenvalues()(49);
  for (const double lambda : {0.3 * top, 0.5 * top, 0.7 * top}) {
    const double count = (b.eigenvalues().array() <= lambda).count();
    // Neumann two-term Weyl law; the boundary term is about a quarter of the
    // count at this K, so the leading term alone is only a lower bound.
    const double leading = lambda / (4 * pi);
    const double weyl = leading + 4.0 * std::sqrt(lambda) / (4 * pi);
    CHECK(std::abs(count - weyl) <= 0.2 * weyl);
    CHECK(count >= leading);
  }
}

TEST_CASE("finite-difference basis on the unit square") {
  const EigenBasis b = build_fd_basis(unit_square_polygon(), 1.0 / 32, 4);
  const double ref[4] = {0.0, pi * pi, pi * pi, 2 * pi * pi};
  CHECK(std::abs(b.eigenvalues()(0)) < 1e-10);
  for (int k = 1; k < 4; ++k) CHECK(std::abs(b.eigenvalues()(k) - ref[k]) <= 0.02 * ref[k]);
  const Eigen::ArrayXd e1 = b.modes().col(0).array();
  const double mean = e1.mean();
  CHECK(std::sqrt((e1 - mean).square().mean()) / std::abs(mean) < 1e-6);
  CHECK(b.gram_defect() < 1e-6);
}

TEST_CASE("L-shape lambda_2 under mesh refinement") {
  const double coarse = build_fd_basis(Domain::l_shape(), 1.0 / 32, 2).eigenvalues()(1);
  const double fine = build_fd_basis(Domain::l_shape(), 1.0 / 64, 2).eigenvalues()(1);
  CHECK(coarse > 0.0);
  CHECK(std::abs(fine - coarse) / coarse < 0.02);
}

TEST_CASE("basis invariants") {
  const std::vector<EigenBasis> bases = {build_interval_basis(pi, 64, 512), build_rectangle_basis(1.0, 2.0, 80, 32, 64),
                                         build_fd_basis(Domain::l_shape(), 1.0 / 16, 20)};
  for (const EigenBasis& b : bases) {
    const Eigen::VectorXd& l = b.eigenvalues();
    CHECK(std::abs(l(0)) < 1e-10);
    CHECK(l(1) > 0.0);
    for (Index k = 1; k < l.size(); ++k) CHECK(l(k) >= l(k - 1));
    CHECK(l.maxCoeff() <= b.lambda_max());
    CHECK(b.gram_defect() < (b.analytic() ? 1e-8 : 1e-6));
    CHECK((b.modes().col(0).array() - 1.0 / std::sqrt(b.domain().volume())).abs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("bases beyond the resolution cutoff are rejected") {
  CHECK_THROWS(build_interval_basis(pi, 400, 512));
  CHECK_THROWS(build_fd_basis(Domain::l_shape(), 0.25, 100));
}

TEST_CASE("lp_norm examples") {
  const EigenBasis b = build_interval_basis(pi, 8, 512);
  const Grid& g = b.grid();
  const Eigen::VectorXd c = Eigen::VectorXd::Constant(g.size(), -3.0);
  CHECK(lp_norm(g, c, 2) == doctest::Approx(3.0 * std::sqrt(pi)).epsilon(1e-13));
  CHECK(lp_norm(g, c, kInf) == doctest::Approx(3.0));
  CHECK(lp_norm(g, c, 1) == doctest::Approx(3.0 * pi).epsilon(1e-13));
  const Eigen::VectorXd e2 = b.modes().col(1);
  CHECK(std::abs(lp_norm(g, e2, 2) - 1.0) < 1e-8);
  // max |cos| on a cell-centered grid sits half a cell from the boundary.
  const double h = g.h();
  CHECK(lp_norm(g, e2, kInf) == doctest::Approx(std::sqrt(2.0 / pi) * std::cos(h / 2)).epsilon(1e-12));
  CHECK(std::abs(lp_norm(g, e2, kInf) - std::sqrt(2.0 / pi)) < h * h);
  CHECK_THROWS(lp_norm(g, e2, 0.5));
}

TEST_CASE("property: Hoelder inequality on random pairs") {
  std::mt19937_64 rng(7);
  const Grid g = cell_centered_grid(Domain::rectangle(1.0, 2.0), 16, 24);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::VectorXd f = random_vector(rng, g.size()), h = random_vector(rng, g.size());
    for (const double p : {1.0, 2.0, 4.0, kInf}) {
      const double lhs = lp_norm(g, Eigen::VectorXd(f.cwiseProduct(h)), 1.0);
      CHECK(lhs <= lp_norm(g, f, p) * lp_norm(g, h, conjugate_exponent(p)) * (1 + 1e-12));
    }
  }
}

TEST_CASE("property: lp_norm is homogeneous and monotone in p on probability measure") {
  std::mt19937_64 rng(11);
  const Grid g = cell_centered_grid(Domain::interval(1.0), 97);
  std::uniform_real_distribution<double> scale(-5.0, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::VectorXd f = random_vector(rng, g.size());
    const double c = scale(rng);
    double previous = 0.0;
    for (const double p : {1.0, 1.5, 2.0, 3.0, 8.0, 40.0, kInf}) {
      CHECK(lp_norm(g, Eigen::VectorXd(c * f), p) == doctest::Approx(std::abs(c) * lp_norm(g, f, p)).epsilon(1e-12));
      const double v = lp_norm(g, f, p);
      CHECK(v >= previous * (1 - 1e-12));
      previous = v;
    }
  }
}

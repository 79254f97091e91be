#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nb/norms.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace nb;

namespace {

constexpr double pi = std::numbers::pi;

const EigenBasis& interval() {
  static const EigenBasis b = build_interval_basis(pi, 64, 512);
  return b;
}

const EigenBasis& rectangle() {
  static const EigenBasis b = build_rectangle_basis(pi, 2.0, 100, 48, 32);
  return b;
}

Eigen::VectorXd band_limited(const EigenBasis& b, std::mt19937_64& rng, bool mean_zero = false) {
  std::normal_distribution<double> g;
  Eigen::VectorXd c(b.size());
  for (Index k = 0; k < b.size(); ++k) c(k) = g(rng) / (1.0 + 0.1 * k);
  if (mean_zero) c(0) = 0.0;
  return synthesize(b, c);
}

// Brute-force Besov norms of a single mode: blocks are phi_j(sqrt lambda) e_k.
double mode_inhom(const PartitionOfUnity& pou, double lambda, double ek_p, double s, double q, int j_max) {
  std::vector<double> terms;
  for (int j = 1; j <= j_max; ++j) terms.push_back(std::exp2(s * j) * pou.phi(j, std::sqrt(lambda)) * ek_p);
  double l = 0.0;
  if (std::isinf(q)) {
    for (double t : terms) l = std::max(l, t);
  } else {
    for (double t : terms) l += std::pow(t, q);
    l = std::pow(l, 1.0 / q);
  }
  return pou.psi(lambda) * ek_p + l;
}

struct Sample {
  double s, p, q;
};

// Hand-rolled generator over the exponent table.
Sample random_sample(std::mt19937_64& rng) {
  const double ss[] = {-0.5, 0.0, 0.5, 1.0};
  const double ps[] = {1.0, 1.5, 2.0, 4.0, kInf};
  const double qs[] = {1.0, 2.0, 3.0, kInf};
  return {ss[rng() % 4], ps[rng() % 5], qs[rng() % 4]};
}

}  // namespace

TEST_CASE("default block ranges") {
  for (const EigenBasis* b : {&interval(), &rectangle()}) {
    const int j_max = default_j_max(*b), j_min = default_j_min(*b);
    CHECK(j_min <= 0);
    CHECK(0 < j_max);
    CHECK(std::exp2(j_max - 1) < std::sqrt(b->lambda_max()));
    CHECK(j_min == -static_cast<int>(std::ceil(std::log2(1.0 / b->grid().h()))) - 2);
  }
  // Interval [0, pi]: lambda_2 = 1 so blocks j <= -1 vanish on e_2..e_K.
  CHECK(lowest_active_block(interval()) == -1);
}

TEST_CASE("besov_inhom examples") {
  const EigenBasis& b = interval();
  const PartitionOfUnity pou;
  const Eigen::VectorXd c = Eigen::VectorXd::Constant(b.grid_size(), -2.5);
  for (const double p : {1.0, 2.0, kInf})
    CHECK(besov_inhom(c, {0.7, p, 2.0}, pou, b).value ==
          doctest::Approx(2.5 * std::pow(pi, reciprocal_exponent(p))).epsilon(1e-12));

  // e_5 has sqrt(lambda) = 4 = 2^2.
  const Eigen::VectorXd e5 = b.modes().col(4);
  for (const double p : {1.0, 2.0, 4.0, kInf}) {
    const double ek = lp_norm(b.grid(), e5, p);
    for (const double q : {1.0, 2.0, kInf}) {
      const double oracle = mode_inhom(pou, 16.0, ek, 0.0, q, default_j_max(b));
      CHECK(besov_inhom(e5, {0.0, p, q}, pou, b).value == doctest::Approx(oracle).epsilon(1e-10));
    }
  }
  CHECK(besov_inhom(e5, {0.0, 2.0, kInf}, pou, b).value == doctest::Approx(pou.phi0(1.0)).epsilon(1e-10));

  std::mt19937_64 rng(1);
  Eigen::VectorXd c_high = Eigen::VectorXd::Zero(b.size());
  std::normal_distribution<double> g;
  for (Index k = 4; k < b.size(); ++k) c_high(k) = g(rng);
  const Eigen::VectorXd high = synthesize(b, c_high);
  CHECK(besov_inhom(high, {1.0, 2.0, 2.0}, pou, b).value >= besov_inhom(high, {0.0, 2.0, 2.0}, pou, b).value);
}

TEST_CASE("besov_hom examples") {
  const EigenBasis& b = interval();
  const PartitionOfUnity pou;
  const Eigen::VectorXd c = Eigen::VectorXd::Constant(b.grid_size(), 3.0);
  CHECK(besov_hom(c, {0.0, 2.0, 2.0}, pou, b).value < 1e-12);

  const Eigen::VectorXd e2 = b.modes().col(1);
  double oracle = 0.0;
  for (int j = -1; j <= 1; ++j) oracle += std::pow(pou.phi(j, 1.0), 2);
  const NormValue v = besov_hom(e2, {0.0, 2.0, 2.0}, pou, b);
  CHECK(v.value == doctest::Approx(std::sqrt(oracle)).epsilon(1e-10));
  CHECK(v.value == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(v.resolved);
  CHECK(v.tail_bound == 0.0);

  std::mt19937_64 rng(2);
  const Eigen::VectorXd f = band_limited(b, rng);
  const Eigen::VectorXd shifted = (f.array() + 17.0).matrix();
  for (const double p : {1.0, 2.0, kInf}) {
    const double a = besov_hom(f, {0.5, p, 2.0}, pou, b).value, s = besov_hom(shifted, {0.5, p, 2.0}, pou, b).value;
    CHECK(std::abs(a - s) <= 1e-10 * std::max(1.0, a));
  }
}

TEST_CASE("unresolved ranges are flagged") {
  const EigenBasis& b = interval();
  const PartitionOfUnity pou;
  std::mt19937_64 rng(3);
  const Eigen::VectorXd f = band_limited(b, rng);
  BesovParams p{0.0, 2.0, 2.0};
  p.j_max = 2;
  const NormValue v = besov_inhom(f, p, pou, b);
  CHECK_FALSE(v.resolved);
  CHECK_FALSE(v.note.empty());
  p.j_max = default_j_max(b) + 5;
  CHECK_THROWS(besov_inhom(f, p, pou, b));
}

TEST_CASE("semi-norms p_M and q_M") {
  const EigenBasis& b = interval();
  const PartitionOfUnity pou;
  const Eigen::VectorXd e2 = b.modes().col(1);
  const double l1 = lp_norm(b.grid(), e2, 1.0);
  // sqrt(lambda_2) = 1: only block 0 is active, and p_M sees blocks j >= 1.
  for (const int M : {0, 1, 4}) {
    double sup = 0.0;
    for (int j = 1; j <= default_j_max(b); ++j) sup = std::max(sup, std::exp2(M * j) * pou.phi(j, 1.0) * l1);
    // Inactive blocks hold roundoff, amplified by 2^{Mj}.
    const double roundoff = 1e-15 * std::exp2(M * default_j_max(b));
    CHECK(seminorm_pM(e2, M, pou, b).value == doctest::Approx(l1 + sup).epsilon(1e-10 + roundoff));
  }
  CHECK(l1 == doctest::Approx(2.0 * std::sqrt(2.0 / pi)).epsilon(1e-5));

  const Eigen::VectorXd c = Eigen::VectorXd::Constant(b.grid_size(), 1.0);
  const NormValue qc = seminorm_qM(c, 2, pou, b);
  CHECK(std::isinf(qc.value));
  CHECK(qc.note.find("not in Z") != std::string::npos);
  for (int M = 0; M <= 8; ++M) {
    const NormValue q = seminorm_qM(e2, M, pou, b);
    CHECK(std::isfinite(q.value));
    CHECK(q.value == doctest::Approx(2.0 * l1).epsilon(1e-10));
  }
  CHECK_THROWS(seminorm_pM(e2, -1, pou, b));
}

TEST_CASE("amalgam examples") {
  const Domain unit = Domain::interval(1.0);
  const Grid g = cell_centered_grid(unit, 64);
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(g.size());
  // Cells centered at m/4 clip to [0, 1/8) and [7/8, 1] at the ends.
  double oracle = 0.0;
  for (int m = 0; m <= 4; ++m) {
    double measure = 0.0;
    for (Index i = 0; i < g.size(); ++i)
      if (std::lround(g.nodes(i, 0) * 4.0) == m) measure += g.weights(i);
    oracle += std::sqrt(measure);
  }
  CHECK(oracle == doctest::Approx(1.5 + 2.0 * std::sqrt(0.125)).epsilon(1e-14));
  CHECK(amalgam_norm(g, one, {1.0, 2.0, 1.0 / 16}) == doctest::Approx(oracle).epsilon(1e-14));
  CHECK(cube_cells(g, 1.0 / 16).size() == 5);

  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  const Grid r = cell_centered_grid(Domain::rectangle(1.0, 2.0), 16, 32);
  Eigen::VectorXd f(r.size());
  for (Index i = 0; i < f.size(); ++i) f(i) = n(rng);
  for (const double p : {1.0, 2.0, 3.0, kInf})
    CHECK(amalgam_norm(r, f, {p, p, 0.01}) == doctest::Approx(lp_norm(r, f, p)).epsilon(1e-12));
  // The cube centered at the origin covers [0, 1] x [0, 2] once theta^{1/2} / 2 >= 2.
  for (const double q : {1.0, 2.0, kInf})
    CHECK(amalgam_norm(r, f, {1.0, q, 16.0}) == doctest::Approx(lp_norm(r, f, q)).epsilon(1e-12));
}

TEST_CASE("triple norm") {
  const Grid g = cell_centered_grid(Domain::interval(1.0), 64);
  OperatorKernel zero = identity_kernel(g);
  zero.matrix.setZero();
  CHECK(triple_norm(zero, g, 0.5, 1.0 / 16).value == 0.0);

  for (const double alpha : {0.5, 1.0, 2.0}) {
    const double theta = 1.0 / 16, side = 0.25;
    double oracle = 0.0;
    for (Index i = 0; i < g.size(); ++i) {
      const double x = g.nodes(i, 0);
      oracle = std::max(oracle, std::pow(std::abs(x - side * std::round(x / side)), alpha));
    }
    const TripleNormResult r = triple_norm(identity_kernel(g), g, alpha, theta);
    CHECK(r.converged);
    CHECK(r.value == doctest::Approx(oracle).epsilon(1e-8));
    CHECK(std::abs(r.value - std::pow(side / 2, alpha)) <= std::pow(side / 2, alpha) * alpha * g.h() / side * 2);
  }
}

TEST_CASE("property: homogeneity, triangle inequality and q-monotonicity") {
  std::mt19937_64 rng(5);
  const PartitionOfUnity pou;
  std::uniform_real_distribution<double> scale(-4.0, 4.0);
  for (const EigenBasis* basis : {&interval(), &rectangle()}) {
    const EigenBasis& b = *basis;
    for (int trial = 0; trial < 100; ++trial) {
      const Eigen::VectorXd f = band_limited(b, rng), g = band_limited(b, rng);
      const Eigen::VectorXd sum = f + g;
      const double c = scale(rng);
      const Sample x = random_sample(rng);
      const BesovParams params{x.s, x.p, x.q};

      const double fi = besov_inhom(f, params, pou, b).value, gi = besov_inhom(g, params, pou, b).value;
      CHECK(besov_inhom(Eigen::VectorXd(c * f), params, pou, b).value ==
            doctest::Approx(std::abs(c) * fi).epsilon(1e-12));
      CHECK(besov_inhom(sum, params, pou, b).value <= (fi + gi) * (1 + 1e-12));

      const double fh = besov_hom(f, params, pou, b).value, gh = besov_hom(g, params, pou, b).value;
      CHECK(besov_hom(Eigen::VectorXd(c * f), params, pou, b).value == doctest::Approx(std::abs(c) * fh).epsilon(1e-12));
      CHECK(besov_hom(sum, params, pou, b).value <= (fh + gh) * (1 + 1e-12));

      const AmalgamParams ap{x.p, std::isinf(x.q) ? 2.0 : x.q, 0.05};
      const double fa = amalgam_norm(b.grid(), f, ap), ga = amalgam_norm(b.grid(), g, ap);
      CHECK(amalgam_norm(b.grid(), Eigen::VectorXd(c * f), ap) == doctest::Approx(std::abs(c) * fa).epsilon(1e-12));
      CHECK(amalgam_norm(b.grid(), sum, ap) <= (fa + ga) * (1 + 1e-12));

      const int M = trial % 3;
      const double fp = seminorm_pM(f, M, pou, b).value, gp = seminorm_pM(g, M, pou, b).value;
      CHECK(seminorm_pM(sum, M, pou, b).value <= (fp + gp) * (1 + 1e-12));

      double previous = kInf;
      for (const double q : {1.0, 1.5, 2.0, 4.0, kInf}) {
        const double v = besov_inhom(f, {x.s, x.p, q}, pou, b).value;
        CHECK(v <= previous * (1 + 1e-12));
        previous = v;
      }
    }
  }
}

TEST_CASE("block decomposition shares work across exponents") {
  const EigenBasis& b = rectangle();
  const PartitionOfUnity pou;
  std::mt19937_64 rng(6);
  const Eigen::VectorXd f = band_limited(b, rng, true);
  const int j_lo = default_j_min(b), j_hi = default_j_max(b);
  const BlockPieces pieces = decompose_blocks(f, pou, b, j_lo, j_hi);
  CHECK(pieces.coverage_defect < 1e-10);
  // Blocks reconstruct P f.
  CHECK((pieces.pieces.rowwise().sum() - f).norm() < 1e-10 * f.norm());
  for (const double p : {1.0, 2.0, kInf}) {
    const BlockNorms shared = pieces.norms(b.grid(), p);
    const BlockNorms direct = block_norms(f, p, pou, b, j_lo, j_hi);
    for (int j = j_lo; j <= j_hi; ++j) CHECK(shared.block(j) == doctest::Approx(direct.block(j)).epsilon(1e-14));
    const NormValue v = besov_hom_from(shared, 0.5, 2.0, j_lo, j_hi);
    CHECK(v.value == doctest::Approx(besov_hom(f, {0.5, p, 2.0}, pou, b).value).epsilon(1e-12));
  }
}

TEST_CASE("norm CSV rows") {
  std::ostringstream out;
  write_norm_csv_header(out);
  write_norm_csv_row(out, {"besov", "s=0,p=2,q=inf", 0.5, 0.0});
  CHECK(out.str() == "norm_id,params,value,tail_bound\nbesov,\"s=0,p=2,q=inf\",0.5,0\n");
}

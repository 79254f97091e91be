#include "nb/experiments.hpp"
#include "experiment_util.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <cmath>
#include <array>
#include <complex>
#include <numbers>

namespace nb {

using namespace detail;

namespace {

// int x^n e^{-x^2} dx over the line.
double gaussian_moment(int n) { return n % 2 ? 0.0 : std::tgamma((n + 1) / 2.0); }

// Coefficients a_0..a_M (a_M = 1) of p(x) e^{-x^2} with moments 0..M-1 equal
// to zero.
Eigen::VectorXd vanishing_moment_polynomial(int order) {
  Eigen::VectorXd a = Eigen::VectorXd::Zero(order + 1);
  a(order) = 1.0;
  if (order == 0) return a;
  Eigen::MatrixXd hankel(order, order);
  Eigen::VectorXd rhs(order);
  for (int m = 0; m < order; ++m) {
    for (int k = 0; k < order; ++k) hankel(m, k) = gaussian_moment(k + m);
    rhs(m) = -gaussian_moment(order + m);
  }
  a.head(order) = hankel.ldlt().solve(rhs);
  return a;
}

struct LineSamples {
  double radius = 0.0;
  double dx = 0.0;
  std::vector<double> x;
  std::vector<double> xi;  // FFT frequencies
};

LineSamples line_grid(double radius, double dx) {
  LineSamples s;
  s.radius = radius;
  s.dx = dx;
  const auto n = static_cast<std::size_t>(std::llround(2.0 * radius / dx));
  s.x.resize(n);
  s.xi.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.x[i] = -radius + dx * static_cast<double>(i);
    const long k = i < n / 2 ? static_cast<long>(i) : static_cast<long>(i) - static_cast<long>(n);
    s.xi[i] = 2.0 * std::numbers::pi * static_cast<double>(k) / (static_cast<double>(n) * dx);
  }
  return s;
}

struct BlockResult {
  double l1 = 0.0;
  double leakage = 0.0;  // share of the L^1 mass with |x| > R/2
};

BlockResult line_block(const LineSamples& s, const std::vector<std::complex<double>>& spectrum,
                       const PartitionOfUnity& pou, int j, Eigen::FFT<double>& fft) {
  std::vector<std::complex<double>> filtered(spectrum.size());
  for (std::size_t i = 0; i < spectrum.size(); ++i) filtered[i] = spectrum[i] * pou.phi(j, std::abs(s.xi[i]));
  std::vector<std::complex<double>> g;
  fft.inv(g, filtered);
  BlockResult out;
  double outer = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double v = std::abs(g[i]) * s.dx;
    out.l1 += v;
    if (std::abs(s.x[i]) > 0.5 * s.radius) outer += v;
  }
  out.leakage = out.l1 > 0.0 ? outer / out.l1 : 0.0;
  return out;
}

}  // namespace

EstimateReport exp_moment_decay(const ExperimentSpec& spec) {
  EstimateReport r;
  const PartitionOfUnity pou(spec.variant);
  const double base_radius = param_double(spec, "R");
  const double leakage_bound = param_double(spec, "leakage");
  double radius = base_radius;
  const double dx = param_double(spec, "dx");
  const int j_lo = param_int(spec, "j_lo"), j_hi = param_int(spec, "j_hi");
  const int max_order = param_int(spec, "max_order");
  const double tolerance = param_double(spec, "tolerance");
  require(j_hi - j_lo >= 3, "exp_moment_decay: need at least 4 blocks");

  auto& table = r.table("blocks", {"j", "M", "l1_norm", "leakage"});
  Eigen::FFT<double> fft;
  for (int order = 0; order <= max_order; ++order) {
    const Eigen::VectorXd a = vanishing_moment_polynomial(order);
    radius = base_radius;
    std::vector<double> js, logs;
    std::vector<std::array<double, 4>> rows;
    for (int attempt = 0; attempt < 3; ++attempt) {
      const LineSamples s = line_grid(radius, dx);
      std::vector<std::complex<double>> f(s.x.size());
      double moment_defect = 0.0;
      for (std::size_t i = 0; i < f.size(); ++i) {
        double p = 0.0;
        for (int k = order; k >= 0; --k) p = p * s.x[i] + a(k);
        f[i] = p * std::exp(-s.x[i] * s.x[i]);
      }
      for (int m = 0; m < order; ++m) {
        double moment = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i) moment += std::pow(s.x[i], m) * f[i].real() * dx;
        moment_defect = std::max(moment_defect, std::abs(moment));
      }
      if (attempt == 0 && order > 0)
        r.check("M=" + std::to_string(order) + ": max |int x^m f| for m < M", moment_defect, "<=", 1e-10);
      std::vector<std::complex<double>> spectrum;
      fft.fwd(spectrum, f);
      js.clear();
      logs.clear();
      rows.clear();
      double leakage = 0.0;
      for (int j = j_lo; j <= j_hi; ++j) {
        const BlockResult b = line_block(s, spectrum, pou, j, fft);
        leakage = std::max(leakage, b.leakage);
        rows.push_back({double(j), double(order), b.l1, b.leakage});
        js.push_back(j);
        logs.push_back(std::log2(b.l1));
      }
      if (leakage <= leakage_bound) break;
      r.note("M=" + std::to_string(order) + ": leakage " + fmt(leakage) + " at R=" + fmt(radius) + ", doubling R");
      radius *= 2.0;
    }
    for (const auto& row : rows) table.add({row[0], row[1], row[2], row[3]});
    r.check("M=" + std::to_string(order) + ": outer-half L^1 share (periodization leakage)", rows.empty() ? 0.0 : [&] {
      double worst = 0.0;
      for (const auto& row : rows) worst = std::max(worst, row[3]);
      return worst;
    }(), "<=", leakage_bound);
    const Fit f = least_squares(js, logs, "M=" + std::to_string(order) + ": log2 ||phi_j(sqrt H) f||_1 vs j");
    r.fits.push_back(f);
    if (order < max_order) {
      r.check("M=" + std::to_string(order) + ": |decay exponent - M|", std::abs(f.slope - order), "<", tolerance);
    } else {
      r.check("M=" + std::to_string(order) + ": decay exponent", f.slope, ">=", order - tolerance);
    }
  }
  r.note("H = -d^2/dx^2 on the line; blocks applied as Fourier multipliers phi_j(|xi|) on a periodic grid");
  return r;
}

}  // namespace nb

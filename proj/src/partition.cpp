#include "nb/partition.hpp"

#include <algorithm>
#include <cmath>

namespace nb {

std::string to_string(PartitionVariant variant) {
  switch (variant) {
    case PartitionVariant::standard: return "standard";
    case PartitionVariant::perturbed: return "perturbed";
    case PartitionVariant::broken: return "broken";
  }
  return "unknown";
}

PartitionVariant partition_variant_from_string(const std::string& name) {
  if (name == "standard") return PartitionVariant::standard;
  if (name == "perturbed") return PartitionVariant::perturbed;
  if (name == "broken") return PartitionVariant::broken;
  throw std::invalid_argument("unknown partition variant '" + name + "'");
}

namespace {

// exp(-1/t) for t > 0, else 0.
double flat(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }

// C-infinity step: 0 for t <= 0, 1 for t >= 1.
double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = flat(t), b = flat(1.0 - t);
  return a / (a + b);
}

}  // namespace

PartitionOfUnity::PartitionOfUnity(PartitionVariant variant) : variant_(variant) {
  plateau_ = variant == PartitionVariant::perturbed ? 1.2 : 1.0;
  inner_dilation_ = variant == PartitionVariant::broken ? 2.5 : 2.0;
}

double PartitionOfUnity::chi(double lambda) const {
  if (lambda <= plateau_) return 1.0;
  if (lambda >= 2.0) return 0.0;
  return smooth_step((2.0 - lambda) / (2.0 - plateau_));
}

double PartitionOfUnity::phi0(double lambda) const {
  if (lambda <= 0.0) return 0.0;
  return chi(lambda) - chi(inner_dilation_ * lambda);
}

double PartitionOfUnity::phi(int j, double lambda) const { return phi0(std::ldexp(lambda, -j)); }

double PartitionOfUnity::psi(double mu) const { return mu <= 0.0 ? 1.0 : chi(std::sqrt(mu)); }

double PartitionOfUnity::Phi(int j, double lambda) const {
  return phi(j - 1, lambda) + phi(j, lambda) + phi(j + 1, lambda);
}

int PartitionOfUnity::top_block(double lambda) {
  int exponent = 0;
  const double mantissa = std::frexp(lambda, &exponent);  // lambda = m 2^e, m in [0.5, 1)
  // lambda in [2^{e-1}, 2^e): the top block is e, or e - 1 at an exact power of two.
  return mantissa == 0.5 ? exponent - 1 : exponent;
}

PartitionOfUnity make_partition(PartitionVariant variant) { return PartitionOfUnity(variant); }

double phi_j(const PartitionOfUnity& pou, int j, double lambda) { return pou.phi(j, lambda); }

PartitionCheck check_partition(const PartitionOfUnity& pou, std::span<const double> samples) {
  PartitionCheck report;
  double worst = -1.0;
  for (const double lambda : samples) {
    if (!(lambda > 0.0)) continue;
    const int top = PartitionOfUnity::top_block(lambda);
    double dyadic = 0.0, high = 0.0;
    for (int j = top - 4; j <= top + 1; ++j) {
      const double v = pou.phi(j, lambda);
      dyadic += v;
      if (j >= 1) high += v;
    }
    const double d1 = std::abs(dyadic - 1.0);
    const double d2 = std::abs(pou.psi(lambda * lambda) + high - 1.0);
    report.dyadic_deviation = std::max(report.dyadic_deviation, d1);
    report.psi_deviation = std::max(report.psi_deviation, d2);
    if (std::max(d1, d2) > worst) {
      worst = std::max(d1, d2);
      report.worst_lambda = lambda;
    }
  }
  const double step = 1e-4;
  for (double x = 0.25 + step; x < 2.25; x += step) {
    const double second = (pou.phi0(x + step) - 2.0 * pou.phi0(x) + pou.phi0(x - step)) / (step * step);
    report.max_second_difference = std::max(report.max_second_difference, std::abs(second));
  }
  report.pass = report.dyadic_deviation < 1e-10 && report.psi_deviation < 1e-10;
  return report;
}

std::vector<double> log_spaced(double first, double last, int count) {
  require(first > 0.0 && last > 0.0 && count >= 1, "log_spaced: invalid range");
  std::vector<double> out(static_cast<std::size_t>(count));
  if (count == 1) {
    out[0] = first;
    return out;
  }
  const double a = std::log(first), b = std::log(last);
  for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (count - 1));
  out.front() = first;
  out.back() = last;
  return out;
}

}  // namespace nb

#pragma once

#include "nb/types.hpp"

#include <span>
#include <string>
#include <vector>

namespace nb {

/// standard: chi = 1 on [0, 1]; perturbed: chi = 1 on [0, 1.2]. broken uses
/// phi_0(l) = chi(l) - chi(2.5 l), whose support [0.4, 2] violates the dyadic
/// identity (negative control only).
enum class PartitionVariant { standard, perturbed, broken };

std::string to_string(PartitionVariant variant);
PartitionVariant partition_variant_from_string(const std::string& name);

/// Littlewood-Paley system {psi} u {phi_j}. Built from a smooth cutoff chi with
/// chi = 1 on [0, a] and supp chi in [0, 2]:
///   phi_0(l) = chi(l) - chi(2 l),   phi_j(l) = phi_0(2^-j l),   psi(m) = chi(sqrt m).
/// The dyadic sum telescopes, so both partition identities hold by construction.
class PartitionOfUnity {
 public:
  explicit PartitionOfUnity(PartitionVariant variant = PartitionVariant::standard);

  PartitionVariant variant() const { return variant_; }
  /// Number of continuous derivatives witnessed by sampled difference bounds.
  int smoothness_witness() const { return 2; }

  double chi(double lambda) const;
  double phi0(double lambda) const;
  double phi(int j, double lambda) const;
  double psi(double mu) const;
  /// Phi_j = phi_{j-1} + phi_j + phi_{j+1}; equals 1 on supp phi_j.
  double Phi(int j, double lambda) const;

  /// Largest j with 2^{j-1} < lambda, i.e. the highest block that can be
  /// nonzero at lambda (lambda > 0).
  static int top_block(double lambda);

 private:
  PartitionVariant variant_;
  double plateau_;
  double inner_dilation_;
};

PartitionOfUnity make_partition(PartitionVariant variant);

/// phi_0(2^-j lambda).
double phi_j(const PartitionOfUnity& pou, int j, double lambda);

struct PartitionCheck {
  double dyadic_deviation = 0.0;  // max |sum_j phi_j(l) - 1|
  double psi_deviation = 0.0;     // max |psi(l^2) + sum_{j>=1} phi_j(l) - 1|
  double worst_lambda = 0.0;
  double max_second_difference = 0.0;  // sampled |phi_0''| bound on a 1e-4 grid
  bool pass = false;
};

/// Validates both partition identities on the given samples; pass iff both
/// deviations are below 1e-10.
PartitionCheck check_partition(const PartitionOfUnity& pou, std::span<const double> samples);

std::vector<double> log_spaced(double first, double last, int count);

}  // namespace nb

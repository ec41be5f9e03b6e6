#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "dsd/errors.hpp"

// Core kernel type for determinantal sampling designs on a finite population
// {0, ..., N-1}. A valid kernel is a Hermitian matrix whose spectrum lies in
// [0, 1]. The sampling design it induces satisfies
//   pr(s is contained in the sample) = det(K restricted to s),
// so the diagonal holds the first order inclusion probabilities and
//   pi_kl = K_kk K_ll - |K_kl|^2   (k != l)
// the second order ones.

namespace dsd {

namespace tol {
inline constexpr double hermitian = 1e-10;       // max |K_kl - conj(K_lk)|
inline constexpr double eigen_slack = 1e-9;      // spectrum may stick out this far
inline constexpr double projection = 1e-9;       // default for is_projection
inline constexpr double stratification = 1e-9;   // default |K_kl| cutoff
inline constexpr double imag_negligible = 1e-12; // "this matrix is real" cutoff
}  // namespace tol

class Kernel {
 public:
  // Sole constructor path. Checks Hermitian symmetry (tol::hermitian) and the
  // spectrum (within tol::eigen_slack of [0, 1], then clamped). The stored
  // matrix is the Hermitian average (K + K^H)/2 of the input.
  // Throws EmptyDomain, NotHermitian, NotContracting.
  static Kernel validate(const Eigen::MatrixXcd& entries);

  int size() const { return static_cast<int>(entries_.rows()); }
  const Eigen::MatrixXcd& entries() const { return entries_; }

  // Ascending, clamped to [0, 1].
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  // Columns are the eigenvectors matching eigenvalues().
  const Eigen::MatrixXcd& eigenvectors() const { return eigenvectors_; }

  double trace() const { return entries_.real().trace(); }

  // Max-norm test of K^2 = K. Projection kernels are exactly the fixed size
  // designs (the sample size is then rank(K) almost surely).
  bool is_projection(double tolerance = tol::projection) const;

  bool is_real(double tolerance = tol::imag_negligible) const;

  // Content hash of the entries, used to stamp samples with their origin.
  std::uint64_t id() const;

 private:
  Kernel() = default;
  Eigen::MatrixXcd entries_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXcd eigenvectors_;
};

struct InclusionProbs {
  Eigen::VectorXd first_order;   // pi_k
  Eigen::MatrixXd second_order;  // pi_kl off the diagonal, pi_k on it
  Eigen::MatrixXd delta;         // covariance matrix of the indicators
};

// First and second order inclusion probabilities plus the indicator
// covariances delta_kl = pi_kl - pi_k pi_l (diagonal pi_k (1 - pi_k)).
// Entrywise this equals (I - K) .* conj(K). Tiny negative pi_kl from
// cancellation are clamped to zero.
InclusionProbs inclusion_probs(const Kernel& kernel);

struct SizeMoments {
  double expected;
  double variance;
};

// Sample size is distributed as a sum of independent Bernoulli(lambda_i) over
// the spectrum, so E = trace(K) and var = sum lambda_i (1 - lambda_i).
SizeMoments size_moments(const Kernel& kernel);

// Kernel of the complementary design: S ~ K implies U \ S ~ I - K.
Kernel complement(const Kernel& kernel);

// Restriction K_|A. `units` must be sorted, unique, within range, nonempty.
// The restricted design is the law of S intersected with A.
// Throws OutOfRange, EmptyDomain.
Kernel restrict_to(const Kernel& kernel, const std::vector<int>& units);

// Relabels the population: entry (k, l) of the result is K(perm[k], perm[l]),
// so unit k of the new kernel is unit perm[k] of the old one. `perm` must be
// a permutation of 0..N-1. Throws OutOfRange.
Kernel permute_units(const Kernel& kernel, const std::vector<int>& perm);

// Partition of the population into groups that are mutually uncorrelated
// under the design: connected components of the graph with an edge wherever
// |K_kl| > tolerance. Components are listed by smallest member, ascending
// inside each component. The design restricted to distinct components is
// independent across them.
std::vector<std::vector<int>> stratification(const Kernel& kernel,
                                             double tolerance = tol::stratification);

}  // namespace dsd

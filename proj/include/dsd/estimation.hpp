#pragma once

#include <vector>

#include <Eigen/Dense>

#include "dsd/kernel.hpp"
#include "dsd/sampler.hpp"

// Linear estimation of population totals under a determinantal design and
// the exact second order machinery that goes with it: closed form MSE,
// unbiased plug-in variance estimators, the perfect estimation criterion and
// exponential tail bounds.

namespace dsd {

struct Population {
  Eigen::VectorXd y;         // study variable
  Eigen::MatrixXd aux;       // N x Q auxiliary variables, may have 0 columns
  Eigen::VectorXd weights;   // estimation weights, strictly positive
  Eigen::VectorXd target_pi; // intended inclusion probabilities, may be empty

  int size() const { return static_cast<int>(y.size()); }

  // Dimension and positivity checks. Throws OutOfRange.
  void check() const;

  // Uniform weights, no auxiliaries.
  static Population from_y(Eigen::VectorXd y);
};

// t_hat = sum over sampled units of w_k y_k.
double linear_total(const Sample& sample, const Population& pop);

// Horvitz-Thompson estimate: weights 1/K_kk, unbiased for the total whatever
// the kernel. Throws ZeroInclusion if some K_kk <= 0.
double ht_total(const Sample& sample, const Population& pop, const Kernel& kernel);

struct MseDecomposition {
  double mse = 0.0;
  double variance = 0.0;
  double bias = 0.0;  // signed bias of the estimator, mse = variance + bias^2
};

// Exact moments of t_hat = sum_k w_k y_k 1{k in S} under the design:
//   variance = z^T delta z with z = w .* y,
//   bias     = sum_k (w_k pi_k - 1) y_k.
MseDecomposition mse_exact(const Kernel& kernel, const Population& pop);

// Same variance through the weighted matrix inner product
// <<I-K, K>> = <conj(Z^1/2) (I-K) Z^1/2, Z^1/2 K conj(Z^1/2)> with
// Z = diag(w .* y) and complex square roots for negative entries. Agrees
// with mse_exact's variance to rounding; kept as an independent route.
double variance_geometric(const Kernel& kernel, const Population& pop);

// Unbiased Horvitz-Thompson variance estimator
//   sum_{k,l in s} w_k y_k w_l y_l delta_kl / pi_kl.
// Throws ZeroJointInclusion if a sampled pair has pi_kl <= 0.
double var_estimate_ht(const Sample& sample, const Population& pop, const Kernel& kernel);

// Sen-Yates-Grundy variance estimator for fixed size designs,
//   -(1/2) sum_{k != l in s} (w_k y_k - w_l y_l)^2 delta_kl / pi_kl,
// nonnegative whenever the design has negative indicator correlations.
// Throws NotFixedSize unless the kernel is a projection, ZeroJointInclusion
// as above.
double var_estimate_syg(const Sample& sample, const Population& pop, const Kernel& kernel);

struct PerfectEstimationReport {
  bool is_perfect = false;       // all three conditions hold
  bool projection = false;       // K is a projection
  bool commutes = false;         // K commutes with diag(y_k / pi_k)
  bool integer_strata = false;   // every level set stratum has integral size
  std::vector<std::vector<int>> strata;  // level sets of y_k / pi_k
};

// Tests whether the Horvitz-Thompson estimator of t_y has zero MSE under the
// design: K must be a projection commuting with Z = diag(y_k / pi_k), which
// forces a stratification by the level sets of y_k / pi_k with fixed sample
// size inside each stratum. Throws ZeroInclusion if some K_kk <= 0.
PerfectEstimationReport perfect_estimation_check(const Kernel& kernel, const Population& pop,
                                                 double tolerance = 1e-9);

struct ConcentrationBound {
  double one_sided = 0.0;  // bound on pr(t_hat - E t_hat > a)
  double two_sided = 0.0;  // bound on pr(|t_hat - E t_hat| > a)
  bool projection_case = false;
};

// Exponential tail bounds for t_hat = sum w_k y_k 1{k in S} at deviation
// a > 0, with C = max_k |w_k y_k|:
//   general kernel:    3 exp(-a^2 / (16 (aC + 2 mu C^2))),  mu = trace(K),
//                      5 exp(-a^2 / (16^2 (aC + 2 mu C^2))) two sided;
//   projection rank n: exp(-a^2 / (8 n C^2)) and twice that two sided.
ConcentrationBound concentration_bound(const Kernel& kernel, const Population& pop, double a);

}  // namespace dsd

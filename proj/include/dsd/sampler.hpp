#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "dsd/kernel.hpp"
#include "dsd/rng.hpp"

// Exact samplers for determinantal designs and the small-N brute force
// distribution used to cross check them.

namespace dsd {

struct Sample {
  std::vector<int> units;        // sorted ascending
  std::uint64_t seed = 0;        // seed of the Rng stream that produced it
  std::uint64_t kernel_id = 0;   // Kernel::id() of the design sampled from
};

// Draws one sample from a projection kernel (fixed size rank(K)).
// Sequential conditional sampling on an orthonormal column basis V of the
// range of K: a unit k is drawn with probability equal to its residual mass
// ||v_k||^2 - sum_j |<e_j, v_k>|^2 (over the basis e_j built so far, scaled
// by the number of units left to draw), then the basis is extended by
// Gram-Schmidt with the row v_k.
// Throws NotProjection; NumericalBreakdown if residual mass drifts by more
// than 1e-9 or a Gram-Schmidt step collapses twice in a row.
Sample sample_projection(const Kernel& kernel, Rng& rng);

// Draws one sample from any valid kernel: Bernoulli(lambda_i) thinning of the
// spectrum followed by projection sampling on the selected eigenvectors.
Sample sample_general(const Kernel& kernel, Rng& rng);

struct ExactDistribution {
  int n_units = 0;
  // pmf[mask] = pr(sample == mask), bit k of mask set iff unit k is in it.
  std::vector<double> pmf;

  double prob(const std::vector<int>& units) const;
};

// Full distribution over all 2^N subsets by Moebius inversion of
// pr(s subset of S) = det(K_|s). Hard limit N <= 20 (memory and time grow as
// 2^N); in practice N <= 12 stays instant. Probabilities in [-1e-10, 0) are
// clamped to zero, anything lower raises NegativeProbability.
// Throws TooLarge, NegativeProbability.
ExactDistribution exact_distribution(const Kernel& kernel);

struct SizeLaw {
  Eigen::VectorXd pmf;  // pmf[m] = pr(|S| = m), m = 0..N
};

// Distribution of the sample size: Poisson binomial with the spectrum as
// success probabilities, computed by the O(N^2) convolution recurrence.
SizeLaw size_law(const Kernel& kernel);

}  // namespace dsd

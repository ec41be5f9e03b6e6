#pragma once

#include <vector>

#include <Eigen/Dense>

#include "dsd/constructions.hpp"
#include "dsd/estimation.hpp"
#include "dsd/kernel.hpp"

// Design optimization for multi-purpose surveys: the balanced objective
// (summed estimator variances over the auxiliary variables), the rank one
// kernel that minimizes it when the mean sample size is at most one, the
// ordering heuristic that sorts units before running the pivot construction,
// and a greedy diagonal-preserving rotation descent.

namespace dsd {

// sum_q (z^q)^T delta (z^q) with z^q = weights .* aux column q and delta the
// indicator covariance matrix of the kernel. Equals the summed variances of
// the linear estimators of the auxiliary totals; zero auxiliaries give 0.
// Throws OutOfRange on size mismatch.
double balanced_objective(const Kernel& kernel, const Population& pop,
                          const Eigen::VectorXd& weights);
// Same with the population's own weights.
double balanced_objective(const Kernel& kernel, const Population& pop);

// Rank one kernel sqrt(pi) sqrt(pi)^T for mean sample size sum(pi) <= 1.
// Draws at most one unit: pr({k}) = pi_k, pr(empty) = 1 - sum(pi), and all
// joint inclusion probabilities vanish. Among contracting kernels with this
// diagonal it minimizes the balanced objective when the auxiliaries are
// nonnegative (a warning is printed to stderr otherwise).
// Throws OutOfRange (negative pi), SumExceedsOne.
Kernel rank1_optimal(const Eigen::VectorXd& pi, const Population& pop);
// Same without the auxiliary sign warning.
Kernel rank1_optimal(const Eigen::VectorXd& pi);

struct OrderedProjection {
  Kernel kernel;           // pivot projection built on the sorted diagonal
  std::vector<int> order;  // order[i] = original unit at sorted position i,
                           // so kernel entry (i, i) equals pi[order[i]]
  SchurHornState state;
};

// Sorts the units by z_k = weights_k * aux(k, aux_index) ascending; values
// within 1e-12 of the overall scale of each other count as tied and keep
// unit order. Runs the pivot projection construction on the permuted pi.
// Sorting groups units with close z, which the construction then correlates
// negatively, shrinking the variance for that auxiliary. Estimates on the
// returned kernel refer to sorted positions; map position i back through
// order[i]. Throws OutOfRange (bad aux index or size mismatch) and whatever
// the pivot construction raises.
OrderedProjection ordered_projection(const Eigen::VectorXd& pi, const Population& pop,
                                     int aux_index);

struct RotationParams {
  int k = 0;  // indices of the rotation plane, defaults for a 2x2 block
  int l = 1;
  double t = 0.0;          // tangent of the rotation angle
  double sin_theta = 1.0;  // 1 / sqrt(1 + t^2)
  double cos_theta = 0.0;  // t * sin_theta
};

// Tangent solve for a 2x2 Hermitian block [[a1, a21], [a2, .]] (a21 its real
// part): find t with the rotation [[sin, -cos], [cos, sin]] mapping the
// diagonal (a1, a2) to (pi1, a1 + a2 - pi1). Roots
//   t = (a21 +- sqrt(a21^2 - (a1 - pi1)(a2 - pi1))) / (a2 - pi1);
// the smaller |t| is returned (closest to the identity), the + branch on
// ties. Requires a real root, guaranteed when pi1 lies between a1 and a2.
// Throws OutOfRange (a2 = pi1), NoRealRoot (discriminant < -1e-12).
RotationParams rotation_solve(double a1, double a2, double a21, double pi1);

// K -> W K W^T with the rotation of `params` embedded at rows/columns (k, l).
// Preserves the spectrum exactly and, when params came from rotation_solve
// or the greedy tangent, the rest of the diagonal too.
// Throws OutOfRange on bad indices.
Eigen::MatrixXcd apply_rotation(const Eigen::MatrixXcd& entries, const RotationParams& params);

struct GreedyRotations {
  Kernel kernel;
  double objective = 0.0;  // balanced objective of `kernel`
  int sweeps = 0;          // sweeps run, including the final no-move one
  long accepted = 0;       // rotations applied
};

// Greedy descent on the balanced objective over diagonal-preserving Givens
// rotations. Each sweep visits ordered pairs (k, l) lexicographically, skips
// pairs with |K_kk - K_ll| <= 1e-12, forms the nontrivial diagonal-fixing
// tangent t = 2 Re(K_kl) / (K_ll - K_kk) and applies the rotation only when
// the objective drops by more than 1e-14. Stops after a sweep with no
// accepted move or after max_sweeps. The diagonal and the spectrum of the
// output match the input to rounding; the objective never increases.
// Throws OutOfRange on size mismatch.
GreedyRotations greedy_rotations(const Kernel& kernel, const Population& pop,
                                 const Eigen::VectorXd& weights, int max_sweeps);
// Same with the population's own weights.
GreedyRotations greedy_rotations(const Kernel& kernel, const Population& pop, int max_sweeps);

}  // namespace dsd

#include "dsd/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <iostream>
#include <numeric>
#include <sstream>

namespace dsd {

namespace {

constexpr double kEligible = 1e-12;  // diagonal gap below which a pair is skipped
constexpr double kAccept = 1e-14;    // required objective decrease

// Objective evaluated straight off the entries, so greedy candidates do not
// pay a spectral validation per trial. Columns of z are weights .* aux.
double objective_entries(const Eigen::MatrixXcd& m, const Eigen::MatrixXd& z) {
  const int n = static_cast<int>(m.rows());
  double total = 0.0;
  for (int q = 0; q < z.cols(); ++q) {
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
      const double pik = std::clamp(m(k, k).real(), 0.0, 1.0);
      acc += z(k, q) * z(k, q) * pik * (1.0 - pik);
      for (int l = k + 1; l < n; ++l) acc -= 2.0 * z(k, q) * z(l, q) * std::norm(m(k, l));
    }
    total += acc;
  }
  return total;
}

Eigen::MatrixXd weighted_aux(const Population& pop, const Eigen::VectorXd& weights) {
  if (weights.size() != pop.size())
    throw OutOfRange("weights length does not match population");
  return weights.asDiagonal() * pop.aux;
}

void rotate_in_place(Eigen::MatrixXcd& m, int k, int l, double s, double c) {
  const Eigen::VectorXcd row_k = m.row(k);
  const Eigen::VectorXcd row_l = m.row(l);
  m.row(k) = s * row_k - c * row_l;
  m.row(l) = c * row_k + s * row_l;
  const Eigen::VectorXcd col_k = m.col(k);
  const Eigen::VectorXcd col_l = m.col(l);
  m.col(k) = s * col_k - c * col_l;
  m.col(l) = c * col_k + s * col_l;
}

}  // namespace

double balanced_objective(const Kernel& kernel, const Population& pop,
                          const Eigen::VectorXd& weights) {
  pop.check();
  if (kernel.size() != pop.size()) throw OutOfRange("kernel and population sizes differ");
  if (weights.size() != pop.size()) throw OutOfRange("weights length does not match population");
  if (pop.aux.cols() == 0) return 0.0;

  const InclusionProbs probs = inclusion_probs(kernel);
  double total = 0.0;
  for (Eigen::Index q = 0; q < pop.aux.cols(); ++q) {
    const Eigen::VectorXd z = weights.cwiseProduct(pop.aux.col(q));
    total += z.dot(probs.delta * z);
  }
  return total;
}

double balanced_objective(const Kernel& kernel, const Population& pop) {
  return balanced_objective(kernel, pop, pop.weights);
}

Kernel rank1_optimal(const Eigen::VectorXd& pi, const Population& pop) {
  pop.check();
  if (pi.size() != pop.size()) throw OutOfRange("pi length does not match population");
  if (pop.aux.size() != 0 && pop.aux.minCoeff() < 0.0)
    std::cerr << "rank1_optimal: negative auxiliary values; the optimality of the"
                 " rank one kernel is only guaranteed for nonnegative auxiliaries\n";
  return rank1_optimal(pi);
}

Kernel rank1_optimal(const Eigen::VectorXd& pi) {
  const Eigen::Index n = pi.size();
  if (n == 0) throw EmptyDomain("rank1_optimal needs at least one unit");
  double sum = 0.0;
  Eigen::VectorXd b(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    if (pi[k] < -1e-12 || !std::isfinite(pi[k]))
      throw OutOfRange("rank1_optimal: pi entries must be nonnegative");
    const double p = std::max(pi[k], 0.0);
    sum += p;
    b[k] = std::sqrt(p);
  }
  if (sum > 1.0 + 1e-12) {
    std::ostringstream msg;
    msg << "rank1_optimal: mean sample size " << sum << " exceeds one";
    throw SumExceedsOne(msg.str());
  }
  const Eigen::MatrixXd k = b * b.transpose();
  return Kernel::validate(k.cast<std::complex<double>>());
}

OrderedProjection ordered_projection(const Eigen::VectorXd& pi, const Population& pop,
                                     int aux_index) {
  pop.check();
  const int n = pop.size();
  if (pi.size() != n) throw OutOfRange("pi length does not match population");
  if (aux_index < 0 || aux_index >= pop.aux.cols())
    throw OutOfRange("ordered_projection: auxiliary index out of range");

  const Eigen::VectorXd z = pop.weights.cwiseProduct(pop.aux.col(aux_index));
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return z[a] < z[b]; });
  // Runs of sorted values separated by gaps below 1e-12 of the overall scale
  // count as ties and are put back in unit order. A mathematically constant z
  // (proportional weights on its own variable) then yields the identity
  // instead of a permutation of rounding dust.
  const double cut = 1e-12 * z.cwiseAbs().maxCoeff();
  size_t run = 0;
  for (size_t i = 1; i <= order.size(); ++i) {
    if (i == order.size() || z[order[i]] - z[order[i - 1]] > cut) {
      std::sort(order.begin() + static_cast<std::ptrdiff_t>(run),
                order.begin() + static_cast<std::ptrdiff_t>(i));
      run = i;
    }
  }

  Eigen::VectorXd sorted_pi(n);
  for (int i = 0; i < n; ++i) sorted_pi[i] = pi[order[i]];

  SchurHornProjection built = schur_horn_projection(sorted_pi);
  OrderedProjection out{std::move(built.kernel), std::move(order), std::move(built.state)};
  return out;
}

RotationParams rotation_solve(double a1, double a2, double a21, double pi1) {
  const double den = a2 - pi1;
  if (std::abs(den) < 1e-14)
    throw OutOfRange("rotation_solve: a2 equals the target diagonal entry");
  double disc = a21 * a21 - (a1 - pi1) * den;
  if (disc < -1e-12) {
    std::ostringstream msg;
    msg << "rotation_solve: discriminant " << disc << " is negative";
    throw NoRealRoot(msg.str());
  }
  const double root = std::sqrt(std::max(disc, 0.0));

  double t;
  if (a21 == 0.0) {
    t = root / den;  // equal magnitude roots; keep the + branch
  } else {
    // Larger root by the sign-matched formula, smaller one via their product
    // (a1 - pi1) / den; this avoids cancellation in the small root.
    const double big = (a21 + std::copysign(root, a21)) / den;
    t = (a1 - pi1) / (den * big);
  }

  RotationParams params;
  params.t = t;
  params.sin_theta = 1.0 / std::sqrt(1.0 + t * t);
  params.cos_theta = t * params.sin_theta;
  return params;
}

Eigen::MatrixXcd apply_rotation(const Eigen::MatrixXcd& entries, const RotationParams& params) {
  const int n = static_cast<int>(entries.rows());
  if (params.k < 0 || params.k >= n || params.l < 0 || params.l >= n || params.k == params.l)
    throw OutOfRange("apply_rotation: rotation plane indices out of range");
  Eigen::MatrixXcd out = entries;
  rotate_in_place(out, params.k, params.l, params.sin_theta, params.cos_theta);
  return out;
}

GreedyRotations greedy_rotations(const Kernel& kernel, const Population& pop,
                                 const Eigen::VectorXd& weights, int max_sweeps) {
  pop.check();
  const int n = kernel.size();
  if (n != pop.size()) throw OutOfRange("kernel and population sizes differ");
  const Eigen::MatrixXd z = weighted_aux(pop, weights);
  if (max_sweeps < 0) throw OutOfRange("greedy_rotations: max_sweeps must be nonnegative");

  Eigen::MatrixXcd m = kernel.entries();
  double current = objective_entries(m, z);

  int sweeps = 0;
  long accepted = 0;
  while (sweeps < max_sweeps) {
    ++sweeps;
    bool improved = false;
    for (int k = 0; k < n; ++k) {
      for (int l = 0; l < n; ++l) {
        if (l == k) continue;
        const double pik = m(k, k).real();
        const double pil = m(l, l).real();
        if (std::abs(pik - pil) <= kEligible) continue;
        const double t = 2.0 * m(k, l).real() / (pil - pik);
        const double s = 1.0 / std::sqrt(1.0 + t * t);
        const double c = t * s;
        Eigen::MatrixXcd trial = m;
        rotate_in_place(trial, k, l, s, c);
        const double candidate = objective_entries(trial, z);
        if (current - candidate > kAccept) {
          m.swap(trial);
          current = candidate;
          improved = true;
          ++accepted;
        }
      }
    }
    if (!improved) break;
  }

  Kernel result = Kernel::validate(m);
  const double objective = balanced_objective(result, pop, weights);
  return GreedyRotations{std::move(result), objective, sweeps, accepted};
}

GreedyRotations greedy_rotations(const Kernel& kernel, const Population& pop, int max_sweeps) {
  return greedy_rotations(kernel, pop, pop.weights, max_sweeps);
}

}  // namespace dsd

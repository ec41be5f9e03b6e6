#include "dsd/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>
#include <vector>

namespace dsd {

namespace {

void check_units(const Sample& sample, int n) {
  for (int u : sample.units)
    if (u < 0 || u >= n) throw OutOfRange("sample refers to a unit outside the population");
}

Eigen::VectorXd ht_weights(const Kernel& kernel) {
  const int n = kernel.size();
  Eigen::VectorXd w(n);
  for (int k = 0; k < n; ++k) {
    const double pi = kernel.entries()(k, k).real();
    if (pi <= 0.0) {
      std::ostringstream msg;
      msg << "unit " << k << " has inclusion probability " << pi;
      throw ZeroInclusion(msg.str());
    }
    w[k] = 1.0 / pi;
  }
  return w;
}

double pair_pi(const InclusionProbs& p, int k, int l) {
  const double pij = p.second_order(k, l);
  if (pij <= 0.0) {
    std::ostringstream msg;
    msg << "pair (" << k << ", " << l << ") has joint inclusion probability " << pij;
    throw ZeroJointInclusion(msg.str());
  }
  return pij;
}

}  // namespace

void Population::check() const {
  const auto n = y.size();
  if (n == 0) throw OutOfRange("population is empty");
  if (weights.size() != n) throw OutOfRange("weights length does not match population");
  if (aux.size() != 0 && aux.rows() != n)
    throw OutOfRange("auxiliary variable length does not match population");
  if (target_pi.size() != 0 && target_pi.size() != n)
    throw OutOfRange("target_pi length does not match population");
  for (Eigen::Index k = 0; k < n; ++k)
    if (!(weights[k] > 0.0) || !std::isfinite(weights[k]))
      throw OutOfRange("weights must be strictly positive and finite");
}

Population Population::from_y(Eigen::VectorXd y) {
  Population pop;
  pop.weights = Eigen::VectorXd::Ones(y.size());
  pop.y = std::move(y);
  pop.check();
  return pop;
}

double linear_total(const Sample& sample, const Population& pop) {
  pop.check();
  check_units(sample, pop.size());
  double total = 0.0;
  for (int u : sample.units) total += pop.weights[u] * pop.y[u];
  return total;
}

double ht_total(const Sample& sample, const Population& pop, const Kernel& kernel) {
  pop.check();
  if (kernel.size() != pop.size()) throw OutOfRange("kernel and population sizes differ");
  check_units(sample, pop.size());
  const Eigen::VectorXd w = ht_weights(kernel);
  double total = 0.0;
  for (int u : sample.units) total += w[u] * pop.y[u];
  return total;
}

MseDecomposition mse_exact(const Kernel& kernel, const Population& pop) {
  pop.check();
  const int n = kernel.size();
  if (n != pop.size()) throw OutOfRange("kernel and population sizes differ");

  const Eigen::VectorXd z = pop.weights.cwiseProduct(pop.y);
  const InclusionProbs probs = inclusion_probs(kernel);

  MseDecomposition out;
  out.variance = z.dot(probs.delta * z);
  double bias = 0.0;
  for (int k = 0; k < n; ++k) bias += (pop.weights[k] * probs.first_order[k] - 1.0) * pop.y[k];
  out.bias = bias;
  out.mse = out.variance + bias * bias;
  return out;
}

double variance_geometric(const Kernel& kernel, const Population& pop) {
  pop.check();
  const int n = kernel.size();
  if (n != pop.size()) throw OutOfRange("kernel and population sizes differ");

  Eigen::VectorXcd sqrt_z(n);
  for (int k = 0; k < n; ++k)
    sqrt_z[k] = std::sqrt(std::complex<double>(pop.weights[k] * pop.y[k], 0.0));

  const Eigen::MatrixXcd residual =
      Eigen::MatrixXcd::Identity(n, n) - kernel.entries();
  // X = conj(Z^1/2) (I - K) Z^1/2, Y = Z^1/2 K conj(Z^1/2); result <X, Y>.
  const Eigen::MatrixXcd x =
      sqrt_z.conjugate().asDiagonal() * residual * sqrt_z.asDiagonal();
  const Eigen::MatrixXcd y =
      sqrt_z.asDiagonal() * kernel.entries() * sqrt_z.conjugate().asDiagonal();
  return (x.conjugate().cwiseProduct(y)).sum().real();
}

double var_estimate_ht(const Sample& sample, const Population& pop, const Kernel& kernel) {
  pop.check();
  if (kernel.size() != pop.size()) throw OutOfRange("kernel and population sizes differ");
  check_units(sample, pop.size());

  const InclusionProbs probs = inclusion_probs(kernel);
  double v = 0.0;
  for (int k : sample.units) {
    for (int l : sample.units) {
      const double zk = pop.weights[k] * pop.y[k];
      const double zl = pop.weights[l] * pop.y[l];
      v += zk * zl * probs.delta(k, l) / pair_pi(probs, k, l);
    }
  }
  return v;
}

double var_estimate_syg(const Sample& sample, const Population& pop, const Kernel& kernel) {
  pop.check();
  if (kernel.size() != pop.size()) throw OutOfRange("kernel and population sizes differ");
  if (!kernel.is_projection())
    throw NotFixedSize("Sen-Yates-Grundy estimator requires a fixed size (projection) kernel");
  check_units(sample, pop.size());

  const InclusionProbs probs = inclusion_probs(kernel);
  double v = 0.0;
  for (int k : sample.units) {
    for (int l : sample.units) {
      if (k == l) continue;
      const double zk = pop.weights[k] * pop.y[k];
      const double zl = pop.weights[l] * pop.y[l];
      const double d = zk - zl;
      v -= 0.5 * d * d * probs.delta(k, l) / pair_pi(probs, k, l);
    }
  }
  return v;
}

PerfectEstimationReport perfect_estimation_check(const Kernel& kernel, const Population& pop,
                                                 double tolerance) {
  pop.check();
  const int n = kernel.size();
  if (n != pop.size()) throw OutOfRange("kernel and population sizes differ");

  const Eigen::VectorXd w = ht_weights(kernel);
  const Eigen::VectorXd z = w.cwiseProduct(pop.y);

  PerfectEstimationReport report;
  report.projection = kernel.is_projection(tolerance);

  const Eigen::MatrixXcd zk = z.asDiagonal() * kernel.entries();
  const Eigen::MatrixXcd kz = kernel.entries() * z.asDiagonal();
  report.commutes = (zk - kz).cwiseAbs().maxCoeff() <= tolerance;

  // Group units into level sets of z: sort the values and cut wherever the
  // gap exceeds the tolerance scaled by the value spread.
  const double spread = std::max(1.0, z.cwiseAbs().maxCoeff());
  std::vector<int> order(n);
  for (int k = 0; k < n; ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](int a, int b) { return z[a] < z[b]; });
  for (int i = 0; i < n; ++i) {
    if (i == 0 || z[order[i]] - z[order[i - 1]] > tolerance * spread)
      report.strata.emplace_back();
    report.strata.back().push_back(order[i]);
  }
  for (auto& stratum : report.strata) std::sort(stratum.begin(), stratum.end());
  std::sort(report.strata.begin(), report.strata.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });

  report.integer_strata = true;
  for (const auto& stratum : report.strata) {
    double size = 0.0;
    for (int k : stratum) size += kernel.entries()(k, k).real();
    if (std::abs(size - std::lround(size)) > tolerance) {
      report.integer_strata = false;
      break;
    }
  }

  report.is_perfect = report.projection && report.commutes && report.integer_strata;
  return report;
}

ConcentrationBound concentration_bound(const Kernel& kernel, const Population& pop, double a) {
  pop.check();
  if (kernel.size() != pop.size()) throw OutOfRange("kernel and population sizes differ");
  if (!(a > 0.0)) throw OutOfRange("deviation a must be positive");

  const Eigen::VectorXd z = pop.weights.cwiseProduct(pop.y);
  const double c = z.cwiseAbs().maxCoeff();
  const double mu = kernel.trace();

  ConcentrationBound bound;
  if (kernel.is_projection()) {
    const double rank = std::lround(kernel.trace());
    bound.projection_case = true;
    bound.one_sided = std::exp(-a * a / (8.0 * rank * c * c));
    bound.two_sided = 2.0 * bound.one_sided;
  } else {
    const double denom = a * c + 2.0 * mu * c * c;
    bound.one_sided = 3.0 * std::exp(-a * a / (16.0 * denom));
    bound.two_sided = 5.0 * std::exp(-a * a / (16.0 * 16.0 * denom));
  }
  return bound;
}

}  // namespace dsd

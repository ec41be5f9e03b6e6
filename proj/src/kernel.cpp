#include "dsd/kernel.hpp"

#include <algorithm>
#include <cstring>
#include <queue>
#include <sstream>

namespace dsd {

namespace {

std::uint64_t fnv1a(const unsigned char* data, std::size_t n, std::uint64_t h) {
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

Kernel Kernel::validate(const Eigen::MatrixXcd& entries) {
  const auto n = entries.rows();
  if (n == 0) throw EmptyDomain("kernel has no units");
  if (entries.cols() != n) {
    std::ostringstream msg;
    msg << "kernel must be square, got " << entries.rows() << "x" << entries.cols();
    throw NotHermitian(msg.str());
  }

  const double asym = (entries - entries.adjoint()).cwiseAbs().maxCoeff();
  if (asym > tol::hermitian) {
    std::ostringstream msg;
    msg << "kernel is not Hermitian: max |K_kl - conj(K_lk)| = " << asym;
    throw NotHermitian(msg.str());
  }

  Kernel k;
  k.entries_ = 0.5 * (entries + entries.adjoint().eval());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(k.entries_);
  if (solver.info() != Eigen::Success)
    throw NumericalBreakdown("eigendecomposition failed during kernel validation");

  Eigen::VectorXd lambda = solver.eigenvalues();
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda[i] < -tol::eigen_slack || lambda[i] > 1.0 + tol::eigen_slack) {
      std::ostringstream msg;
      msg << "kernel spectrum leaves [0,1]: eigenvalue " << lambda[i];
      throw NotContracting(msg.str());
    }
    lambda[i] = std::clamp(lambda[i], 0.0, 1.0);
  }
  k.eigenvalues_ = lambda;
  k.eigenvectors_ = solver.eigenvectors();
  return k;
}

bool Kernel::is_projection(double tolerance) const {
  return (entries_ * entries_ - entries_).cwiseAbs().maxCoeff() <= tolerance;
}

bool Kernel::is_real(double tolerance) const {
  return entries_.imag().cwiseAbs().maxCoeff() <= tolerance;
}

std::uint64_t Kernel::id() const {
  std::uint64_t h = 1469598103934665603ULL;
  const auto n = entries_.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::complex<double> z = entries_.data()[i];
    double parts[2] = {z.real(), z.imag()};
    unsigned char bytes[sizeof parts];
    std::memcpy(bytes, parts, sizeof parts);
    h = fnv1a(bytes, sizeof bytes, h);
  }
  return h;
}

InclusionProbs inclusion_probs(const Kernel& kernel) {
  const int n = kernel.size();
  const Eigen::MatrixXcd& k = kernel.entries();

  InclusionProbs p;
  p.first_order.resize(n);
  p.second_order.resize(n, n);
  p.delta.resize(n, n);

  for (int i = 0; i < n; ++i) p.first_order[i] = std::clamp(k(i, i).real(), 0.0, 1.0);

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) {
        const double pi = p.first_order[i];
        p.second_order(i, i) = pi;
        p.delta(i, i) = pi * (1.0 - pi);
        continue;
      }
      double pij = k(i, i).real() * k(j, j).real() - std::norm(k(i, j));
      pij = std::max(pij, 0.0);
      p.second_order(i, j) = pij;
      p.delta(i, j) = -std::norm(k(i, j));
    }
  }
  return p;
}

SizeMoments size_moments(const Kernel& kernel) {
  SizeMoments m;
  m.expected = kernel.trace();
  m.variance = (kernel.eigenvalues().array() * (1.0 - kernel.eigenvalues().array())).sum();
  return m;
}

Kernel complement(const Kernel& kernel) {
  const int n = kernel.size();
  return Kernel::validate(Eigen::MatrixXcd::Identity(n, n) - kernel.entries());
}

Kernel restrict_to(const Kernel& kernel, const std::vector<int>& units) {
  if (units.empty()) throw EmptyDomain("restriction to an empty unit set");
  const int n = kernel.size();
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (units[i] < 0 || units[i] >= n) {
      std::ostringstream msg;
      msg << "unit " << units[i] << " outside population of size " << n;
      throw OutOfRange(msg.str());
    }
    if (i > 0 && units[i] <= units[i - 1])
      throw OutOfRange("restriction units must be sorted and unique");
  }
  const int m = static_cast<int>(units.size());
  Eigen::MatrixXcd sub(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) sub(i, j) = kernel.entries()(units[i], units[j]);
  return Kernel::validate(sub);
}

Kernel permute_units(const Kernel& kernel, const std::vector<int>& perm) {
  const int n = kernel.size();
  if (static_cast<int>(perm.size()) != n)
    throw OutOfRange("permutation length does not match the population");
  std::vector<bool> seen(n, false);
  for (int p : perm) {
    if (p < 0 || p >= n || seen[p]) throw OutOfRange("not a permutation of the population");
    seen[p] = true;
  }
  Eigen::MatrixXcd out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out(i, j) = kernel.entries()(perm[i], perm[j]);
  return Kernel::validate(out);
}

std::vector<std::vector<int>> stratification(const Kernel& kernel, double tolerance) {
  const int n = kernel.size();
  const Eigen::MatrixXcd& k = kernel.entries();
  std::vector<int> comp(n, -1);
  int n_comp = 0;
  for (int start = 0; start < n; ++start) {
    if (comp[start] >= 0) continue;
    std::queue<int> frontier;
    frontier.push(start);
    comp[start] = n_comp;
    while (!frontier.empty()) {
      const int i = frontier.front();
      frontier.pop();
      for (int j = 0; j < n; ++j) {
        if (comp[j] >= 0 || j == i) continue;
        if (std::abs(k(i, j)) > tolerance) {
          comp[j] = n_comp;
          frontier.push(j);
        }
      }
    }
    ++n_comp;
  }
  std::vector<std::vector<int>> strata(n_comp);
  for (int i = 0; i < n; ++i) strata[comp[i]].push_back(i);
  return strata;
}

}  // namespace dsd

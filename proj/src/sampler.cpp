#include "dsd/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dsd {

namespace {

constexpr double kMassDrift = 1e-9;     // allowed |sum(residual mass) - remaining|
constexpr double kCollapse = 1e-12;     // Gram-Schmidt vector norm floor

// One draw given an orthonormal column basis V of the range of a projection.
// Row k of V is the feature vector of unit k; residual masses start at the
// squared row norms and shrink as the drawn directions are removed.
std::vector<int> draw_from_basis(const Eigen::MatrixXcd& v, Rng& rng) {
  const int n_units = static_cast<int>(v.rows());
  const int rank = static_cast<int>(v.cols());

  Eigen::VectorXd mass(n_units);
  for (int k = 0; k < n_units; ++k) mass[k] = v.row(k).squaredNorm();

  Eigen::MatrixXcd basis(rank, rank);  // columns e_1..e_j built so far
  std::vector<int> picked;
  picked.reserve(rank);

  for (int remaining = rank; remaining > 0; --remaining) {
    const double total = mass.sum();
    if (std::abs(total - remaining) > kMassDrift) {
      std::ostringstream msg;
      msg << "residual sampling mass " << total << " drifted from " << remaining;
      throw NumericalBreakdown(msg.str());
    }
    const int k = rng.categorical(mass, total);
    picked.push_back(k);

    const int j = rank - remaining;  // basis vectors already present
    Eigen::VectorXcd w = v.row(k).transpose();
    for (int pass = 0; pass < 2; ++pass)
      for (int c = 0; c < j; ++c) w -= basis.col(c).dot(w) * basis.col(c);
    const double nrm = w.norm();
    if (nrm < kCollapse) throw NumericalBreakdown("Gram-Schmidt step collapsed");
    basis.col(j) = w / nrm;

    for (int i = 0; i < n_units; ++i)
      mass[i] = std::max(0.0, mass[i] - std::norm(basis.col(j).dot(v.row(i).transpose())));
  }

  std::sort(picked.begin(), picked.end());
  return picked;
}

Sample draw_with_retry(const Kernel& kernel, const Eigen::MatrixXcd& v, Rng& rng) {
  Sample s;
  s.seed = rng.seed();
  s.kernel_id = kernel.id();
  try {
    s.units = draw_from_basis(v, rng);
  } catch (const NumericalBreakdown&) {
    s.units = draw_from_basis(v, rng);  // one retry on fresh randomness
  }
  return s;
}

}  // namespace

Sample sample_projection(const Kernel& kernel, Rng& rng) {
  if (!kernel.is_projection())
    throw NotProjection("sample_projection requires a projection kernel");
  const int rank = static_cast<int>(std::lround(kernel.trace()));

  const int n = kernel.size();
  Eigen::MatrixXcd v(n, rank);
  int col = 0;
  for (int i = 0; i < n; ++i) {
    if (kernel.eigenvalues()[i] < 0.5) continue;
    if (col == rank) throw NotProjection("projection rank does not match its trace");
    v.col(col++) = kernel.eigenvectors().col(i);
  }
  if (col != rank) throw NotProjection("projection rank does not match its trace");

  return draw_with_retry(kernel, v, rng);
}

Sample sample_general(const Kernel& kernel, Rng& rng) {
  const int n = kernel.size();
  std::vector<int> chosen;
  chosen.reserve(n);
  for (int i = 0; i < n; ++i)
    if (rng.bernoulli(kernel.eigenvalues()[i])) chosen.push_back(i);

  if (chosen.empty()) {
    Sample s;
    s.seed = rng.seed();
    s.kernel_id = kernel.id();
    return s;
  }

  Eigen::MatrixXcd v(n, chosen.size());
  for (std::size_t c = 0; c < chosen.size(); ++c) v.col(c) = kernel.eigenvectors().col(chosen[c]);
  return draw_with_retry(kernel, v, rng);
}

double ExactDistribution::prob(const std::vector<int>& units) const {
  unsigned mask = 0;
  for (int u : units) {
    if (u < 0 || u >= n_units) throw OutOfRange("unit outside the population");
    mask |= 1u << u;
  }
  return pmf[mask];
}

ExactDistribution exact_distribution(const Kernel& kernel) {
  const int n = kernel.size();
  if (n > 20) {
    std::ostringstream msg;
    msg << "exact distribution over 2^" << n << " subsets refused (max N = 20)";
    throw TooLarge(msg.str());
  }

  const std::size_t n_masks = std::size_t{1} << n;
  std::vector<double> f(n_masks);
  std::vector<int> members;
  members.reserve(n);
  for (std::size_t mask = 0; mask < n_masks; ++mask) {
    members.clear();
    for (int k = 0; k < n; ++k)
      if (mask >> k & 1u) members.push_back(k);
    const int m = static_cast<int>(members.size());
    if (m == 0) {
      f[mask] = 1.0;
    } else if (m == 1) {
      f[mask] = kernel.entries()(members[0], members[0]).real();
    } else {
      Eigen::MatrixXcd sub(m, m);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) sub(i, j) = kernel.entries()(members[i], members[j]);
      f[mask] = Eigen::PartialPivLU<Eigen::MatrixXcd>(sub).determinant().real();
    }
  }

  // Moebius inversion over supersets, one bit at a time:
  // pr(S = s) = sum over s' containing s of (-1)^(|s'|-|s|) det(K_|s').
  for (int b = 0; b < n; ++b)
    for (std::size_t mask = 0; mask < n_masks; ++mask)
      if (!(mask >> b & 1u)) f[mask] -= f[mask | (std::size_t{1} << b)];

  double sum = 0.0;
  for (std::size_t mask = 0; mask < n_masks; ++mask) {
    if (f[mask] < -1e-10) {
      std::ostringstream msg;
      msg << "subset probability " << f[mask] << " below the clamping floor (mask " << mask
          << ")";
      throw NegativeProbability(msg.str());
    }
    f[mask] = std::max(f[mask], 0.0);
    sum += f[mask];
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    std::ostringstream msg;
    msg << "exact distribution mass " << sum << " is not 1";
    throw NumericalBreakdown(msg.str());
  }

  ExactDistribution dist;
  dist.n_units = n;
  dist.pmf = std::move(f);
  return dist;
}

SizeLaw size_law(const Kernel& kernel) {
  const int n = kernel.size();
  Eigen::VectorXd pmf = Eigen::VectorXd::Zero(n + 1);
  pmf[0] = 1.0;
  for (int i = 0; i < n; ++i) {
    const double lambda = kernel.eigenvalues()[i];
    for (int m = i + 1; m >= 1; --m) pmf[m] = pmf[m] * (1.0 - lambda) + pmf[m - 1] * lambda;
    pmf[0] *= 1.0 - lambda;
  }
  return SizeLaw{std::move(pmf)};
}

}  // namespace dsd

#pragma once

// Shared test machinery: random kernels with a prescribed spectrum, and a
// brute force oracle for the sample law that goes through one determinant
// per subset,
//   pr(S = s) = (-1)^(N - |s|) det(K - I_sbar),
// where I_sbar is the identity restricted to the complement of s. This is a
// different route than the Moebius inversion in the library, so agreement on
// random kernels checks both.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "dsd/kernel.hpp"
#include "dsd/rng.hpp"

namespace testutil {

inline Eigen::MatrixXcd gaussian_complex(int rows, int cols, dsd::Rng& rng) {
  Eigen::MatrixXcd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = std::complex<double>(rng.normal(), rng.normal());
  return m;
}

inline Eigen::MatrixXd gaussian_real(int rows, int cols, dsd::Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

// Q diag(lambda) Q^H with Q unitary from the QR of a Gaussian matrix.
inline Eigen::MatrixXcd hermitian_with_spectrum(const Eigen::VectorXd& lambda, dsd::Rng& rng,
                                                bool complex_entries = true) {
  const int n = static_cast<int>(lambda.size());
  Eigen::MatrixXcd q;
  if (complex_entries) {
    q = Eigen::HouseholderQR<Eigen::MatrixXcd>(gaussian_complex(n, n, rng)).householderQ();
  } else {
    Eigen::MatrixXd qr = Eigen::HouseholderQR<Eigen::MatrixXd>(gaussian_real(n, n, rng))
                             .householderQ();
    q = qr.cast<std::complex<double>>();
  }
  Eigen::MatrixXcd m = q * lambda.asDiagonal() * q.adjoint();
  return (m + m.adjoint()) / 2.0;
}

inline dsd::Kernel random_kernel(int n, dsd::Rng& rng, bool complex_entries = true) {
  Eigen::VectorXd lambda(n);
  for (int i = 0; i < n; ++i) lambda[i] = rng.uniform();
  return dsd::Kernel::validate(hermitian_with_spectrum(lambda, rng, complex_entries));
}

inline dsd::Kernel random_projection(int n, int rank, dsd::Rng& rng,
                                     bool complex_entries = true) {
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(n);
  lambda.tail(rank).setOnes();
  return dsd::Kernel::validate(hermitian_with_spectrum(lambda, rng, complex_entries));
}

inline double oracle_prob(const Eigen::MatrixXcd& entries, unsigned mask) {
  const int n = static_cast<int>(entries.rows());
  Eigen::MatrixXcd m = entries;
  int outside = 0;
  for (int k = 0; k < n; ++k) {
    if (!(mask & (1u << k))) {
      m(k, k) -= 1.0;
      ++outside;
    }
  }
  const double det = m.determinant().real();
  return (outside % 2 == 0) ? det : -det;
}

inline std::vector<double> oracle_distribution(const Eigen::MatrixXcd& entries) {
  const int n = static_cast<int>(entries.rows());
  std::vector<double> pmf(1u << n);
  for (unsigned mask = 0; mask < pmf.size(); ++mask) pmf[mask] = oracle_prob(entries, mask);
  return pmf;
}

// Random contracting matrix with a prescribed diagonal pi summing to at most
// 1: a PSD matrix has spectral radius at most its trace, so rescaling a
// Gram matrix G G^H to the target diagonal stays contracting.
inline dsd::Kernel random_same_diagonal_contraction(const Eigen::VectorXd& pi, int rank,
                                                    dsd::Rng& rng, bool complex_entries = true) {
  const int n = static_cast<int>(pi.size());
  Eigen::MatrixXcd g = complex_entries
                           ? gaussian_complex(n, rank, rng)
                           : gaussian_real(n, rank, rng).cast<std::complex<double>>();
  Eigen::MatrixXcd m = g * g.adjoint();
  Eigen::VectorXd d(n);
  for (int k = 0; k < n; ++k) d[k] = std::sqrt(pi[k] / m(k, k).real());
  m = d.asDiagonal() * m * d.asDiagonal();
  Eigen::MatrixXcd h = (m + m.adjoint()) / 2.0;
  for (int k = 0; k < n; ++k) h(k, k) = pi[k];
  return dsd::Kernel::validate(h);
}

}  // namespace testutil

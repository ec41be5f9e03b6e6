#include "dsd/constructions.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <sstream>

namespace dsd {

namespace {

constexpr double kPi = std::numbers::pi;

// sin(m pi / N) with the integer argument reduced mod 2N first, so the
// result keeps full precision for large multiples.
double sin_pi_ratio(long long m, long long n) {
  long long r = m % (2 * n);
  if (r < 0) r += 2 * n;
  double sign = 1.0;
  if (r >= n) {
    r -= n;
    sign = -1.0;
  }
  return sign * std::sin(kPi * static_cast<double>(r) / static_cast<double>(n));
}

std::complex<double> unit_phase(long long m, long long n) {
  long long r = m % (2 * n);
  if (r < 0) r += 2 * n;
  const double arg = kPi * static_cast<double>(r) / static_cast<double>(n);
  return {std::cos(arg), std::sin(arg)};
}

bool odd_square_ratio(long long num, long long den) {
  if (num % den != 0) return false;
  const long long s = num / den;
  const long long r = std::llround(std::sqrt(static_cast<double>(s)));
  for (long long c = std::max(0LL, r - 2); c <= r + 2; ++c)
    if (c * c == s) return c % 2 == 1;
  return false;
}

bool sum_of_two_squares(long long m) {
  for (long long a = 0; a * a <= m; ++a) {
    const long long rest = m - a * a;
    const long long b = std::llround(std::sqrt(static_cast<double>(rest)));
    for (long long c = std::max(0LL, b - 2); c <= b + 2; ++c)
      if (c * c == rest) return true;
  }
  return false;
}

double top_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().maxCoeff();
}

Eigen::MatrixXd laplacian_entries(const Eigen::MatrixXd& points, double alpha, double beta) {
  const int n = static_cast<int>(points.rows());
  Eigen::MatrixXd k(n, n);
  for (int i = 0; i < n; ++i) {
    k(i, i) = alpha;
    for (int j = i + 1; j < n; ++j) {
      const double dist = (points.row(i) - points.row(j)).cwiseAbs().sum();
      k(i, j) = k(j, i) = alpha * std::exp(-beta * dist);
    }
  }
  return k;
}

}  // namespace

Kernel poisson_kernel(const Eigen::VectorXd& pi) {
  if (pi.size() == 0) throw EmptyDomain("no inclusion probabilities given");
  for (Eigen::Index k = 0; k < pi.size(); ++k)
    if (!(pi[k] >= 0.0 && pi[k] <= 1.0)) {
      std::ostringstream msg;
      msg << "inclusion probability " << pi[k] << " at unit " << k << " outside [0,1]";
      throw OutOfRange(msg.str());
    }
  Eigen::MatrixXcd entries = Eigen::MatrixXcd::Zero(pi.size(), pi.size());
  entries.diagonal() = pi.cast<std::complex<double>>();
  return Kernel::validate(entries);
}

void ToeplitzRootSpec::check() const {
  if (n_units < 1) throw EmptyDomain("population must have at least one unit");
  if (fixed_size < 1 || fixed_size > n_units) {
    std::ostringstream msg;
    msg << "fixed size " << fixed_size << " outside [1, " << n_units << "]";
    throw OutOfRange(msg.str());
  }
  if (root < 1) throw OutOfRange("root must be a positive integer");
  if (std::gcd(root, n_units) != 1) {
    std::ostringstream msg;
    msg << "root " << root << " is not coprime with " << n_units;
    throw NotCoprime(msg.str());
  }
}

Kernel toeplitz_root_kernel(const ToeplitzRootSpec& spec) {
  spec.check();
  const long long nn = spec.n_units;
  const long long n = spec.fixed_size;
  const long long r = spec.root;

  Eigen::MatrixXcd entries(nn, nn);
  for (long long k = 0; k < nn; ++k) {
    for (long long l = 0; l < nn; ++l) {
      const long long m = k - l;
      if (m == 0) {
        entries(k, l) = static_cast<double>(n) / static_cast<double>(nn);
        continue;
      }
      const double num = sin_pi_ratio(n * r * m, nn);
      const double den = sin_pi_ratio(r * m, nn);
      entries(k, l) = num / den / static_cast<double>(nn) * unit_phase(r * (n - 1) * m, nn);
    }
  }
  return Kernel::validate(entries);
}

Kernel averaged_kernel(int n_units, int fixed_size) {
  if (n_units < 2) throw OutOfRange("averaged kernel needs at least two units");
  if (fixed_size < 1 || fixed_size >= n_units) {
    std::ostringstream msg;
    msg << "fixed size " << fixed_size << " outside [1, " << n_units - 1 << "]";
    throw OutOfRange(msg.str());
  }
  const double diag = static_cast<double>(fixed_size) / n_units;
  const double off = static_cast<double>(n_units - fixed_size) /
                     (static_cast<double>(n_units) * (n_units - 1));
  Eigen::MatrixXcd entries = Eigen::MatrixXcd::Constant(n_units, n_units, off);
  entries.diagonal().setConstant(diag);
  return Kernel::validate(entries);
}

Kernel laplacian_kernel(const Eigen::MatrixXd& points, double alpha, double beta) {
  if (points.rows() == 0) throw EmptyDomain("no point locations given");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw OutOfRange("alpha must lie in (0, 1]");
  if (!(beta > 0.0)) throw OutOfRange("beta must be positive");
  return Kernel::validate(laplacian_entries(points, alpha, beta).cast<std::complex<double>>());
}

double laplacian_min_beta(const Eigen::MatrixXd& points, double alpha, double tolerance) {
  if (points.rows() == 0) throw EmptyDomain("no point locations given");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw OutOfRange("alpha must lie in (0, 1]");
  if (!(tolerance > 0.0)) throw OutOfRange("tolerance must be positive");

  const auto valid = [&](double beta) {
    return top_eigenvalue(laplacian_entries(points, alpha, beta)) <= 1.0;
  };

  double hi = 1.0;
  int steps = 0;
  while (!valid(hi)) {
    hi *= 2.0;
    if (++steps >= 60)
      throw ConstructionFailed("no beta keeps the exponential kernel contracting");
  }
  double lo = 0.0;
  if (valid(hi * 0.5)) {
    // Walk down until invalid to bracket the boundary from below.
    lo = hi * 0.5;
    while (valid(lo)) {
      hi = lo;
      lo *= 0.5;
      if (++steps >= 60) return hi;  // boundary is at or below the smallest probe
    }
  }
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    (valid(mid) ? hi : lo) = mid;
  }
  return hi;
}

Kernel toeplitz_symbol_kernel(const std::function<double(double)>& symbol, int n_units,
                              int quad_points) {
  if (n_units < 1) throw EmptyDomain("population must have at least one unit");
  if (quad_points < std::max(256, 2 * n_units)) {
    std::ostringstream msg;
    msg << "quad_points " << quad_points << " below minimum " << std::max(256, 2 * n_units);
    throw OutOfRange(msg.str());
  }

  // Periodic rectangle rule on [0, 2pi): Fourier coefficients
  // c_m = (1/Q) sum_{j=0}^{Q-1} f(t_j) e^(-i m t_j). For integrands on the
  // circle this is the trapezoid rule (f(0) and f(2pi) are the same point),
  // and it keeps indicator symbols exact on grid-aligned windows.
  const int q = quad_points;
  std::vector<double> values(q);
  for (int j = 0; j < q; ++j) values[j] = symbol(2.0 * kPi * j / q);

  Eigen::VectorXcd coeff(n_units);
  for (int m = 0; m < n_units; ++m) {
    std::complex<double> sum = 0.0;
    for (int j = 0; j < q; ++j) sum += values[j] * unit_phase(-2LL * m * j, q);
    coeff[m] = sum / static_cast<double>(q);
  }

  Eigen::MatrixXcd entries(n_units, n_units);
  for (int k = 0; k < n_units; ++k)
    for (int l = 0; l < n_units; ++l)
      entries(k, l) = k >= l ? coeff[k - l] : std::conj(coeff[l - k]);
  return Kernel::validate(entries);
}

Kernel etf63_kernel() {
  // Sign pattern of the off-diagonal entries, symmetric with +-1/(2 sqrt 5).
  static constexpr int sign[6][6] = {
      {0, +1, +1, +1, +1, +1},
      {+1, 0, -1, -1, +1, +1},
      {+1, -1, 0, +1, -1, +1},
      {+1, -1, +1, 0, +1, -1},
      {+1, +1, -1, +1, 0, -1},
      {+1, +1, +1, -1, -1, 0},
  };
  const double a = 0.5 / std::sqrt(5.0);
  Eigen::MatrixXcd entries(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) entries(i, j) = i == j ? 0.5 : sign[i][j] * a;
  return Kernel::validate(entries);
}

SimpleFeasibility simple_feasibility(int n_units, int fixed_size) {
  const long long nn = n_units;
  const long long n = fixed_size;
  if (n <= 1 || n >= nn - 1) {
    std::ostringstream msg;
    msg << "feasibility screen needs 1 < n < N - 1, got N = " << nn << ", n = " << n;
    throw OutOfRange(msg.str());
  }
  const long long m = nn - n;

  SimpleFeasibility out;

  if (nn > n * n || nn > m * m) {
    out.over_complex = Feasibility::ruled_out;
  }

  bool real_ok = nn <= n * (n + 1) / 2 && nn <= m * (m + 1) / 2;
  if (real_ok) {
    if (nn != 2 * n) {
      real_ok = odd_square_ratio(n * (nn - 1), m) && odd_square_ratio(m * (nn - 1), n);
    } else {
      real_ok = n % 2 == 1 && sum_of_two_squares(nn - 1);
    }
  }
  if (!real_ok) out.over_reals = Feasibility::ruled_out;

  // Sizes with a known solution; R marks ones solvable over the reals. The
  // family is closed under n -> N - n by complementing the kernel.
  struct Known {
    int n_units, fixed_size;
    bool real;
  };
  static constexpr Known known[] = {
      {6, 3, true},   {7, 3, false},  {7, 4, false},  {13, 4, false}, {10, 5, true},
      {11, 5, false}, {11, 6, false}, {16, 6, true},  {31, 6, false}, {14, 7, true},
      {15, 7, false}, {28, 7, true},  {15, 8, false}, {29, 8, false}, {57, 8, false},
  };
  for (const Known& item : known) {
    if (item.n_units != nn) continue;
    if (item.fixed_size != n && item.fixed_size != m) continue;
    if (out.over_complex != Feasibility::ruled_out) out.over_complex = Feasibility::possible;
    if (item.real && out.over_reals != Feasibility::ruled_out)
      out.over_reals = Feasibility::possible;
  }
  return out;
}

SchurHornProjection schur_horn_projection(const Eigen::VectorXd& pi) {
  const int total = static_cast<int>(pi.size());
  if (total == 0) throw EmptyDomain("no inclusion probabilities given");
  for (int k = 0; k < total; ++k)
    if (!(pi[k] >= 0.0 && pi[k] <= 1.0)) {
      std::ostringstream msg;
      msg << "inclusion probability " << pi[k] << " at unit " << k << " outside [0,1]";
      throw OutOfRange(msg.str());
    }

  SchurHornState state;
  std::vector<int> fixed_ones;
  for (int k = 0; k < total; ++k) {
    if (pi[k] == 0.0) continue;
    if (pi[k] == 1.0) {
      fixed_ones.push_back(k);
      continue;
    }
    state.kept.push_back(k);
  }
  const int m = static_cast<int>(state.kept.size());

  Eigen::VectorXd p(m);
  for (int i = 0; i < m; ++i) p[i] = pi[state.kept[i]];
  const double raw_sum = p.sum();
  const long long n = std::llround(raw_sum);
  if (m > 0) {
    if (n <= 0) {
      std::ostringstream msg;
      msg << "fractional probabilities sum to " << raw_sum << ", no integer within reach";
      throw SumNotInteger(msg.str());
    }
    state.scale = static_cast<double>(n) / raw_sum;
    const double worst = p.cwiseAbs().maxCoeff() * std::abs(state.scale - 1.0);
    if (worst > 1e-9) {
      std::ostringstream msg;
      msg << "rescaling the probabilities to sum " << n << " would move an entry by " << worst;
      throw SumNotInteger(msg.str());
    }
    p *= state.scale;
  }

  // Pivot positions: the running sum of p crosses r between the previous
  // pivot and pivots[r-1]. A crossing within 1e-9 of the integer counts as a
  // hit, so alpha is clamped into [0, p_k] afterwards.
  constexpr double kHit = 1e-9;
  state.alphas = p;
  std::vector<double> cum(m);
  double run = 0.0;
  for (int i = 0; i < m; ++i) {
    run += p[i];
    cum[i] = run;
  }
  for (long long r = 1; r <= n; ++r) {
    int lo = state.pivots.empty() ? 0 : state.pivots.back() + 1;
    int pos = -1;
    for (int i = lo; i < m; ++i)
      if (cum[i] >= static_cast<double>(r) - kHit) {
        pos = i;
        break;
      }
    if (pos < 0)
      throw ConstructionFailed("ran out of units before reaching the prescribed rank");
    const double before = pos == 0 ? 0.0 : cum[pos - 1];
    state.pivots.push_back(pos);
    state.alphas[pos] = std::clamp(static_cast<double>(r) - before, 0.0, p[pos]);
  }

  // Suffix sums of alpha inside each pivot interval (k_r, k_{r+1}].
  state.tails = Eigen::VectorXd::Zero(m);
  {
    double tail = 0.0;
    std::size_t next_pivot = state.pivots.size();
    for (int i = m - 1; i >= 0; --i) {
      if (next_pivot > 0 && state.pivots[next_pivot - 1] == i) {
        tail = 0.0;  // new interval ends here
        --next_pivot;
      }
      tail += state.alphas[i];
      state.tails[i] = tail;
    }
  }

  // Damping factors across pivot runs: gammas(r, rp) multiplies the factor
  // of every pivot j in (r, rp]. An exact integer hit zeroes its factor and
  // therefore every gamma spanning it.
  const int np = static_cast<int>(state.pivots.size());
  state.gammas = Eigen::MatrixXd::Zero(np + 1, np + 1);
  Eigen::VectorXd pivot_factor(np + 1);
  for (int j = 1; j <= np; ++j) {
    const int kj = state.pivots[j - 1];
    const double a = state.alphas[kj];
    const double rest = std::max(p[kj] - a, 0.0);
    pivot_factor[j] = std::sqrt(rest * a / ((1.0 - a) * (1.0 - rest)));
  }
  for (int r = 0; r <= np; ++r) {
    state.gammas(r, r) = 1.0;
    for (int rp = r + 1; rp <= np; ++rp)
      state.gammas(r, rp) = state.gammas(r, rp - 1) * pivot_factor[rp];
  }

  // Role factors. Columns carry the pivot minus sign.
  std::vector<bool> is_pivot(m, false);
  for (int pos : state.pivots) is_pivot[pos] = true;
  Eigen::VectorXd row_factor(m), col_factor(m);
  std::vector<int> pivots_le(m), pivots_lt(m);
  {
    int count = 0;
    for (int i = 0; i < m; ++i) {
      pivots_lt[i] = count;
      if (is_pivot[i]) ++count;
      pivots_le[i] = count;
    }
  }
  for (int i = 0; i < m; ++i) {
    if (is_pivot[i]) {
      const double a = state.alphas[i];
      const double rest = std::max(p[i] - a, 0.0);
      row_factor[i] = std::sqrt((1.0 - p[i]) * a / (1.0 - a));
      col_factor[i] = -std::sqrt((1.0 - p[i]) * rest / (1.0 - rest));
    } else {
      row_factor[i] = std::sqrt(p[i]);
      col_factor[i] = std::sqrt(p[i]);
    }
  }

  Eigen::MatrixXd reduced(m, m);
  for (int i = 0; i < m; ++i) reduced(i, i) = p[i];
  for (int k = 1; k < m; ++k)
    for (int l = 0; l < k; ++l) {
      const double value = row_factor[k] * col_factor[l] * state.gammas(pivots_le[l], pivots_lt[k]);
      reduced(k, l) = reduced(l, k) = value;
    }

  Eigen::MatrixXcd full = Eigen::MatrixXcd::Zero(total, total);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) full(state.kept[i], state.kept[j]) = reduced(i, j);
  for (int k : fixed_ones) full(k, k) = 1.0;

  SchurHornProjection out{Kernel::validate(full), std::move(state)};
  if (!out.kernel.is_projection(1e-9))
    throw ConstructionFailed("pivot construction did not return a projection");
  for (int i = 0; i < m; ++i) {
    const double want = p[i];
    if (std::abs(out.kernel.entries()(out.state.kept[i], out.state.kept[i]).real() - want) >
        1e-12)
      throw ConstructionFailed("pivot construction moved the prescribed diagonal");
  }
  return out;
}

}  // namespace dsd

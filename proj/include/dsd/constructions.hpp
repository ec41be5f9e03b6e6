#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "dsd/kernel.hpp"

// Kernel families: independent (Poisson) designs, the root-of-unity and
// averaged fixed size families, broken-detailed-balance free kernels from
// exponential covariances and Toeplitz symbols, the six-unit equiangular
// frame kernel, feasibility screening for equal |K_kl| kernels, and the
// pivot construction of a projection with arbitrary prescribed diagonal.

namespace dsd {

// Independent sampling: diagonal kernel, pi in [0,1]^N.
// Throws OutOfRange, EmptyDomain.
Kernel poisson_kernel(const Eigen::VectorXd& pi);

// Fixed size n design on N units built from n powers of a primitive N-th
// root of unity: K_kl = (1/N) sum_{p=0}^{n-1} exp(2 i pi r (k-l) p / N).
// Requires gcd(root, n_units) = 1 so the powers stay distinct.
struct ToeplitzRootSpec {
  int n_units = 0;    // N
  int fixed_size = 0; // n, 1 <= n <= N
  int root = 1;       // r >= 1, coprime with N

  // Throws OutOfRange, NotCoprime.
  void check() const;
};

// The closed form of the spec above:
//   K_kl = (1/N) sin(n r (k-l) pi / N) / sin(r (k-l) pi / N)
//          * exp(i r (n-1) (k-l) pi / N),  diagonal n/N.
// Always a projection of rank n.
Kernel toeplitz_root_kernel(const ToeplitzRootSpec& spec);

// Mean over all roots r coprime with N of the root-of-unity kernels, in the
// closed form valid for any N: diagonal n/N, off diagonal (N-n)/(N(N-1)).
// Spectrum {1, ((n-1)/(N-1))^(N-1)}; fixed size n. Requires 0 < n < N.
// Throws OutOfRange.
Kernel averaged_kernel(int n_units, int fixed_size);

// Exponential covariance kernel K_kl = alpha exp(-beta |x_k - x_l|_1) on
// point locations (rows of `points`). Valid only when the top eigenvalue
// stays at or below 1.
// Throws OutOfRange (alpha not in (0,1], beta <= 0), NotContracting.
Kernel laplacian_kernel(const Eigen::MatrixXd& points, double alpha, double beta);

// Smallest beta making laplacian_kernel valid for these points, found by
// doubling then bisection to `tolerance`. Throws ConstructionFailed when no
// beta works within the iteration cap (for instance duplicated points with
// alpha > 1/2).
double laplacian_min_beta(const Eigen::MatrixXd& points, double alpha,
                          double tolerance = 1e-6);

// Toeplitz kernel of a real 2pi-periodic symbol f with values in [0,1]:
//   K_kl = (1/(2 pi)) integral of f(t) exp(-i (k-l) t) dt,
// by composite trapezoid quadrature with quad_points subintervals.
// quad_points must be at least max(256, 2 n_units); quadrature error can
// still push the spectrum out of [0,1], raising NotContracting (use more
// points). Throws OutOfRange, NotContracting.
Kernel toeplitz_symbol_kernel(const std::function<double(double)>& symbol, int n_units,
                              int quad_points = 512);

// The 6-unit, size-3 kernel with all |K_kl| equal: diagonal 1/2, off
// diagonal +-1/(2 sqrt(5)) with a fixed sign pattern. A real projection of
// rank 3, and the equal-modulus design with the smallest nontrivial size.
Kernel etf63_kernel();

enum class Feasibility { ruled_out, possible, unknown };

struct SimpleFeasibility {
  Feasibility over_reals = Feasibility::unknown;
  Feasibility over_complex = Feasibility::unknown;
};

// Screens whether an (N, n) design with constant diagonal n/N and constant
// |K_kl| can exist, using the counting bounds N <= n^2 (complex) and
// N <= n(n+1)/2 (real), the odd-integrality conditions away from N = 2n,
// the sum-of-two-squares condition at N = 2n, and a table of sizes with
// known solutions (closed under n -> N - n, since the complement of an
// equal-modulus kernel is one again). Requires 1 < n < N - 1.
// Throws OutOfRange.
SimpleFeasibility simple_feasibility(int n_units, int fixed_size);

struct SchurHornState {
  std::vector<int> kept;    // input positions the pivot construction ran on
                            // (entries equal to 0 or 1 are set aside first)
  std::vector<int> pivots;  // positions in `kept` where the running sum of
                            // pi crosses each integer r = 1..n
  Eigen::VectorXd alphas;   // per kept position; at pivot r this is
                            // r - (sum of pi before it), otherwise pi_k
  Eigen::VectorXd tails;    // suffix sums of alpha within a pivot interval
  Eigen::MatrixXd gammas;   // gammas(r, rp): damping across pivots r+1..rp
  double scale = 1.0;       // factor applied to pi to land on an integer sum
};

struct SchurHornProjection {
  Kernel kernel;
  SchurHornState state;
};

// Real projection with prescribed diagonal pi (any vector in [0,1]^N whose
// sum is within rescaling reach of an integer). Closed form entries: with
// pivot positions k_r and residuals alpha as above, the entry for k > l is a
// product row_factor(k) * col_factor(l) * gammas(r(l), r(k)) where pivots
// carry the factors -sqrt((1-pi)(pi-alpha)/(1-(pi-alpha))) (column role) and
// sqrt((1-pi) alpha/(1-alpha)) (row role) and interior units contribute
// sqrt(pi). Partial sums hitting integers exactly zero out gammas, which
// makes the design stratified there.
// Throws EmptyDomain, OutOfRange (entries outside [0,1]), SumNotInteger
// (rescaling would move an entry by more than 1e-9), ConstructionFailed
// (result fails the projection or diagonal post-check).
SchurHornProjection schur_horn_projection(const Eigen::VectorXd& pi);

}  // namespace dsd

#include <doctest.h>

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "dsd/constructions.hpp"
#include "dsd/kernel.hpp"
#include "dsd/rng.hpp"
#include "dsd/sampler.hpp"
#include "helpers.hpp"

using dsd::Kernel;
using Eigen::MatrixXcd;
using Eigen::VectorXd;

TEST_CASE("projection sampler on a deterministic design") {
  MatrixXcd m = MatrixXcd::Zero(4, 4);
  m(0, 0) = 1.0;
  m(1, 1) = 1.0;
  Kernel k = Kernel::validate(m);
  dsd::Rng rng(1);
  for (int d = 0; d < 25; ++d) {
    dsd::Sample s = dsd::sample_projection(k, rng);
    CHECK(s.units == std::vector<int>{0, 1});
  }
}

TEST_CASE("projection sampler on simple random sampling of size one") {
  Kernel k = Kernel::validate(MatrixXcd::Constant(3, 3, 1.0 / 3.0));
  dsd::Rng rng(2);
  const int draws = 100000;
  int counts[3] = {0, 0, 0};
  for (int d = 0; d < draws; ++d) {
    dsd::Sample s = dsd::sample_projection(k, rng);
    REQUIRE(s.units.size() == 1);
    ++counts[s.units[0]];
  }
  const double sigma3 = 3.0 * std::sqrt((1.0 / 3.0) * (2.0 / 3.0) / draws);
  for (int i = 0; i < 3; ++i)
    CHECK(std::abs(counts[i] / static_cast<double>(draws) - 1.0 / 3.0) <= sigma3);
}

TEST_CASE("projection sampler rejects non projections") {
  MatrixXcd m = MatrixXcd::Zero(2, 2);
  m(0, 0) = 0.3;
  m(1, 1) = 0.7;
  dsd::Rng rng(3);
  Kernel k = Kernel::validate(m);
  CHECK_THROWS_AS(dsd::sample_projection(k, rng), dsd::NotProjection);
}

TEST_CASE("six unit kernel empirical frequencies") {
  Kernel k = dsd::etf63_kernel();
  dsd::Rng rng(4);
  const int draws = 1000000;
  long first_block = 0;
  Eigen::MatrixXd pair_counts = Eigen::MatrixXd::Zero(6, 6);
  Eigen::VectorXd solo_counts = Eigen::VectorXd::Zero(6);
  for (int d = 0; d < draws; ++d) {
    dsd::Sample s = dsd::sample_projection(k, rng);
    REQUIRE(s.units.size() == 3);
    if (s.units == std::vector<int>{0, 1, 2}) ++first_block;
    for (size_t a = 0; a < 3; ++a) {
      solo_counts[s.units[a]] += 1.0;
      for (size_t b = a + 1; b < 3; ++b) pair_counts(s.units[a], s.units[b]) += 1.0;
    }
  }

  const double p123 = (1.0 - 3.0 / 5.0 - 2.0 / (5.0 * std::sqrt(5.0))) / 8.0;
  const double se123 = std::sqrt(p123 * (1.0 - p123) / draws);
  CHECK(std::abs(first_block / static_cast<double>(draws) - p123) <= 3.0 * se123);

  const double se_pair = std::sqrt(0.2 * 0.8 / draws);
  for (int a = 0; a < 6; ++a)
    for (int b = a + 1; b < 6; ++b) {
      const double freq = pair_counts(a, b) / draws;
      CHECK(std::abs(freq - 0.2) <= 4.0 * se_pair);
    }

  // negative association spot check on the pair (1, 4)
  const double joint = pair_counts(0, 3) / draws;
  const double product =
      (solo_counts[0] / draws) * (solo_counts[3] / draws);
  CHECK(joint <= product + 4.0 * se_pair);
}

TEST_CASE("general sampler matches the product law for diagonal kernels") {
  VectorXd pi(6);
  pi << 0.05, 0.1, 0.05, 0.1, 0.05, 0.1;
  Kernel k = dsd::poisson_kernel(pi);
  dsd::ExactDistribution exact = dsd::exact_distribution(k);
  dsd::Rng rng(5);
  const int draws = 100000;
  std::vector<long> counts(64, 0);
  for (int d = 0; d < draws; ++d) {
    dsd::Sample s = dsd::sample_general(k, rng);
    unsigned mask = 0;
    for (int u : s.units) mask |= 1u << u;
    ++counts[mask];
  }
  double tv = 0.0;
  for (unsigned mask = 0; mask < 64; ++mask)
    tv += std::abs(counts[mask] / static_cast<double>(draws) - exact.pmf[mask]);
  CHECK(tv / 2.0 <= 0.01);
}

TEST_CASE("general sampler keeps projections at fixed size") {
  dsd::Rng gen(6);
  Kernel k = testutil::random_projection(6, 2, gen);
  dsd::Rng rng(7);
  for (int d = 0; d < 20000; ++d) {
    dsd::Sample s = dsd::sample_general(k, rng);
    REQUIRE(s.units.size() == 2);
  }
}

TEST_CASE("general sampler size law matches the spectrum convolution") {
  Kernel k = dsd::averaged_kernel(5, 2);
  dsd::SizeLaw law = dsd::size_law(k);
  dsd::Rng rng(8);
  const int draws = 100000;
  std::vector<long> counts(6, 0);
  for (int d = 0; d < draws; ++d) ++counts[dsd::sample_general(k, rng).units.size()];

  CHECK(counts[0] == 0);  // eigenvalue one keeps the sample nonempty
  double stat = 0.0;
  int bins = 0;
  for (int m = 1; m <= 5; ++m) {
    const double expected = law.pmf[m] * draws;
    REQUIRE(expected >= 5.0);
    stat += (counts[m] - expected) * (counts[m] - expected) / expected;
    ++bins;
  }
  const double p = boost::math::gamma_q((bins - 1) / 2.0, stat / 2.0);
  CHECK(p > 0.001);
}

TEST_CASE("exact distribution on closed form cases") {
  MatrixXcd m = MatrixXcd::Zero(2, 2);
  m(0, 0) = 0.3;
  m(1, 1) = 0.7;
  dsd::ExactDistribution d = dsd::exact_distribution(Kernel::validate(m));
  CHECK(d.pmf[0] == doctest::Approx(0.21).epsilon(1e-12));
  CHECK(d.pmf[3] == doctest::Approx(0.21).epsilon(1e-12));
  CHECK(d.prob({0, 1}) == doctest::Approx(0.21).epsilon(1e-12));
}

TEST_CASE("exact distribution agrees with the determinant identity oracle") {
  dsd::Rng rng(9);
  for (int trial = 0; trial < 4; ++trial) {
    Kernel k = trial < 2 ? testutil::random_kernel(8, rng, trial == 0)
                         : testutil::random_projection(8, 3, rng, trial == 2);
    dsd::ExactDistribution dist = dsd::exact_distribution(k);
    std::vector<double> oracle = testutil::oracle_distribution(k.entries());

    double mass = 0.0;
    VectorXd marginals = VectorXd::Zero(8);
    for (unsigned mask = 0; mask < dist.pmf.size(); ++mask) {
      CHECK(std::abs(dist.pmf[mask] - oracle[mask]) <= 1e-12);
      mass += dist.pmf[mask];
      for (int u = 0; u < 8; ++u)
        if (mask & (1u << u)) marginals[u] += dist.pmf[mask];
    }
    CHECK(std::abs(mass - 1.0) <= 1e-9);
    dsd::InclusionProbs p = dsd::inclusion_probs(k);
    CHECK((marginals - p.first_order).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("exact distribution refuses large populations") {
  dsd::Rng rng(10);
  Kernel k = dsd::poisson_kernel(VectorXd::Constant(21, 0.5));
  CHECK_THROWS_AS(dsd::exact_distribution(k), dsd::TooLarge);
}

TEST_CASE("size law") {
  dsd::ToeplitzRootSpec spec;
  spec.n_units = 18;
  spec.fixed_size = 6;
  spec.root = 1;
  dsd::SizeLaw proj = dsd::size_law(dsd::toeplitz_root_kernel(spec));
  CHECK(proj.pmf[6] == doctest::Approx(1.0).epsilon(1e-9));

  MatrixXcd m = MatrixXcd::Zero(2, 2);
  m(0, 0) = 0.5;
  m(1, 1) = 0.5;
  dsd::SizeLaw coin = dsd::size_law(Kernel::validate(m));
  CHECK(coin.pmf[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(coin.pmf[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(coin.pmf[2] == doctest::Approx(0.25).epsilon(1e-12));

  // spectrum {1, 1/4 x4} gives 1 + Binomial(4, 1/4)
  dsd::SizeLaw avg = dsd::size_law(dsd::averaged_kernel(5, 2));
  CHECK(avg.pmf[0] <= 1e-12);
  const double q[] = {81.0 / 256.0, 108.0 / 256.0, 54.0 / 256.0, 12.0 / 256.0, 1.0 / 256.0};
  for (int j = 0; j <= 4; ++j) CHECK(avg.pmf[1 + j] == doctest::Approx(q[j]).epsilon(1e-9));

  const double mean = [&] {
    double acc = 0.0;
    for (int i = 0; i < avg.pmf.size(); ++i) acc += i * avg.pmf[i];
    return acc;
  }();
  CHECK(mean == doctest::Approx(2.0).epsilon(1e-10));
}

#include <doctest.h>

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "dsd/constructions.hpp"
#include "dsd/estimation.hpp"
#include "dsd/kernel.hpp"
#include "dsd/rng.hpp"
#include "dsd/sampler.hpp"
#include "helpers.hpp"

using dsd::Kernel;
using dsd::Population;
using dsd::Sample;
using Eigen::MatrixXcd;
using Eigen::VectorXd;

namespace {

Sample make_sample(std::vector<int> units) {
  Sample s;
  s.units = std::move(units);
  return s;
}

Population ht_population(const VectorXd& y, const Kernel& kernel) {
  Population pop = Population::from_y(y);
  for (int k = 0; k < kernel.size(); ++k)
    pop.weights[k] = 1.0 / kernel.entries()(k, k).real();
  return pop;
}

// expectation and variance of an estimator evaluated on every outcome
template <typename F>
std::pair<double, double> moments_over(const dsd::ExactDistribution& dist, F&& value) {
  double mean = 0.0;
  for (unsigned mask = 0; mask < dist.pmf.size(); ++mask) {
    if (dist.pmf[mask] == 0.0) continue;
    mean += dist.pmf[mask] * value(mask);
  }
  double var = 0.0;
  for (unsigned mask = 0; mask < dist.pmf.size(); ++mask) {
    if (dist.pmf[mask] == 0.0) continue;
    const double dev = value(mask) - mean;
    var += dist.pmf[mask] * dev * dev;
  }
  return {mean, var};
}

std::vector<int> mask_units(unsigned mask, int n) {
  std::vector<int> units;
  for (int u = 0; u < n; ++u)
    if (mask & (1u << u)) units.push_back(u);
  return units;
}

}  // namespace

TEST_CASE("linear total on full and empty samples") {
  VectorXd y(4);
  y << 1.5, -2.0, 0.5, 3.0;
  Population pop = Population::from_y(y);
  CHECK(dsd::linear_total(make_sample({0, 1, 2, 3}), pop) ==
        doctest::Approx(3.0).epsilon(1e-14));
  CHECK(dsd::linear_total(make_sample({}), pop) == 0.0);
  CHECK_THROWS_AS(dsd::linear_total(make_sample({7}), pop), dsd::OutOfRange);
}

TEST_CASE("weighted linear total is unbiased for diagonal kernels") {
  dsd::Rng rng(21);
  VectorXd pi(6), y(6);
  for (int k = 0; k < 6; ++k) {
    pi[k] = 0.2 + 0.6 * rng.uniform();
    y[k] = rng.normal();
  }
  Kernel k = dsd::poisson_kernel(pi);
  Population pop = ht_population(y, k);
  dsd::ExactDistribution dist = dsd::exact_distribution(k);
  auto [mean, var] = moments_over(dist, [&](unsigned mask) {
    return dsd::linear_total(make_sample(mask_units(mask, 6)), pop);
  });
  (void)var;
  CHECK(mean == doctest::Approx(y.sum()).epsilon(1e-10));
}

TEST_CASE("horvitz thompson total uses kernel weights") {
  VectorXd y(3);
  y << 2.0, 4.0, 8.0;
  MatrixXcd m = MatrixXcd::Zero(3, 3);
  m(0, 0) = 0.5;
  m(1, 1) = 0.25;
  m(2, 2) = 0.8;
  Kernel k = Kernel::validate(m);
  Population pop = Population::from_y(y);
  CHECK(dsd::ht_total(make_sample({0, 1}), pop, k) ==
        doctest::Approx(2.0 / 0.5 + 4.0 / 0.25).epsilon(1e-14));

  MatrixXcd z = MatrixXcd::Zero(2, 2);
  z(1, 1) = 0.5;
  Population pop2 = Population::from_y(VectorXd::Ones(2));
  CHECK_THROWS_AS(dsd::ht_total(make_sample({1}), pop2, Kernel::validate(z)),
                  dsd::ZeroInclusion);
}

TEST_CASE("closed form mse on the two unit worked example") {
  VectorXd y(2);
  y << -1.0, 1.0;
  Kernel k = dsd::poisson_kernel(VectorXd::Constant(2, 0.5));
  Population pop = Population::from_y(y);
  pop.weights = VectorXd::Constant(2, 2.0);
  dsd::MseDecomposition mse = dsd::mse_exact(k, pop);
  CHECK(mse.variance == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(std::abs(mse.bias) <= 1e-14);
  CHECK(mse.mse == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("closed form mse matches the brute force expectation") {
  dsd::Rng rng(22);
  for (int trial = 0; trial < 4; ++trial) {
    Kernel k = trial % 2 == 0 ? testutil::random_kernel(6, rng)
                              : testutil::random_projection(6, 3, rng, false);
    VectorXd y(6), w(6);
    for (int u = 0; u < 6; ++u) {
      y[u] = rng.normal();
      w[u] = 0.5 + 2.0 * rng.uniform();  // deliberately not the HT weights
    }
    Population pop = Population::from_y(y);
    pop.weights = w;

    dsd::ExactDistribution dist = dsd::exact_distribution(k);
    double mean = 0.0, second = 0.0;
    for (unsigned mask = 0; mask < dist.pmf.size(); ++mask) {
      if (dist.pmf[mask] == 0.0) continue;
      const double v = dsd::linear_total(make_sample(mask_units(mask, 6)), pop);
      mean += dist.pmf[mask] * v;
      const double err = v - y.sum();
      second += dist.pmf[mask] * err * err;
    }

    dsd::MseDecomposition mse = dsd::mse_exact(k, pop);
    const double scale = std::max(1.0, std::abs(second));
    CHECK(std::abs(mse.mse - second) <= 1e-10 * scale);
    CHECK(std::abs(mse.bias - (mean - y.sum())) <= 1e-10);
  }
}

TEST_CASE("stratified proportional target is perfectly estimated") {
  VectorXd pi = VectorXd::Constant(4, 0.5);
  Kernel k = dsd::schur_horn_projection(pi).kernel;
  VectorXd y(4);
  y << 0.5, 0.5, 1.5, 1.5;  // one constant per stratum, proportional to pi
  Population pop = ht_population(y, k);
  dsd::MseDecomposition mse = dsd::mse_exact(k, pop);
  const double ty = y.sum();
  CHECK(mse.mse <= 1e-18 * ty * ty);
}

TEST_CASE("geometric variance route agrees with the algebraic one") {
  dsd::Rng rng(23);
  for (int trial = 0; trial < 5; ++trial) {
    Kernel k = testutil::random_kernel(7, rng, trial % 2 == 0);
    VectorXd y(7);
    for (int u = 0; u < 7; ++u) y[u] = rng.normal();  // mixed signs on purpose
    Population pop = Population::from_y(y);
    dsd::MseDecomposition mse = dsd::mse_exact(k, pop);
    const double geo = dsd::variance_geometric(k, pop);
    CHECK(std::abs(geo - mse.variance) <= 1e-10 * std::max(1.0, std::abs(mse.variance)));
  }
}

TEST_CASE("horvitz thompson variance estimator") {
  dsd::Rng rng(24);

  SUBCASE("reduces to the single sum for poisson designs") {
    VectorXd pi(4), y(4);
    pi << 0.3, 0.6, 0.5, 0.8;
    y << 1.0, -2.0, 3.0, 0.5;
    Kernel k = dsd::poisson_kernel(pi);
    Population pop = ht_population(y, k);
    Sample s = make_sample({0, 2, 3});
    double by_hand = 0.0;
    for (int u : s.units) {
      const double z = y[u] / pi[u];
      by_hand += z * z * (1.0 - pi[u]);
    }
    CHECK(dsd::var_estimate_ht(s, pop, k) == doctest::Approx(by_hand).epsilon(1e-12));
  }

  SUBCASE("is unbiased for the exact variance") {
    Kernel k = testutil::random_kernel(6, rng);
    dsd::InclusionProbs p = dsd::inclusion_probs(k);
    double min_pair = 1.0;
    for (int a = 0; a < 6; ++a)
      for (int b = 0; b < 6; ++b)
        if (a != b) min_pair = std::min(min_pair, p.second_order(a, b));
    REQUIRE(min_pair > 1e-4);  // keeps the expectation numerically clean

    VectorXd y(6);
    for (int u = 0; u < 6; ++u) y[u] = 1.0 + rng.uniform();
    Population pop = ht_population(y, k);
    dsd::ExactDistribution dist = dsd::exact_distribution(k);
    double mean = 0.0;
    for (unsigned mask = 0; mask < dist.pmf.size(); ++mask) {
      if (dist.pmf[mask] == 0.0) continue;
      mean += dist.pmf[mask] *
              dsd::var_estimate_ht(make_sample(mask_units(mask, 6)), pop, k);
    }
    const double exact = dsd::mse_exact(k, pop).variance;
    CHECK(std::abs(mean - exact) <= 1e-9 * std::max(1.0, std::abs(exact)));
  }

  SUBCASE("fails loudly on zero joint inclusions") {
    // rank one kernel, at most one unit drawn: every joint inclusion is an
    // exact floating point zero (the entries are dyadic)
    Kernel k = Kernel::validate(Eigen::MatrixXcd::Constant(2, 2, 0.25));
    Population pop = ht_population(VectorXd::Ones(2), k);
    CHECK_THROWS_AS(dsd::var_estimate_ht(make_sample({0, 1}), pop, k),
                    dsd::ZeroJointInclusion);
  }
}

TEST_CASE("sen yates grundy variance estimator") {
  dsd::Rng rng(25);

  SUBCASE("vanishes when y is proportional to pi") {
    Kernel k = dsd::etf63_kernel();
    Population pop = ht_population(VectorXd::Constant(6, 0.5), k);
    CHECK(dsd::var_estimate_syg(make_sample({0, 2, 5}), pop, k) == 0.0);
  }

  SUBCASE("is unbiased on projection kernels") {
    Kernel k = testutil::random_projection(6, 3, rng);
    dsd::InclusionProbs p = dsd::inclusion_probs(k);
    double min_pair = 1.0;
    for (int a = 0; a < 6; ++a)
      for (int b = 0; b < 6; ++b)
        if (a != b) min_pair = std::min(min_pair, p.second_order(a, b));
    REQUIRE(min_pair > 1e-4);

    VectorXd y(6);
    for (int u = 0; u < 6; ++u) y[u] = 1.0 + rng.uniform();
    Population pop = ht_population(y, k);
    dsd::ExactDistribution dist = dsd::exact_distribution(k);
    double mean = 0.0;
    for (unsigned mask = 0; mask < dist.pmf.size(); ++mask) {
      if (dist.pmf[mask] == 0.0) continue;
      mean += dist.pmf[mask] *
              dsd::var_estimate_syg(make_sample(mask_units(mask, 6)), pop, k);
    }
    const double exact = dsd::mse_exact(k, pop).variance;
    CHECK(std::abs(mean - exact) <= 1e-9 * std::max(1.0, std::abs(exact)));
  }

  SUBCASE("requires a fixed size design") {
    Kernel k = dsd::poisson_kernel(VectorXd::Constant(3, 0.5));
    Population pop = ht_population(VectorXd::Ones(3), k);
    CHECK_THROWS_AS(dsd::var_estimate_syg(make_sample({0, 1}), pop, k),
                    dsd::NotFixedSize);
  }
}

TEST_CASE("perfect estimation check") {
  SUBCASE("accepts stratified proportional targets") {
    VectorXd pi = VectorXd::Constant(6, 0.5);
    Kernel k = dsd::schur_horn_projection(pi).kernel;
    VectorXd y(6);
    y << 1.0, 1.0, 2.0, 2.0, 3.0, 3.0;  // y = c_h * pi on each stratum
    Population pop = ht_population(y, k);
    dsd::PerfectEstimationReport report = dsd::perfect_estimation_check(k, pop);
    CHECK(report.is_perfect);
    CHECK(report.projection);
    CHECK(report.commutes);
    CHECK(report.integer_strata);
    REQUIRE(report.strata.size() == 3);
    CHECK(report.strata[0] == std::vector<int>{0, 1});
    CHECK(report.strata[1] == std::vector<int>{2, 3});
    CHECK(report.strata[2] == std::vector<int>{4, 5});
  }

  SUBCASE("rejects random size designs") {
    Kernel k = dsd::poisson_kernel(VectorXd::Constant(4, 0.5));
    Population pop = ht_population(VectorXd::Ones(4), k);
    dsd::PerfectEstimationReport report = dsd::perfect_estimation_check(k, pop);
    CHECK_FALSE(report.is_perfect);
    CHECK_FALSE(report.projection);
  }

  SUBCASE("is consistent with the exact mse") {
    dsd::Rng rng(26);
    std::vector<Kernel> kernels;
    kernels.push_back(dsd::etf63_kernel());
    kernels.push_back(testutil::random_projection(6, 2, rng, false));
    VectorXd flat = VectorXd::Constant(6, 0.5);
    kernels.push_back(dsd::schur_horn_projection(flat).kernel);
    for (const Kernel& k : kernels) {
      VectorXd y(6);
      for (int u = 0; u < 6; ++u) y[u] = 1.0 + u % 3;
      Population pop = ht_population(y, k);
      const double mse = dsd::mse_exact(k, pop).mse;
      const double ty = y.sum();
      const bool perfect = dsd::perfect_estimation_check(k, pop).is_perfect;
      CHECK(perfect == (mse <= 1e-18 * ty * ty));
    }
  }
}

TEST_CASE("concentration bounds") {
  Kernel k = dsd::etf63_kernel();
  Population pop = ht_population(VectorXd::Constant(6, 0.5), k);

  dsd::ConcentrationBound far = dsd::concentration_bound(k, pop, 1e6);
  CHECK(far.one_sided <= 1e-12);
  CHECK(far.two_sided <= 1e-12);

  // projection of rank 4 with max |w_k y_k| = 1 evaluated at a = 8
  dsd::Rng rng(27);
  Kernel proj = testutil::random_projection(6, 4, rng, false);
  Population unit = Population::from_y(VectorXd::Ones(6));
  dsd::ConcentrationBound b = dsd::concentration_bound(proj, unit, 8.0);
  CHECK(b.projection_case);
  CHECK(b.one_sided == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
  CHECK(b.two_sided == doctest::Approx(2.0 * std::exp(-2.0)).epsilon(1e-14));

  // general kernel formula plug-in
  Kernel general = dsd::poisson_kernel(VectorXd::Constant(4, 0.5));
  Population ones = Population::from_y(VectorXd::Ones(4));
  dsd::ConcentrationBound g = dsd::concentration_bound(general, ones, 3.0);
  const double denom = 16.0 * (3.0 * 1.0 + 2.0 * 2.0 * 1.0);
  CHECK_FALSE(g.projection_case);
  CHECK(g.one_sided == doctest::Approx(3.0 * std::exp(-9.0 / denom)).epsilon(1e-14));
  CHECK(g.two_sided ==
        doctest::Approx(5.0 * std::exp(-9.0 / (16.0 * denom))).epsilon(1e-14));
}

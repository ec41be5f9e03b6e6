#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dsd/estimation.hpp"
#include "dsd/kernel.hpp"
#include "dsd/rng.hpp"
#include "dsd/sampler.hpp"

// Simulation harness: the systematic probability-proportional baseline,
// synthetic populations, scenario-driven design comparisons emitting a tidy
// CSV, and a Monte Carlo validation report for a single kernel. All Monte
// Carlo cells draw from independent streams derived from the base seed (cell
// index as the stream id), so a scenario pins its report bytes; the cells
// are embarrassingly parallel if that ever matters.

namespace dsd {

// Systematic sampling with a shared uniform start: walking the units in the
// given visit order, unit j is taken whenever its cumulative-pi interval
// contains a point of u + Z. Sum(pi) must be a positive integer n (within
// 1e-6) and every pi in (0, 1]; the draw then has exactly n units and
// first order inclusion probabilities pi. Throws OutOfRange.
Sample baseline_systematic(const Eigen::VectorXd& pi, const std::vector<int>& ordering,
                           Rng& rng);

struct SyntheticSpec {
  struct Derived {
    double slope = 1.0;      // x_{q} = slope * x1 + intercept + noise_sd * N(0,1)
    double intercept = 0.0;
    double noise_sd = 0.0;
  };
  int n_units = 0;
  std::uint64_t seed = 0;
  double lognormal_mu = 0.0;     // x1 = exp(mu + sigma * N(0,1))
  double lognormal_sigma = 0.5;
  std::vector<Derived> derived;  // x2, x3, ... in order
  double floor = 0.01;           // derived values are clamped below at this
};

// Population with aux columns x1 (log-normal) and the derived variables,
// unit weights, y set to x1. Throws OutOfRange (n_units < 1).
Population synthetic_population(const SyntheticSpec& spec);

// Inclusion probabilities n * x / sum(x), clipped into (0,1) and rescaled to
// sum exactly n. Throws OutOfRange if x has nonpositive entries, n is out of
// 1..N, or some probability still reaches 1 after rescaling.
Eigen::VectorXd proportional_pi(const Eigen::VectorXd& x, int n);

struct Scenario {
  std::string name = "scenario";
  std::string population_file;  // empty: use `synthetic`
  SyntheticSpec synthetic;
  std::vector<int> sizes;
  std::vector<std::string> schemes;   // "equal" and/or "proportional"
  std::vector<std::string> designs;   // "poisson", "schurhorn",
                                      // "schurhorn_ordered", "systematic"
  std::vector<int> variables;         // aux indices to estimate, default all
  int order_by = 0;                   // aux index the ordered design sorts on
  int draws = 10000;                  // Monte Carlo draws per cell
  std::uint64_t seed = 1;
  bool mc_check = false;  // add "<design>_mc" rows re-estimating DSD cells
                          // by Monte Carlo (their cv then carries a cv_se)
  bool timings = false;   // fill runtime_ms (trades away byte-determinism)
};

// Scenario JSON: {"name": str, "population": {"file": path} or
// {"synthetic": {"n_units": N, "seed": S, "x1": {"lognormal_mu": m,
// "lognormal_sigma": s}, "x2": {"slope": a, "intercept": b, "noise_sd": c},
// "x3": {...}}}, "sizes": [..], "schemes": [..], "designs": [..],
// "variables": ["x1", ..] (optional), "order_by": "x1" (optional),
// "draws": int, "seed": int, "mc_check": bool, "timings": bool}.
// Throws ParseError.
Scenario read_scenario_json(const std::string& path);

struct ReportRow {
  std::string scenario;
  std::string design;
  std::string variable;  // "x1", "x2", ...
  int n = 0;
  std::string scheme;
  double cv = 0.0;
  double cv_se = 0.0;      // 0 for exact rows
  double runtime_ms = 0.0; // 0 unless the scenario asks for timings
};

// One row per (scheme, size, design, variable), in that loop order. The
// estimator is Horvitz-Thompson under the scheme's probabilities. DSD rows
// carry the exact coefficient of variation from the closed form MSE;
// systematic (and mc_check) rows carry the Monte Carlo estimate with its
// standard error cv / sqrt(2 (M - 1)).
std::vector<ReportRow> run_scenario(const Scenario& scenario);

void write_report_csv(const std::vector<ReportRow>& rows, const std::string& path);

struct McValidation {
  int draws = 0;
  double max_abs_z_first = 0.0;   // marginal inclusion frequencies, z-scores
  double max_abs_z_second = 0.0;  // pairwise ones
  double chi2_stat = 0.0;         // sample size law vs the exact Poisson
  int chi2_df = 0;                //   binomial, bins merged to expected >= 5
  double chi2_p = 1.0;
  double tv = -1.0;               // total variation vs the exact law (N <= 10
                                  //   only; -1 when skipped)
  long fixed_size_violations = -1;  // draws off the modal size; -1 when the
                                    //   kernel is not a projection
  double tail_ratio = 0.0;        // worst empirical tail frequency of the
                                  //   sample size over its exponential bound
  bool clt_reported = false;      // true for projections with trace >= 50
  double skewness = 0.0;          // standardized Horvitz-Thompson total of
  double excess_kurtosis = 0.0;   //   y = 1, against normal values 0, 0
};

// Draws `draws` samples and summarizes the agreement with the exact design
// quantities. Purely a report: nothing here throws on a bad fit.
McValidation validate_kernel_mc(const Kernel& kernel, int draws, std::uint64_t seed);

// Human-readable rendering of the validation report, one line per check.
std::string describe(const McValidation& report);

}  // namespace dsd

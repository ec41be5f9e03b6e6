#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dsd/constructions.hpp"
#include "dsd/estimation.hpp"
#include "dsd/harness.hpp"
#include "dsd/io.hpp"
#include "dsd/kernel.hpp"
#include "dsd/optimizer.hpp"
#include "dsd/sampler.hpp"

// Command line front end. Exit codes: 0 success, 2 invalid inputs, 3
// numerical failure (the run hit a breakdown or a construction could not be
// completed). File formats are documented in include/dsd/io.hpp.

namespace {

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i] + 1);
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"determinantal sampling designs: construction, sampling, estimation"};
  app.require_subcommand(1);

  // ---- kernel ----
  CLI::App* kernel_cmd = app.add_subcommand("kernel", "build a kernel and write it as JSON");
  kernel_cmd->require_subcommand(1);
  std::string out_path;
  std::string pi_path, points_path;
  int arg_n_units = 0, arg_size = 0, arg_root = 1, quad_points = 512;
  double alpha = 0.5, beta = 0.0;
  std::vector<double> coefs;

  CLI::App* k_poisson = kernel_cmd->add_subcommand("poisson", "independent sampling, diagonal kernel");
  k_poisson->add_option("--pi-file", pi_path, "CSV with header 'pi'")->required();
  k_poisson->add_option("--out", out_path, "output kernel JSON")->required();
  k_poisson->callback([&] {
    dsd::write_kernel_json(dsd::poisson_kernel(dsd::read_pi_csv(pi_path)), out_path);
  });

  CLI::App* k_roots = kernel_cmd->add_subcommand("roots", "fixed size kernel from root-of-unity powers");
  k_roots->add_option("--N", arg_n_units, "population size")->required();
  k_roots->add_option("--n", arg_size, "sample size")->required();
  k_roots->add_option("--r", arg_root, "root exponent, coprime with N");
  k_roots->add_option("--out", out_path)->required();
  k_roots->callback([&] {
    dsd::ToeplitzRootSpec spec;
    spec.n_units = arg_n_units;
    spec.fixed_size = arg_size;
    spec.root = arg_root;
    dsd::write_kernel_json(dsd::toeplitz_root_kernel(spec), out_path);
  });

  CLI::App* k_avg = kernel_cmd->add_subcommand("averaged", "mean of the root-of-unity kernels");
  k_avg->add_option("--N", arg_n_units)->required();
  k_avg->add_option("--n", arg_size)->required();
  k_avg->add_option("--out", out_path)->required();
  k_avg->callback([&] {
    dsd::write_kernel_json(dsd::averaged_kernel(arg_n_units, arg_size), out_path);
  });

  CLI::App* k_lap = kernel_cmd->add_subcommand("laplacian", "exponential covariance kernel on points");
  k_lap->add_option("--points-file", points_path, "header-less CSV of coordinates")->required();
  k_lap->add_option("--alpha", alpha, "diagonal value in (0,1]");
  k_lap->add_option("--beta", beta, "decay rate; 0 picks the smallest valid one");
  k_lap->add_option("--out", out_path)->required();
  k_lap->callback([&] {
    const Eigen::MatrixXd points = dsd::read_points_csv(points_path);
    double b = beta;
    if (b <= 0.0) {
      b = dsd::laplacian_min_beta(points, alpha);
      std::cerr << "using beta = " << b << "\n";
    }
    dsd::write_kernel_json(dsd::laplacian_kernel(points, alpha, b), out_path);
  });

  CLI::App* k_toep = kernel_cmd->add_subcommand(
      "toeplitz", "kernel of the symbol c0 + 2 sum_m c_m cos(m t) on [0, 2pi)");
  k_toep->add_option("--N", arg_n_units)->required();
  k_toep->add_option("--coef", coefs, "cosine coefficients c0[,c1,...]")
      ->required()
      ->delimiter(',');
  k_toep->add_option("--quad-points", quad_points, "trapezoid subintervals");
  k_toep->add_option("--out", out_path)->required();
  k_toep->callback([&] {
    auto symbol = [&](double t) {
      double f = coefs.empty() ? 0.0 : coefs[0];
      for (size_t m = 1; m < coefs.size(); ++m)
        f += 2.0 * coefs[m] * std::cos(static_cast<double>(m) * t);
      return f;
    };
    dsd::write_kernel_json(dsd::toeplitz_symbol_kernel(symbol, arg_n_units, quad_points),
                           out_path);
  });

  CLI::App* k_etf = kernel_cmd->add_subcommand("etf63", "the six-unit size-3 equal-modulus kernel");
  k_etf->add_option("--out", out_path)->required();
  k_etf->callback([&] { dsd::write_kernel_json(dsd::etf63_kernel(), out_path); });

  CLI::App* k_sh = kernel_cmd->add_subcommand("schurhorn", "projection with a prescribed diagonal");
  k_sh->add_option("--pi-file", pi_path, "CSV with header 'pi'")->required();
  k_sh->add_option("--out", out_path)->required();
  k_sh->callback([&] {
    dsd::write_kernel_json(dsd::schur_horn_projection(dsd::read_pi_csv(pi_path)).kernel,
                           out_path);
  });

  // ---- sample ----
  CLI::App* sample_cmd = app.add_subcommand("sample", "draw samples from a kernel");
  std::string kernel_path, samples_out;
  int draws = 1;
  std::uint64_t seed = 1;
  sample_cmd->add_option("--kernel", kernel_path)->required();
  sample_cmd->add_option("--draws", draws);
  sample_cmd->add_option("--seed", seed);
  sample_cmd->add_option("--out", samples_out, "samples CSV")->required();
  sample_cmd->callback([&] {
    const dsd::Kernel kernel = dsd::read_kernel_json(kernel_path);
    const bool projection = kernel.is_projection();
    std::vector<dsd::Sample> samples;
    samples.reserve(static_cast<size_t>(draws));
    for (int d = 0; d < draws; ++d) {
      dsd::Rng rng = dsd::Rng::for_replicate(seed, static_cast<std::uint64_t>(d));
      samples.push_back(projection ? dsd::sample_projection(kernel, rng)
                                   : dsd::sample_general(kernel, rng));
    }
    dsd::write_samples_csv(samples, samples_out);
  });

  // ---- dist ----
  CLI::App* dist_cmd = app.add_subcommand("dist", "exact distribution over all subsets (N <= 20)");
  std::string dist_out;
  dist_cmd->add_option("--kernel", kernel_path)->required();
  dist_cmd->add_option("--out", dist_out)->required();
  dist_cmd->callback([&] {
    dsd::write_distribution_csv(dsd::exact_distribution(dsd::read_kernel_json(kernel_path)),
                                dist_out);
  });

  // ---- estimate ----
  CLI::App* est_cmd = app.add_subcommand("estimate", "totals of y over sample draws");
  std::string pop_path, sample_path, weights_mode = "ht", est_out;
  est_cmd->add_option("--kernel", kernel_path)->required();
  est_cmd->add_option("--pop", pop_path, "population CSV")->required();
  est_cmd->add_option("--sample", sample_path, "samples CSV")->required();
  est_cmd->add_option("--weights", weights_mode, "ht (1/K_kk) or file (the w column)")
      ->check(CLI::IsMember({"ht", "file"}));
  est_cmd->add_option("--out", est_out, "output CSV, stdout when omitted");
  est_cmd->callback([&] {
    const dsd::Kernel kernel = dsd::read_kernel_json(kernel_path);
    const dsd::Population pop = dsd::read_population_csv(pop_path);
    const std::vector<dsd::Sample> samples = dsd::read_samples_csv(sample_path);
    std::ostringstream body;
    body << "draw,estimate\n";
    for (size_t d = 0; d < samples.size(); ++d) {
      const double t_hat = weights_mode == "ht" ? dsd::ht_total(samples[d], pop, kernel)
                                                : dsd::linear_total(samples[d], pop);
      body << (d + 1) << "," << dsd::format_double(t_hat) << "\n";
    }
    if (est_out.empty()) {
      std::cout << body.str();
    } else {
      std::ofstream out(est_out);
      if (!out) throw dsd::ParseError("cannot open " + est_out + " for writing");
      out << body.str();
    }
  });

  // ---- optimize ----
  CLI::App* opt_cmd = app.add_subcommand("optimize", "build a design tuned to the auxiliaries");
  std::string pi_col = "pi", aux_name = "x1", method = "ordered";
  int max_sweeps = 10;
  opt_cmd->add_option("--pop", pop_path, "population CSV")->required();
  opt_cmd->add_option("--pi-col", pi_col, "column holding the target probabilities");
  opt_cmd->add_option("--aux", aux_name, "auxiliary column to balance on");
  opt_cmd->add_option("--method", method)->check(CLI::IsMember({"rank1", "ordered", "rotations"}));
  opt_cmd->add_option("--max-sweeps", max_sweeps, "rotation sweeps cap");
  opt_cmd->add_option("--out", out_path, "output kernel JSON")->required();
  opt_cmd->callback([&] {
    dsd::Population pop = dsd::read_population_csv(pop_path);
    Eigen::VectorXd pi;
    if (pi_col == "pi") {
      if (pop.target_pi.size() == 0)
        throw dsd::ParseError(pop_path + " has no 'pi' column");
      pi = pop.target_pi;
    } else if (!pi_col.empty() && pi_col[0] == 'x') {
      const int q = std::stoi(pi_col.substr(1)) - 1;
      if (q < 0 || q >= pop.aux.cols())
        throw dsd::ParseError("no column '" + pi_col + "' in " + pop_path);
      pi = pop.aux.col(q);
    } else {
      throw dsd::ParseError("--pi-col must be 'pi' or an auxiliary column name");
    }
    int aux_q = 0;
    if (aux_name.size() >= 2 && aux_name[0] == 'x') aux_q = std::stoi(aux_name.substr(1)) - 1;
    else throw dsd::ParseError("--aux must name an auxiliary column, like x1");
    if (aux_q < 0 || aux_q >= pop.aux.cols())
      throw dsd::ParseError("no column '" + aux_name + "' in " + pop_path);

    // Estimation weights are Horvitz-Thompson under the target probabilities.
    for (Eigen::Index k = 0; k < pi.size(); ++k)
      if (!(pi[k] > 0.0)) throw dsd::OutOfRange("target probabilities must be positive");
    pop.weights = pi.cwiseInverse();

    std::map<std::string, std::string> meta;
    meta["method"] = method;
    if (method == "rank1") {
      dsd::write_kernel_json(dsd::rank1_optimal(pi, pop), out_path, meta);
      return;
    }
    dsd::OrderedProjection ordered = dsd::ordered_projection(pi, pop, aux_q);
    meta["order"] = join_ints(ordered.order);
    if (method == "ordered") {
      dsd::write_kernel_json(ordered.kernel, out_path, meta);
      return;
    }
    dsd::Population permuted = pop;
    const int n_units = pop.size();
    for (int i = 0; i < n_units; ++i) {
      permuted.y[i] = pop.y[ordered.order[i]];
      permuted.weights[i] = pop.weights[ordered.order[i]];
      permuted.aux.row(i) = pop.aux.row(ordered.order[i]);
    }
    const dsd::GreedyRotations refined =
        dsd::greedy_rotations(ordered.kernel, permuted, permuted.weights, max_sweeps);
    meta["sweeps"] = std::to_string(refined.sweeps);
    meta["objective"] = dsd::format_double(refined.objective);
    dsd::write_kernel_json(refined.kernel, out_path, meta);
  });

  // ---- simulate ----
  CLI::App* sim_cmd = app.add_subcommand("simulate", "run a scenario and write the report CSV");
  std::string scenario_path, report_path;
  sim_cmd->add_option("--scenario", scenario_path, "scenario JSON")->required();
  sim_cmd->add_option("--out", report_path, "report CSV")->required();
  sim_cmd->callback([&] {
    const dsd::Scenario scenario = dsd::read_scenario_json(scenario_path);
    const std::vector<dsd::ReportRow> rows = dsd::run_scenario(scenario);
    dsd::write_report_csv(rows, report_path);
    std::cerr << rows.size() << " rows written to " << report_path << "\n";
  });

  // ---- validate ----
  CLI::App* val_cmd = app.add_subcommand("validate", "Monte Carlo agreement report for a kernel");
  int val_draws = 100000;
  val_cmd->add_option("--kernel", kernel_path)->required();
  val_cmd->add_option("--draws", val_draws);
  val_cmd->add_option("--seed", seed);
  val_cmd->callback([&] {
    const dsd::Kernel kernel = dsd::read_kernel_json(kernel_path);
    std::cout << dsd::describe(dsd::validate_kernel_mc(kernel, val_draws, seed));
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const dsd::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const dsd::NumericError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

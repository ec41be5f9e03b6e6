#include "dsd/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>
#include <json.hpp>

#include "dsd/constructions.hpp"
#include "dsd/io.hpp"
#include "dsd/optimizer.hpp"

namespace dsd {

namespace {

using nlohmann::json;

std::string var_name(int v) { return "x" + std::to_string(v + 1); }

int var_index(const std::string& name, int n_aux, const std::string& where) {
  if (name.size() < 2 || name[0] != 'x')
    throw ParseError(where + ": variable names look like x1, x2, ..., got '" + name + "'");
  int q = 0;
  try {
    q = std::stoi(name.substr(1));
  } catch (const std::exception&) {
    throw ParseError(where + ": bad variable name '" + name + "'");
  }
  if (q < 1 || (n_aux > 0 && q > n_aux))
    throw ParseError(where + ": variable " + name + " not in the population");
  return q - 1;
}

void require_keys(const json& j, std::initializer_list<const char*> allowed,
                  const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) throw ParseError(where + ": unknown field '" + it.key() + "'");
  }
}

}  // namespace

Sample baseline_systematic(const Eigen::VectorXd& pi, const std::vector<int>& ordering,
                           Rng& rng) {
  const int n_units = static_cast<int>(pi.size());
  if (n_units == 0) throw EmptyDomain("systematic sampling needs at least one unit");
  if (static_cast<int>(ordering.size()) != n_units)
    throw OutOfRange("ordering length does not match pi");
  std::vector<bool> seen(n_units, false);
  for (int u : ordering) {
    if (u < 0 || u >= n_units || seen[u]) throw OutOfRange("ordering is not a permutation");
    seen[u] = true;
  }
  double total = 0.0;
  for (int k = 0; k < n_units; ++k) {
    if (!(pi[k] > 0.0) || pi[k] > 1.0)
      throw OutOfRange("systematic pi entries must lie in (0, 1]");
    total += pi[k];
  }
  const long n = std::lround(total);
  if (n < 1 || std::abs(total - static_cast<double>(n)) > 1e-6)
    throw OutOfRange("systematic pi must sum to a positive integer");

  const double u = rng.uniform();
  Sample out;
  out.seed = rng.seed();
  double cum = 0.0;
  int j = 0;
  for (long m = 0; m < n; ++m) {
    const double target = u + static_cast<double>(m);
    while (j < n_units && cum + pi[ordering[j]] <= target) cum += pi[ordering[j]], ++j;
    if (j >= n_units) {
      // Sum rounding pushed the last target past the final interval.
      if (out.units.empty() || out.units.back() != ordering[n_units - 1])
        out.units.push_back(ordering[n_units - 1]);
      break;
    }
    out.units.push_back(ordering[j]);
    cum += pi[ordering[j]];
    ++j;
  }
  std::sort(out.units.begin(), out.units.end());
  return out;
}

Population synthetic_population(const SyntheticSpec& spec) {
  if (spec.n_units < 1) throw OutOfRange("synthetic population needs at least one unit");
  const int n = spec.n_units;
  Rng rng = Rng::for_replicate(spec.seed, 0);

  Population pop;
  pop.aux.resize(n, 1 + static_cast<Eigen::Index>(spec.derived.size()));
  for (int k = 0; k < n; ++k)
    pop.aux(k, 0) = std::exp(spec.lognormal_mu + spec.lognormal_sigma * rng.normal());
  for (size_t d = 0; d < spec.derived.size(); ++d) {
    const SyntheticSpec::Derived& m = spec.derived[d];
    for (int k = 0; k < n; ++k) {
      const double v = m.slope * pop.aux(k, 0) + m.intercept + m.noise_sd * rng.normal();
      pop.aux(k, static_cast<Eigen::Index>(d) + 1) = std::max(v, spec.floor);
    }
  }
  pop.y = pop.aux.col(0);
  pop.weights = Eigen::VectorXd::Ones(n);
  pop.check();
  return pop;
}

Eigen::VectorXd proportional_pi(const Eigen::VectorXd& x, int n) {
  const int n_units = static_cast<int>(x.size());
  if (n_units == 0) throw EmptyDomain("proportional probabilities need at least one unit");
  if (n < 1 || n > n_units) throw OutOfRange("sample size outside 1..N");
  for (int k = 0; k < n_units; ++k)
    if (!(x[k] > 0.0)) throw OutOfRange("proportional probabilities need positive x");

  Eigen::VectorXd pi = (static_cast<double>(n) / x.sum()) * x;
  for (int k = 0; k < n_units; ++k) pi[k] = std::clamp(pi[k], 1e-12, 1.0 - 1e-9);
  pi *= static_cast<double>(n) / pi.sum();
  for (int k = 0; k < n_units; ++k)
    if (pi[k] >= 1.0)
      throw OutOfRange("a proportional inclusion probability reached 1 after rescaling");
  return pi;
}

Scenario read_scenario_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ParseError(path + ": " + std::string(e.what()));
  }
  if (!j.is_object()) throw ParseError(path + ": scenario must be a JSON object");
  require_keys(j,
               {"name", "population", "sizes", "schemes", "designs", "variables", "order_by",
                "draws", "seed", "mc_check", "timings"},
               path);

  Scenario s;
  try {
    if (j.contains("name")) s.name = j["name"].get<std::string>();
    if (!j.contains("population")) throw ParseError(path + ": missing 'population'");
    const json& p = j["population"];
    require_keys(p, {"file", "synthetic"}, path + " population");
    if (p.contains("file") == p.contains("synthetic"))
      throw ParseError(path + ": population is either {\"file\": ...} or {\"synthetic\": ...}");
    if (p.contains("file")) {
      s.population_file = p["file"].get<std::string>();
    } else {
      const json& syn = p["synthetic"];
      require_keys(syn, {"n_units", "seed", "floor", "x1", "x2", "x3", "x4", "x5"},
                   path + " synthetic");
      s.synthetic.n_units = syn.at("n_units").get<int>();
      if (syn.contains("seed")) s.synthetic.seed = syn["seed"].get<std::uint64_t>();
      if (syn.contains("floor")) s.synthetic.floor = syn["floor"].get<double>();
      if (syn.contains("x1")) {
        const json& x1 = syn["x1"];
        require_keys(x1, {"lognormal_mu", "lognormal_sigma"}, path + " x1");
        if (x1.contains("lognormal_mu")) s.synthetic.lognormal_mu = x1["lognormal_mu"].get<double>();
        if (x1.contains("lognormal_sigma"))
          s.synthetic.lognormal_sigma = x1["lognormal_sigma"].get<double>();
      }
      for (int q = 2;; ++q) {
        const std::string key = "x" + std::to_string(q);
        if (!syn.contains(key)) break;
        const json& xq = syn[key];
        require_keys(xq, {"slope", "intercept", "noise_sd"}, path + " " + key);
        SyntheticSpec::Derived d;
        if (xq.contains("slope")) d.slope = xq["slope"].get<double>();
        if (xq.contains("intercept")) d.intercept = xq["intercept"].get<double>();
        if (xq.contains("noise_sd")) d.noise_sd = xq["noise_sd"].get<double>();
        s.synthetic.derived.push_back(d);
      }
    }
    if (!j.contains("sizes")) throw ParseError(path + ": missing 'sizes'");
    s.sizes = j["sizes"].get<std::vector<int>>();
    if (!j.contains("schemes")) throw ParseError(path + ": missing 'schemes'");
    s.schemes = j["schemes"].get<std::vector<std::string>>();
    if (!j.contains("designs")) throw ParseError(path + ": missing 'designs'");
    s.designs = j["designs"].get<std::vector<std::string>>();
    if (j.contains("variables"))
      for (const auto& v : j["variables"])
        s.variables.push_back(var_index(v.get<std::string>(), 0, path));
    if (j.contains("order_by")) s.order_by = var_index(j["order_by"].get<std::string>(), 0, path);
    if (j.contains("draws")) s.draws = j["draws"].get<int>();
    if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("mc_check")) s.mc_check = j["mc_check"].get<bool>();
    if (j.contains("timings")) s.timings = j["timings"].get<bool>();
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(path + ": " + std::string(e.what()));
  }
  return s;
}

namespace {

struct BuiltDesign {
  Kernel kernel;
  std::vector<int> perm;  // position -> original unit
};

BuiltDesign build_design(const std::string& design, const Eigen::VectorXd& pi,
                         const Eigen::VectorXd& w, const Population& base, int order_by) {
  const int n_units = base.size();
  std::vector<int> identity(n_units);
  std::iota(identity.begin(), identity.end(), 0);
  if (design == "poisson") return BuiltDesign{poisson_kernel(pi), std::move(identity)};
  if (design == "schurhorn")
    return BuiltDesign{schur_horn_projection(pi).kernel, std::move(identity)};
  if (design == "schurhorn_ordered") {
    Population forder;
    forder.y = base.aux.col(0);
    forder.aux = base.aux;
    forder.weights = w;
    OrderedProjection op = ordered_projection(pi, forder, order_by);
    return BuiltDesign{std::move(op.kernel), std::move(op.order)};
  }
  throw OutOfRange("unknown design '" + design + "'");
}

}  // namespace

std::vector<ReportRow> run_scenario(const Scenario& s) {
  Population base = s.population_file.empty() ? synthetic_population(s.synthetic)
                                              : read_population_csv(s.population_file);
  base.check();
  const int n_units = base.size();
  const int n_aux = static_cast<int>(base.aux.cols());
  if (n_aux == 0) throw OutOfRange("scenario population has no auxiliary variables");

  std::vector<int> vars = s.variables;
  if (vars.empty()) {
    vars.resize(n_aux);
    std::iota(vars.begin(), vars.end(), 0);
  }
  for (int v : vars)
    if (v < 0 || v >= n_aux) throw OutOfRange("scenario variable index out of range");
  if (s.order_by < 0 || s.order_by >= n_aux)
    throw OutOfRange("scenario order_by variable out of range");
  if (s.sizes.empty() || s.schemes.empty() || s.designs.empty())
    throw OutOfRange("scenario needs sizes, schemes and designs");
  if (s.draws < 2) throw OutOfRange("scenario draws must be at least 2");

  Eigen::VectorXd totals(n_aux);
  for (int v = 0; v < n_aux; ++v) {
    totals[v] = base.aux.col(v).sum();
    if (std::abs(totals[v]) < 1e-300) throw OutOfRange("an auxiliary variable sums to zero");
  }

  std::vector<ReportRow> rows;
  std::uint64_t stream = 0;

  // Monte Carlo block shared by the systematic baseline and mc_check rows:
  // per-position weights/aux so kernels built on permuted units read straight
  // off their sample positions.
  auto mc_rows = [&](const std::string& design_name, const std::string& scheme, int n,
                     const std::function<Sample(Rng&)>& draw_one, const Eigen::VectorXd& wpos,
                     const Eigen::MatrixXd& auxpos, std::uint64_t id) {
    Rng rng = Rng::for_replicate(s.seed, id);
    const int m_draws = s.draws;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vars.size()));
    Eigen::VectorXd m2 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vars.size()));
    for (int d = 0; d < m_draws; ++d) {
      const Sample sm = draw_one(rng);
      for (size_t vi = 0; vi < vars.size(); ++vi) {
        double t_hat = 0.0;
        for (int pos : sm.units) t_hat += wpos[pos] * auxpos(pos, vars[vi]);
        const double delta = t_hat - mean[static_cast<Eigen::Index>(vi)];
        mean[static_cast<Eigen::Index>(vi)] += delta / (d + 1);
        m2[static_cast<Eigen::Index>(vi)] +=
            delta * (t_hat - mean[static_cast<Eigen::Index>(vi)]);
      }
    }
    for (size_t vi = 0; vi < vars.size(); ++vi) {
      const double sd = std::sqrt(std::max(m2[static_cast<Eigen::Index>(vi)], 0.0) /
                                  (m_draws - 1));
      const double cv = sd / std::abs(totals[vars[vi]]);
      ReportRow row;
      row.scenario = s.name;
      row.design = design_name;
      row.variable = var_name(vars[vi]);
      row.n = n;
      row.scheme = scheme;
      row.cv = cv;
      row.cv_se = cv / std::sqrt(2.0 * (m_draws - 1));
      rows.push_back(std::move(row));
    }
  };

  for (const std::string& scheme : s.schemes) {
    if (scheme != "equal" && scheme != "proportional")
      throw OutOfRange("unknown scheme '" + scheme + "'");
    for (int n : s.sizes) {
      if (n < 1 || n > n_units) throw OutOfRange("scenario size outside the population");
      const Eigen::VectorXd pi =
          scheme == "equal"
              ? Eigen::VectorXd::Constant(n_units, static_cast<double>(n) / n_units)
              : proportional_pi(base.aux.col(0), n);
      const Eigen::VectorXd w = pi.cwiseInverse();

      for (const std::string& design : s.designs) {
        const std::uint64_t cell_stream = stream++;
        const std::uint64_t check_stream = stream++;
        const auto t0 = std::chrono::steady_clock::now();
        const size_t first_row = rows.size();

        if (design == "systematic") {
          std::vector<int> identity(n_units);
          std::iota(identity.begin(), identity.end(), 0);
          mc_rows(design, scheme, n,
                  [&](Rng& rng) { return baseline_systematic(pi, identity, rng); }, w,
                  base.aux, cell_stream);
        } else {
          const BuiltDesign built = build_design(design, pi, w, base, s.order_by);
          Eigen::VectorXd wpos(n_units);
          Eigen::MatrixXd auxpos(n_units, n_aux);
          for (int i = 0; i < n_units; ++i) {
            wpos[i] = w[built.perm[i]];
            auxpos.row(i) = base.aux.row(built.perm[i]);
          }
          for (size_t vi = 0; vi < vars.size(); ++vi) {
            Population cellpop;
            cellpop.y = auxpos.col(vars[vi]);
            cellpop.weights = wpos;
            const MseDecomposition mse = mse_exact(built.kernel, cellpop);
            ReportRow row;
            row.scenario = s.name;
            row.design = design;
            row.variable = var_name(vars[vi]);
            row.n = n;
            row.scheme = scheme;
            row.cv = std::sqrt(std::max(mse.mse, 0.0)) / std::abs(totals[vars[vi]]);
            rows.push_back(std::move(row));
          }
          if (s.mc_check) {
            const bool projection = built.kernel.is_projection();
            mc_rows(design + "_mc", scheme, n,
                    [&](Rng& rng) {
                      return projection ? sample_projection(built.kernel, rng)
                                        : sample_general(built.kernel, rng);
                    },
                    wpos, auxpos, check_stream);
          }
        }

        if (s.timings) {
          const double ms = std::chrono::duration<double, std::milli>(
                                std::chrono::steady_clock::now() - t0)
                                .count();
          for (size_t r = first_row; r < rows.size(); ++r) rows[r].runtime_ms = ms;
        }
      }
    }
  }
  return rows;
}

void write_report_csv(const std::vector<ReportRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open " + path + " for writing");
  out << "scenario,design,variable,n,scheme,cv,cv_se,runtime_ms\n";
  for (const ReportRow& r : rows)
    out << r.scenario << "," << r.design << "," << r.variable << "," << r.n << "," << r.scheme
        << "," << format_double(r.cv) << "," << format_double(r.cv_se) << ","
        << format_double(r.runtime_ms) << "\n";
}

McValidation validate_kernel_mc(const Kernel& kernel, int draws, std::uint64_t seed) {
  McValidation rep;
  rep.draws = draws;
  const int n = kernel.size();
  if (draws < 1) return rep;

  const bool projection = kernel.is_projection();
  const InclusionProbs probs = inclusion_probs(kernel);
  const SizeLaw law = size_law(kernel);
  const long modal_size = std::lround(kernel.trace());

  // Statistic for the tail and shape checks: Horvitz-Thompson total of a ramp
  // y_k = (k+1)/N, with units the design never includes contributing zero.
  Eigen::VectorXd zstat(n);
  for (int k = 0; k < n; ++k) {
    const double pi = probs.first_order[k];
    zstat[k] = pi > 1e-12 ? (static_cast<double>(k + 1) / n) / pi : 0.0;
  }
  double stat_mean = 0.0;
  for (int k = 0; k < n; ++k) stat_mean += probs.first_order[k] * zstat[k];
  const double stat_var = std::max(zstat.dot(probs.delta * zstat), 0.0);

  std::vector<long> first(n, 0);
  Eigen::MatrixXd pair_counts = Eigen::MatrixXd::Zero(n, n);
  std::vector<long> size_counts(static_cast<size_t>(n) + 1, 0);
  std::vector<long> mask_counts;
  if (n <= 10) mask_counts.assign(static_cast<size_t>(1) << n, 0);
  std::vector<double> stats(static_cast<size_t>(draws));
  long size_viol = 0;

  Rng rng = Rng::for_replicate(seed, 0);
  for (int d = 0; d < draws; ++d) {
    const Sample sm = projection ? sample_projection(kernel, rng) : sample_general(kernel, rng);
    double t_hat = 0.0;
    for (size_t i = 0; i < sm.units.size(); ++i) {
      const int u = sm.units[i];
      ++first[u];
      t_hat += zstat[u];
      for (size_t j = i + 1; j < sm.units.size(); ++j) pair_counts(u, sm.units[j]) += 1.0;
    }
    ++size_counts[sm.units.size()];
    if (projection && static_cast<long>(sm.units.size()) != modal_size) ++size_viol;
    if (n <= 10) {
      size_t mask = 0;
      for (int u : sm.units) mask |= static_cast<size_t>(1) << u;
      ++mask_counts[mask];
    }
    stats[static_cast<size_t>(d)] = t_hat;
  }
  const double m_draws = static_cast<double>(draws);
  rep.fixed_size_violations = projection ? size_viol : -1;

  for (int k = 0; k < n; ++k) {
    const double pi = probs.first_order[k];
    const double se = std::sqrt(pi * (1.0 - pi) / m_draws);
    const double p_hat = static_cast<double>(first[k]) / m_draws;
    const double z = se > 0.0 ? (p_hat - pi) / se
                              : (p_hat == pi ? 0.0 : std::numeric_limits<double>::infinity());
    rep.max_abs_z_first = std::max(rep.max_abs_z_first, std::abs(z));
  }
  for (int k = 0; k < n; ++k)
    for (int l = k + 1; l < n; ++l) {
      const double pi = probs.second_order(k, l);
      const double se = std::sqrt(pi * (1.0 - pi) / m_draws);
      const double p_hat = pair_counts(k, l) / m_draws;
      const double z = se > 0.0 ? (p_hat - pi) / se
                                : (p_hat == pi ? 0.0 : std::numeric_limits<double>::infinity());
      rep.max_abs_z_second = std::max(rep.max_abs_z_second, std::abs(z));
    }

  // Pearson statistic on the size law, adjacent bins pooled to expected >= 5;
  // the leftover upper tail merges into the last pooled bin.
  {
    std::vector<double> bin_e, bin_o;
    double e_acc = 0.0, o_acc = 0.0;
    for (int m = 0; m <= n; ++m) {
      e_acc += m_draws * law.pmf[m];
      o_acc += static_cast<double>(size_counts[static_cast<size_t>(m)]);
      if (e_acc >= 5.0) {
        bin_e.push_back(e_acc);
        bin_o.push_back(o_acc);
        e_acc = o_acc = 0.0;
      }
    }
    if ((e_acc > 0.0 || o_acc > 0.0) && !bin_e.empty()) {
      bin_e.back() += e_acc;
      bin_o.back() += o_acc;
    }
    double stat = 0.0;
    for (size_t b = 0; b < bin_e.size(); ++b)
      if (bin_e[b] > 0.0) stat += (bin_o[b] - bin_e[b]) * (bin_o[b] - bin_e[b]) / bin_e[b];
    rep.chi2_stat = stat;
    rep.chi2_df = std::max(static_cast<int>(bin_e.size()) - 1, 0);
    rep.chi2_p = rep.chi2_df > 0
                     ? boost::math::gamma_q(rep.chi2_df / 2.0, rep.chi2_stat / 2.0)
                     : 1.0;
  }

  if (n <= 10) {
    const ExactDistribution exact = exact_distribution(kernel);
    double tv = 0.0;
    for (size_t mask = 0; mask < exact.pmf.size(); ++mask)
      tv += std::abs(static_cast<double>(mask_counts[mask]) / m_draws - exact.pmf[mask]);
    rep.tv = 0.5 * tv;
  }

  if (stat_var > 0.0) {
    Population tail_pop;
    tail_pop.y = zstat;
    tail_pop.weights = Eigen::VectorXd::Ones(n);
    const double sigma = std::sqrt(stat_var);
    for (double f : {1.0, 2.0, 4.0}) {
      const double a = f * sigma;
      const ConcentrationBound bound = concentration_bound(kernel, tail_pop, a);
      long above = 0, outside = 0;
      for (double t_hat : stats) {
        if (t_hat - stat_mean > a) ++above;
        if (std::abs(t_hat - stat_mean) > a) ++outside;
      }
      rep.tail_ratio = std::max(rep.tail_ratio, above / m_draws / bound.one_sided);
      rep.tail_ratio = std::max(rep.tail_ratio, outside / m_draws / bound.two_sided);
    }
  }

  if (projection && kernel.trace() >= 50.0) {
    double mean = 0.0;
    for (double t_hat : stats) mean += t_hat;
    mean /= m_draws;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double t_hat : stats) {
      const double d1 = t_hat - mean;
      m2 += d1 * d1;
      m3 += d1 * d1 * d1;
      m4 += d1 * d1 * d1 * d1;
    }
    m2 /= m_draws;
    m3 /= m_draws;
    m4 /= m_draws;
    if (m2 > 0.0) {
      rep.clt_reported = true;
      rep.skewness = m3 / std::pow(m2, 1.5);
      rep.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    }
  }
  return rep;
}

std::string describe(const McValidation& rep) {
  std::ostringstream out;
  out << "draws                      " << rep.draws << "\n";
  out << "first order max |z|        " << rep.max_abs_z_first << "\n";
  out << "second order max |z|       " << rep.max_abs_z_second << "\n";
  out << "size chi-square            " << rep.chi2_stat << " (df " << rep.chi2_df << ", p "
      << rep.chi2_p << ")\n";
  if (rep.tv >= 0.0)
    out << "total variation            " << rep.tv << "\n";
  else
    out << "total variation            skipped (N > 10)\n";
  if (rep.fixed_size_violations >= 0)
    out << "fixed size violations      " << rep.fixed_size_violations << "\n";
  else
    out << "fixed size violations      n/a (not a projection)\n";
  out << "concentration tail ratio   " << rep.tail_ratio << "\n";
  if (rep.clt_reported) {
    out << "clt skewness               " << rep.skewness << "\n";
    out << "clt excess kurtosis        " << rep.excess_kurtosis << "\n";
  } else {
    out << "clt shape                  n/a (needs a projection with trace >= 50)\n";
  }
  return out.str();
}

}  // namespace dsd

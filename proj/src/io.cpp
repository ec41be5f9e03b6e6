#include "dsd/io.hpp"

#include <algorithm>
#include <charconv>
#include <complex>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace dsd {

namespace {

using nlohmann::json;

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open " + path + " for writing");
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    size_t start = field.find_first_not_of(' ');
    fields.push_back(start == std::string::npos ? "" : field.substr(start));
  }
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

double parse_double(const std::string& s, const std::string& where) {
  try {
    size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("bad number '" + s + "' in " + where);
  }
}

long parse_long(const std::string& s, const std::string& where) {
  try {
    size_t used = 0;
    long v = std::stol(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("bad integer '" + s + "' in " + where);
  }
}

// Non-empty, non-comment lines of a text file.
std::vector<std::string> data_lines(std::ifstream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    lines.push_back(line);
  }
  return lines;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

Kernel read_kernel_json(const std::string& path) {
  std::ifstream in = open_in(path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("n") || !j.contains("entries"))
    throw ParseError(path + ": kernel JSON needs fields \"n\" and \"entries\"");
  const int n = j["n"].get<int>();
  if (n <= 0) throw ParseError(path + ": n must be positive");
  const json& entries = j["entries"];
  if (!entries.is_array() || static_cast<int>(entries.size()) != n * n)
    throw ParseError(path + ": entries must hold n*n values, row-major");
  Eigen::MatrixXcd m(n, n);
  for (int idx = 0; idx < n * n; ++idx) {
    const json& cell = entries[idx];
    double re = 0.0, im = 0.0;
    if (cell.is_number()) {
      re = cell.get<double>();
    } else if (cell.is_array() && cell.size() == 2 && cell[0].is_number() && cell[1].is_number()) {
      re = cell[0].get<double>();
      im = cell[1].get<double>();
    } else {
      throw ParseError(path + ": entries are numbers or [re, im] pairs");
    }
    m(idx / n, idx % n) = std::complex<double>(re, im);
  }
  return Kernel::validate(m);
}

void write_kernel_json(const Kernel& kernel, const std::string& path,
                       const std::map<std::string, std::string>& meta) {
  const int n = kernel.size();
  json entries = json::array();
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) {
      const std::complex<double> v = kernel.entries()(k, l);
      entries.push_back(json::array({v.real(), v.imag()}));
    }
  json j;
  j["n"] = n;
  j["entries"] = std::move(entries);
  if (!meta.empty()) j["meta"] = meta;
  std::ofstream out = open_out(path);
  out << j.dump() << "\n";
}

Eigen::VectorXd read_pi_csv(const std::string& path) {
  std::ifstream in = open_in(path);
  const std::vector<std::string> lines = data_lines(in);
  if (lines.empty() || split_csv(lines[0]) != std::vector<std::string>{"pi"})
    throw ParseError(path + ": expected a one-column CSV with header 'pi'");
  Eigen::VectorXd pi(static_cast<Eigen::Index>(lines.size()) - 1);
  for (size_t i = 1; i < lines.size(); ++i)
    pi[static_cast<Eigen::Index>(i) - 1] = parse_double(lines[i], path);
  return pi;
}

void write_pi_csv(const Eigen::VectorXd& pi, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "pi\n";
  for (Eigen::Index k = 0; k < pi.size(); ++k) out << format_double(pi[k]) << "\n";
}

Population read_population_csv(const std::string& path) {
  std::ifstream in = open_in(path);
  const std::vector<std::string> lines = data_lines(in);
  if (lines.empty()) throw ParseError(path + ": empty population file");

  const std::vector<std::string> header = split_csv(lines[0]);
  int col_unit = -1, col_y = -1, col_w = -1, col_pi = -1;
  std::vector<int> col_x;  // col_x[q] = column of x{q+1}
  for (size_t c = 0; c < header.size(); ++c) {
    const std::string& name = header[c];
    if (name == "unit") col_unit = static_cast<int>(c);
    else if (name == "y") col_y = static_cast<int>(c);
    else if (name == "w") col_w = static_cast<int>(c);
    else if (name == "pi") col_pi = static_cast<int>(c);
    else if (name.size() > 1 && name[0] == 'x') {
      const long q = parse_long(name.substr(1), path + " header");
      if (q < 1) throw ParseError(path + ": auxiliary columns are x1, x2, ...");
      if (static_cast<size_t>(q) > col_x.size()) col_x.resize(q, -1);
      col_x[q - 1] = static_cast<int>(c);
    } else {
      throw ParseError(path + ": unknown column '" + name + "'");
    }
  }
  if (col_unit < 0 || col_y < 0) throw ParseError(path + ": columns 'unit' and 'y' are required");
  for (size_t q = 0; q < col_x.size(); ++q)
    if (col_x[q] < 0) {
      std::ostringstream msg;
      msg << path << ": auxiliary columns must be contiguous, x" << (q + 1) << " is missing";
      throw ParseError(msg.str());
    }

  const int n = static_cast<int>(lines.size()) - 1;
  const int n_aux = static_cast<int>(col_x.size());
  Population pop;
  pop.y.resize(n);
  pop.aux.resize(n, n_aux);
  pop.weights = Eigen::VectorXd::Ones(n);
  if (col_pi >= 0) pop.target_pi.resize(n);
  std::vector<bool> seen(n, false);

  for (int r = 0; r < n; ++r) {
    const std::vector<std::string> fields = split_csv(lines[r + 1]);
    if (fields.size() != header.size()) {
      std::ostringstream msg;
      msg << path << ": row " << (r + 1) << " has " << fields.size() << " fields, header has "
          << header.size();
      throw ParseError(msg.str());
    }
    const long label = parse_long(fields[col_unit], path);
    if (label < 1 || label > n) {
      std::ostringstream msg;
      msg << path << ": unit label " << label << " outside 1.." << n;
      throw ParseError(msg.str());
    }
    const int k = static_cast<int>(label) - 1;
    if (seen[k]) {
      std::ostringstream msg;
      msg << path << ": unit " << label << " appears twice";
      throw ParseError(msg.str());
    }
    seen[k] = true;
    pop.y[k] = parse_double(fields[col_y], path);
    for (int q = 0; q < n_aux; ++q) pop.aux(k, q) = parse_double(fields[col_x[q]], path);
    if (col_w >= 0) pop.weights[k] = parse_double(fields[col_w], path);
    if (col_pi >= 0) pop.target_pi[k] = parse_double(fields[col_pi], path);
  }
  pop.check();
  return pop;
}

void write_population_csv(const Population& pop, const std::string& path) {
  pop.check();
  std::ofstream out = open_out(path);
  out << "unit,y";
  for (Eigen::Index q = 0; q < pop.aux.cols(); ++q) out << ",x" << (q + 1);
  out << ",w";
  if (pop.target_pi.size() != 0) out << ",pi";
  out << "\n";
  for (int k = 0; k < pop.size(); ++k) {
    out << (k + 1) << "," << format_double(pop.y[k]);
    for (Eigen::Index q = 0; q < pop.aux.cols(); ++q) out << "," << format_double(pop.aux(k, q));
    out << "," << format_double(pop.weights[k]);
    if (pop.target_pi.size() != 0) out << "," << format_double(pop.target_pi[k]);
    out << "\n";
  }
}

std::vector<Sample> read_samples_csv(const std::string& path) {
  std::ifstream in = open_in(path);
  std::vector<Sample> samples;
  for (const std::string& line : data_lines(in)) {
    const std::vector<std::string> fields = split_csv(line);
    if (fields.empty()) continue;
    Sample s;
    for (size_t i = 1; i < fields.size(); ++i) {
      if (fields[i].empty()) continue;
      const long label = parse_long(fields[i], path);
      if (label < 1) throw ParseError(path + ": unit labels are 1-based");
      s.units.push_back(static_cast<int>(label) - 1);
    }
    std::sort(s.units.begin(), s.units.end());
    samples.push_back(std::move(s));
  }
  return samples;
}

void write_samples_csv(const std::vector<Sample>& samples, const std::string& path) {
  std::ofstream out = open_out(path);
  for (size_t d = 0; d < samples.size(); ++d) {
    out << (d + 1);
    for (int u : samples[d].units) out << "," << (u + 1);
    out << "\n";
  }
}

void write_distribution_csv(const ExactDistribution& dist, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "mask,probability\n";
  for (size_t mask = 0; mask < dist.pmf.size(); ++mask)
    out << mask << "," << format_double(dist.pmf[mask]) << "\n";
}

Eigen::MatrixXd read_points_csv(const std::string& path) {
  std::ifstream in = open_in(path);
  const std::vector<std::string> lines = data_lines(in);
  if (lines.empty()) throw ParseError(path + ": empty points file");
  std::vector<std::vector<double>> rows;
  for (const std::string& line : lines) {
    const std::vector<std::string> fields = split_csv(line);
    std::vector<double> row;
    for (const std::string& f : fields) row.push_back(parse_double(f, path));
    if (!rows.empty() && row.size() != rows[0].size())
      throw ParseError(path + ": rows have differing column counts");
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd points(static_cast<Eigen::Index>(rows.size()),
                         static_cast<Eigen::Index>(rows[0].size()));
  for (size_t r = 0; r < rows.size(); ++r)
    for (size_t c = 0; c < rows[r].size(); ++c)
      points(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return points;
}

}  // namespace dsd

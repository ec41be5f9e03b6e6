#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dsd/estimation.hpp"
#include "dsd/kernel.hpp"
#include "dsd/sampler.hpp"

// File formats. Kernels travel as JSON {"n": N, "entries": [[re, im], ...]
// row-major, "meta": optional string map}; plain numbers are accepted in
// place of [re, im] pairs. Tabular data is CSV with a header line. Unit
// labels in CSV files are 1-based; kernel JSON is unlabeled (row k of the
// matrix is unit k+1 of the CSVs). All writers print doubles with enough
// digits to round-trip, so emitted files are byte-stable across runs.

namespace dsd {

// Parse failures throw ParseError; filesystem failures throw ParseError too,
// with the path in the message.

Kernel read_kernel_json(const std::string& path);
void write_kernel_json(const Kernel& kernel, const std::string& path,
                       const std::map<std::string, std::string>& meta = {});

// One numeric column, header "pi".
Eigen::VectorXd read_pi_csv(const std::string& path);
void write_pi_csv(const Eigen::VectorXd& pi, const std::string& path);

// Columns: unit, y, x1..xQ (any Q >= 0), w (optional, defaults to 1), pi
// (optional). Units must be exactly the labels 1..N, in any row order.
Population read_population_csv(const std::string& path);
void write_population_csv(const Population& pop, const std::string& path);

// One row per draw: draw index (1-based), then the sorted sampled unit
// labels. Rows have varying length, so there is no header line.
std::vector<Sample> read_samples_csv(const std::string& path);
void write_samples_csv(const std::vector<Sample>& samples, const std::string& path);

// Header "mask,probability", one row per subset in ascending bitmask order;
// bit j of the mask stands for unit j+1.
void write_distribution_csv(const ExactDistribution& dist, const std::string& path);

// Points for distance-based kernels: header-less numeric CSV, one point per
// row, columns are coordinates.
Eigen::MatrixXd read_points_csv(const std::string& path);

// Shortest decimal form that parses back to exactly the same double.
std::string format_double(double v);

}  // namespace dsd

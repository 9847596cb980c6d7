#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ionsim/experiments.hpp"

namespace ionsim {

// 17 significant digits, shortest form.
std::string format_double(double value);

// Deterministic CSV: '# column: name (unit)' comment block, then data rows in
// grid order, LF line endings.
std::string render_csv(const ScanResult& scan);
void emit_csv(const ScanResult& scan, const std::string& path);

// Reads a two-column (x, y) series written in the same schema.
std::pair<Eigen::VectorXd, Eigen::VectorXd> read_series_csv(const std::string& path);

} // namespace ionsim

#include "ionsim/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace ionsim {

std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

std::string render_csv(const ScanResult& scan) {
  std::string out;
  out += "# column: " + scan.x_name + " (" + scan.x_unit + ")\n";
  for (std::size_t c = 0; c < scan.column_names.size(); ++c)
    out += "# column: " + scan.column_names[c] + " (" + scan.column_units[c] + ")\n";
  for (int row = 0; row < scan.grid.size(); ++row) {
    out += format_double(scan.grid(row));
    for (int col = 0; col < scan.values.cols(); ++col)
      out += "," + format_double(scan.values(row, col));
    out += "\n";
  }
  return out;
}

void emit_csv(const ScanResult& scan, const std::string& path) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw error("cannot open '" + path + "' for writing");
  file << render_csv(scan);
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> read_series_csv(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw error("cannot open '" + path + "'");
  std::vector<double> xs, ys;
  std::string line;
  int line_no = 0;
  while (std::getline(file, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    std::string cell;
    std::vector<double> cells;
    while (std::getline(row, cell, ',')) {
      try {
        cells.push_back(std::stod(cell));
      } catch (...) {
        throw error("bad number in '" + path + "' line " + std::to_string(line_no));
      }
    }
    if (cells.size() < 2)
      throw error("expected at least two columns in '" + path + "' line " +
                  std::to_string(line_no));
    xs.push_back(cells[0]);
    ys.push_back(cells[1]);
  }
  if (xs.empty()) throw error("no data rows in '" + path + "'");
  return {Eigen::Map<Eigen::VectorXd>(xs.data(), xs.size()),
          Eigen::Map<Eigen::VectorXd>(ys.data(), ys.size())};
}

} // namespace ionsim

#include "dpfpca/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace dpfpca {

namespace {

std::vector<double> parse_row(const std::string& line, int row_number) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string cell;
  int col = 0;
  while (std::getline(ss, cell, ',')) {
    ++col;
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(cell, &pos);
    } catch (const std::exception&) {
      throw DataError("non-numeric cell at row " + std::to_string(row_number) +
                      ", column " + std::to_string(col) + ": '" + cell + "'");
    }
    while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos]))) {
      ++pos;
    }
    if (pos != cell.size()) {
      throw DataError("non-numeric cell at row " + std::to_string(row_number) +
                      ", column " + std::to_string(col) + ": '" + cell + "'");
    }
    if (!std::isfinite(v)) {
      throw DataError("non-finite value at row " + std::to_string(row_number) +
                      ", column " + std::to_string(col));
    }
    out.push_back(v);
  }
  return out;
}

bool strictly_increasing(const std::vector<double>& xs) {
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (!(xs[i] > xs[i - 1])) return false;
  }
  return xs.size() >= 2;
}

}  // namespace

CurveTable load_curve_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int row_number = 0;
  while (std::getline(in, line)) {
    ++row_number;
    if (line.empty()) continue;
    if (line.back() == '\r') line.pop_back();
    rows.push_back(parse_row(line, row_number));
    if (rows.back().size() != rows.front().size()) {
      throw DataError("ragged row " + std::to_string(row_number) + ": expected " +
                      std::to_string(rows.front().size()) + " columns, got " +
                      std::to_string(rows.back().size()));
    }
  }
  if (rows.size() < 2) {
    throw DataError("curve CSV needs a grid row plus at least one data row: " + path);
  }

  CurveTable table;
  table.provenance = path;
  const std::size_t G = rows.front().size();
  table.header_present = strictly_increasing(rows.front());
  std::size_t first_data = table.header_present ? 1 : 0;
  if (table.header_present) {
    table.grid_points =
        Eigen::Map<const Eigen::VectorXd>(rows.front().data(), G);
  } else {
    table.grid_points = Eigen::VectorXd::LinSpaced(G, 0.0, 1.0);
  }
  const std::size_t n = rows.size() - first_data;
  if (n == 0) throw DataError("no data rows in " + path);
  table.values.resize(n, G);
  for (std::size_t i = 0; i < n; ++i) {
    table.values.row(i) =
        Eigen::Map<const Eigen::VectorXd>(rows[first_data + i].data(), G).transpose();
  }
  return table;
}

Dataset to_dataset(const CurveTable& table) {
  Dataset d;
  d.grid = trapezoid_grid(table.grid_points);
  d.curves.reserve(table.n());
  for (int i = 0; i < table.n(); ++i) {
    d.curves.push_back(table.values.row(i).transpose());
  }
  return d;
}

void save_dataset_csv(const Dataset& d, const std::string& path) {
  std::ostringstream os;
  os.precision(17);
  for (int g = 0; g < d.grid.size(); ++g) {
    if (g) os << ',';
    os << d.grid.points(g);
  }
  os << '\n';
  for (const auto& curve : d.curves) {
    for (int g = 0; g < d.grid.size(); ++g) {
      if (g) os << ',';
      os << curve(g);
    }
    os << '\n';
  }
  write_text_file(path, os.str());
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open output file: " + path);
  out << content;
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace dpfpca

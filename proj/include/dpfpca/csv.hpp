#pragma once

#include <Eigen/Dense>
#include <string>

#include "dpfpca/hilbert.hpp"

namespace dpfpca {

// Parsed curve CSV: first row holds the grid abscissae, each further row one
// subject's values. When the first row is not strictly increasing it is
// treated as data and a uniform [0,1] grid is substituted (flagged).
struct CurveTable {
  Eigen::VectorXd grid_points;
  Eigen::MatrixXd values;  // n x G
  std::string provenance;
  bool header_present = true;

  int n() const { return static_cast<int>(values.rows()); }
  int grid_size() const { return static_cast<int>(values.cols()); }
};

CurveTable load_curve_csv(const std::string& path);

Dataset to_dataset(const CurveTable& table);

void save_dataset_csv(const Dataset& d, const std::string& path);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace dpfpca

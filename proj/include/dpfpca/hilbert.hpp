#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "dpfpca/errors.hpp"

namespace dpfpca {

// Discretization of [a,b]: strictly increasing abscissae plus positive
// quadrature weights. All inner products in the library are computed as
// weighted sums on such a grid.
struct Grid {
  Eigen::VectorXd points;
  Eigen::VectorXd weights;

  int size() const { return static_cast<int>(points.size()); }
  double length() const { return points(points.size() - 1) - points(0); }
  bool same_as(const Grid& other, double tol = 1e-12) const;
};

// Uniform grid of G points on [0,1] with trapezoid weights.
Grid uniform_grid(int G);
// Trapezoid weights for arbitrary strictly increasing abscissae.
Grid trapezoid_grid(const Eigen::VectorXd& points);

// One functional observation, sampled on a shared grid.
struct Curve {
  Grid grid;
  Eigen::VectorXd values;
};

struct Dataset {
  Grid grid;
  std::vector<Eigen::VectorXd> curves;  // each of length grid.size()

  int n() const { return static_cast<int>(curves.size()); }
};

// m basis functions evaluated on a grid, orthonormal under the grid's
// quadrature inner product (Gram = I within 1e-6 per entry).
struct BasisSet {
  Grid grid;
  Eigen::MatrixXd functions;  // G x m, column j = b_j on grid
  std::vector<std::string> labels;

  int size() const { return static_cast<int>(functions.cols()); }
};

// Basis coefficients of a dataset: row i holds <X_i, b_j>, j = 1..m.
struct CoefMatrix {
  Eigen::MatrixXd entries;  // n x m
  std::vector<std::string> basis_labels;

  int n() const { return static_cast<int>(entries.rows()); }
  int m() const { return static_cast<int>(entries.cols()); }
};

enum class ClipMode { per_record, global };

double inner_product(const Grid& grid, const Eigen::VectorXd& f,
                     const Eigen::VectorXd& g);
double inner_product(const Curve& f, const Curve& g);
double norm(const Grid& grid, const Eigen::VectorXd& f);

// Rescales curves so that every norm is strictly below 1.
//   per_record: X_i <- X_i / max(1, ||X_i||/(1-eta))   (record-local, safe
//               under DP composition)
//   global:     all curves divided by (1+eta) * max_i ||X_i||; the scale is
//               data-dependent, so use only for simulation fidelity.
Dataset clip_to_unit_ball(const Dataset& d, ClipMode mode);

// b_1 = 1, b_{2j} = sqrt(2) sin(2 pi j t), b_{2j+1} = sqrt(2) cos(2 pi j t).
BasisSet fourier_basis(int m, const Grid& grid);

struct KernelEigenbasis {
  BasisSet basis;             // the m_selected leading eigenfunctions
  Eigen::VectorXd eigenvalues;  // all G eigenvalues, decreasing
  int m_selected = 0;
  bool floored = false;  // true if negative eigenvalues were clipped to 0
};

// Eigenbasis of the Gaussian kernel K(s,t) = exp(-(s-t)^2 / bandwidth^2)
// under the quadrature inner product. m_selected is the smallest m whose
// cumulative eigenvalue fraction exceeds var_threshold.
KernelEigenbasis gaussian_kernel_eigenbasis(const Grid& grid, double bandwidth,
                                            double var_threshold);

// Bisection on bandwidth until gaussian_kernel_eigenbasis selects exactly
// target_m functions at var_threshold.
double bandwidth_for_target(const Grid& grid, double var_threshold, int target_m);

struct ProjectionResult {
  CoefMatrix coefs;
  Eigen::VectorXd residual_norms;  // per curve
};

ProjectionResult project(const Dataset& d, const BasisSet& basis);

Curve reconstruct(const Eigen::VectorXd& coefs, const BasisSet& basis);

// Max |Gram - I| entry; used by BasisSet validation and tests.
double max_gram_deviation(const BasisSet& basis);

void validate_basis(const BasisSet& basis, double tol = 1e-6);

}  // namespace dpfpca

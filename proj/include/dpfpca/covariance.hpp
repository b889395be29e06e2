#pragma once

#include <Eigen/Dense>

#include "dpfpca/hilbert.hpp"

namespace dpfpca {

// Basis-coordinate covariance of the Gaussian-process base measure.
// Always dense and symmetric; m stays small (<= ~100) in this regime.
struct CovarianceOperator {
  Eigen::MatrixXd matrix;  // m x m symmetric positive definite
  bool floored = false;    // set when an eigenvalue floor was applied

  int dim() const { return static_cast<int>(matrix.rows()); }
  double trace() const { return matrix.trace(); }
};

// Diagonal covariance with entries i^{-exponent}, i = 1..m.
CovarianceOperator power_law_sigma(int m, double exponent = 3.0);

// Sigma_ij = <b_i, K b_j> by double quadrature against the Gaussian kernel
// K(s,t) = exp(-(s-t)^2 / bandwidth^2); result symmetrized.
CovarianceOperator sigma_from_kernel(const BasisSet& basis, double bandwidth);

// Inverse via eigendecomposition with eigenvalues floored at
// floor_ratio * lambda_max. The floor keeps the Bingham parameter bounded
// when Sigma is near-singular.
Eigen::MatrixXd inverse_with_floor(const CovarianceOperator& S,
                                   double floor_ratio = 1e-10,
                                   bool* floor_triggered = nullptr);

void validate_covariance(const CovarianceOperator& S);

// Diagnostic ratios lambda_i(Sigma) / lambda_i(C) for the boundedness
// condition on C^{-1} Sigma. Reported, never enforced.
Eigen::VectorXd eigen_ratio_diagnostic(const CovarianceOperator& Sigma,
                                       const CovarianceOperator& C);

}  // namespace dpfpca

#include "dpfpca/covariance.hpp"

#include <cmath>

#include "dpfpca/errors.hpp"

namespace dpfpca {

CovarianceOperator power_law_sigma(int m, double exponent) {
  if (m < 1) throw DataError("power_law_sigma: m must be >= 1");
  if (!(exponent > 0)) throw DataError("power_law_sigma: exponent must be positive");
  Eigen::VectorXd diag(m);
  for (int i = 0; i < m; ++i) {
    diag(i) = std::pow(static_cast<double>(i + 1), -exponent);
  }
  return CovarianceOperator{Eigen::MatrixXd(diag.asDiagonal()), false};
}

CovarianceOperator sigma_from_kernel(const BasisSet& basis, double bandwidth) {
  if (!(bandwidth > 0)) throw DataError("sigma_from_kernel: bandwidth must be positive");
  const Grid& grid = basis.grid;
  const int G = grid.size();
  Eigen::MatrixXd K(G, G);
  for (int i = 0; i < G; ++i) {
    for (int j = 0; j < G; ++j) {
      const double d = grid.points(i) - grid.points(j);
      K(i, j) = std::exp(-d * d / (bandwidth * bandwidth));
    }
  }
  Eigen::MatrixXd WB = grid.weights.asDiagonal() * basis.functions;
  Eigen::MatrixXd M = WB.transpose() * K * WB;
  Eigen::MatrixXd S = 0.5 * (M + M.transpose());

  CovarianceOperator out{S, false};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
  if (eig.eigenvalues().minCoeff() <= 0) {
    // Not PD after quadrature; rebuild with the same floor used for inversion.
    const double lmax = eig.eigenvalues().maxCoeff();
    const double floor = 1e-10 * lmax;
    Eigen::VectorXd vals = eig.eigenvalues().cwiseMax(floor);
    out.matrix = eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
    out.matrix = 0.5 * (out.matrix + out.matrix.transpose());
    out.floored = true;
  }
  return out;
}

Eigen::MatrixXd inverse_with_floor(const CovarianceOperator& S, double floor_ratio,
                                   bool* floor_triggered) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S.matrix);
  const double lmax = eig.eigenvalues().maxCoeff();
  const double floor = floor_ratio * lmax;
  bool triggered = false;
  Eigen::VectorXd inv_vals(S.dim());
  for (int i = 0; i < S.dim(); ++i) {
    double v = eig.eigenvalues()(i);
    if (v < floor) {
      v = floor;
      triggered = true;
    }
    inv_vals(i) = 1.0 / v;
  }
  if (floor_triggered) *floor_triggered = triggered;
  Eigen::MatrixXd inv =
      eig.eigenvectors() * inv_vals.asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (inv + inv.transpose());
}

void validate_covariance(const CovarianceOperator& S) {
  if (S.matrix.rows() != S.matrix.cols()) {
    throw DataError("covariance matrix must be square");
  }
  if ((S.matrix - S.matrix.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw DataError("covariance matrix must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S.matrix);
  if (eig.eigenvalues().minCoeff() <= 0) {
    throw DataError("covariance matrix must be positive definite");
  }
}

Eigen::VectorXd eigen_ratio_diagnostic(const CovarianceOperator& Sigma,
                                       const CovarianceOperator& C) {
  if (Sigma.dim() != C.dim()) throw DataError("dimension mismatch");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Sigma.matrix);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ec(C.matrix);
  Eigen::VectorXd ls = es.eigenvalues().reverse();
  Eigen::VectorXd lc = ec.eigenvalues().reverse();
  return ls.cwiseQuotient(lc);
}

}  // namespace dpfpca

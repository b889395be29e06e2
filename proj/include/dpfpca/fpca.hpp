#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "dpfpca/bmvmf.hpp"
#include "dpfpca/covariance.hpp"
#include "dpfpca/hilbert.hpp"

namespace dpfpca {

// Rank-k orthogonal projection in basis coordinates: P = P', P P = P,
// tr(P) = k.
struct ProjectionOperator {
  Eigen::MatrixXd P;
  int rank = 0;
};

void validate_projection(const ProjectionOperator& P, double tol = 1e-8);

struct UtilityReport {
  double variance_ratio = 0.0;  // in [0,1]
  double subspace_norm = 0.0;   // in [0,k]
  double epsilon = 0.0;
  int n = 0;
  int k = 0;
  int m = 0;
  std::uint64_t seed = 0;
};

// xi_X(P) = sum_i ||P x_i||^2 = tr(P X'X P). Sensitivity 1 because
// ||P x_i||^2 <= ||x_i||^2 <= 1 on clipped data; rejects unclipped input.
double fpca_objective(const CoefMatrix& coefs, const ProjectionOperator& P);

struct FpcaSolution {
  ProjectionOperator projection;
  Eigen::MatrixXd components;  // m x k, top-k eigenvectors, sign-fixed
  Eigen::VectorXd eigenvalues;  // all m eigenvalues of X'X, decreasing
  bool nonunique = false;  // k-th and (k+1)-th eigenvalues tied
};

FpcaSolution nonprivate_fpca(const CoefMatrix& coefs, int k);

// P = V V'; re-orthonormalizes first (and reports it) if V has drifted.
ProjectionOperator projection_from_span(const StiefelPoint& V,
                                        bool* reorthonormalized = nullptr);

// ||X_c' P~ X_c||_F^2 / ||X_c' P^ X_c||_F^2 with X_c the m x n
// column-records layout. Equals sum_{i,j} <P x_i, P x_j>^2 for idempotent P.
double variance_ratio(const CoefMatrix& coefs, const ProjectionOperator& P_tilde,
                      const ProjectionOperator& P_hat);

// Variance-explained variant sum_i ||P~ x_i||^2 / sum_i ||P^ x_i||^2;
// provided alongside the Gram-matrix default.
double variance_ratio_explained(const CoefMatrix& coefs,
                                const ProjectionOperator& P_tilde,
                                const ProjectionOperator& P_hat);

// (1/2) ||P~ - P^||_F^2 = k - tr(P~ P^), in [0, k].
double subspace_norm(const ProjectionOperator& P_tilde,
                     const ProjectionOperator& P_hat);

struct ChainConfig {
  int burn_in = kDefaultBurnIn;
  int keep = 1;
  int thin = 1;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
};

struct PrivateFpcaResult {
  StiefelPoint release;  // final chain state, the DP release
  ProjectionOperator projection;
  UtilityReport report;
  FpcaSolution nonprivate;
  std::vector<double> trace;
  std::vector<StiefelPoint> kept_samples;  // diagnostics, not private
};

// Full pipeline: project, build the Bingham parameter, run the Gibbs chain,
// assemble the projection and score it against the non-private optimum.
PrivateFpcaResult private_fpca(const Dataset& d, const BasisSet& basis,
                               const CovarianceOperator& sigma, int k,
                               double epsilon, const ChainConfig& chain);

std::string utility_report_csv_header();
std::string utility_report_csv_row(const UtilityReport& r, int replicate);

}  // namespace dpfpca

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "dpfpca/covariance.hpp"
#include "dpfpca/hilbert.hpp"
#include "dpfpca/rng.hpp"

namespace dpfpca {

// Parameter of the matrix Bingham density ~ exp(tr(V' A V)) over m x k
// matrices with orthonormal columns.
struct BinghamParameter {
  Eigen::MatrixXd A;  // m x m symmetric
  int k = 1;

  int m() const { return static_cast<int>(A.rows()); }
};

struct StiefelPoint {
  Eigen::MatrixXd V;  // m x k, V'V = I_k within 1e-8

  int m() const { return static_cast<int>(V.rows()); }
  int k() const { return static_cast<int>(V.cols()); }
};

double orthonormality_defect(const Eigen::MatrixXd& V);
void validate_stiefel(const StiefelPoint& V, double tol = 1e-8);

struct ChainState {
  StiefelPoint current;
  long step_count = 0;
  std::uint64_t stream_id = 0;
  std::vector<double> log_utility_trace;  // tr(V'AV) per completed sweep
  bool complement_rebuilt = false;        // rank trouble seen during a sweep
};

// A = (eps/2) (X'X - Sigma^{-1}), symmetrized. Sigma is inverted with the
// eigenvalue floor so A stays bounded.
BinghamParameter build_bingham_parameter(const CoefMatrix& coefs,
                                         const CovarianceOperator& sigma,
                                         double epsilon, int k);

// One unit vector with density ~ exp(z'Bz) on the sphere, by rejection with
// an angular-central-Gaussian envelope (Kent-Ganeiber-Mardia construction).
Eigen::VectorXd sample_vector_bingham(const Eigen::MatrixXd& B, Rng& rng);

// One Gibbs sweep: every column resampled (random order) from its
// conditional vector Bingham density on the orthogonal complement of the
// remaining columns.
void gibbs_step(ChainState& state, const BinghamParameter& param, Rng& rng);

struct ChainResult {
  StiefelPoint final_state;  // the designated private release
  std::vector<StiefelPoint> kept;  // diagnostics only, not private
  std::vector<double> trace;       // tr(V'AV) per sweep, burn-in included
};

inline constexpr int kDefaultBurnIn = 20000;

// Initializes V from k Gaussian vectors orthonormalized, runs burn_in
// sweeps, then records every thin-th state keep times.
ChainResult run_chain(const BinghamParameter& param, int burn_in, int keep,
                      int thin, std::uint64_t seed, std::uint64_t stream_id = 0);

struct MomentReport {
  Eigen::MatrixXd second_moment;  // E[V V'] under the exact density
  double quadrature_error = 0.0;  // max entry change under grid refinement
};

// Deterministic-quadrature oracle for k=1, m in {2,3}.
MomentReport bingham_moment_oracle(const BinghamParameter& param);

// Line-delimited {"step":...,"log_utility":...} records for convergence
// inspection.
void export_chain_trace(const std::vector<double>& trace, const std::string& path);

}  // namespace dpfpca

#include "dpfpca/fpca.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "dpfpca/errors.hpp"

namespace dpfpca {

namespace {

void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > 1e-8) {
      if (v(i) < 0) v = -v;
      return;
    }
  }
}

bool lexicographic_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a(i) != b(i)) return a(i) < b(i);
  }
  return false;
}

void require_clipped(const CoefMatrix& coefs) {
  for (Eigen::Index i = 0; i < coefs.entries.rows(); ++i) {
    if (coefs.entries.row(i).norm() > 1.0 + 1e-9) {
      throw DataError("record " + std::to_string(i) +
                      " has norm > 1; clip the dataset first");
    }
  }
}

}  // namespace

void validate_projection(const ProjectionOperator& P, double tol) {
  if (P.P.rows() != P.P.cols()) throw DataError("projection must be square");
  if ((P.P - P.P.transpose()).cwiseAbs().maxCoeff() > tol) {
    throw DataError("projection must be symmetric");
  }
  if ((P.P * P.P - P.P).cwiseAbs().maxCoeff() > tol) {
    throw DataError("projection must be idempotent");
  }
  if (std::abs(P.P.trace() - P.rank) > 1e-6) {
    throw DataError("projection trace does not equal its rank");
  }
}

double fpca_objective(const CoefMatrix& coefs, const ProjectionOperator& P) {
  require_clipped(coefs);
  if (P.P.rows() != coefs.m()) throw DataError("fpca_objective: dimension mismatch");
  return (coefs.entries * P.P).rowwise().squaredNorm().sum();
}

FpcaSolution nonprivate_fpca(const CoefMatrix& coefs, int k) {
  const int m = coefs.m();
  if (k < 1 || k > std::min(coefs.n(), m)) {
    throw DataError("nonprivate_fpca: need 1 <= k <= min(n, m)");
  }
  Eigen::MatrixXd gram = coefs.entries.transpose() * coefs.entries;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);

  std::vector<int> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  Eigen::MatrixXd vecs = eig.eigenvectors();
  for (int j = 0; j < m; ++j) fix_sign(vecs.col(j));
  // Decreasing eigenvalues; ties broken lexicographically on the sign-fixed
  // eigenvectors so results are deterministic.
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (eig.eigenvalues()(a) != eig.eigenvalues()(b)) {
      return eig.eigenvalues()(a) > eig.eigenvalues()(b);
    }
    return lexicographic_less(vecs.col(a), vecs.col(b));
  });

  FpcaSolution sol;
  sol.eigenvalues.resize(m);
  sol.components.resize(m, k);
  for (int j = 0; j < m; ++j) sol.eigenvalues(j) = eig.eigenvalues()(idx[j]);
  for (int j = 0; j < k; ++j) sol.components.col(j) = vecs.col(idx[j]);
  if (k < m && std::abs(sol.eigenvalues(k - 1) - sol.eigenvalues(k)) < 1e-10) {
    sol.nonunique = true;
  }
  sol.projection.P = sol.components * sol.components.transpose();
  sol.projection.rank = k;
  return sol;
}

ProjectionOperator projection_from_span(const StiefelPoint& V,
                                        bool* reorthonormalized) {
  Eigen::MatrixXd W = V.V;
  bool fixed = false;
  if (orthonormality_defect(W) > 1e-8) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(W);
    Eigen::MatrixXd Q = qr.householderQ();
    W = Q.leftCols(W.cols());
    fixed = true;
  }
  if (reorthonormalized) *reorthonormalized = fixed;
  return ProjectionOperator{W * W.transpose(), static_cast<int>(W.cols())};
}

double variance_ratio(const CoefMatrix& coefs, const ProjectionOperator& P_tilde,
                      const ProjectionOperator& P_hat) {
  // X_c' P X_c with X_c = m x n column-records layout
  Eigen::MatrixXd num_mat = coefs.entries * P_tilde.P * coefs.entries.transpose();
  Eigen::MatrixXd den_mat = coefs.entries * P_hat.P * coefs.entries.transpose();
  const double den = den_mat.squaredNorm();
  if (den == 0.0) throw DataError("variance_ratio: all-zero data");
  return num_mat.squaredNorm() / den;
}

double variance_ratio_explained(const CoefMatrix& coefs,
                                const ProjectionOperator& P_tilde,
                                const ProjectionOperator& P_hat) {
  const double num = (coefs.entries * P_tilde.P).rowwise().squaredNorm().sum();
  const double den = (coefs.entries * P_hat.P).rowwise().squaredNorm().sum();
  if (den == 0.0) throw DataError("variance_ratio_explained: all-zero data");
  return num / den;
}

double subspace_norm(const ProjectionOperator& P_tilde,
                     const ProjectionOperator& P_hat) {
  if (P_tilde.rank != P_hat.rank) {
    throw DataError("subspace_norm: rank mismatch");
  }
  return 0.5 * (P_tilde.P - P_hat.P).squaredNorm();
}

PrivateFpcaResult private_fpca(const Dataset& d, const BasisSet& basis,
                               const CovarianceOperator& sigma, int k,
                               double epsilon, const ChainConfig& chain) {
  if (k >= d.n()) throw DataError("private_fpca requires k < n");
  ProjectionResult proj = project(d, basis);
  require_clipped(proj.coefs);

  BinghamParameter param = build_bingham_parameter(proj.coefs, sigma, epsilon, k);
  ChainResult run = run_chain(param, chain.burn_in, chain.keep, chain.thin,
                              chain.seed, chain.stream_id);

  PrivateFpcaResult result;
  result.release = run.final_state;
  result.projection = projection_from_span(run.final_state);
  result.nonprivate = nonprivate_fpca(proj.coefs, k);
  result.trace = std::move(run.trace);
  result.kept_samples = std::move(run.kept);

  result.report.variance_ratio =
      variance_ratio(proj.coefs, result.projection, result.nonprivate.projection);
  result.report.subspace_norm =
      subspace_norm(result.projection, result.nonprivate.projection);
  result.report.epsilon = epsilon;
  result.report.n = d.n();
  result.report.k = k;
  result.report.m = basis.size();
  result.report.seed = chain.seed;
  return result;
}

std::string utility_report_csv_header() {
  return "n,epsilon,k,m,replicate,variance_ratio,subspace_norm,seed";
}

std::string utility_report_csv_row(const UtilityReport& r, int replicate) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%d,%.10g,%d,%d,%d,%.10g,%.10g,%llu", r.n,
                r.epsilon, r.k, r.m, replicate, r.variance_ratio, r.subspace_norm,
                static_cast<unsigned long long>(r.seed));
  return buf;
}

}  // namespace dpfpca

#include "dpfpca/bmvmf.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>

#include "dpfpca/errors.hpp"

namespace dpfpca {

namespace {

// Modified Gram-Schmidt; preserves the direction of each column relative to
// the span of the preceding ones.
void orthonormalize_columns(Eigen::MatrixXd& V) {
  for (Eigen::Index j = 0; j < V.cols(); ++j) {
    for (Eigen::Index i = 0; i < j; ++i) {
      V.col(j) -= V.col(i).dot(V.col(j)) * V.col(i);
    }
    const double nj = V.col(j).norm();
    if (nj < 1e-14) {
      throw NumericalError("orthonormalize_columns: rank-deficient input");
    }
    V.col(j) /= nj;
  }
}

// Exact sampler for the vector Bingham density ~ exp(z'Bz) on the unit
// sphere. Rejection from an angular central Gaussian envelope with
// Omega^{-1} = I + (2/b) Lambda, where Lambda = (beta_max - beta_i) in B's
// eigenbasis and b solves sum_i 1/(b + 2 lambda_i) = 1. The envelope bound
// exp(-t) <= M (1 + 2t/b)^{-p/2} with M = e^{-(p-b)/2} (p/b)^{p/2} holds
// with equality at t = (p-b)/2.
class VectorBinghamSampler {
 public:
  explicit VectorBinghamSampler(const Eigen::MatrixXd& B) {
    if (B.rows() != B.cols()) throw DataError("B must be square");
    if ((B - B.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
      throw DataError("B must be symmetric");
    }
    p_ = static_cast<int>(B.rows());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (B + B.transpose()));
    rotation_ = eig.eigenvectors();
    lambda_ = (eig.eigenvalues().maxCoeff() - eig.eigenvalues().array()).matrix();
    envelope_b_ = solve_envelope_b();
    omega_inv_ = (1.0 + 2.0 / envelope_b_ * lambda_.array()).matrix();
    log_m_ = -(p_ - envelope_b_) / 2.0 +
             p_ / 2.0 * std::log(static_cast<double>(p_) / envelope_b_);
  }

  Eigen::VectorXd draw(Rng& rng) const {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (long attempts = 1; attempts <= 1000000; ++attempts) {
      Eigen::VectorXd y(p_);
      for (int i = 0; i < p_; ++i) {
        y(i) = normal(rng) / std::sqrt(omega_inv_(i));
      }
      Eigen::VectorXd z = y / y.norm();
      const double t = lambda_.dot(z.cwiseAbs2());
      const double q = omega_inv_.dot(z.cwiseAbs2());
      const double log_accept = -t + p_ / 2.0 * std::log(q) - log_m_;
      if (std::log(unif(rng)) <= log_accept) {
        return rotation_ * z;
      }
    }
    throw NumericalError(
        "sample_vector_bingham: 1e6 consecutive rejections; spectrum spread " +
        std::to_string(lambda_.maxCoeff()));
  }

 private:
  double solve_envelope_b() const {
    auto f = [this](double b) {
      double s = 0.0;
      for (int i = 0; i < p_; ++i) s += 1.0 / (b + 2.0 * lambda_(i));
      return s - 1.0;
    };
    double lo = 1e-12, hi = static_cast<double>(p_);
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (f(mid) > 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }

  int p_ = 0;
  Eigen::MatrixXd rotation_;
  Eigen::VectorXd lambda_;    // shifted eigenvalues, min is 0
  Eigen::VectorXd omega_inv_;  // diagonal of the ACG inverse covariance
  double envelope_b_ = 1.0;
  double log_m_ = 0.0;
};

// Orthonormal basis of the orthogonal complement of the given columns.
Eigen::MatrixXd complement_basis(const Eigen::MatrixXd& columns, Rng& rng,
                                 bool* rebuilt) {
  const auto m = columns.rows();
  const auto k1 = columns.cols();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(columns);
  Eigen::MatrixXd Q = qr.householderQ();
  Eigen::MatrixXd N = Q.rightCols(m - k1);
  if ((columns.transpose() * N).cwiseAbs().maxCoeff() > 1e-8) {
    // QR lost the complement; rebuild from a random orthogonal decomposition.
    *rebuilt = true;
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd M(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < m; ++j) M(i, j) = normal(rng);
    M.leftCols(k1) = columns;
    orthonormalize_columns(M);
    N = M.rightCols(m - k1);
  }
  return N;
}

}  // namespace

double orthonormality_defect(const Eigen::MatrixXd& V) {
  const auto k = V.cols();
  return (V.transpose() * V - Eigen::MatrixXd::Identity(k, k))
      .cwiseAbs()
      .maxCoeff();
}

void validate_stiefel(const StiefelPoint& V, double tol) {
  if (orthonormality_defect(V.V) > tol) {
    throw DataError("StiefelPoint columns are not orthonormal");
  }
}

BinghamParameter build_bingham_parameter(const CoefMatrix& coefs,
                                         const CovarianceOperator& sigma,
                                         double epsilon, int k) {
  if (coefs.m() != sigma.dim()) {
    throw DataError("build_bingham_parameter: dimension mismatch");
  }
  if (!(epsilon > 0)) throw DataError("epsilon must be positive");
  if (k < 1 || k > coefs.m()) throw DataError("invalid component count k");
  Eigen::MatrixXd gram = coefs.entries.transpose() * coefs.entries;
  Eigen::MatrixXd A = epsilon / 2.0 * (gram - inverse_with_floor(sigma));
  A = 0.5 * (A + A.transpose());
  return BinghamParameter{A, k};
}

Eigen::VectorXd sample_vector_bingham(const Eigen::MatrixXd& B, Rng& rng) {
  return VectorBinghamSampler(B).draw(rng);
}

void gibbs_step(ChainState& state, const BinghamParameter& param, Rng& rng) {
  const int m = param.m();
  const int k = param.k;
  Eigen::MatrixXd& V = state.current.V;

  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  for (int j : order) {
    if (k == 1) {
      V.col(0) = sample_vector_bingham(param.A, rng);
      continue;
    }
    Eigen::MatrixXd others(m, k - 1);
    int c = 0;
    for (int l = 0; l < k; ++l) {
      if (l != j) others.col(c++) = V.col(l);
    }
    bool rebuilt = false;
    Eigen::MatrixXd N = complement_basis(others, rng, &rebuilt);
    if (rebuilt) state.complement_rebuilt = true;
    Eigen::MatrixXd B = N.transpose() * param.A * N;
    Eigen::VectorXd z = sample_vector_bingham(0.5 * (B + B.transpose()), rng);
    V.col(j) = N * z;
  }

  if (orthonormality_defect(V) > 1e-10) {
    orthonormalize_columns(V);
  }
  ++state.step_count;
  state.log_utility_trace.push_back((V.transpose() * param.A * V).trace());
}

ChainResult run_chain(const BinghamParameter& param, int burn_in, int keep,
                      int thin, std::uint64_t seed, std::uint64_t stream_id) {
  if (burn_in < 0 || keep < 1 || thin < 1) {
    throw DataError("run_chain: burn_in >= 0, keep >= 1, thin >= 1 required");
  }
  const int m = param.m();
  const int k = param.k;
  Rng rng = make_rng(seed, stream_id);
  std::normal_distribution<double> normal(0.0, 1.0);

  ChainState state;
  state.stream_id = stream_id;
  state.current.V.resize(m, k);
  for (int j = 0; j < k; ++j) {
    for (int i = 0; i < m; ++i) state.current.V(i, j) = normal(rng);
  }
  orthonormalize_columns(state.current.V);

  // k = 1 sweeps are iid draws from one fixed conditional; reuse the
  // eigendecomposition instead of repeating it every sweep.
  const bool cache_kernel = (k == 1);
  VectorBinghamSampler cached(cache_kernel ? param.A
                                           : Eigen::MatrixXd::Identity(1, 1));

  auto sweep = [&]() {
    if (cache_kernel) {
      state.current.V.col(0) = cached.draw(rng);
      ++state.step_count;
      state.log_utility_trace.push_back(
          (state.current.V.transpose() * param.A * state.current.V).trace());
    } else {
      gibbs_step(state, param, rng);
    }
  };

  for (int s = 0; s < burn_in; ++s) sweep();

  ChainResult result;
  result.kept.reserve(keep);
  for (int r = 0; r < keep; ++r) {
    for (int t = 0; t < thin; ++t) sweep();
    result.kept.push_back(state.current);
  }
  result.final_state = state.current;
  result.trace = std::move(state.log_utility_trace);
  return result;
}

MomentReport bingham_moment_oracle(const BinghamParameter& param) {
  if (param.k != 1 || (param.m() != 2 && param.m() != 3)) {
    throw DataError("bingham_moment_oracle supports k=1 and m in {2,3} only");
  }
  const Eigen::MatrixXd& A = param.A;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  // Shift by the top eigenvalue so the integrand never overflows.
  const double shift =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(A).eigenvalues().maxCoeff();

  auto circle_moment = [&](int nodes) {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2, 2);
    double mass = 0.0;
    for (int i = 0; i < nodes; ++i) {
      const double theta = two_pi * (i + 0.5) / nodes;
      Eigen::Vector2d v(std::cos(theta), std::sin(theta));
      const double w = std::exp(v.dot(A * v) - shift);
      M += w * v * v.transpose();
      mass += w;
    }
    return Eigen::MatrixXd(M / mass);
  };

  auto sphere_moment = [&](int nodes) {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(3, 3);
    double mass = 0.0;
    for (int i = 0; i < nodes; ++i) {
      const double theta = two_pi * (i + 0.5) / nodes;
      for (int j = 0; j < nodes; ++j) {
        const double phi = std::numbers::pi * (j + 0.5) / nodes;
        Eigen::Vector3d v(std::sin(phi) * std::cos(theta),
                          std::sin(phi) * std::sin(theta), std::cos(phi));
        const double w = std::sin(phi) * std::exp(v.dot(A * v) - shift);
        M += w * v * v.transpose();
        mass += w;
      }
    }
    return Eigen::MatrixXd(M / mass);
  };

  MomentReport report;
  if (param.m() == 2) {
    Eigen::MatrixXd coarse = circle_moment(4096);
    report.second_moment = circle_moment(8192);
    report.quadrature_error = (report.second_moment - coarse).cwiseAbs().maxCoeff();
  } else {
    Eigen::MatrixXd coarse = sphere_moment(400);
    report.second_moment = sphere_moment(800);
    report.quadrature_error = (report.second_moment - coarse).cwiseAbs().maxCoeff();
  }
  return report;
}

void export_chain_trace(const std::vector<double>& trace, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw DataError("cannot open trace file: " + path);
  for (std::size_t i = 0; i < trace.size(); ++i) {
    std::fprintf(f, "{\"step\":%zu,\"log_utility\":%.17g}\n", i, trace[i]);
  }
  std::fclose(f);
}

}  // namespace dpfpca

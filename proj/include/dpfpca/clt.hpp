#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "dpfpca/exp_mech.hpp"

namespace dpfpca {

// One asymptotic-normality experiment: penalized-mean objectives admit the
// exact quadratic sampler, so the draws carry no MCMC error.
struct CltScenario {
  int dim = 1;
  double data_mean = 0.2;  // per coordinate
  double data_sd = 0.1;
  double lambda = 0.1;
  Eigen::VectorXd base_diag;  // diagonal of C
  double epsilon = 1.0;
  double delta = 4.0;
  std::vector<int> sample_sizes;
  int replicates = 1000;
  bool truncate = false;  // restrict support to the unit ball
};

void validate_scenario(const CltScenario& s);

struct CltPerN {
  int n = 0;
  Eigen::MatrixXd empirical_cov;  // of sqrt(n)(b~ - b^)
  Eigen::MatrixXd finite_n_cov;   // ((eps/2D) Sigma^{-1} + C^{-1}/n)^{-1}
  Eigen::VectorXd mean_shift;     // average sqrt(n)(b~ - b^)
  Eigen::VectorXd ks_distance;    // per coordinate, vs target marginal
  double max_rel_deviation = 0.0;  // empirical vs target, entrywise
  double limit_distance = 0.0;     // finite-n exact vs target, entrywise
  double min_acceptance = 1.0;
  bool unreliable = false;  // truncation rejections dominated
};

struct CltReport {
  Eigen::MatrixXd target_cov;  // (2 Delta / eps) Sigma
  std::vector<CltPerN> per_n;
};

// Target Sigma of the CLT: inverse of -n^{-1} xi'' = 2 (I + lambda C^{-1}).
Eigen::MatrixXd clt_sigma(const CltScenario& s);

// ((eps/2Delta) Sigma^{-1} + C^{-1}/n)^{-1}, the exact covariance of the
// mechanism draw at finite n (before the n -> infinity limit).
Eigen::MatrixXd finite_n_covariance(const CltScenario& s, double n);

CltReport run_clt_experiment(const CltScenario& s, std::uint64_t seed);

// Same protocol restricted to diagonal commuting Sigma and C; additionally
// reports the finite-n exact covariance and its distance to the limit.
CltReport hilbert_clt_experiment(const CltScenario& s, std::uint64_t seed);

struct DistributionTestResult {
  Eigen::VectorXd ks_distance;
  Eigen::VectorXd ks_critical;
  Eigen::VectorXd var_deviation;  // |empirical/target - 1|
  Eigen::VectorXd var_critical;
  std::vector<bool> skipped;  // degenerate target coordinates
  bool pass = false;
};

// Per-coordinate Kolmogorov-Smirnov distance against the target marginal
// Gaussian plus a variance-deviation check, both at level 0.01.
DistributionTestResult distribution_test(const Eigen::MatrixXd& samples,
                                         const Eigen::MatrixXd& target_cov);

std::string clt_report_text(const CltReport& report);
std::string clt_report_csv(const CltReport& report);

}  // namespace dpfpca

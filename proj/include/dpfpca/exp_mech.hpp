#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "dpfpca/covariance.hpp"
#include "dpfpca/rng.hpp"

namespace dpfpca {

enum class Support { real_space, unit_ball };

// Objective xi_X(b) together with its sensitivity contract. Candidates are
// matrices so that both vectors (d x 1) and projection operators (m x m)
// fit the same interface. `evaluate` must be pure and re-entrant.
struct ObjectiveSpec {
  std::function<double(const Eigen::MatrixXd& data, const Eigen::MatrixXd& cand)>
      evaluate;
  double sensitivity = 0.0;
  Support support = Support::real_space;
  std::function<bool(const Eigen::MatrixXd& cand)> in_support;
};

struct MechanismConfig {
  double epsilon = 1.0;
  double delta_sensitivity = 1.0;
  std::uint64_t seed = 0;
};

void validate_config(const MechanismConfig& cfg);

// (epsilon / 2 Delta) * xi_X(b). The base-measure log-density is not
// included; it cancels in ratio checks and is handled by the samplers.
double log_unnormalized_density(const ObjectiveSpec& obj, const MechanismConfig& cfg,
                                const Eigen::MatrixXd& data,
                                const Eigen::MatrixXd& candidate);

// Max over probes of |log f~_X - log f~_X'| where X' replaces record i.
// The unnormalized ratio must stay below epsilon/2; normalizers contribute
// the other epsilon/2 in the exponential-mechanism argument.
double verify_dp_ratio(const ObjectiveSpec& obj, const MechanismConfig& cfg,
                       const Eigen::MatrixXd& data, int record_index,
                       const Eigen::VectorXd& replacement,
                       const std::vector<Eigen::MatrixXd>& probes);

// xi_X(b) = -sum_i ||x_i - b||^2 - n*lambda*<b, C^{-1} b>, sensitivity 4,
// support = closed unit ball. Records must already be clipped.
ObjectiveSpec penalized_mean_objective(double lambda, const CovarianceOperator& C);

// xi_X(b) = -(b'Hb - 2g'b) + const, for one fixed dataset.
struct QuadraticForm {
  Eigen::MatrixXd hessian;      // H, symmetric positive definite
  Eigen::VectorXd linear_term;  // g

  Eigen::VectorXd maximizer() const;  // H^{-1} g
};

QuadraticForm penalized_mean_quadratic(const Eigen::MatrixXd& data, double lambda,
                                       const CovarianceOperator& C);

struct QuadraticMechanismDraws {
  Eigen::MatrixXd draws;  // count x d
  Eigen::VectorXd mechanism_mean;
  Eigen::MatrixXd mechanism_covariance;
  double acceptance_rate = 1.0;  // 1 when support is all of R^d
};

// Exact sampler for quadratic objectives: completing the square against the
// N(0, C) base measure gives a Gaussian with precision
// (eps/Delta) H + C^{-1} and mean precision^{-1} (eps/Delta) g. With
// unit-ball support, draws are taken by rejection from that Gaussian.
QuadraticMechanismDraws sample_quadratic_mechanism(const QuadraticForm& quad,
                                                   const MechanismConfig& cfg,
                                                   const CovarianceOperator& base,
                                                   int count, Support support,
                                                   Rng& rng);

}  // namespace dpfpca

#include "dpfpca/exp_mech.hpp"

#include <cmath>

#include "dpfpca/errors.hpp"

namespace dpfpca {

void validate_config(const MechanismConfig& cfg) {
  if (!(cfg.epsilon > 0)) throw DataError("epsilon must be positive");
  if (!(cfg.delta_sensitivity > 0)) throw DataError("sensitivity must be positive");
}

double log_unnormalized_density(const ObjectiveSpec& obj, const MechanismConfig& cfg,
                                const Eigen::MatrixXd& data,
                                const Eigen::MatrixXd& candidate) {
  validate_config(cfg);
  if (obj.in_support && !obj.in_support(candidate)) {
    throw DataError("candidate outside the objective's support");
  }
  return cfg.epsilon / (2.0 * cfg.delta_sensitivity) * obj.evaluate(data, candidate);
}

double verify_dp_ratio(const ObjectiveSpec& obj, const MechanismConfig& cfg,
                       const Eigen::MatrixXd& data, int record_index,
                       const Eigen::VectorXd& replacement,
                       const std::vector<Eigen::MatrixXd>& probes) {
  if (record_index < 0 || record_index >= data.rows()) {
    throw DataError("verify_dp_ratio: record index out of range");
  }
  Eigen::MatrixXd adjacent = data;
  adjacent.row(record_index) = replacement.transpose();
  double worst = 0.0;
  for (const auto& probe : probes) {
    const double lx = log_unnormalized_density(obj, cfg, data, probe);
    const double ly = log_unnormalized_density(obj, cfg, adjacent, probe);
    worst = std::max(worst, std::abs(lx - ly));
  }
  return worst;
}

ObjectiveSpec penalized_mean_objective(double lambda, const CovarianceOperator& C) {
  if (lambda < 0) throw DataError("lambda must be nonnegative");
  Eigen::MatrixXd Cinv = inverse_with_floor(C);
  ObjectiveSpec spec;
  spec.sensitivity = 4.0;
  spec.support = Support::unit_ball;
  spec.in_support = [](const Eigen::MatrixXd& cand) {
    return cand.cols() == 1 && cand.norm() <= 1.0 + 1e-12;
  };
  spec.evaluate = [lambda, Cinv](const Eigen::MatrixXd& data,
                                 const Eigen::MatrixXd& cand) {
    const Eigen::VectorXd b = cand.col(0);
    const double n = static_cast<double>(data.rows());
    double acc = 0.0;
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      acc += (data.row(i).transpose() - b).squaredNorm();
    }
    acc += n * lambda * b.dot(Cinv * b);
    return -acc;
  };
  return spec;
}

Eigen::VectorXd QuadraticForm::maximizer() const {
  return hessian.ldlt().solve(linear_term);
}

QuadraticForm penalized_mean_quadratic(const Eigen::MatrixXd& data, double lambda,
                                       const CovarianceOperator& C) {
  const auto n = static_cast<double>(data.rows());
  const auto d = data.cols();
  QuadraticForm quad;
  quad.hessian =
      n * (Eigen::MatrixXd::Identity(d, d) + lambda * inverse_with_floor(C));
  quad.linear_term = data.colwise().sum().transpose();
  return quad;
}

QuadraticMechanismDraws sample_quadratic_mechanism(const QuadraticForm& quad,
                                                   const MechanismConfig& cfg,
                                                   const CovarianceOperator& base,
                                                   int count, Support support,
                                                   Rng& rng) {
  validate_config(cfg);
  if (count < 1) throw DataError("count must be >= 1");
  const auto d = quad.hessian.rows();
  const double scale = cfg.epsilon / cfg.delta_sensitivity;

  Eigen::MatrixXd precision = scale * quad.hessian + inverse_with_floor(base);
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("mechanism precision matrix is not positive definite");
  }
  Eigen::VectorXd mean = llt.solve(scale * quad.linear_term);

  QuadraticMechanismDraws out;
  out.mechanism_mean = mean;
  out.mechanism_covariance =
      llt.solve(Eigen::MatrixXd::Identity(d, d));
  out.draws.resize(count, d);

  std::normal_distribution<double> normal(0.0, 1.0);
  long proposals = 0;
  for (int i = 0; i < count; ++i) {
    for (;;) {
      ++proposals;
      Eigen::VectorXd z(d);
      for (Eigen::Index j = 0; j < d; ++j) z(j) = normal(rng);
      // cov = P^{-1} = L^{-T} L^{-1}, so b = mean + L^{-T} z
      Eigen::VectorXd b =
          mean + llt.matrixU().solve(z);
      if (support == Support::real_space || b.norm() <= 1.0) {
        out.draws.row(i) = b.transpose();
        break;
      }
      if (proposals >= 1000000 &&
          static_cast<double>(i) / static_cast<double>(proposals) < 1e-4) {
        throw NumericalError(
            "sample_quadratic_mechanism: unit-ball acceptance rate below 1e-4");
      }
    }
  }
  out.acceptance_rate = static_cast<double>(count) / static_cast<double>(proposals);
  return out;
}

}  // namespace dpfpca

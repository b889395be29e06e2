#include <doctest.h>

#include <cmath>
#include <random>

#include "dpfpca/exp_mech.hpp"
#include "dpfpca/errors.hpp"

using namespace dpfpca;

namespace {

CovarianceOperator scalar_cov(double c) {
  return CovarianceOperator{Eigen::MatrixXd::Constant(1, 1, c), false};
}

ObjectiveSpec fpca_spec() {
  ObjectiveSpec obj;
  obj.sensitivity = 1.0;
  obj.evaluate = [](const Eigen::MatrixXd& X, const Eigen::MatrixXd& P) {
    return (X * P).rowwise().squaredNorm().sum();
  };
  return obj;
}

Eigen::MatrixXd random_projection(int m, int k, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd G(m, k);
  for (Eigen::Index i = 0; i < G.size(); ++i) G(i) = normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  Eigen::MatrixXd V = Eigen::MatrixXd(qr.householderQ()).leftCols(k);
  return V * V.transpose();
}

Eigen::VectorXd random_ball_vector(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v(i) = normal(rng);
  return v * (std::pow(unif(rng), 1.0 / d) / v.norm());
}

// Deterministic quadrature over the mechanism density
// exp{(eps/2D) xi(b)} * N(0,C), d = 1. Independent of the sampler path.
struct Moments1D {
  double mean;
  double var;
};

Moments1D quadrature_mechanism_1d(const QuadraticForm& quad, double epsilon,
                                  double delta, double c_base, double lo,
                                  double hi, int nodes) {
  const double scale = epsilon / (2.0 * delta);
  double mass = 0.0, m1 = 0.0, m2 = 0.0;
  // log-density max for stability
  double best = -1e300;
  auto logf = [&](double b) {
    const double xi = -(quad.hessian(0, 0) * b * b - 2.0 * quad.linear_term(0) * b);
    return scale * xi - b * b / (2.0 * c_base);
  };
  for (int i = 0; i < nodes; ++i) {
    const double b = lo + (hi - lo) * (i + 0.5) / nodes;
    best = std::max(best, logf(b));
  }
  for (int i = 0; i < nodes; ++i) {
    const double b = lo + (hi - lo) * (i + 0.5) / nodes;
    const double w = std::exp(logf(b) - best);
    mass += w;
    m1 += w * b;
    m2 += w * b * b;
  }
  m1 /= mass;
  m2 /= mass;
  return {m1, m2 - m1 * m1};
}

}  // namespace

TEST_CASE("log unnormalized density arithmetic") {
  ObjectiveSpec obj;
  obj.sensitivity = 1.0;
  obj.evaluate = [](const Eigen::MatrixXd&, const Eigen::MatrixXd&) { return 3.0; };
  MechanismConfig cfg{2.0, 1.0, 0};
  Eigen::MatrixXd dummy(1, 1);
  CHECK(log_unnormalized_density(obj, cfg, dummy, dummy) == doctest::Approx(3.0));

  obj.evaluate = [](const Eigen::MatrixXd&, const Eigen::MatrixXd&) { return 0.0; };
  CHECK(log_unnormalized_density(obj, cfg, dummy, dummy) == 0.0);
}

TEST_CASE("scaling xi and Delta together leaves the density unchanged") {
  std::mt19937_64 rng(17);
  Eigen::MatrixXd data = Eigen::MatrixXd::Random(5, 3) * 0.3;
  Eigen::MatrixXd probe = random_projection(3, 1, rng);
  ObjectiveSpec obj = fpca_spec();
  MechanismConfig cfg{1.3, 1.0, 0};
  const double base = log_unnormalized_density(obj, cfg, data, probe);
  for (double c : {2.0, 17.0, 0.25}) {
    ObjectiveSpec scaled = obj;
    scaled.evaluate = [c, &obj](const Eigen::MatrixXd& X, const Eigen::MatrixXd& P) {
      return c * obj.evaluate(X, P);
    };
    MechanismConfig scaled_cfg{1.3, c, 0};
    CHECK(log_unnormalized_density(scaled, scaled_cfg, data, probe) ==
          doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("fpca objective cross-check against the direct trace expression") {
  Eigen::MatrixXd data(2, 3);
  data << 0.3, 0.1, 0.0, -0.2, 0.4, 0.1;
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(3, 3);
  P(0, 0) = 1.0;  // projection onto span(e1)
  ObjectiveSpec obj = fpca_spec();
  MechanismConfig cfg{1.7, 1.0, 0};
  const double expected =
      cfg.epsilon / 2.0 * (data(0, 0) * data(0, 0) + data(1, 0) * data(1, 0));
  CHECK(log_unnormalized_density(obj, cfg, data, P) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("density is invariant under record permutation") {
  std::mt19937_64 rng(23);
  Eigen::MatrixXd data = Eigen::MatrixXd::Random(6, 4) * 0.3;
  Eigen::MatrixXd permuted = data;
  permuted.row(0).swap(permuted.row(5));
  permuted.row(1).swap(permuted.row(3));
  Eigen::MatrixXd probe = random_projection(4, 2, rng);
  ObjectiveSpec obj = fpca_spec();
  MechanismConfig cfg{1.0, 1.0, 0};
  CHECK(log_unnormalized_density(obj, cfg, data, probe) ==
        doctest::Approx(log_unnormalized_density(obj, cfg, permuted, probe))
            .epsilon(1e-12));
}

TEST_CASE("verify_dp_ratio is zero for identical datasets") {
  std::mt19937_64 rng(31);
  Eigen::MatrixXd data = Eigen::MatrixXd::Random(8, 3) * 0.3;
  std::vector<Eigen::MatrixXd> probes;
  for (int i = 0; i < 20; ++i) probes.push_back(random_projection(3, 1, rng));
  ObjectiveSpec obj = fpca_spec();
  MechanismConfig cfg{1.0, 1.0, 0};
  CHECK(verify_dp_ratio(obj, cfg, data, 2, data.row(2).transpose(), probes) == 0.0);
}

TEST_CASE("fpca dp ratio stays below eps/2 over random instances") {
  std::mt19937_64 rng(37);
  ObjectiveSpec obj = fpca_spec();
  MechanismConfig cfg{1.0, 1.0, 0};
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd data(20, 5);
    for (int i = 0; i < 20; ++i) data.row(i) = random_ball_vector(5, rng).transpose();
    std::vector<Eigen::MatrixXd> probes;
    for (int p = 0; p < 50; ++p) probes.push_back(random_projection(5, 1, rng));
    std::uniform_int_distribution<int> pick(0, 19);
    const double ratio = verify_dp_ratio(obj, cfg, data, pick(rng),
                                         random_ball_vector(5, rng), probes);
    CHECK(ratio <= 0.5 + 1e-9);
  }
}

TEST_CASE("penalized mean objective") {
  CovarianceOperator C{Eigen::MatrixXd::Identity(3, 3), false};
  ObjectiveSpec obj = penalized_mean_objective(0.5, C);
  CHECK(obj.sensitivity == 4.0);

  SUBCASE("lambda=0 attains its maximum 0 at the single record") {
    ObjectiveSpec flat = penalized_mean_objective(0.0, C);
    Eigen::MatrixXd data(1, 3);
    data << 0.2, -0.1, 0.3;
    CHECK(flat.evaluate(data, Eigen::MatrixXd(data.row(0).transpose())) ==
          doctest::Approx(0.0).epsilon(1e-14));
  }

  SUBCASE("adjacent datasets differ by at most 4") {
    std::mt19937_64 rng(41);
    Eigen::MatrixXd data(10, 3);
    for (int i = 0; i < 10; ++i) data.row(i) = random_ball_vector(3, rng).transpose();
    Eigen::MatrixXd adj = data;
    adj.row(4) = random_ball_vector(3, rng).transpose();
    for (int t = 0; t < 50; ++t) {
      Eigen::MatrixXd b(random_ball_vector(3, rng));
      CHECK(std::abs(obj.evaluate(data, b) - obj.evaluate(adj, b)) <= 4.0 + 1e-12);
    }
  }

  SUBCASE("boundary replacement makes the bound near-tight") {
    // x = e1, replacement -e1, probed near the boundary
    Eigen::MatrixXd data(3, 2);
    data << 1.0, 0.0, 0.1, 0.0, 0.0, 0.1;
    Eigen::VectorXd replacement(2);
    replacement << -1.0, 0.0;
    MechanismConfig cfg{1.0, 4.0, 0};
    ObjectiveSpec flat = penalized_mean_objective(0.0, scalar_cov(1.0));
    std::vector<Eigen::MatrixXd> probes;
    for (int i = 0; i <= 20; ++i) {
      Eigen::VectorXd b(2);
      b << -1.0 + 0.1 * i, 0.0;
      probes.push_back(b);
    }
    const double ratio = verify_dp_ratio(flat, cfg, data, 0, replacement, probes);
    CHECK(ratio <= cfg.epsilon / 2.0 + 1e-9);
    CHECK(ratio > 0.4 * cfg.epsilon / 2.0);
  }
}

TEST_CASE("quadratic sampler: d=1 flat-base limit is N(xbar, Delta/(n eps))") {
  std::mt19937_64 rng(43);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int n = 50;
  Eigen::MatrixXd data(n, 1);
  for (int i = 0; i < n; ++i) data(i, 0) = 0.3 + 0.05 * normal(rng);
  CovarianceOperator huge = scalar_cov(1e12);  // C^{-1} -> 0
  QuadraticForm quad = penalized_mean_quadratic(data, 0.0, huge);
  MechanismConfig cfg{2.0, 1.0, 0};
  Rng draw_rng = make_rng(99, 1);
  const int count = 100000;
  QuadraticMechanismDraws out = sample_quadratic_mechanism(
      quad, cfg, huge, count, Support::real_space, draw_rng);

  const double xbar = data.col(0).mean();
  const double target_var = cfg.delta_sensitivity / (n * cfg.epsilon);
  const double mean = out.draws.col(0).mean();
  const double var =
      (out.draws.col(0).array() - mean).square().sum() / (count - 1);
  const double se_mean = std::sqrt(target_var / count);
  const double se_var = target_var * std::sqrt(2.0 / count);
  CHECK(std::abs(mean - xbar) < 4 * se_mean);
  CHECK(std::abs(var - target_var) < 4 * se_var);
}

TEST_CASE("quadratic sampler: huge epsilon degenerates to the maximizer") {
  Eigen::MatrixXd data(20, 1);
  data.setConstant(0.4);
  CovarianceOperator C = scalar_cov(1.0);
  QuadraticForm quad = penalized_mean_quadratic(data, 0.1, C);
  MechanismConfig cfg{1e6, 1.0, 0};
  Rng rng = make_rng(7, 2);
  QuadraticMechanismDraws out =
      sample_quadratic_mechanism(quad, cfg, C, 200, Support::real_space, rng);
  const Eigen::VectorXd b_hat = quad.maximizer();
  for (int i = 0; i < 200; ++i) {
    CHECK(std::abs(out.draws(i, 0) - b_hat(0)) < 1e-2);
  }
}

TEST_CASE("quadratic sampler matches a 2-D quadrature oracle") {
  std::mt19937_64 seed_rng(47);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int n = 30;
  Eigen::MatrixXd data(n, 2);
  for (int i = 0; i < n; ++i) {
    data(i, 0) = 0.2 + 0.08 * normal(seed_rng);
    data(i, 1) = -0.1 + 0.08 * normal(seed_rng);
  }
  CovarianceOperator C{Eigen::MatrixXd::Identity(2, 2) * 0.5, false};
  QuadraticForm quad = penalized_mean_quadratic(data, 0.3, C);
  MechanismConfig cfg{1.0, 4.0, 0};

  // grid quadrature of the mechanism density over [-1.5, 1.5]^2
  const double scale = cfg.epsilon / (2.0 * cfg.delta_sensitivity);
  Eigen::MatrixXd Cinv = inverse_with_floor(C);
  auto logf = [&](const Eigen::Vector2d& b) {
    const double xi =
        -(b.dot(quad.hessian * b) - 2.0 * quad.linear_term.dot(b));
    return scale * xi - 0.5 * b.dot(Cinv * b);
  };
  const int nodes = 600;
  double mass = 0.0;
  Eigen::Vector2d m1 = Eigen::Vector2d::Zero();
  Eigen::Matrix2d m2 = Eigen::Matrix2d::Zero();
  double best = -1e300;
  for (int i = 0; i < nodes; ++i) {
    for (int j = 0; j < nodes; ++j) {
      Eigen::Vector2d b(-1.5 + 3.0 * (i + 0.5) / nodes,
                        -1.5 + 3.0 * (j + 0.5) / nodes);
      best = std::max(best, logf(b));
    }
  }
  for (int i = 0; i < nodes; ++i) {
    for (int j = 0; j < nodes; ++j) {
      Eigen::Vector2d b(-1.5 + 3.0 * (i + 0.5) / nodes,
                        -1.5 + 3.0 * (j + 0.5) / nodes);
      const double w = std::exp(logf(b) - best);
      mass += w;
      m1 += w * b;
      m2 += w * b * b.transpose();
    }
  }
  m1 /= mass;
  m2 = m2 / mass - m1 * m1.transpose();

  Rng rng = make_rng(13, 3);
  const int count = 50000;
  QuadraticMechanismDraws out =
      sample_quadratic_mechanism(quad, cfg, C, count, Support::real_space, rng);
  Eigen::Vector2d emp_mean = out.draws.colwise().mean().transpose();
  Eigen::MatrixXd centered = out.draws.rowwise() - emp_mean.transpose();
  Eigen::Matrix2d emp_cov = centered.transpose() * centered / (count - 1);

  for (int j = 0; j < 2; ++j) {
    const double se_mean = std::sqrt(m2(j, j) / count);
    CHECK(std::abs(emp_mean(j) - m1(j)) < 3 * se_mean);
    const double se_var = m2(j, j) * std::sqrt(2.0 / count);
    CHECK(std::abs(emp_cov(j, j) - m2(j, j)) < 3 * se_var);
  }
  // analytic moments agree with the quadrature too
  CHECK((out.mechanism_mean - m1).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((out.mechanism_covariance - m2).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("d=1 quadrature decides the CLT constant: (2 Delta/eps) Sigma") {
  // Penalized mean, lambda = 0.1, C = 1, eps = 1, Delta = 4.
  const double lambda = 0.1, eps = 1.0, delta = 4.0;
  const int n = 20000;
  Eigen::MatrixXd data(n, 1);
  std::mt19937_64 rng(53);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < n; ++i) data(i, 0) = 0.25 + 0.05 * normal(rng);
  CovarianceOperator C = scalar_cov(1.0);
  QuadraticForm quad = penalized_mean_quadratic(data, lambda, C);
  Moments1D mom = quadrature_mechanism_1d(quad, eps, delta, 1.0, -1.0, 1.5, 400000);

  const double sigma = 1.0 / (2.0 * (1.0 + lambda));  // inverse Hessian scale
  const double right_constant = 2.0 * delta / eps * sigma / n;
  const double wrong_constant = eps / (2.0 * delta) * sigma / n;
  CHECK(std::abs(mom.var - right_constant) / right_constant < 1e-2);
  CHECK(std::abs(mom.var - wrong_constant) / wrong_constant > 10.0);
}

TEST_CASE("unit-ball support uses rejection and reports acceptance") {
  Eigen::MatrixXd data(5, 1);
  data.setConstant(0.9);
  CovarianceOperator C = scalar_cov(1.0);
  QuadraticForm quad = penalized_mean_quadratic(data, 0.0, C);
  MechanismConfig cfg{0.5, 4.0, 0};
  Rng rng = make_rng(3, 4);
  QuadraticMechanismDraws out =
      sample_quadratic_mechanism(quad, cfg, C, 2000, Support::unit_ball, rng);
  CHECK(out.acceptance_rate > 0.0);
  CHECK(out.acceptance_rate <= 1.0);
  for (int i = 0; i < 2000; ++i) {
    CHECK(out.draws.row(i).norm() <= 1.0);
  }
}

TEST_CASE("candidate outside support is rejected") {
  CovarianceOperator C = scalar_cov(1.0);
  ObjectiveSpec obj = penalized_mean_objective(0.0, C);
  MechanismConfig cfg{1.0, 4.0, 0};
  Eigen::MatrixXd data(2, 1);
  data << 0.1, 0.2;
  Eigen::MatrixXd outside(1, 1);
  outside << 1.5;
  CHECK_THROWS_AS(log_unnormalized_density(obj, cfg, data, outside), DataError);
}

#include <doctest.h>

#include <cmath>
#include <random>

#include "dpfpca/fpca.hpp"
#include "dpfpca/errors.hpp"
#include "dpfpca/sim.hpp"

using namespace dpfpca;

namespace {

CoefMatrix random_clipped_coefs(int n, int m, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  CoefMatrix c;
  c.entries.resize(n, m);
  for (Eigen::Index i = 0; i < c.entries.size(); ++i) c.entries(i) = normal(rng);
  for (int i = 0; i < n; ++i) {
    const double nr = c.entries.row(i).norm();
    if (nr >= 1.0) c.entries.row(i) *= (1.0 - 1e-9) / nr;
  }
  return c;
}

ProjectionOperator random_rank_k(int m, int k, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd G(m, k);
  for (Eigen::Index i = 0; i < G.size(); ++i) G(i) = normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  Eigen::MatrixXd V = Eigen::MatrixXd(qr.householderQ()).leftCols(k);
  return ProjectionOperator{V * V.transpose(), k};
}

Eigen::MatrixXd random_orthogonal(int k, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd G(k, k);
  for (Eigen::Index i = 0; i < G.size(); ++i) G(i) = normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  return Eigen::MatrixXd(qr.householderQ());
}

}  // namespace

TEST_CASE("validate_projection accepts projections and rejects drift") {
  std::mt19937_64 rng(1);
  ProjectionOperator P = random_rank_k(6, 2, rng);
  validate_projection(P);
  P.P(0, 0) += 0.05;
  CHECK_THROWS_AS(validate_projection(P), DataError);
}

TEST_CASE("fpca_objective") {
  std::mt19937_64 rng(2);
  CoefMatrix c = random_clipped_coefs(15, 4, rng);

  SUBCASE("matches the direct double sum") {
    ProjectionOperator P = random_rank_k(4, 2, rng);
    double direct = 0.0;
    for (int i = 0; i < 15; ++i) {
      direct += (P.P * c.entries.row(i).transpose()).squaredNorm();
    }
    CHECK(fpca_objective(c, P) == doctest::Approx(direct).epsilon(1e-12));
  }

  SUBCASE("bounded change under single-record replacement") {
    for (int t = 0; t < 30; ++t) {
      ProjectionOperator P = random_rank_k(4, 2, rng);
      CoefMatrix adj = c;
      CoefMatrix repl = random_clipped_coefs(1, 4, rng);
      adj.entries.row(7) = repl.entries.row(0);
      CHECK(std::abs(fpca_objective(c, P) - fpca_objective(adj, P)) <= 1.0 + 1e-12);
    }
  }

  SUBCASE("rejects unclipped records") {
    CoefMatrix bad = c;
    bad.entries.row(0) *= 3.0;
    ProjectionOperator P = random_rank_k(4, 1, rng);
    CHECK_THROWS_AS(fpca_objective(bad, P), DataError);
  }
}

TEST_CASE("nonprivate_fpca on an axis-aligned dataset") {
  CoefMatrix c;
  c.entries.resize(4, 3);
  c.entries << 0.8, 0.0, 0.0, -0.8, 0.0, 0.0, 0.0, 0.3, 0.0, 0.0, -0.3, 0.0;
  FpcaSolution sol = nonprivate_fpca(c, 1);
  CHECK(sol.eigenvalues(0) == doctest::Approx(2 * 0.64).epsilon(1e-12));
  CHECK(sol.eigenvalues(1) == doctest::Approx(2 * 0.09).epsilon(1e-12));
  CHECK(sol.eigenvalues(2) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::abs(sol.components(0, 0)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sol.components(0, 0) > 0.0);  // sign convention
  CHECK_FALSE(sol.nonunique);
  validate_projection(sol.projection);
  CHECK(sol.projection.P(0, 0) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("nonprivate_fpca flags tied spectra") {
  CoefMatrix c;
  c.entries.resize(2, 3);
  c.entries << 0.5, 0.0, 0.0, 0.0, 0.5, 0.0;
  FpcaSolution sol = nonprivate_fpca(c, 1);
  CHECK(sol.nonunique);
}

TEST_CASE("nonprivate_fpca maximizes the objective over random probes") {
  std::mt19937_64 rng(3);
  CoefMatrix c = random_clipped_coefs(40, 5, rng);
  for (int k : {1, 2, 3}) {
    FpcaSolution sol = nonprivate_fpca(c, k);
    const double best = fpca_objective(c, sol.projection);
    for (int t = 0; t < 200; ++t) {
      ProjectionOperator P = random_rank_k(5, k, rng);
      CHECK(fpca_objective(c, P) <= best + 1e-10);
    }
    // optimum equals the top-k eigenvalue sum
    CHECK(best == doctest::Approx(sol.eigenvalues.head(k).sum()).epsilon(1e-10));
  }
}

TEST_CASE("projection_from_span") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal(0.0, 1.0);

  SUBCASE("clean frame passes through") {
    ProjectionOperator base = random_rank_k(5, 2, rng);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(base.P);
    StiefelPoint V{es.eigenvectors().rightCols(2)};
    bool reorth = true;
    ProjectionOperator P = projection_from_span(V, &reorth);
    CHECK_FALSE(reorth);
    CHECK((P.P - base.P).cwiseAbs().maxCoeff() < 1e-10);
  }

  SUBCASE("invariant under right-multiplication by an orthogonal matrix") {
    Eigen::MatrixXd G(6, 3);
    for (Eigen::Index i = 0; i < G.size(); ++i) G(i) = normal(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
    Eigen::MatrixXd V = Eigen::MatrixXd(qr.householderQ()).leftCols(3);
    ProjectionOperator P1 = projection_from_span(StiefelPoint{V});
    for (int t = 0; t < 10; ++t) {
      Eigen::MatrixXd Q = random_orthogonal(3, rng);
      ProjectionOperator P2 = projection_from_span(StiefelPoint{V * Q});
      CHECK((P1.P - P2.P).cwiseAbs().maxCoeff() < 1e-10);
    }
  }

  SUBCASE("drifted frame is repaired and reported") {
    Eigen::MatrixXd V = Eigen::MatrixXd::Identity(4, 2);
    V(3, 0) = 1e-3;
    bool reorth = false;
    ProjectionOperator P = projection_from_span(StiefelPoint{V}, &reorth);
    CHECK(reorth);
    validate_projection(P);
  }
}

TEST_CASE("variance_ratio equals the brute-force double sum") {
  std::mt19937_64 rng(5);
  CoefMatrix c = random_clipped_coefs(12, 4, rng);
  for (int t = 0; t < 10; ++t) {
    ProjectionOperator Pt = random_rank_k(4, 2, rng);
    ProjectionOperator Ph = random_rank_k(4, 2, rng);
    double num = 0.0, den = 0.0;
    for (int i = 0; i < 12; ++i) {
      for (int j = 0; j < 12; ++j) {
        const Eigen::VectorXd xi = c.entries.row(i).transpose();
        const Eigen::VectorXd xj = c.entries.row(j).transpose();
        const double a = (Pt.P * xi).dot(Pt.P * xj);
        const double b = (Ph.P * xi).dot(Ph.P * xj);
        num += a * a;
        den += b * b;
      }
    }
    CHECK(variance_ratio(c, Pt, Ph) == doctest::Approx(num / den).epsilon(1e-10));
  }
}

TEST_CASE("variance_ratio is 1 for identical projections") {
  std::mt19937_64 rng(6);
  CoefMatrix c = random_clipped_coefs(10, 5, rng);
  ProjectionOperator P = random_rank_k(5, 2, rng);
  CHECK(variance_ratio(c, P, P) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(variance_ratio_explained(c, P, P) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("variance_ratio_explained equals the ratio of explained sums") {
  std::mt19937_64 rng(7);
  CoefMatrix c = random_clipped_coefs(10, 4, rng);
  ProjectionOperator Pt = random_rank_k(4, 1, rng);
  ProjectionOperator Ph = random_rank_k(4, 1, rng);
  double num = 0.0, den = 0.0;
  for (int i = 0; i < 10; ++i) {
    num += (Pt.P * c.entries.row(i).transpose()).squaredNorm();
    den += (Ph.P * c.entries.row(i).transpose()).squaredNorm();
  }
  CHECK(variance_ratio_explained(c, Pt, Ph) ==
        doctest::Approx(num / den).epsilon(1e-12));
}

TEST_CASE("subspace_norm identities") {
  std::mt19937_64 rng(8);

  SUBCASE("equals half the squared Frobenius distance and k - trace") {
    for (int t = 0; t < 20; ++t) {
      ProjectionOperator Pt = random_rank_k(6, 2, rng);
      ProjectionOperator Ph = random_rank_k(6, 2, rng);
      const double d = subspace_norm(Pt, Ph);
      CHECK(d == doctest::Approx(0.5 * (Pt.P - Ph.P).squaredNorm()).epsilon(1e-10));
      CHECK(d == doctest::Approx(2.0 - (Pt.P * Ph.P).trace()).epsilon(1e-10));
      CHECK(d >= -1e-12);
      CHECK(d <= 2.0 + 1e-12);
    }
  }

  SUBCASE("zero iff equal, k for orthogonal subspaces") {
    ProjectionOperator P = random_rank_k(6, 2, rng);
    CHECK(subspace_norm(P, P) == doctest::Approx(0.0).epsilon(1e-12));
    ProjectionOperator e12{Eigen::MatrixXd::Zero(6, 6), 2};
    e12.P(0, 0) = e12.P(1, 1) = 1.0;
    ProjectionOperator e34{Eigen::MatrixXd::Zero(6, 6), 2};
    e34.P(2, 2) = e34.P(3, 3) = 1.0;
    CHECK(subspace_norm(e12, e34) == doctest::Approx(2.0).epsilon(1e-12));
  }

  SUBCASE("rank mismatch rejected") {
    ProjectionOperator a = random_rank_k(5, 1, rng);
    ProjectionOperator b = random_rank_k(5, 2, rng);
    CHECK_THROWS_AS(subspace_norm(a, b), DataError);
  }
}

TEST_CASE("private_fpca end to end on simulated data") {
  SimulationSpec spec;
  spec.n = 100;
  spec.grid_size = 60;
  spec.num_components = 9;
  spec.seed = 11;
  Dataset data = generate_kl_dataset(spec);
  Grid g = uniform_grid(60);
  BasisSet basis = fourier_basis(9, g);
  CovarianceOperator sigma = power_law_sigma(9, 3.0);

  ChainConfig chain;
  chain.burn_in = 500;
  chain.seed = 77;

  SUBCASE("large epsilon concentrates at the mode of tr(V'(X'X - Sigma^-1)V)") {
    PrivateFpcaResult res = private_fpca(data, basis, sigma, 1, 5000.0, chain);
    ProjectionResult pr = project(data, basis);
    Eigen::MatrixXd B = pr.coefs.entries.transpose() * pr.coefs.entries -
                        inverse_with_floor(sigma);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es((B + B.transpose()) / 2.0);
    Eigen::VectorXd mode = es.eigenvectors().col(8);
    const double align = std::abs(mode.dot(res.release.V.col(0)));
    CHECK(align > 1.0 - 1e-3);
    // the base measure tilts the draw, so recovery is near- but not exactly
    // the non-private optimum
    CHECK(res.report.subspace_norm < 0.1);
    CHECK(res.report.variance_ratio > 0.9);
    CHECK(res.report.variance_ratio <= 1.0 + 1e-9);
    validate_projection(res.projection);
    CHECK(res.report.n == 100);
    CHECK(res.report.k == 1);
    CHECK(res.report.m == 9);
  }

  SUBCASE("tiny epsilon is close to a uniform draw") {
    PrivateFpcaResult res = private_fpca(data, basis, sigma, 1, 1e-6, chain);
    CHECK(res.report.variance_ratio < 0.99);
    validate_projection(res.projection);
  }

  SUBCASE("same configuration reproduces bit-identically") {
    PrivateFpcaResult a = private_fpca(data, basis, sigma, 1, 2.0, chain);
    PrivateFpcaResult b = private_fpca(data, basis, sigma, 1, 2.0, chain);
    CHECK(a.report.variance_ratio == b.report.variance_ratio);
    CHECK(a.report.subspace_norm == b.report.subspace_norm);
    CHECK((a.release.V - b.release.V).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("k >= n rejected") {
    CHECK_THROWS_AS(private_fpca(data, basis, sigma, 10, 1.0, chain), DataError);
  }
}

TEST_CASE("csv row format") {
  CHECK(utility_report_csv_header() ==
        "n,epsilon,k,m,replicate,variance_ratio,subspace_norm,seed");
  UtilityReport r;
  r.n = 100;
  r.epsilon = 0.5;
  r.k = 1;
  r.m = 40;
  r.variance_ratio = 0.75;
  r.subspace_norm = 0.25;
  r.seed = 42;
  const std::string row = utility_report_csv_row(r, 3);
  CHECK(row == "100,0.5,1,40,3,0.75,0.25,42");
}

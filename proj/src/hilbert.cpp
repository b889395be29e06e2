#include "dpfpca/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace dpfpca {

namespace {
constexpr double kClipEta = 1e-9;

void require_shared_grid(const Grid& a, const Grid& b) {
  if (!a.same_as(b)) {
    throw DataError("grid mismatch between operands");
  }
}

// Fixes the sign of an eigenfunction so the first coefficient of magnitude
// > 1e-8 is positive; makes eigendecompositions deterministic for tests.
void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > 1e-8) {
      if (v(i) < 0) v = -v;
      return;
    }
  }
}
}  // namespace

bool Grid::same_as(const Grid& other, double tol) const {
  if (points.size() != other.points.size()) return false;
  return (points - other.points).cwiseAbs().maxCoeff() <= tol &&
         (weights - other.weights).cwiseAbs().maxCoeff() <= tol;
}

Grid trapezoid_grid(const Eigen::VectorXd& points) {
  const int G = static_cast<int>(points.size());
  if (G < 2) throw DataError("grid needs at least two points");
  for (int i = 1; i < G; ++i) {
    if (!(points(i) > points(i - 1))) {
      throw DataError("grid points must be strictly increasing");
    }
  }
  Eigen::VectorXd w = Eigen::VectorXd::Zero(G);
  w(0) = (points(1) - points(0)) / 2.0;
  w(G - 1) = (points(G - 1) - points(G - 2)) / 2.0;
  for (int i = 1; i < G - 1; ++i) {
    w(i) = (points(i + 1) - points(i - 1)) / 2.0;
  }
  return Grid{points, w};
}

Grid uniform_grid(int G) {
  Eigen::VectorXd pts = Eigen::VectorXd::LinSpaced(G, 0.0, 1.0);
  return trapezoid_grid(pts);
}

double inner_product(const Grid& grid, const Eigen::VectorXd& f,
                     const Eigen::VectorXd& g) {
  if (f.size() != grid.size() || g.size() != grid.size()) {
    throw DataError("curve length does not match grid");
  }
  return (grid.weights.array() * f.array() * g.array()).sum();
}

double inner_product(const Curve& f, const Curve& g) {
  require_shared_grid(f.grid, g.grid);
  return inner_product(f.grid, f.values, g.values);
}

double norm(const Grid& grid, const Eigen::VectorXd& f) {
  return std::sqrt(std::max(0.0, inner_product(grid, f, f)));
}

Dataset clip_to_unit_ball(const Dataset& d, ClipMode mode) {
  if (d.curves.empty()) throw DataError("clip_to_unit_ball: empty dataset");
  Dataset out;
  out.grid = d.grid;
  out.curves.reserve(d.curves.size());
  if (mode == ClipMode::per_record) {
    for (const auto& x : d.curves) {
      const double nx = norm(d.grid, x);
      const double scale = std::max(1.0, nx / (1.0 - kClipEta));
      out.curves.push_back(x / scale);
    }
  } else {
    double max_norm = 0.0;
    for (const auto& x : d.curves) max_norm = std::max(max_norm, norm(d.grid, x));
    if (max_norm == 0.0) {
      out.curves = d.curves;  // all-zero data, nothing to rescale
      return out;
    }
    const double scale = (1.0 + kClipEta) * max_norm;
    for (const auto& x : d.curves) out.curves.push_back(x / scale);
  }
  return out;
}

BasisSet fourier_basis(int m, const Grid& grid) {
  const int G = grid.size();
  if (m < 1) throw DataError("fourier_basis: m must be >= 1");
  if (m > G) throw DataError("fourier_basis: m > grid size (over-complete)");
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double sqrt2 = std::numbers::sqrt2;
  BasisSet basis;
  basis.grid = grid;
  basis.functions.resize(G, m);
  basis.labels.reserve(m);
  basis.functions.col(0).setOnes();
  basis.labels.push_back("const");
  for (int j = 1; 2 * j - 1 < m || 2 * j < m; ++j) {
    if (2 * j - 1 < m) {
      basis.functions.col(2 * j - 1) =
          (two_pi * j * grid.points.array()).sin() * sqrt2;
      basis.labels.push_back("sin" + std::to_string(j));
    }
    if (2 * j < m) {
      basis.functions.col(2 * j) =
          (two_pi * j * grid.points.array()).cos() * sqrt2;
      basis.labels.push_back("cos" + std::to_string(j));
    }
  }
  return basis;
}

KernelEigenbasis gaussian_kernel_eigenbasis(const Grid& grid, double bandwidth,
                                            double var_threshold) {
  if (!(bandwidth > 0)) throw DataError("bandwidth must be positive");
  if (!(var_threshold > 0 && var_threshold < 1)) {
    throw DataError("var_threshold must lie in (0,1)");
  }
  const int G = grid.size();
  Eigen::MatrixXd K(G, G);
  for (int i = 0; i < G; ++i) {
    for (int j = 0; j < G; ++j) {
      const double d = grid.points(i) - grid.points(j);
      K(i, j) = std::exp(-d * d / (bandwidth * bandwidth));
    }
  }
  // Symmetric eigenproblem of W^{1/2} K W^{1/2}; eigenfunctions are then
  // orthonormal under the quadrature inner product.
  const Eigen::VectorXd sqw = grid.weights.array().sqrt();
  Eigen::MatrixXd Kw = sqw.asDiagonal() * K * sqw.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Kw);

  KernelEigenbasis out;
  Eigen::VectorXd vals = eig.eigenvalues().reverse();
  Eigen::MatrixXd vecs = eig.eigenvectors().rowwise().reverse();
  for (int i = 0; i < G; ++i) {
    if (vals(i) < 0) {
      vals(i) = 0.0;
      out.floored = true;
    }
  }
  out.eigenvalues = vals;

  const double total = vals.sum();
  double cum = 0.0;
  int m_sel = G;
  for (int i = 0; i < G; ++i) {
    cum += vals(i);
    if (cum > var_threshold * total) {
      m_sel = i + 1;
      break;
    }
  }
  out.m_selected = m_sel;

  out.basis.grid = grid;
  out.basis.functions.resize(G, m_sel);
  for (int j = 0; j < m_sel; ++j) {
    out.basis.functions.col(j) = vecs.col(j).array() / sqw.array();
    fix_sign(out.basis.functions.col(j));
    out.basis.labels.push_back("kev" + std::to_string(j + 1));
  }
  return out;
}

double bandwidth_for_target(const Grid& grid, double var_threshold, int target_m) {
  double lo = (grid.points.tail(grid.size() - 1) - grid.points.head(grid.size() - 1))
                  .minCoeff();
  double hi = grid.length();
  auto m_of = [&](double bw) {
    return gaussian_kernel_eigenbasis(grid, bw, var_threshold).m_selected;
  };
  // m_selected decreases as the kernel smooths out; widen hi until it is
  // at or below the target.
  int guard = 0;
  while (m_of(hi) > target_m && guard++ < 30) hi *= 2.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (m_of(mid) > target_m) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  if (m_of(hi) != target_m) {
    throw NumericalError("bandwidth_for_target: no bandwidth attains m=" +
                         std::to_string(target_m));
  }
  return hi;
}

ProjectionResult project(const Dataset& d, const BasisSet& basis) {
  require_shared_grid(d.grid, basis.grid);
  const int n = d.n();
  const int m = basis.size();
  ProjectionResult res;
  res.coefs.entries.resize(n, m);
  res.coefs.basis_labels = basis.labels;
  res.residual_norms.resize(n);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd& x = d.curves[i];
    Eigen::VectorXd row =
        basis.functions.transpose() * (d.grid.weights.asDiagonal() * x);
    res.coefs.entries.row(i) = row.transpose();
    Eigen::VectorXd resid = x - basis.functions * row;
    res.residual_norms(i) = norm(d.grid, resid);
  }
  return res;
}

Curve reconstruct(const Eigen::VectorXd& coefs, const BasisSet& basis) {
  if (coefs.size() != basis.size()) {
    throw DataError("reconstruct: coefficient count does not match basis size");
  }
  return Curve{basis.grid, basis.functions * coefs};
}

double max_gram_deviation(const BasisSet& basis) {
  const int m = basis.size();
  Eigen::MatrixXd gram = basis.functions.transpose() *
                         basis.grid.weights.asDiagonal() * basis.functions;
  return (gram - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff();
}

void validate_basis(const BasisSet& basis, double tol) {
  if (max_gram_deviation(basis) > tol) {
    throw DataError("basis is not orthonormal under the grid quadrature");
  }
}

}  // namespace dpfpca

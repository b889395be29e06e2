#include "dpfpca/sim.hpp"

#include "dpfpca/rng.hpp"

namespace dpfpca {

void validate_simulation_spec(const SimulationSpec& spec) {
  if (spec.n < 1 || spec.grid_size < 2 || spec.num_components < 1) {
    throw DataError("simulation spec: n, G, p must be positive");
  }
  if (spec.num_components > spec.grid_size) {
    throw DataError("simulation spec: p exceeds usable Fourier terms on grid");
  }
  if (spec.score_sd < 0 || spec.noise_sd < 0 || !(spec.fourth_term_boost > 0)) {
    throw DataError("simulation spec: invalid scale parameters");
  }
  if (spec.mean_id != 0) {
    throw DataError("simulation spec: unknown mean function id");
  }
}

Dataset generate_kl_dataset(const SimulationSpec& spec) {
  validate_simulation_spec(spec);
  const Grid grid = uniform_grid(spec.grid_size);
  const BasisSet components = fourier_basis(spec.num_components, grid);

  Eigen::VectorXd weights(spec.num_components);
  for (int j = 0; j < spec.num_components; ++j) {
    weights(j) = 1.0 / ((j + 1.0) * (j + 1.0));
  }
  if (spec.num_components >= 4) weights(3) *= spec.fourth_term_boost;

  Rng rng = make_rng(spec.seed, 0x4b4cULL);
  std::normal_distribution<double> normal(0.0, 1.0);

  Dataset raw;
  raw.grid = grid;
  raw.curves.reserve(spec.n);
  for (int i = 0; i < spec.n; ++i) {
    Eigen::VectorXd scores(spec.num_components);
    for (int j = 0; j < spec.num_components; ++j) {
      scores(j) = weights(j) * spec.score_sd * normal(rng);
    }
    Eigen::VectorXd x = components.functions * scores;
    for (int g = 0; g < spec.grid_size; ++g) x(g) += spec.noise_sd * normal(rng);
    raw.curves.push_back(std::move(x));
  }
  return clip_to_unit_ball(raw, ClipMode::global);
}

}  // namespace dpfpca

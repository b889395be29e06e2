#pragma once

#include <cmath>
#include <cstdint>

#include "dpfpca/hilbert.hpp"

namespace dpfpca {

// Karhunen-Loeve simulation:
//   X_i(t_k) = mu(t_k) + sum_{j=1}^p (1/j^2) U_ij u_j(t_k) + eps_ik
// with Fourier components u_j, scores U_ij ~ N(0, score_sd^2), noise
// eps_ik ~ N(0, noise_sd^2), and the j=4 weight multiplied by
// fourth_term_boost. Curves are then globally rescaled into the unit ball.
struct SimulationSpec {
  int n = 100;
  int grid_size = 100;
  int num_components = 21;
  double score_sd = std::sqrt(0.1);  // N(0, 0.1) scores, 0.1 read as variance
  double noise_sd = 1.0;
  double fourth_term_boost = 3.0;
  int mean_id = 0;  // 0 = zero mean function
  std::uint64_t seed = 0;
};

void validate_simulation_spec(const SimulationSpec& spec);

Dataset generate_kl_dataset(const SimulationSpec& spec);

}  // namespace dpfpca

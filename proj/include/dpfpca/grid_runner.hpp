#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dpfpca/fpca.hpp"
#include "dpfpca/sim.hpp"

namespace dpfpca {

// One simulation campaign: every (n, epsilon) cell is run `replicates`
// times on freshly generated data.
struct ScenarioGrid {
  std::vector<int> n_values{100, 500, 1000};
  std::vector<double> epsilon_values{0.125, 0.5, 2.0};
  int replicates = 10;
  int k = 1;
  int m = 40;
  int burn_in = kDefaultBurnIn;
  int thin = 1;
  double sigma_exponent = 3.0;  // power-law Sigma_ii = i^{-exponent}
  SimulationSpec sim;           // template; n and seed overridden per cell
};

void validate_grid(const ScenarioGrid& grid);

struct GridRow {
  UtilityReport report;
  int replicate = 0;
  bool failed = false;
  std::string error;
};

struct GridSummaryRow {
  int n = 0;
  double epsilon = 0.0;
  int count = 0;
  double mean_variance_ratio = 0.0;
  double se_variance_ratio = 0.0;
  double mean_subspace_norm = 0.0;
  double se_subspace_norm = 0.0;
};

struct GridRunResult {
  std::vector<GridRow> rows;  // cell-major, replicate-minor order
  std::vector<GridSummaryRow> summaries;
};

// Serial reference: one replicate at a time, in order. Kept as the oracle
// the parallel runner is tested against.
GridRunResult run_scenario_cells_serial(const ScenarioGrid& grid,
                                        std::uint64_t master_seed);

// OpenMP runner: replicates within a cell run concurrently, each on its own
// derived RNG stream, so the output is identical to the serial reference.
GridRunResult run_scenario_cells_parallel(const ScenarioGrid& grid,
                                          std::uint64_t master_seed,
                                          int threads = 0);

std::string grid_rows_csv(const std::vector<GridRow>& rows);
std::string grid_summary_csv(const std::vector<GridSummaryRow>& summaries);
std::vector<GridSummaryRow> summarize(const ScenarioGrid& grid,
                                      const std::vector<GridRow>& rows);

// Full campaign: writes <out> (raw rows, appended cell by cell) and
// <out>.summary.csv. Returns the in-memory result.
GridRunResult run_scenario_grid(const ScenarioGrid& grid, std::uint64_t master_seed,
                                const std::string& out_path, bool parallel = true,
                                int threads = 0);

}  // namespace dpfpca

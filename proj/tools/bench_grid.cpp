// Benchmark: serial reference grid runner vs the OpenMP runner, with an
// agreement check on the emitted rows.
#include <chrono>
#include <cstdio>
#include <string>

#include "dpfpca/grid_runner.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace dpfpca;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

int main(int argc, char** argv) {
  ScenarioGrid grid;
  grid.n_values = {100, 500};
  grid.epsilon_values = {0.5, 2.0};
  grid.replicates = 8;
  grid.m = 40;
  grid.burn_in = 2000;
  grid.sim.grid_size = 100;
  grid.sim.num_components = 21;
  if (argc > 1) grid.burn_in = std::stoi(argv[1]);
  if (argc > 2) grid.replicates = std::stoi(argv[2]);

  const std::uint64_t seed = 20240817ULL;

  std::printf("grid: %zu cells x %d replicates, m=%d, burn_in=%d\n",
              grid.n_values.size() * grid.epsilon_values.size(), grid.replicates,
              grid.m, grid.burn_in);

  auto t0 = std::chrono::steady_clock::now();
  GridRunResult serial = run_scenario_cells_serial(grid, seed);
  const double serial_s = seconds_since(t0);
  std::printf("serial:   %8.2f s\n", serial_s);

#ifdef _OPENMP
  const int max_threads = omp_get_max_threads();
#else
  const int max_threads = 1;
#endif
  if (max_threads < 2) {
    std::printf("single hardware thread available; running the OpenMP runner "
                "once for the agreement check\n");
    GridRunResult parallel = run_scenario_cells_parallel(grid, seed, 1);
    const bool same = grid_rows_csv(serial.rows) == grid_rows_csv(parallel.rows);
    std::printf("threads=1: rows %s\n", same ? "identical" : "DIFFER");
    return same ? 0 : 1;
  }
  for (int threads : {2, 4, max_threads}) {
    if (threads > max_threads || threads < 2) continue;
    t0 = std::chrono::steady_clock::now();
    GridRunResult parallel = run_scenario_cells_parallel(grid, seed, threads);
    const double par_s = seconds_since(t0);
    const bool same = grid_rows_csv(serial.rows) == grid_rows_csv(parallel.rows);
    std::printf("threads=%d: %7.2f s  speedup %.2fx  rows %s\n", threads, par_s,
                serial_s / par_s, same ? "identical" : "DIFFER");
    if (!same) return 1;
  }
  return 0;
}

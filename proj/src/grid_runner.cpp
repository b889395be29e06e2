#include "dpfpca/grid_runner.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dpfpca/covariance.hpp"
#include "dpfpca/errors.hpp"
#include "dpfpca/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dpfpca {

namespace {

struct CellContext {
  const ScenarioGrid* grid;
  BasisSet basis;
  CovarianceOperator sigma;
  std::uint64_t master_seed;
};

GridRow run_one_replicate(const CellContext& ctx, int cell_id, int n, double epsilon,
                          int replicate) {
  GridRow row;
  row.replicate = replicate;
  try {
    SimulationSpec spec = ctx.grid->sim;
    spec.n = n;
    spec.grid_size = ctx.grid->sim.grid_size;
    spec.seed = derive_stream_seed(ctx.master_seed, cell_id, replicate);
    Dataset data = generate_kl_dataset(spec);

    ChainConfig chain;
    chain.burn_in = ctx.grid->burn_in;
    chain.thin = ctx.grid->thin;
    chain.keep = 1;
    chain.seed = ctx.master_seed;
    chain.stream_id =
        static_cast<std::uint64_t>(cell_id) * 1000003ULL + replicate + 1;

    PrivateFpcaResult res = private_fpca(data, ctx.basis, ctx.sigma, ctx.grid->k,
                                         epsilon, chain);
    row.report = res.report;
    row.report.seed = ctx.master_seed;
  } catch (const std::exception& e) {
    row.failed = true;
    row.error = e.what();
    row.report.n = n;
    row.report.epsilon = epsilon;
    row.report.k = ctx.grid->k;
    row.report.m = ctx.grid->m;
    row.report.seed = ctx.master_seed;
    row.report.variance_ratio = std::nan("");
    row.report.subspace_norm = std::nan("");
  }
  return row;
}

GridRunResult run_cells(const ScenarioGrid& grid, std::uint64_t master_seed,
                        bool parallel, int threads) {
  validate_grid(grid);
  CellContext ctx;
  ctx.grid = &grid;
  ctx.basis = fourier_basis(grid.m, uniform_grid(grid.sim.grid_size));
  ctx.sigma = power_law_sigma(grid.m, grid.sigma_exponent);
  ctx.master_seed = master_seed;

  GridRunResult result;
  int cell_id = 0;
  for (int n : grid.n_values) {
    for (double eps : grid.epsilon_values) {
      std::vector<GridRow> cell_rows(grid.replicates);
      if (parallel) {
#ifdef _OPENMP
        if (threads > 0) omp_set_num_threads(threads);
#endif
#pragma omp parallel for schedule(dynamic)
        for (int r = 0; r < grid.replicates; ++r) {
          cell_rows[r] = run_one_replicate(ctx, cell_id, n, eps, r);
        }
      } else {
        for (int r = 0; r < grid.replicates; ++r) {
          cell_rows[r] = run_one_replicate(ctx, cell_id, n, eps, r);
        }
      }
      for (auto& row : cell_rows) result.rows.push_back(std::move(row));
      ++cell_id;
    }
  }
  result.summaries = summarize(grid, result.rows);
  return result;
}

}  // namespace

void validate_grid(const ScenarioGrid& grid) {
  if (grid.n_values.empty() || grid.epsilon_values.empty()) {
    throw DataError("scenario grid: empty n or epsilon list");
  }
  if (grid.replicates < 1) throw DataError("scenario grid: replicates must be >= 1");
  for (double e : grid.epsilon_values) {
    if (!(e > 0)) throw DataError("scenario grid: epsilon must be positive");
  }
  if (grid.k < 1 || grid.m < grid.k) {
    throw DataError("scenario grid: need 1 <= k <= m");
  }
}

GridRunResult run_scenario_cells_serial(const ScenarioGrid& grid,
                                        std::uint64_t master_seed) {
  return run_cells(grid, master_seed, false, 0);
}

GridRunResult run_scenario_cells_parallel(const ScenarioGrid& grid,
                                          std::uint64_t master_seed, int threads) {
  return run_cells(grid, master_seed, true, threads);
}

std::string grid_rows_csv(const std::vector<GridRow>& rows) {
  std::string out = utility_report_csv_header() + "\n";
  for (const auto& row : rows) {
    out += utility_report_csv_row(row.report, row.replicate) + "\n";
  }
  return out;
}

std::vector<GridSummaryRow> summarize(const ScenarioGrid& grid,
                                      const std::vector<GridRow>& rows) {
  std::vector<GridSummaryRow> out;
  std::size_t idx = 0;
  for (int n : grid.n_values) {
    for (double eps : grid.epsilon_values) {
      GridSummaryRow s;
      s.n = n;
      s.epsilon = eps;
      double sum_vr = 0, sum_sn = 0;
      std::vector<double> vrs, sns;
      for (int r = 0; r < grid.replicates; ++r, ++idx) {
        const GridRow& row = rows.at(idx);
        if (row.failed) continue;
        vrs.push_back(row.report.variance_ratio);
        sns.push_back(row.report.subspace_norm);
        sum_vr += row.report.variance_ratio;
        sum_sn += row.report.subspace_norm;
      }
      s.count = static_cast<int>(vrs.size());
      if (s.count > 0) {
        s.mean_variance_ratio = sum_vr / s.count;
        s.mean_subspace_norm = sum_sn / s.count;
        if (s.count > 1) {
          double ss_vr = 0, ss_sn = 0;
          for (double v : vrs) ss_vr += (v - s.mean_variance_ratio) * (v - s.mean_variance_ratio);
          for (double v : sns) ss_sn += (v - s.mean_subspace_norm) * (v - s.mean_subspace_norm);
          s.se_variance_ratio = std::sqrt(ss_vr / (s.count - 1) / s.count);
          s.se_subspace_norm = std::sqrt(ss_sn / (s.count - 1) / s.count);
        }
      }
      out.push_back(s);
    }
  }
  return out;
}

std::string grid_summary_csv(const std::vector<GridSummaryRow>& summaries) {
  std::ostringstream os;
  os.precision(10);
  os << "n,epsilon,count,mean_variance_ratio,se_variance_ratio,"
        "mean_subspace_norm,se_subspace_norm\n";
  for (const auto& s : summaries) {
    os << s.n << ',' << s.epsilon << ',' << s.count << ',' << s.mean_variance_ratio
       << ',' << s.se_variance_ratio << ',' << s.mean_subspace_norm << ','
       << s.se_subspace_norm << '\n';
  }
  return os.str();
}

GridRunResult run_scenario_grid(const ScenarioGrid& grid, std::uint64_t master_seed,
                                const std::string& out_path, bool parallel,
                                int threads) {
  validate_grid(grid);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw DataError("cannot open output file: " + out_path);
  out << utility_report_csv_header() << "\n";
  out.flush();

  // Cells are processed in order and appended as they complete, so a killed
  // run leaves a usable prefix.
  GridRunResult result;
  int cell_id = 0;
  CellContext ctx{&grid, fourier_basis(grid.m, uniform_grid(grid.sim.grid_size)),
                  power_law_sigma(grid.m, grid.sigma_exponent), master_seed};
  for (int n : grid.n_values) {
    for (double eps : grid.epsilon_values) {
      std::vector<GridRow> cell_rows(grid.replicates);
      if (parallel) {
#ifdef _OPENMP
        if (threads > 0) omp_set_num_threads(threads);
#endif
#pragma omp parallel for schedule(dynamic)
        for (int r = 0; r < grid.replicates; ++r) {
          cell_rows[r] = run_one_replicate(ctx, cell_id, n, eps, r);
        }
      } else {
        for (int r = 0; r < grid.replicates; ++r) {
          cell_rows[r] = run_one_replicate(ctx, cell_id, n, eps, r);
        }
      }
      for (auto& row : cell_rows) {
        out << utility_report_csv_row(row.report, row.replicate) << "\n";
        if (row.failed) {
          std::fprintf(stderr, "cell n=%d eps=%g replicate %d failed: %s\n", n, eps,
                       row.replicate, row.error.c_str());
        }
        result.rows.push_back(std::move(row));
      }
      out.flush();
      ++cell_id;
    }
  }
  result.summaries = summarize(grid, result.rows);
  {
    std::ofstream sum(out_path + ".summary.csv", std::ios::binary);
    if (!sum) throw DataError("cannot open output file: " + out_path + ".summary.csv");
    sum << grid_summary_csv(result.summaries);
  }
  return result;
}

}  // namespace dpfpca

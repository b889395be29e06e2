#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "dpfpca/bmvmf.hpp"
#include "dpfpca/clt.hpp"
#include "dpfpca/config.hpp"
#include "dpfpca/covariance.hpp"
#include "dpfpca/csv.hpp"
#include "dpfpca/errors.hpp"
#include "dpfpca/exp_mech.hpp"
#include "dpfpca/fpca.hpp"
#include "dpfpca/grid_runner.hpp"
#include "dpfpca/sim.hpp"

namespace {

using namespace dpfpca;

struct GlobalOpts {
  std::uint64_t seed = 0;
  std::string config_path;
  std::string out_path;
};

Config maybe_config(const GlobalOpts& g) {
  if (g.config_path.empty()) return {};
  return load_config(g.config_path);
}

Eigen::MatrixXd load_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int row_no = 0;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw DataError("non-numeric cell in row " + std::to_string(row_no));
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw DataError("ragged row " + std::to_string(row_no));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("empty matrix file: " + path);
  Eigen::MatrixXd M(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) M(i, j) = rows[i][j];
  }
  return M;
}

void save_matrix_csv(const Eigen::MatrixXd& M, const std::string& path) {
  std::ostringstream os;
  os.precision(17);
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (j) os << ',';
      os << M(i, j);
    }
    os << '\n';
  }
  write_text_file(path, os.str());
}

int cmd_simulate(const GlobalOpts& g, const SimulationSpec& spec) {
  SimulationSpec s = spec;
  s.seed = g.seed;
  Dataset d = generate_kl_dataset(s);
  const std::string out = g.out_path.empty() ? "dataset.csv" : g.out_path;
  save_dataset_csv(d, out);
  std::cout << "wrote " << d.n() << " curves on " << d.grid.size()
            << " grid points to " << out << "\n";
  return 0;
}

struct FitOpts {
  std::string data_path;
  double epsilon = 1.0;
  int k = 1;
  int m = 40;
  int burn_in = kDefaultBurnIn;
  std::string basis = "fourier";  // fourier | kernel
  double bandwidth = 0.0;         // 0 = search for kernel_target_m
  int kernel_target_m = 5;
  double var_threshold = 0.99;
  std::string sigma = "power";  // power | kernel
  double sigma_exponent = 3.0;
  std::string clip = "per_record";  // per_record | global
  bool center = false;
  std::string trace_path;
};

int cmd_fit(const GlobalOpts& g, const FitOpts& opt) {
  CurveTable table = load_curve_csv(opt.data_path);
  if (!table.header_present) {
    std::cerr << "note: no grid header detected; using uniform [0,1] grid\n";
  }
  Dataset data = to_dataset(table);
  if (opt.center) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(data.grid.size());
    for (const auto& c : data.curves) mean += c;
    mean /= static_cast<double>(data.n());
    for (auto& c : data.curves) c -= mean;
  }
  data = clip_to_unit_ball(
      data, opt.clip == "global" ? ClipMode::global : ClipMode::per_record);

  BasisSet basis;
  double bandwidth_used = 0.0;
  int m_used = opt.m;
  if (opt.basis == "kernel") {
    bandwidth_used = opt.bandwidth > 0
                         ? opt.bandwidth
                         : bandwidth_for_target(data.grid, opt.var_threshold,
                                                opt.kernel_target_m);
    KernelEigenbasis keb =
        gaussian_kernel_eigenbasis(data.grid, bandwidth_used, opt.var_threshold);
    basis = keb.basis;
    m_used = keb.m_selected;
  } else {
    basis = fourier_basis(opt.m, data.grid);
  }

  CovarianceOperator sigma;
  if (opt.sigma == "kernel") {
    if (bandwidth_used <= 0) {
      throw DataError("sigma=kernel requires basis=kernel or --bandwidth");
    }
    sigma = sigma_from_kernel(basis, bandwidth_used);
  } else {
    sigma = power_law_sigma(m_used, opt.sigma_exponent);
  }

  ChainConfig chain;
  chain.burn_in = opt.burn_in;
  chain.seed = g.seed;
  PrivateFpcaResult res =
      private_fpca(data, basis, sigma, opt.k, opt.epsilon, chain);

  const std::string out = g.out_path.empty() ? "components.csv" : g.out_path;
  Eigen::MatrixXd components(opt.k, data.grid.size());
  for (int j = 0; j < opt.k; ++j) {
    components.row(j) =
        reconstruct(res.release.V.col(j), basis).values.transpose();
  }
  save_matrix_csv(components, out);
  if (!opt.trace_path.empty()) export_chain_trace(res.trace, opt.trace_path);

  std::ostringstream meta;
  meta << "epsilon=" << opt.epsilon << "\ndelta=1\nk=" << opt.k << "\nm=" << m_used
       << "\nbasis=" << opt.basis << "\nsigma=" << opt.sigma;
  if (bandwidth_used > 0) meta << "\nbandwidth=" << bandwidth_used;
  meta << "\nburn_in=" << opt.burn_in << "\nchain_length=" << res.trace.size()
       << "\nseed=" << g.seed
       << "\nnote=kept chain samples and traces are diagnostics, not part of "
          "the private release\n";
  write_text_file(out + ".meta", meta.str());
  write_text_file(out + ".report.csv", utility_report_csv_header() + "\n" +
                                           utility_report_csv_row(res.report, 0) +
                                           "\n");
  std::cout << utility_report_csv_header() << "\n"
            << utility_report_csv_row(res.report, 0) << "\n";
  return 0;
}

int cmd_grid(const GlobalOpts& g, bool serial, int threads) {
  Config cfg = maybe_config(g);
  ScenarioGrid grid;
  grid.n_values = get_int_list(cfg, "grid.n_values", grid.n_values);
  grid.epsilon_values = get_double_list(cfg, "grid.epsilon_values", grid.epsilon_values);
  grid.replicates = get_int(cfg, "grid.replicates", grid.replicates);
  grid.k = get_int(cfg, "grid.k", grid.k);
  grid.m = get_int(cfg, "grid.m", grid.m);
  grid.burn_in = get_int(cfg, "grid.burn_in", grid.burn_in);
  grid.sigma_exponent = get_double(cfg, "grid.sigma_exponent", grid.sigma_exponent);
  grid.sim.grid_size = get_int(cfg, "sim.grid_size", grid.sim.grid_size);
  grid.sim.num_components = get_int(cfg, "sim.p", grid.sim.num_components);
  grid.sim.score_sd = get_double(cfg, "sim.score_sd", grid.sim.score_sd);
  grid.sim.noise_sd = get_double(cfg, "sim.noise_sd", grid.sim.noise_sd);
  grid.sim.fourth_term_boost =
      get_double(cfg, "sim.fourth_term_boost", grid.sim.fourth_term_boost);

  const std::string out = g.out_path.empty() ? "metrics.csv" : g.out_path;
  GridRunResult result = run_scenario_grid(grid, g.seed, out, !serial, threads);
  std::cout << grid_summary_csv(result.summaries);
  return 0;
}

int cmd_clt(const GlobalOpts& g) {
  Config cfg = maybe_config(g);
  CltScenario s;
  s.dim = get_int(cfg, "clt.dim", 1);
  s.data_mean = get_double(cfg, "clt.data_mean", s.data_mean);
  s.data_sd = get_double(cfg, "clt.data_sd", s.data_sd);
  s.lambda = get_double(cfg, "clt.lambda", s.lambda);
  s.epsilon = get_double(cfg, "clt.epsilon", s.epsilon);
  s.delta = get_double(cfg, "clt.delta", s.delta);
  s.replicates = get_int(cfg, "clt.replicates", s.replicates);
  s.truncate = get_int(cfg, "clt.truncate", 0) != 0;
  std::vector<double> base =
      get_double_list(cfg, "clt.base_diag", std::vector<double>(s.dim, 1.0));
  s.base_diag = Eigen::Map<const Eigen::VectorXd>(base.data(), base.size());
  std::vector<int> ns = get_int_list(cfg, "clt.sample_sizes", {100, 1000, 10000});
  s.sample_sizes = ns;

  CltReport report = run_clt_experiment(s, g.seed);
  std::cout << clt_report_text(report);
  if (!g.out_path.empty()) write_text_file(g.out_path, clt_report_csv(report));
  return 0;
}

struct SampleOpts {
  std::string a_path;
  int k = 1;
  int burn_in = kDefaultBurnIn;
  int keep = 100;
  int thin = 1;
  std::string trace_path;
};

int cmd_sample_bmvmf(const GlobalOpts& g, const SampleOpts& opt) {
  Eigen::MatrixXd A = load_matrix_csv(opt.a_path);
  if (A.rows() != A.cols()) throw DataError("A must be square");
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    throw DataError("A must be symmetric");
  }
  BinghamParameter param{0.5 * (A + A.transpose()), opt.k};
  ChainResult run =
      run_chain(param, opt.burn_in, opt.keep, opt.thin, g.seed);
  const std::string out = g.out_path.empty() ? "samples.csv" : g.out_path;
  // One kept sample per row, V vectorized column-major.
  Eigen::MatrixXd samples(run.kept.size(), A.rows() * opt.k);
  for (std::size_t i = 0; i < run.kept.size(); ++i) {
    samples.row(i) = Eigen::Map<const Eigen::VectorXd>(
                         run.kept[i].V.data(), run.kept[i].V.size())
                         .transpose();
  }
  save_matrix_csv(samples, out);
  if (!opt.trace_path.empty()) export_chain_trace(run.trace, opt.trace_path);
  std::cout << "kept " << run.kept.size() << " samples (final state is row "
            << run.kept.size() - 1 << ")\n";
  return 0;
}

struct VerifyOpts {
  std::string objective = "fpca";
  std::string data_path;
  double epsilon = 1.0;
  int probes = 1000;
  int trials = 10;
  int n = 20;
  int m = 5;
  int k = 1;
  double lambda = 0.1;
};

int cmd_verify_dp(const GlobalOpts& g, const VerifyOpts& opt) {
  Rng rng = make_rng(g.seed, 0xdfULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  Eigen::MatrixXd data;
  if (!opt.data_path.empty()) {
    CurveTable table = load_curve_csv(opt.data_path);
    Dataset d = clip_to_unit_ball(to_dataset(table), ClipMode::per_record);
    BasisSet basis = fourier_basis(opt.m, d.grid);
    data = project(d, basis).coefs.entries;
  } else {
    data.resize(opt.n, opt.m);
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      for (Eigen::Index j = 0; j < data.cols(); ++j) data(i, j) = normal(rng);
      const double nx = data.row(i).norm();
      const double r = std::pow(unif(rng), 1.0 / opt.m);
      data.row(i) *= r / std::max(nx, 1e-12);
    }
  }

  ObjectiveSpec obj;
  MechanismConfig cfg;
  cfg.epsilon = opt.epsilon;
  cfg.seed = g.seed;
  auto random_projection = [&]() {
    Eigen::MatrixXd G(opt.m, opt.k);
    for (Eigen::Index i = 0; i < G.size(); ++i) G(i) = normal(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
    Eigen::MatrixXd Q = qr.householderQ();
    Eigen::MatrixXd V = Q.leftCols(opt.k);
    return Eigen::MatrixXd(V * V.transpose());
  };
  auto random_ball_vector = [&]() {
    Eigen::VectorXd v(opt.m);
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = normal(rng);
    v *= std::pow(unif(rng), 1.0 / opt.m) / std::max(v.norm(), 1e-12);
    return v;
  };

  if (opt.objective == "fpca") {
    cfg.delta_sensitivity = 1.0;
    obj.sensitivity = 1.0;
    obj.evaluate = [](const Eigen::MatrixXd& X, const Eigen::MatrixXd& P) {
      return (X * P).rowwise().squaredNorm().sum();
    };
  } else if (opt.objective == "penalized-mean") {
    obj = penalized_mean_objective(opt.lambda, power_law_sigma(opt.m, 3.0));
    cfg.delta_sensitivity = obj.sensitivity;
  } else {
    throw DataError("unknown objective id: " + opt.objective);
  }

  double worst = 0.0;
  for (int t = 0; t < opt.trials; ++t) {
    std::vector<Eigen::MatrixXd> probes;
    probes.reserve(opt.probes);
    for (int p = 0; p < opt.probes; ++p) {
      probes.push_back(opt.objective == "fpca"
                           ? random_projection()
                           : Eigen::MatrixXd(random_ball_vector()));
    }
    std::uniform_int_distribution<int> pick(0, static_cast<int>(data.rows()) - 1);
    const int idx = pick(rng);
    Eigen::VectorXd replacement = random_ball_vector();
    worst = std::max(
        worst, verify_dp_ratio(obj, cfg, data, idx, replacement, probes));
  }
  const double bound = opt.epsilon / 2.0;
  std::printf("objective=%s trials=%d probes=%d max_log_ratio=%.12g bound=%.12g %s\n",
              opt.objective.c_str(), opt.trials, opt.probes, worst, bound,
              worst <= bound + 1e-9 ? "OK" : "VIOLATION");
  return worst <= bound + 1e-9 ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"epsilon-DP functional principal components via the exponential mechanism"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--seed", g.seed, "master RNG seed");
  app.add_option("--config", g.config_path, "config file (key = value with [sections])");
  app.add_option("--out", g.out_path, "output path");

  SimulationSpec sim;
  auto* simulate = app.add_subcommand("simulate", "generate a Karhunen-Loeve dataset CSV");
  simulate->add_option("--n", sim.n, "number of curves");
  simulate->add_option("--grid-size", sim.grid_size, "grid points");
  simulate->add_option("--p", sim.num_components, "true components");
  simulate->add_option("--score-sd", sim.score_sd, "score standard deviation");
  simulate->add_option("--noise-sd", sim.noise_sd, "noise standard deviation");
  simulate->add_option("--fourth-term-boost", sim.fourth_term_boost,
                       "extra weight on the 4th Fourier term");

  FitOpts fit;
  auto* fit_cmd = app.add_subcommand("fit", "private FPCA on a curve CSV");
  fit_cmd->add_option("--data", fit.data_path, "curve CSV")->required();
  fit_cmd->add_option("--epsilon", fit.epsilon, "privacy budget");
  fit_cmd->add_option("--k", fit.k, "components to release");
  fit_cmd->add_option("--m", fit.m, "basis size (fourier)");
  fit_cmd->add_option("--burn-in", fit.burn_in, "Gibbs burn-in sweeps");
  fit_cmd->add_option("--basis", fit.basis, "fourier | kernel");
  fit_cmd->add_option("--bandwidth", fit.bandwidth, "kernel bandwidth (0 = search)");
  fit_cmd->add_option("--kernel-target-m", fit.kernel_target_m,
                      "eigenfunctions to keep when searching the bandwidth");
  fit_cmd->add_option("--var-threshold", fit.var_threshold,
                      "variance fraction for the kernel basis");
  fit_cmd->add_option("--sigma", fit.sigma, "power | kernel");
  fit_cmd->add_option("--sigma-exponent", fit.sigma_exponent, "power-law exponent");
  fit_cmd->add_option("--clip", fit.clip, "per_record | global");
  fit_cmd->add_flag("--center", fit.center, "subtract the mean curve first");
  fit_cmd->add_option("--trace", fit.trace_path, "chain trace output path");

  bool grid_serial = false;
  int grid_threads = 0;
  auto* grid_cmd = app.add_subcommand("grid", "run a simulation scenario grid");
  grid_cmd->add_flag("--serial", grid_serial, "use the serial reference runner");
  grid_cmd->add_option("--threads", grid_threads, "worker threads (0 = all cores)");

  auto* clt_cmd = app.add_subcommand("clt", "asymptotic-normality experiment");

  SampleOpts sample;
  auto* sample_cmd = app.add_subcommand("sample-bmvmf", "Gibbs chain for exp(tr(V'AV))");
  sample_cmd->add_option("--a-matrix", sample.a_path, "CSV with the symmetric A")->required();
  sample_cmd->add_option("--k", sample.k, "columns of V");
  sample_cmd->add_option("--burn-in", sample.burn_in, "burn-in sweeps");
  sample_cmd->add_option("--keep", sample.keep, "samples to keep");
  sample_cmd->add_option("--thin", sample.thin, "sweeps between kept samples");
  sample_cmd->add_option("--trace", sample.trace_path, "chain trace output path");

  VerifyOpts verify;
  auto* verify_cmd = app.add_subcommand("verify-dp", "probe the DP log-ratio bound");
  verify_cmd->add_option("--objective", verify.objective, "fpca | penalized-mean");
  verify_cmd->add_option("--data", verify.data_path, "curve CSV (default: random data)");
  verify_cmd->add_option("--epsilon", verify.epsilon, "privacy budget");
  verify_cmd->add_option("--probes", verify.probes, "probe candidates per trial");
  verify_cmd->add_option("--trials", verify.trials, "random replacement trials");
  verify_cmd->add_option("--n", verify.n, "synthetic record count");
  verify_cmd->add_option("--m", verify.m, "coefficient dimension");
  verify_cmd->add_option("--k", verify.k, "projection rank for fpca probes");
  verify_cmd->add_option("--lambda", verify.lambda, "penalized-mean penalty");

  // let --seed/--config/--out appear after the subcommand name
  for (auto* sc : app.get_subcommands([](const CLI::App*) { return true; })) {
    sc->fallthrough();
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return cmd_simulate(g, sim);
    if (fit_cmd->parsed()) return cmd_fit(g, fit);
    if (grid_cmd->parsed()) return cmd_grid(g, grid_serial, grid_threads);
    if (clt_cmd->parsed()) return cmd_clt(g);
    if (sample_cmd->parsed()) return cmd_sample_bmvmf(g, sample);
    if (verify_cmd->parsed()) return cmd_verify_dp(g, verify);
  } catch (const dpfpca::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const dpfpca::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}

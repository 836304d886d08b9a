// Copyright 2026 The arhgof Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// arhgof: simulate ARH(1) series, test H0: Gamma = Gamma0, estimate Gamma and
// run Monte Carlo size/power studies.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure,
// 130 interrupted (a checkpoint is written when --checkpoint is given).

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "arhgof/arhgof.hpp"

namespace {

using namespace arhgof;

std::atomic<bool> g_stop{false};

extern "C" void on_interrupt(int) { g_stop = true; }

// Writes to --out when given, stdout otherwise.
void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw ConfigError("cannot write '" + out_path + "'");
  out << text;
}

ArhConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  return with_input_file(path, [](std::istream& in) { return read_arh_config(in); });
}

FunctionalSeries load_series(const std::string& path) {
  return with_input_file(path, [](std::istream& in) { return read_series_csv(in); });
}

struct StudyOptions {
  std::string config_path;
  std::string preset = "desk";
  std::optional<std::uint64_t> seed;
  int workers = 1;
  std::vector<int> sizes;
  std::vector<int> nps;
  std::optional<int> reps;
  std::optional<int> boot;
  bool standardized = false;
  std::string format = "csv";
  bool with_stderr = false;
  std::string out;
  std::string checkpoint;
  std::string gamma0_path;
};

int run_study_command(const StudyOptions& o, Hypothesis hypothesis) {
  StudyConfig c = make_study_config(o.preset == "paper" ? Preset::paper : Preset::desk, hypothesis);
  if (!o.config_path.empty()) {
    c.dgp = load_config(o.config_path);
    c.base_seed = c.dgp.seed;
    if (hypothesis == Hypothesis::alternative) c.dgp.gamma_kind = "exp_scaled";
  }
  if (o.seed) c.base_seed = *o.seed;
  c.workers = o.workers;
  if (!o.sizes.empty()) c.sample_sizes = o.sizes;
  if (!o.nps.empty()) c.np_list = o.nps;
  if (o.reps) c.reps = *o.reps;
  if (o.boot) c.test.n_bootstrap = *o.boot;
  c.test.standardized = o.standardized;
  if (!o.gamma0_path.empty()) {
    const GridHandle grid = Grid::uniform(c.dgp.m);
    c.gamma0 = with_input_file(o.gamma0_path, [&](std::istream& in) { return read_kernel_csv(in, grid); });
  }
  c.checkpoint_path = o.checkpoint;
  c.stop_flag = &g_stop;

  const StudyResult r = hypothesis == Hypothesis::null ? run_size_study(c) : run_power_study(c);
  emit(o.out, emit_table(r, o.format == "markdown" ? TableFormat::markdown : TableFormat::csv, o.with_stderr));
  std::cerr << "wall time: " << r.wall_time << " s\n";
  return 0;
}

void add_study_options(CLI::App* cmd, StudyOptions& o) {
  cmd->add_option("--config", o.config_path, "ARH(1) key=value config file");
  cmd->add_option("--preset", o.preset, "desk (R=200, B=500) or paper (R=500, B=2000)")
      ->check(CLI::IsMember({"desk", "paper"}));
  cmd->add_option("--seed", o.seed, "base seed");
  cmd->add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--n", o.sizes, "sample sizes")->delimiter(',');
  cmd->add_option("--np", o.nps, "numbers of projections")->delimiter(',');
  cmd->add_option("--reps", o.reps, "Monte Carlo repetitions R");
  cmd->add_option("--boot", o.boot, "bootstrap replicates B");
  cmd->add_flag("--standardized", o.standardized, "use the CDF-standardized supremum");
  cmd->add_option("--format", o.format, "csv or markdown")->check(CLI::IsMember({"csv", "markdown"}));
  cmd->add_flag("--stderr", o.with_stderr, "include Monte Carlo standard errors");
  cmd->add_option("--out", o.out, "output path (default stdout)");
  cmd->add_option("--checkpoint", o.checkpoint, "resumable state file, written every 25 repetitions");
  cmd->add_option("--gamma0", o.gamma0_path, "H0 operator kernel CSV (default zero)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ARH(1) goodness-of-fit test for the autocorrelation operator"};
  app.require_subcommand(1);

  // simulate
  std::string sim_config, sim_out;
  std::optional<std::uint64_t> sim_seed;
  std::optional<int> sim_n;
  auto* sim = app.add_subcommand("simulate", "simulate an ARH(1) series and write it as CSV");
  sim->add_option("--config", sim_config, "ARH(1) key=value config file");
  sim->add_option("--seed", sim_seed, "seed (overrides config)");
  sim->add_option("--n", sim_n, "sample size (overrides config)");
  sim->add_option("--out", sim_out, "output path (default stdout)");

  // test
  std::string test_series, test_gamma0, test_mode = "specified", test_out, test_config;
  std::uint64_t test_seed = 1;
  TestConfig test_cfg{1, 2000};
  auto* tst = app.add_subcommand("test", "test H0: Gamma = Gamma0 on a CSV series");
  tst->add_option("--series", test_series, "series CSV")->required();
  tst->add_option("--gamma0", test_gamma0, "H0 operator kernel CSV (default zero)");
  tst->add_option("--config", test_config,
                  "use the configured exponential kernels for the projection directions");
  tst->add_option("--np", test_cfg.n_projections, "number of projections");
  tst->add_option("--boot", test_cfg.n_bootstrap, "bootstrap replicates");
  tst->add_option("--alpha", test_cfg.alpha, "significance level");
  tst->add_option("--k-min", test_cfg.k_min, "minimum count for the standardized statistic");
  tst->add_flag("--standardized", test_cfg.standardized, "use the CDF-standardized supremum");
  tst->add_flag("--add-one", test_cfg.add_one, "report (1 + #)/(B + 1) p-values");
  tst->add_option("--mode", test_mode, "specified or misspecified")
      ->check(CLI::IsMember({"specified", "misspecified"}));
  tst->add_option("--seed", test_seed, "seed");
  tst->add_option("--out", test_out, "output path (default stdout)");

  // estimate
  std::string est_series, est_out;
  std::optional<int> est_kn;
  auto* est = app.add_subcommand("estimate", "projection estimate of Gamma as a kernel CSV");
  est->add_option("--series", est_series, "series CSV")->required();
  est->add_option("--kn", est_kn, "truncation level (default max(1, floor(log n)))");
  est->add_option("--out", est_out, "output path (default stdout)");

  StudyOptions size_opts, power_opts;
  auto* mc_size = app.add_subcommand("mc-size", "Monte Carlo empirical size table");
  add_study_options(mc_size, size_opts);
  auto* mc_power = app.add_subcommand("mc-power", "Monte Carlo empirical power table");
  add_study_options(mc_power, power_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  std::signal(SIGINT, on_interrupt);
  std::signal(SIGTERM, on_interrupt);

  try {
    if (*sim) {
      ArhConfig cfg = load_config(sim_config);
      if (sim_seed) cfg.seed = *sim_seed;
      if (sim_n) cfg.n = *sim_n;
      cfg.validate();
      const GridHandle grid = Grid::uniform(cfg.m);
      const ARHSpec spec = to_arh_spec(cfg, grid);
      if (stationarity_proxy(spec.gamma) >= 1.0)
        std::cerr << "warning: largest singular value of Gamma >= 1, the recursion may not be stationary\n";
      const FunctionalSeries series = simulate_arh1(spec, RngStream::root(cfg.seed).with(Purpose::series));
      std::ostringstream os;
      write_series_csv(os, series);
      emit(sim_out, os.str());
    } else if (*tst) {
      const FunctionalSeries series = load_series(test_series);
      const GridHandle grid = series.grid();
      const KernelMatrix gamma0 =
          test_gamma0.empty()
              ? KernelMatrix::zero(grid, false)
              : with_input_file(test_gamma0, [&](std::istream& in) { return read_kernel_csv(in, grid); });
      ProjectionSpecs specs{GaussianSpec{KernelMatrix::zero(grid), {}, {}},
                            GaussianSpec{KernelMatrix::zero(grid), {}, {}}};
      if (!test_config.empty()) {
        const ArhConfig cfg = load_config(test_config);
        if (cfg.m != grid->size()) throw ConfigError("config m does not match the series");
        const ARHSpec spec = to_arh_spec(cfg, grid);
        specs = {spec.noise, spec.initial};
      } else {
        // data mode: estimated innovation covariance under H0 and C_Y
        specs = {GaussianSpec{innovation_cov_h0(series, gamma0), {}, {}},
                 GaussianSpec{empirical_cov_operator(series, 0), {}, {}}};
      }
      const TestMode mode = test_mode == "specified" ? TestMode::specified : TestMode::misspecified;
      const TestOutcome outcome = run_gof_test(series, gamma0, test_cfg, specs, RngStream::root(test_seed), mode);
      std::ostringstream os;
      write_outcome_csv(os, outcome);
      emit(test_out, os.str());
    } else if (*est) {
      const FunctionalSeries series = load_series(est_series);
      const GammaEstimate g = estimate_autocorrelation(series, est_kn);
      std::cerr << "k_n = " << g.k_n << "\n";
      std::ostringstream os;
      write_kernel_csv(os, g.op);
      emit(est_out, os.str());
    } else if (*mc_size) {
      return run_study_command(size_opts, Hypothesis::null);
    } else if (*mc_power) {
      return run_study_command(power_opts, Hypothesis::alternative);
    }
  } catch (const StudyInterrupted& e) {
    std::cerr << "interrupted: " << e.what() << '\n';
    return 130;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const StructuralError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const PreconditionError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  }
  return 0;
}

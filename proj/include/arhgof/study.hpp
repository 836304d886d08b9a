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

#pragma once

// Monte Carlo size/power studies. One work unit is one (sample size,
// repetition) pair: simulate a series and compute p-values for the largest
// requested number of projections; every NP column reuses a prefix of them.
// Units run on a small thread pool and are reduced in repetition order.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "arhgof/config.hpp"
#include "arhgof/csv.hpp"
#include "arhgof/error.hpp"
#include "arhgof/meptest.hpp"
#include "arhgof/simulate.hpp"

namespace arhgof {

enum class Hypothesis { null, alternative };
enum class Preset { desk, paper };
enum class TableFormat { csv, markdown };

inline constexpr int kCheckpointEvery = 25;

struct StudyConfig {
  ArhConfig dgp;
  Hypothesis hypothesis = Hypothesis::null;
  std::optional<KernelMatrix> gamma0;       // zero when unset
  std::optional<KernelMatrix> alternative;  // exp_scaled kernel of dgp when unset
  std::vector<int> sample_sizes{50, 100, 200};
  std::vector<int> np_list{1, 2, 3, 4, 5, 10, 15};
  int reps = 200;
  TestConfig test{1, 500};
  std::uint64_t base_seed = 1;
  int workers = 1;
  OperatorConvention convention = OperatorConvention::kernel_scaled;
  std::string checkpoint_path;                        // empty: no checkpointing
  const std::atomic<bool>* stop_flag = nullptr;       // checked between checkpoint blocks

  void validate() const {
    dgp.validate();
    if (reps < 1) throw ConfigError("study: reps must be >= 1");
    if (sample_sizes.empty() || np_list.empty()) throw ConfigError("study: empty sample size or NP list");
    for (int n : sample_sizes)
      if (n < 3) throw ConfigError("study: sample sizes must be >= 3");
    for (int np : np_list)
      if (np < 1) throw ConfigError("study: NP values must be >= 1");
    if (workers < 1) throw ConfigError("study: workers must be >= 1");
    test.validate();
  }
};

inline StudyConfig make_study_config(Preset preset, Hypothesis hypothesis) {
  StudyConfig c;
  c.hypothesis = hypothesis;
  c.dgp.gamma_kind = "exp_scaled";
  if (preset == Preset::desk) {
    c.reps = 200;
    c.test.n_bootstrap = 500;
  } else {
    c.reps = 500;
    c.test.n_bootstrap = 2000;
  }
  return c;
}

struct StudyResult {
  std::vector<int> sample_sizes;
  std::vector<int> np_list;
  int reps = 0;
  Matrix rate;       // sample size x NP
  Matrix mc_stderr;  // sqrt(rate (1 - rate) / reps)
  double wall_time = 0.0;
};

class StudyInterrupted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string study_fingerprint(const StudyConfig& c) {
  std::ostringstream os;
  write_arh_config(os, c.dgp);
  os << "hypothesis=" << (c.hypothesis == Hypothesis::null ? "null" : "alternative") << '\n';
  os << "reps=" << c.reps << "\nseed=" << c.base_seed << "\nboot=" << c.test.n_bootstrap
     << "\nstandardized=" << c.test.standardized << "\nk_min=" << c.test.k_min
     << "\nmultiplier=" << static_cast<int>(c.test.multiplier) << "\nadd_one=" << c.test.add_one
     << "\nconvention=" << static_cast<int>(c.convention) << "\nsizes=";
  for (int n : c.sample_sizes) os << n << ' ';
  os << "\nmax_np=" << *std::max_element(c.np_list.begin(), c.np_list.end());
  auto digest = [&os](const std::optional<KernelMatrix>& k) {
    if (!k) return;
    for (Eigen::Index i = 0; i < k->entries().size(); ++i) os << csv::format_double(k->entries().data()[i]) << ',';
  };
  os << "\ngamma0=";
  digest(c.gamma0);
  os << "\nalternative=";
  digest(c.alternative);
  return os.str();
}

struct Checkpoint {
  std::string fingerprint;
  // p_values[size index][rep] -> per-projection p-values, empty when not done
  std::vector<std::vector<std::vector<double>>> p_values;
};

inline void save_checkpoint(const std::string& path, const Checkpoint& cp) {
  nlohmann::json j;
  j["fingerprint"] = cp.fingerprint;
  j["p_values"] = cp.p_values;
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw ConfigError("cannot write checkpoint '" + tmp + "'");
    out << j.dump();
  }
  std::rename(tmp.c_str(), path.c_str());
}

inline std::optional<Checkpoint> load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    Checkpoint cp;
    cp.fingerprint = j.at("fingerprint").get<std::string>();
    cp.p_values = j.at("p_values").get<std::vector<std::vector<std::vector<double>>>>();
    return cp;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("checkpoint '" + path + "' is unreadable: " + e.what());
  }
}

// Runs fn(i) for i in [begin, end) on `workers` threads; rethrows the first error.
template <class Fn>
void parallel_for(int begin, int end, int workers, Fn&& fn) {
  if (workers <= 1 || end - begin <= 1) {
    for (int i = begin; i < end; ++i) fn(i);
    return;
  }
  std::atomic<int> next{begin};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    for (int i = next++; i < end; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next = end;
      }
    }
  };
  std::vector<std::thread> pool;
  const int count = std::min(workers, end - begin);
  for (int t = 0; t < count; ++t) pool.emplace_back(body);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

inline StudyResult run_study(const StudyConfig& config) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();
  const GridHandle grid = Grid::uniform(config.dgp.m);

  const KernelMatrix gamma0 = config.gamma0 ? *config.gamma0 : KernelMatrix::zero(grid, false);
  require_same_grid(grid, gamma0.grid(), "run_study");
  ArhConfig alt_cfg = config.dgp;
  alt_cfg.gamma_kind = "exp_scaled";
  const KernelMatrix alternative = config.alternative ? *config.alternative : configured_gamma(alt_cfg, grid);

  ARHSpec spec = to_arh_spec(config.dgp, grid);
  spec.gamma = config.hypothesis == Hypothesis::null ? gamma0 : alternative;
  spec.convention = config.convention;
  const ArhSimulator simulator(spec);

  TestConfig test = config.test;
  test.convention = config.convention;
  const GofTester tester(ProjectionSpecs{spec.noise, spec.initial}, test);
  const int max_np = *std::max_element(config.np_list.begin(), config.np_list.end());

  const int sizes = static_cast<int>(config.sample_sizes.size());
  Checkpoint cp;
  cp.fingerprint = study_fingerprint(config);
  cp.p_values.assign(static_cast<std::size_t>(sizes),
                     std::vector<std::vector<double>>(static_cast<std::size_t>(config.reps)));
  if (!config.checkpoint_path.empty()) {
    if (auto loaded = load_checkpoint(config.checkpoint_path)) {
      if (loaded->fingerprint != cp.fingerprint)
        throw ConfigError("checkpoint '" + config.checkpoint_path + "' belongs to a different study");
      cp = std::move(*loaded);
    }
  }

  auto unit = [&](int index) {
    const int s = index % sizes;
    const int rep = index / sizes;
    auto& slot = cp.p_values[static_cast<std::size_t>(s)][static_cast<std::size_t>(rep)];
    if (!slot.empty()) return;
    const RngStream rng = RngStream::root(config.base_seed, static_cast<std::uint64_t>(rep));
    const FunctionalSeries series = simulator.simulate(config.sample_sizes[static_cast<std::size_t>(s)],
                                                       rng.with(Purpose::series));
    std::vector<double> p;
    for (const auto& r : tester.projections(series, gamma0, rng, max_np)) p.push_back(r.p_value);
    slot = std::move(p);
  };

  for (int block = 0; block < config.reps; block += kCheckpointEvery) {
    if (config.stop_flag && config.stop_flag->load()) {
      if (!config.checkpoint_path.empty()) save_checkpoint(config.checkpoint_path, cp);
      throw StudyInterrupted("study interrupted after " + std::to_string(block) + " repetitions");
    }
    const int last = std::min(config.reps, block + kCheckpointEvery);
    parallel_for(block * sizes, last * sizes, config.workers, unit);
    if (!config.checkpoint_path.empty()) save_checkpoint(config.checkpoint_path, cp);
  }

  StudyResult result;
  result.sample_sizes = config.sample_sizes;
  result.np_list = config.np_list;
  result.reps = config.reps;
  const int nps = static_cast<int>(config.np_list.size());
  result.rate = Matrix::Zero(sizes, nps);
  for (int s = 0; s < sizes; ++s) {
    for (int c = 0; c < nps; ++c) {
      const auto np = static_cast<std::size_t>(config.np_list[static_cast<std::size_t>(c)]);
      int rejections = 0;
      for (const auto& p : cp.p_values[static_cast<std::size_t>(s)]) {
        const std::vector<double> prefix(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(np));
        if (fdr_combine(prefix) <= config.test.alpha) ++rejections;
      }
      result.rate(s, c) = static_cast<double>(rejections) / config.reps;
    }
  }
  result.mc_stderr = (result.rate.array() * (1.0 - result.rate.array()) / config.reps).sqrt().matrix();
  result.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

}  // namespace detail

// Simulates under gamma0 and tests H0: Gamma = gamma0.
inline StudyResult run_size_study(StudyConfig config) {
  if (config.hypothesis != Hypothesis::null) throw ConfigError("run_size_study: hypothesis must be null");
  return detail::run_study(config);
}

// Simulates under the alternative kernel and tests H0: Gamma = gamma0.
inline StudyResult run_power_study(StudyConfig config) {
  if (config.hypothesis != Hypothesis::alternative)
    throw ConfigError("run_power_study: hypothesis must be alternative");
  return detail::run_study(config);
}

inline std::string format_rate(double x) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << x;
  return os.str();
}

// Rows are sample sizes, columns are NP; rates with three decimals.
inline std::string emit_table(const StudyResult& result, TableFormat format, bool with_stderr = false) {
  std::ostringstream os;
  const auto nps = result.np_list.size();
  if (format == TableFormat::csv) {
    os << 'n';
    for (int np : result.np_list) os << ",np_" << np;
    if (with_stderr)
      for (int np : result.np_list) os << ",se_np_" << np;
    os << '\n';
    for (std::size_t s = 0; s < result.sample_sizes.size(); ++s) {
      os << result.sample_sizes[s];
      for (std::size_t c = 0; c < nps; ++c) os << ',' << format_rate(result.rate(s, c));
      if (with_stderr)
        for (std::size_t c = 0; c < nps; ++c) os << ',' << format_rate(result.mc_stderr(s, c));
      os << '\n';
    }
    return os.str();
  }
  os << "| n \\ NP |";
  for (int np : result.np_list) os << ' ' << np << " |";
  os << "\n|---|";
  for (std::size_t c = 0; c < nps; ++c) os << "---|";
  os << '\n';
  for (std::size_t s = 0; s < result.sample_sizes.size(); ++s) {
    os << "| " << result.sample_sizes[s] << " |";
    for (std::size_t c = 0; c < nps; ++c) {
      os << ' ' << format_rate(result.rate(s, c));
      if (with_stderr) os << " (" << format_rate(result.mc_stderr(s, c)) << ')';
      os << " |";
    }
    os << '\n';
  }
  return os.str();
}

// Inverse of the CSV form of emit_table (rates only; stderr columns are read
// back when present).
inline StudyResult parse_table_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("table csv: empty input");
  const auto header = csv::split(csv::chomp(line));
  if (header.empty() || header[0] != "n") throw ConfigError("table csv: bad header");
  StudyResult r;
  bool has_se = false;
  for (std::size_t c = 1; c < header.size(); ++c) {
    const std::string_view h = header[c];
    if (h.rfind("np_", 0) == 0) r.np_list.push_back(std::stoi(std::string(h.substr(3))));
    else if (h.rfind("se_np_", 0) == 0) has_se = true;
    else throw ConfigError("table csv: bad header column");
  }
  const std::size_t nps = r.np_list.size();
  std::vector<std::vector<double>> rates, ses;
  while (std::getline(is, line)) {
    const auto row = csv::chomp(line);
    if (row.empty()) continue;
    const auto cells = csv::split(row);
    if (cells.size() != header.size()) throw ConfigError("table csv: wrong column count");
    r.sample_sizes.push_back(std::stoi(std::string(cells[0])));
    std::vector<double> rr, ss;
    for (std::size_t c = 0; c < nps; ++c) rr.push_back(csv::parse_double(cells[1 + c]));
    if (has_se)
      for (std::size_t c = 0; c < nps; ++c) ss.push_back(csv::parse_double(cells[1 + nps + c]));
    rates.push_back(rr);
    ses.push_back(ss);
  }
  r.rate = Matrix::Zero(static_cast<Eigen::Index>(rates.size()), static_cast<Eigen::Index>(nps));
  r.mc_stderr = Matrix::Zero(r.rate.rows(), r.rate.cols());
  for (std::size_t s = 0; s < rates.size(); ++s)
    for (std::size_t c = 0; c < nps; ++c) {
      r.rate(s, c) = rates[s][c];
      if (has_se) r.mc_stderr(s, c) = ses[s][c];
    }
  return r;
}

}  // namespace arhgof

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

#include "arhgof/study.hpp"

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "gtest/gtest.h"

namespace arhgof {
namespace {

StudyConfig small_study(Hypothesis h) {
  StudyConfig c = make_study_config(Preset::desk, h);
  c.sample_sizes = {30, 60};
  c.np_list = {1, 3};
  c.reps = 12;
  c.test.n_bootstrap = 50;
  c.dgp.burn_in = 50;
  c.base_seed = 77;
  return c;
}

TEST(ConfigTest, ReadWriteRoundTrip) {
  std::istringstream in("# comment\nm = 31\nsigma_eps=0.2\ngamma_kind=exp_scaled\ngamma_scale=0.03\nn=90\nseed=5\n");
  const ArhConfig c = read_arh_config(in);
  EXPECT_EQ(c.m, 31);
  EXPECT_EQ(c.sigma_eps, 0.2);
  EXPECT_EQ(c.gamma_kind, "exp_scaled");
  EXPECT_EQ(c.gamma_scale, 0.03);
  EXPECT_EQ(c.n, 90);
  EXPECT_EQ(c.seed, 5u);
  EXPECT_EQ(c.burn_in, 500);
  std::ostringstream out;
  write_arh_config(out, c);
  std::istringstream back(out.str());
  const ArhConfig d = read_arh_config(back);
  EXPECT_EQ(d.m, c.m);
  EXPECT_EQ(d.gamma_scale, c.gamma_scale);
  EXPECT_EQ(d.theta_y0, c.theta_y0);
}

TEST(ConfigTest, Errors) {
  std::istringstream unknown("foo=1\n");
  EXPECT_THROW(read_arh_config(unknown), ConfigError);
  std::istringstream bad_kind("gamma_kind=spline\n");
  EXPECT_THROW(read_arh_config(bad_kind), ConfigError);
  std::istringstream bad_num("sigma_eps=abc\n");
  EXPECT_THROW(read_arh_config(bad_num), ConfigError);
  std::istringstream no_eq("m 71\n");
  EXPECT_THROW(read_arh_config(no_eq), ConfigError);
}

TEST(ConfigTest, SpecFromConfig) {
  ArhConfig c;
  c.gamma_kind = "exp_scaled";
  const auto grid = Grid::uniform(c.m);
  const ARHSpec s = to_arh_spec(c, grid);
  EXPECT_EQ(s.gamma.entries(), h1_kernel(grid).entries());
  EXPECT_EQ(s.burn_in, 500);
  EXPECT_DOUBLE_EQ(s.noise.kernel.entries()(3, 3), 0.01);
}

TEST(EmitTableTest, Shapes) {
  StudyResult one;
  one.sample_sizes = {200};
  one.np_list = {1};
  one.reps = 500;
  one.rate = Matrix::Constant(1, 1, 0.05);
  one.mc_stderr = Matrix::Zero(1, 1);
  EXPECT_EQ(emit_table(one, TableFormat::csv), "n,np_1\n200,0.050\n");
  EXPECT_NE(emit_table(one, TableFormat::markdown).find("| 200 | 0.050 |"), std::string::npos);

  StudyResult r;
  r.sample_sizes = {50, 100, 200};
  r.np_list = {1, 2, 3, 4, 5, 10, 15};
  r.reps = 500;
  r.rate = Matrix::Zero(3, 7);
  for (int s = 0; s < 3; ++s)
    for (int c = 0; c < 7; ++c) r.rate(s, c) = (37 * s + 11 * c) % 500 / 500.0;
  r.mc_stderr = (r.rate.array() * (1 - r.rate.array()) / 500.0).sqrt().matrix();
  const std::string text = emit_table(r, TableFormat::csv);
  std::istringstream lines(text);
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    ++count;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 7);
  }
  EXPECT_EQ(count, 4);

  const StudyResult back = parse_table_csv(text);
  EXPECT_EQ(back.sample_sizes, r.sample_sizes);
  EXPECT_EQ(back.np_list, r.np_list);
  EXPECT_LT((back.rate - r.rate).cwiseAbs().maxCoeff(), 1e-9);

  const StudyResult with_se = parse_table_csv(emit_table(r, TableFormat::csv, true));
  EXPECT_LT((with_se.mc_stderr - r.mc_stderr).cwiseAbs().maxCoeff(), 5e-4 + 1e-12);
}

TEST(StudyTest, SingleRepetitionRatesAreZeroOrOne) {
  StudyConfig c = small_study(Hypothesis::alternative);
  c.reps = 1;
  const StudyResult r = run_power_study(c);
  for (Eigen::Index i = 0; i < r.rate.size(); ++i)
    EXPECT_TRUE(r.rate.data()[i] == 0.0 || r.rate.data()[i] == 1.0);
}

TEST(StudyTest, DegenerateNoiseNeverRejects) {
  StudyConfig c = small_study(Hypothesis::null);
  c.dgp.sigma_eps = 0.0;
  const StudyResult r = run_size_study(c);
  EXPECT_TRUE(r.rate.isZero(0.0));
}

TEST(StudyTest, StderrMatchesRate) {
  const StudyResult r = run_power_study(small_study(Hypothesis::alternative));
  for (Eigen::Index i = 0; i < r.rate.size(); ++i) {
    const double p = r.rate.data()[i];
    EXPECT_EQ(r.mc_stderr.data()[i], std::sqrt(p * (1 - p) / r.reps));
  }
}

TEST(StudyTest, AlternativeEqualToNullReducesToSizeStudy) {
  StudyConfig power = small_study(Hypothesis::alternative);
  power.alternative = KernelMatrix::zero(Grid::uniform(power.dgp.m), false);
  StudyConfig size = small_study(Hypothesis::null);
  EXPECT_EQ(run_power_study(power).rate, run_size_study(size).rate);
}

TEST(StudyTest, DeterministicAcrossWorkerCounts) {
  StudyConfig c = small_study(Hypothesis::alternative);
  c.workers = 1;
  const std::string a = emit_table(run_power_study(c), TableFormat::csv, true);
  c.workers = 3;
  const std::string b = emit_table(run_power_study(c), TableFormat::csv, true);
  EXPECT_EQ(a, b);
}

TEST(StudyTest, NpListDoesNotChangeSharedColumns) {
  StudyConfig c = small_study(Hypothesis::alternative);
  const StudyResult a = run_power_study(c);
  c.np_list = {1, 3, 5};
  const StudyResult b = run_power_study(c);
  EXPECT_EQ(a.rate.col(0), b.rate.col(0));
  EXPECT_EQ(a.rate.col(1), b.rate.col(1));
}

TEST(StudyTest, WrongHypothesisRejected) {
  EXPECT_THROW(run_size_study(small_study(Hypothesis::alternative)), ConfigError);
  EXPECT_THROW(run_power_study(small_study(Hypothesis::null)), ConfigError);
  StudyConfig c = small_study(Hypothesis::null);
  c.np_list.clear();
  EXPECT_THROW(run_size_study(c), ConfigError);
}

TEST(StudyTest, CheckpointResumeAndInterrupt) {
  const auto path = (std::filesystem::temp_directory_path() / "arhgof_checkpoint_test.json").string();
  std::remove(path.c_str());
  StudyConfig c = small_study(Hypothesis::alternative);
  c.reps = 30;
  const StudyResult plain = run_power_study(c);

  // interrupted before any work: checkpoint is written, study throws
  std::atomic<bool> stop{true};
  c.checkpoint_path = path;
  c.stop_flag = &stop;
  EXPECT_THROW(run_power_study(c), StudyInterrupted);
  EXPECT_TRUE(std::filesystem::exists(path));

  stop = false;
  const StudyResult first = run_power_study(c);
  EXPECT_EQ(first.rate, plain.rate);
  // resuming from a complete checkpoint reproduces the result
  const StudyResult resumed = run_power_study(c);
  EXPECT_EQ(resumed.rate, plain.rate);

  StudyConfig other = c;
  other.base_seed = 78;
  EXPECT_THROW(run_power_study(other), ConfigError);
  std::remove(path.c_str());
}

}  // namespace
}  // namespace arhgof

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

// Plain-text key=value description of an ARH(1) simulation. Blank lines and
// lines starting with '#' are ignored.
//
//   m, sigma_eps, theta_eps, sigma_y0, theta_y0,
//   gamma_kind (zero | exp_scaled), gamma_theta, gamma_scale, burn_in, n, seed

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "arhgof/csv.hpp"
#include "arhgof/error.hpp"
#include "arhgof/func_core.hpp"
#include "arhgof/simulate.hpp"

namespace arhgof {

struct ArhConfig {
  int m = kDefaultGridSize;
  double sigma_eps = 0.10;
  double theta_eps = 0.3;
  double sigma_y0 = 0.10;
  double theta_y0 = 0.3;
  std::string gamma_kind = "zero";
  double gamma_theta = 0.8;
  double gamma_scale = 1.0 / 71.0;
  int burn_in = kDefaultBurnIn;
  int n = 200;
  std::uint64_t seed = 1;

  void validate() const {
    if (m < 2) throw ConfigError("config: m must be >= 2");
    if (!(sigma_eps >= 0 && sigma_y0 >= 0)) throw ConfigError("config: sigma values must be nonnegative");
    if (!(theta_eps > 0 && theta_y0 > 0)) throw ConfigError("config: theta values must be positive");
    if (gamma_kind != "zero" && gamma_kind != "exp_scaled")
      throw ConfigError("config: gamma_kind must be 'zero' or 'exp_scaled'");
    if (!(gamma_theta > 0)) throw ConfigError("config: gamma_theta must be positive");
    if (burn_in < 0) throw ConfigError("config: burn_in must be nonnegative");
    if (n < 2) throw ConfigError("config: n must be >= 2");
  }
};

namespace detail {
inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline long long parse_integer(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size()) throw ConfigError("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects an integer, got '" + value + "'");
  }
}

inline double parse_real(const std::string& key, const std::string& value) {
  try {
    return csv::parse_double(value);
  } catch (const ConfigError&) {
    throw ConfigError("config: '" + key + "' expects a number, got '" + value + "'");
  }
}
}  // namespace detail

inline ArhConfig read_arh_config(std::istream& is) {
  ArhConfig c;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string s = detail::trim(line);
    if (s.empty() || s[0] == '#') continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("config: line " + std::to_string(lineno) + " has no '='");
    const std::string key = detail::trim(s.substr(0, eq));
    const std::string value = detail::trim(s.substr(eq + 1));
    if (key == "m") c.m = static_cast<int>(detail::parse_integer(key, value));
    else if (key == "sigma_eps") c.sigma_eps = detail::parse_real(key, value);
    else if (key == "theta_eps") c.theta_eps = detail::parse_real(key, value);
    else if (key == "sigma_y0") c.sigma_y0 = detail::parse_real(key, value);
    else if (key == "theta_y0") c.theta_y0 = detail::parse_real(key, value);
    else if (key == "gamma_kind") c.gamma_kind = value;
    else if (key == "gamma_theta") c.gamma_theta = detail::parse_real(key, value);
    else if (key == "gamma_scale") c.gamma_scale = detail::parse_real(key, value);
    else if (key == "burn_in") c.burn_in = static_cast<int>(detail::parse_integer(key, value));
    else if (key == "n") c.n = static_cast<int>(detail::parse_integer(key, value));
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(detail::parse_integer(key, value));
    else throw ConfigError("config: unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

inline void write_arh_config(std::ostream& os, const ArhConfig& c) {
  os << "m=" << c.m << '\n'
     << "sigma_eps=" << csv::format_double(c.sigma_eps) << '\n'
     << "theta_eps=" << csv::format_double(c.theta_eps) << '\n'
     << "sigma_y0=" << csv::format_double(c.sigma_y0) << '\n'
     << "theta_y0=" << csv::format_double(c.theta_y0) << '\n'
     << "gamma_kind=" << c.gamma_kind << '\n'
     << "gamma_theta=" << csv::format_double(c.gamma_theta) << '\n'
     << "gamma_scale=" << csv::format_double(c.gamma_scale) << '\n'
     << "burn_in=" << c.burn_in << '\n'
     << "n=" << c.n << '\n'
     << "seed=" << c.seed << '\n';
}

// The configured operator; zero when gamma_kind = zero.
inline KernelMatrix configured_gamma(const ArhConfig& c, const GridHandle& grid) {
  if (c.gamma_kind == "zero") return KernelMatrix::zero(grid, false);
  return exp_scaled_kernel(grid, c.gamma_scale, c.gamma_theta);
}

// sigma = 0 gives the degenerate (zero) kernel.
inline KernelMatrix configured_cov(const GridHandle& grid, double sigma, double theta) {
  if (sigma == 0.0) return KernelMatrix::zero(grid);
  return exp_kernel(grid, sigma, theta);
}

inline ARHSpec to_arh_spec(const ArhConfig& c, const GridHandle& grid) {
  c.validate();
  if (grid->size() != c.m) throw StructuralError("to_arh_spec: grid size differs from m");
  return ARHSpec{configured_gamma(c, grid),
                 GaussianSpec{configured_cov(grid, c.sigma_eps, c.theta_eps), {}, {}},
                 GaussianSpec{configured_cov(grid, c.sigma_y0, c.theta_y0), {}, {}},
                 c.burn_in,
                 c.n,
                 OperatorConvention::kernel_scaled};
}

}  // namespace arhgof

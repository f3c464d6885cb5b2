// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nsa/evolution.hpp"
#include "nsa/ft_diagnostics.hpp"
#include "nsa/low_energy_inverse.hpp"
#include "nsa/potentials.hpp"

namespace nsa {

inline constexpr const char* kSchema = "nsa-scenario/1";

enum class Pipeline { THRESHOLD, INVERSE, EVOLVE, FTSCAN, FULL };
const char* pipeline_name(Pipeline p);
Pipeline parse_pipeline(const std::string& s);

struct Scenario {
  Pipeline pipeline = Pipeline::THRESHOLD;
  GridMode mode = GridMode::RADIAL_SWAVE;
  double L = 20.0;
  int M = 400;
  std::string potential = "exact_eigen";
  ParamMap params;
  std::string potential_file;  // samples "re,im" per line; overrides the builtin name
  double tol_rank = 1e-8, tol_res = 1e-2;
  // inverse
  std::vector<double> lambdas{0.03, 0.1, 0.2};
  int n_random = 20;
  // evolve
  double sigma = 1.0;
  double eigen_weight = 0.0;  // adds this multiple of the known zero-energy state
  bool project = true;
  double T_max = 0.0;
  double t_fit_min = 2.0;
  double dt = 0.05;
  PropMethod method = PropMethod::EXPM_SQUARING;
  std::optional<std::pair<double, double>> expect_exponent;
  // ftscan
  Window window = Window::LOW;
  int n_lambda = 256;
  double lambda1 = 2.0;
  bool ft_project = true;
};

// throws Error(CONFIG) on any schema violation; base resolves relative file paths
Scenario parse_scenario(const nlohmann::json& j, const std::filesystem::path& base = {});
Scenario load_scenario(const std::filesystem::path& path);
nlohmann::ordered_json scenario_to_json(const Scenario& s);

// named scenarios written by the fixtures subcommand
std::vector<std::pair<std::string, Scenario>> builtin_scenarios();

struct RunOptions {
  std::uint64_t seed = 1;
  int grid_scale = 1;
};

struct RunResult {
  int exit_code = 0;  // 0 ok, 2 invariant violated, 3 configuration error
  std::vector<std::string> artifacts;
  std::vector<std::string> failures;
};

RunResult run_scenario(const Scenario& sc, Pipeline p, const std::filesystem::path& out, const RunOptions& opt = {});

nlohmann::ordered_json threshold_report_json(const ThresholdReport& r);

}  // namespace nsa

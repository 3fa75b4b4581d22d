#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rwlab/coarse.hpp"
#include "rwlab/estimators.hpp"
#include "rwlab/potential.hpp"

namespace rwlab::app {

// One flat record for every command. Unused fields are ignored by a command
// but still validated, so a typo fails before any work starts.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  int d = 3;
  std::string mu = "pareto:0.7,1";
  std::vector<double> lambdas{0.1};
  double eps = 0.2;
  std::vector<std::int64_t> n_window{8, 16, 24, 32};
  std::size_t replicas = 10'000;
  unsigned workers = 1;
  std::optional<double> tilt;
  std::size_t env_seeds = 16;
  FitMethod fit = FitMethod::kSlopeFit;
  std::int64_t step_cap = 0;
  std::uint64_t volume_cap = kDefaultBoxVolumeCap;
  std::string out;

  // scenario
  double M = 2.0;
  double eps0 = 0.05;
  double delta = 0.01;
  std::optional<double> delta1;
  std::optional<double> L;

  // certify / perc
  std::string mode = "auto";
  std::optional<std::int32_t> region;
  int N = 20;
  std::optional<int> j_max;
  std::optional<double> p_open;
  bool ascii = false;

  // events
  std::vector<std::string> events{"A_hL_M", "TildeA"};
  std::string chi = "literal";

  // qd / oracle
  std::string qd_method = "quadrature";
  std::string cache;
  int t_cap = 16;
  std::int32_t box = 12;

  PotentialDistribution law() const { return PotentialDistribution::parse(mu); }
  ScenarioParams scenario(double scale) const;
};

/// Overwrites the fields present in j. Unknown keys and wrong types throw
/// ConfigError naming the key.
void apply_json(ExperimentConfig& cfg, const nlohmann::json& j);

ExperimentConfig load_config(const std::filesystem::path& path);

/// Checks every field against the module preconditions; throws ConfigError
/// naming the first offending field.
void validate(const ExperimentConfig& cfg);

/// The effective configuration, stable key order.
nlohmann::ordered_json to_json(const ExperimentConfig& cfg);

}  // namespace rwlab::app

#pragma once

#include <json.hpp>

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "looplab/lattice.hpp"

namespace looplab {

// Bad or inconsistent experiment configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class LambdaRule { nu_squared, one, explicit_value };

struct ExperimentConfig {
  std::string experiment;
  int d = 1;
  std::vector<int> L{3};
  PotentialSpec potential;
  std::string potential_source = "inline";
  std::vector<double> nu;
  double kappa = 1.0;
  double kappa0 = 1.0;
  LambdaRule lambda_rule = LambdaRule::explicit_value;
  double lambda = 0.0;
  int p = 1;
  std::size_t samples = 100000;
  std::vector<double> eps;        // symanzik-z
  std::vector<double> times;      // heatkernel
  int n_max = 3;                  // cluster-logz
  int L0 = 4;                     // volume
  double l1_threshold = 0.1;      // volume
  double sigmas = 3.0;
  double ratio_low = 1.6, ratio_high = 2.4;  // meanfield
  double oracle_budget = 1e5;     // |Λ|^{p+n} limit for the exact oracle
  nlohmann::json raw;

  // Relative potential paths are resolved against base_dir. Throws ConfigError.
  static ExperimentConfig from_json(const nlohmann::json& j, const std::string& base_dir = ".");
  double lambda_for(double nu) const;
};

struct RunOptions {
  std::uint64_t seed = 1;
  unsigned workers = 1;
};

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row);
  void write_csv(std::ostream& out) const;
};

std::string fmt(double x);
std::string fmt_sites(const std::vector<Site>& xs);

struct ExperimentResult {
  std::string name;
  Table table;
  nlohmann::json summary;
  bool pass = true;
  // Values compared by the determinism check.
  std::vector<double> fingerprint;
};

// Least-squares slope of log|diff| against log ν, with R².
struct OrderFit {
  double order = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};
OrderFit fit_order(const std::vector<double>& nus, const std::vector<double>& diffs);

ExperimentResult run_meanfield_sweep(const ExperimentConfig& cfg, const RunOptions& opt);
ExperimentResult run_largemass_sweep(const ExperimentConfig& cfg, const RunOptions& opt);
ExperimentResult run_volume_sweep(const ExperimentConfig& cfg, const RunOptions& opt);
ExperimentResult run_heatkernel(const ExperimentConfig& cfg, const RunOptions& opt);
ExperimentResult run_cluster_logz(const ExperimentConfig& cfg, const RunOptions& opt);
ExperimentResult run_ginibre_z(const ExperimentConfig& cfg, const RunOptions& opt);
ExperimentResult run_symanzik_z(const ExperimentConfig& cfg, const RunOptions& opt);

// Dispatch on cfg.experiment.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opt);

// Writes <dir>/<name>.csv and <dir>/<name>.json.
void write_result(const ExperimentResult& r, const std::string& dir);

}  // namespace looplab

// SPDX-License-Identifier: Apache-2.0
#ifndef MKTDIFF_RUN_CONFIG_HPP
#define MKTDIFF_RUN_CONFIG_HPP

/**
 * @file run_config.hpp
 * @brief JSON run configuration shared by the CLI workflows.
 *
 * Unknown keys anywhere in the config are hard errors; there are no silent
 * defaults for misspelled settings.  Command-line flags may override only
 * seeds and paths (plus the worker-thread cap).
 */

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "mktdiff/dsde.hpp"
#include "mktdiff/dsm_objective.hpp"
#include "mktdiff/sampler.hpp"
#include "mktdiff/trainer.hpp"

namespace mktdiff {

/// A malformed or inconsistent configuration.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ValidationConfig {
  int permutations = 1000;  // B
  int bins = 50;
  int qq_levels = 99;       // L
  std::uint64_t seed = 0;
};

struct DataConfig {
  std::string prices_csv;   // either prices_csv or returns_csv
  std::string returns_csv;
  long window_start = 0;
  long window_length = -1;  // -1: use everything from window_start
  bool log_returns = false;
};

struct RunConfig {
  DsdeKind dsde_kind = DsdeKind::vp;
  double dsde_a = 0.0;
  std::vector<double> dsde_b = {0.1};  // broadcast to d when singleton

  ObjectiveConfig objective;
  TrainConfig train;
  PathConfig path;
  ValidationConfig validation;
  DataConfig data;

  std::string output_dir = "out";
  long scenarios_m = 1024;
  int threads = 1;
};

/// Parse and fully validate a config file.  Throws ConfigError.
RunConfig load_run_config(const std::string& path);
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json run_config_to_json(const RunConfig& cfg);

/// Resolve the DSDE for a d-dimensional dataset (broadcasts a scalar b).
DsdeSpec bind_dsde(const RunConfig& cfg, int d);

/// Load the dataset named by the config (prices or precomputed returns) and
/// apply the window.  Throws DataError.
ReturnsDataset load_training_data(const RunConfig& cfg);

/// One line per config key, printed by `--help`.
std::string config_schema_help();

}  // namespace mktdiff

#endif  // MKTDIFF_RUN_CONFIG_HPP

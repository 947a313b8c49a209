// SPDX-License-Identifier: Apache-2.0
//
// mktdiff: train a diffusion model on asset returns, generate synthetic
// market scenarios, and validate them against historical data.
//
// Exit codes: 0 success, 1 configuration error, 2 data error,
//             3 numeric failure (non-finite loss).

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "mktdiff/data_ingest.hpp"
#include "mktdiff/run_config.hpp"
#include "mktdiff/sampler.hpp"
#include "mktdiff/score_net.hpp"
#include "mktdiff/stats_validate.hpp"
#include "mktdiff/trainer.hpp"

namespace fs = std::filesystem;
using namespace mktdiff;

namespace {

struct CommonOverrides {
  std::optional<std::string> data_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

void apply_overrides(RunConfig& cfg, const CommonOverrides& ov) {
  if (ov.data_path) {
    cfg.data.returns_csv.clear();
    cfg.data.prices_csv.clear();
    if (ov.data_path->ends_with(".returns.csv") ||
        ov.data_path->find("returns") != std::string::npos)
      cfg.data.returns_csv = *ov.data_path;
    else
      cfg.data.prices_csv = *ov.data_path;
  }
  if (ov.out_dir) cfg.output_dir = *ov.out_dir;
  if (ov.seed) {
    cfg.train.seed = *ov.seed;
    cfg.path.seed = *ov.seed + 1;
    cfg.validation.seed = *ov.seed + 2;
  }
  if (ov.threads) {
    cfg.threads = *ov.threads;
    if (cfg.threads < 1) throw ConfigError("--threads must be >= 1");
  }
  cfg.objective.threads = cfg.threads;
}

int run_train(const std::string& config_path, const CommonOverrides& ov) {
  RunConfig cfg = load_run_config(config_path);
  apply_overrides(cfg, ov);

  const ReturnsDataset ds = load_training_data(cfg);
  const DsdeSpec spec = bind_dsde(cfg, ds.d());
  fs::create_directories(cfg.output_dir);

  const nlohmann::json cfg_echo = run_config_to_json(cfg);
  const auto ckpt_path = [&](int epoch) {
    char name[64];
    std::snprintf(name, sizeof name, "checkpoint_epoch%06d.json", epoch);
    return (fs::path(cfg.output_dir) / name).string();
  };

  CheckpointHook hook = [&](int epoch, const ScoreParams& params,
                            const std::vector<double>& history) {
    save_checkpoint(ckpt_path(epoch), params, spec, cfg_echo);
    write_loss_csv((fs::path(cfg.output_dir) / "loss_history.csv").string(),
                   history);
  };

  const TrainResult result = train(ds, spec, cfg.objective, cfg.train, hook);
  const std::string final_path =
      (fs::path(cfg.output_dir) / "checkpoint.json").string();
  save_checkpoint(final_path, result.params, spec, cfg_echo);
  write_loss_csv((fs::path(cfg.output_dir) / "loss_history.csv").string(),
                 result.loss_history);
  std::cout << "trained " << cfg.train.epochs << " epochs on n=" << ds.n()
            << " d=" << ds.d() << "; final loss "
            << result.loss_history.back() << "\n"
            << "checkpoint: " << final_path << "\n";
  return 0;
}

int run_generate(const std::string& config_path,
                 const std::string& checkpoint_path, std::optional<long> m_arg,
                 const CommonOverrides& ov) {
  RunConfig cfg = load_run_config(config_path);
  apply_overrides(cfg, ov);
  if (m_arg) cfg.scenarios_m = *m_arg;

  const ReturnsDataset ds = load_training_data(cfg);
  const Checkpoint ck = load_checkpoint(checkpoint_path);
  if (ck.params.d != ds.d())
    throw DataError("checkpoint dimension (" + std::to_string(ck.params.d) +
                    ") does not match data (" + std::to_string(ds.d()) + ")");

  fs::create_directories(cfg.output_dir);
  const ScenarioSet set =
      generate_scenarios(ds, ck.spec, ck.params,
                         static_cast<int>(cfg.scenarios_m), cfg.path,
                         cfg.threads);
  const std::string csv_path =
      (fs::path(cfg.output_dir) / "scenarios.csv").string();
  write_scenarios_csv(csv_path, set);
  write_scenarios_meta(
      (fs::path(cfg.output_dir) / "scenarios_meta.json").string(), set);
  std::cout << "generated m=" << set.m() << " scenarios (d=" << set.d()
            << ") -> " << csv_path << "\n";
  return 0;
}

int run_validate(const std::string& hist_path, const std::string& synth_path,
                 int B, int bins, int qq_levels, std::uint64_t seed,
                 const std::string& out_dir) {
  const ReturnsDataset hist = read_returns_csv(hist_path);
  const ScenarioSet synth = read_scenarios_csv(synth_path);
  if (synth.d() != hist.d())
    throw DataError("column mismatch: historical has " +
                    std::to_string(hist.d()) + ", synthetic has " +
                    std::to_string(synth.d()));

  fs::create_directories(out_dir);
  const ValidationReport report =
      build_report(hist, synth, {}, B, seed, bins, qq_levels);
  write_report_json((fs::path(out_dir) / "report.json").string(), report);
  write_qq_csv((fs::path(out_dir) / "qq.csv").string(), report);
  write_histogram_csv((fs::path(out_dir) / "histogram.csv").string(), report);
  std::cout << "T_CvM = " << report.t_cvm << ", p_CvM = " << report.p_cvm
            << ", kappa_hist = " << report.kappa_hist
            << ", kappa_synth = " << report.kappa_synth << "\n"
            << "report: " << (fs::path(out_dir) / "report.json").string()
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic market scenario generation with denoising SDEs"};
  app.require_subcommand(1);
  app.footer(config_schema_help());

  CommonOverrides ov;
  std::string config_path, checkpoint_path, hist_path, synth_path;
  std::optional<long> m_arg;
  int B = 1000, bins = 50, qq_levels = 99;
  std::uint64_t vseed = 0;
  std::string vout = "out";

  CLI::App* tr = app.add_subcommand("train", "Train the score network");
  tr->add_option("--config", config_path, "JSON run config")->required();
  tr->add_option("--data", ov.data_path,
                 "Override input CSV (prices, or returns if the name contains "
                 "'returns')");
  tr->add_option("--out", ov.out_dir, "Override output directory");
  tr->add_option("--seed", ov.seed, "Override all seeds");
  tr->add_option("--threads", ov.threads, "Worker thread cap");

  CLI::App* ge = app.add_subcommand("generate", "Generate synthetic scenarios");
  ge->add_option("--config", config_path, "JSON run config")->required();
  ge->add_option("--checkpoint", checkpoint_path, "Trained checkpoint JSON")
      ->required();
  ge->add_option("--m", m_arg, "Scenario count (default: scenarios.m)");
  ge->add_option("--data", ov.data_path, "Override input CSV");
  ge->add_option("--out", ov.out_dir, "Override output directory");
  ge->add_option("--seed", ov.seed, "Override all seeds");
  ge->add_option("--threads", ov.threads, "Worker thread cap");

  CLI::App* va = app.add_subcommand("validate",
                                    "Compare historical vs synthetic returns");
  va->add_option("--hist", hist_path, "Historical returns CSV")->required();
  va->add_option("--synth", synth_path, "Synthetic scenarios CSV")->required();
  va->add_option("--out", vout, "Output directory");
  va->add_option("--permutations", B, "CvM permutation count (>= 99)");
  va->add_option("--bins", bins, "Histogram bins");
  va->add_option("--qq-levels", qq_levels, "Q-Q quantile levels");
  va->add_option("--seed", vseed, "Permutation seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (tr->parsed()) return run_train(config_path, ov);
    if (ge->parsed()) return run_generate(config_path, checkpoint_path, m_arg, ov);
    if (va->parsed())
      return run_validate(hist_path, synth_path, B, bins, qq_levels, vseed,
                          vout);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

// SPDX-License-Identifier: Apache-2.0
#include "mktdiff/run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace mktdiff {

namespace {

void require_keys(const nlohmann::json& j, const std::string& where,
                  const std::set<std::string>& allowed) {
  if (!j.is_object())
    throw ConfigError("config section '" + where + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!allowed.contains(key))
      throw ConfigError("unknown config key '" + where + "." + key + "'");
  }
}

ResidualMode residual_mode_from_string(const std::string& s) {
  if (s == "consistent") return ResidualMode::consistent;
  if (s == "paper_literal_ve") return ResidualMode::paper_literal_ve;
  throw ConfigError("unknown residual_mode: '" + s + "'");
}

std::string residual_mode_to_string(ResidualMode m) {
  return m == ResidualMode::consistent ? "consistent" : "paper_literal_ve";
}

template <class T>
void maybe(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RunConfig run_config_from_json(const nlohmann::json& j) {
  require_keys(j, "<root>",
               {"dsde", "objective", "train", "path", "validation", "data",
                "output_dir", "scenarios", "threads"});
  RunConfig cfg;

  if (j.contains("dsde")) {
    const auto& d = j.at("dsde");
    require_keys(d, "dsde", {"kind", "a", "b"});
    if (d.contains("kind"))
      cfg.dsde_kind = dsde_kind_from_string(d.at("kind").get<std::string>());
    maybe(d, "a", cfg.dsde_a);
    if (d.contains("b")) {
      if (d.at("b").is_number())
        cfg.dsde_b = {d.at("b").get<double>()};
      else
        cfg.dsde_b = d.at("b").get<std::vector<double>>();
    }
  }

  if (j.contains("objective")) {
    const auto& o = j.at("objective");
    require_keys(o, "objective",
                 {"lambda0", "gh_order", "simpson_subintervals",
                  "residual_mode"});
    maybe(o, "lambda0", cfg.objective.lambda0);
    maybe(o, "gh_order", cfg.objective.gh_order);
    maybe(o, "simpson_subintervals", cfg.objective.simpson_subintervals);
    if (o.contains("residual_mode"))
      cfg.objective.residual_mode =
          residual_mode_from_string(o.at("residual_mode").get<std::string>());
  }

  if (j.contains("train")) {
    const auto& t = j.at("train");
    require_keys(t, "train",
                 {"epochs", "batch_size", "learning_rate", "adam_beta1",
                  "adam_beta2", "adam_eps", "seed", "shuffle", "hidden",
                  "checkpoint_every"});
    maybe(t, "epochs", cfg.train.epochs);
    maybe(t, "batch_size", cfg.train.batch_size);
    maybe(t, "learning_rate", cfg.train.learning_rate);
    maybe(t, "adam_beta1", cfg.train.adam_beta1);
    maybe(t, "adam_beta2", cfg.train.adam_beta2);
    maybe(t, "adam_eps", cfg.train.adam_eps);
    maybe(t, "seed", cfg.train.seed);
    maybe(t, "shuffle", cfg.train.shuffle);
    maybe(t, "hidden", cfg.train.hidden);
    maybe(t, "checkpoint_every", cfg.train.checkpoint_every);
  }

  if (j.contains("path")) {
    const auto& p = j.at("path");
    require_keys(p, "path", {"steps", "forward_scheme", "seed"});
    maybe(p, "steps", cfg.path.steps);
    if (p.contains("forward_scheme"))
      cfg.path.scheme =
          forward_scheme_from_string(p.at("forward_scheme").get<std::string>());
    maybe(p, "seed", cfg.path.seed);
  }

  if (j.contains("validation")) {
    const auto& v = j.at("validation");
    require_keys(v, "validation", {"permutations", "bins", "qq_levels", "seed"});
    maybe(v, "permutations", cfg.validation.permutations);
    maybe(v, "bins", cfg.validation.bins);
    maybe(v, "qq_levels", cfg.validation.qq_levels);
    maybe(v, "seed", cfg.validation.seed);
  }

  if (j.contains("data")) {
    const auto& d = j.at("data");
    require_keys(d, "data",
                 {"prices_csv", "returns_csv", "window_start", "window_length",
                  "log_returns"});
    maybe(d, "prices_csv", cfg.data.prices_csv);
    maybe(d, "returns_csv", cfg.data.returns_csv);
    maybe(d, "window_start", cfg.data.window_start);
    maybe(d, "window_length", cfg.data.window_length);
    maybe(d, "log_returns", cfg.data.log_returns);
  }

  maybe(j, "output_dir", cfg.output_dir);
  if (j.contains("scenarios")) {
    const auto& s = j.at("scenarios");
    require_keys(s, "scenarios", {"m"});
    maybe(s, "m", cfg.scenarios_m);
  }
  maybe(j, "threads", cfg.threads);

  // structural validation that does not need the data dimension
  if (cfg.dsde_b.empty()) throw ConfigError("dsde.b must not be empty");
  try {
    DsdeSpec probe{cfg.dsde_kind, cfg.dsde_a, cfg.dsde_b};
    probe.validate();
    cfg.objective.validate();
    cfg.path.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (cfg.threads < 1) throw ConfigError("threads must be >= 1");
  if (cfg.scenarios_m < 0) throw ConfigError("scenarios.m must be >= 0");
  if (cfg.validation.permutations < 99)
    throw ConfigError("validation.permutations must be >= 99");
  if (cfg.validation.bins < 1) throw ConfigError("validation.bins must be >= 1");
  if (cfg.validation.qq_levels < 1)
    throw ConfigError("validation.qq_levels must be >= 1");
  if (cfg.data.window_start < 0)
    throw ConfigError("data.window_start must be >= 0");
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed JSON in " + path + ": " + e.what());
  }
  try {
    return run_config_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("invalid config " + path + ": " + e.what());
  }
}

nlohmann::json run_config_to_json(const RunConfig& cfg) {
  return nlohmann::json{
      {"dsde",
       {{"kind", to_string(cfg.dsde_kind)}, {"a", cfg.dsde_a}, {"b", cfg.dsde_b}}},
      {"objective",
       {{"lambda0", cfg.objective.lambda0},
        {"gh_order", cfg.objective.gh_order},
        {"simpson_subintervals", cfg.objective.simpson_subintervals},
        {"residual_mode", residual_mode_to_string(cfg.objective.residual_mode)}}},
      {"train",
       {{"epochs", cfg.train.epochs},
        {"batch_size", cfg.train.batch_size},
        {"learning_rate", cfg.train.learning_rate},
        {"adam_beta1", cfg.train.adam_beta1},
        {"adam_beta2", cfg.train.adam_beta2},
        {"adam_eps", cfg.train.adam_eps},
        {"seed", cfg.train.seed},
        {"shuffle", cfg.train.shuffle},
        {"hidden", cfg.train.hidden},
        {"checkpoint_every", cfg.train.checkpoint_every}}},
      {"path",
       {{"steps", cfg.path.steps},
        {"forward_scheme", to_string(cfg.path.scheme)},
        {"seed", cfg.path.seed}}},
      {"validation",
       {{"permutations", cfg.validation.permutations},
        {"bins", cfg.validation.bins},
        {"qq_levels", cfg.validation.qq_levels},
        {"seed", cfg.validation.seed}}},
      {"data",
       {{"prices_csv", cfg.data.prices_csv},
        {"returns_csv", cfg.data.returns_csv},
        {"window_start", cfg.data.window_start},
        {"window_length", cfg.data.window_length},
        {"log_returns", cfg.data.log_returns}}},
      {"output_dir", cfg.output_dir},
      {"scenarios", {{"m", cfg.scenarios_m}}},
      {"threads", cfg.threads}};
}

DsdeSpec bind_dsde(const RunConfig& cfg, int d) {
  std::vector<double> b = cfg.dsde_b;
  if (static_cast<int>(b.size()) == 1 && d > 1) b.assign(d, b[0]);
  if (static_cast<int>(b.size()) != d)
    throw ConfigError("dsde.b has " + std::to_string(b.size()) +
                      " entries but the data has " + std::to_string(d) +
                      " assets");
  return DsdeSpec::make(cfg.dsde_kind, cfg.dsde_a, std::move(b));
}

ReturnsDataset load_training_data(const RunConfig& cfg) {
  if (cfg.data.prices_csv.empty() == cfg.data.returns_csv.empty())
    throw ConfigError(
        "exactly one of data.prices_csv and data.returns_csv must be set");
  ReturnsDataset ds;
  if (!cfg.data.prices_csv.empty())
    ds = to_returns(load_prices(cfg.data.prices_csv), cfg.data.log_returns);
  else
    ds = read_returns_csv(cfg.data.returns_csv);

  const long start = cfg.data.window_start;
  const long length =
      cfg.data.window_length < 0 ? ds.n() - start : cfg.data.window_length;
  if (start != 0 || length != ds.n()) {
    if (start < 0 || length < 0 || start + length > ds.n())
      throw DataError("window [" + std::to_string(start) + ", " +
                      std::to_string(start + length) +
                      ") outside dataset of n = " + std::to_string(ds.n()));
    ds = select_window(ds, static_cast<int>(start), static_cast<int>(length));
  }
  return ds;
}

std::string config_schema_help() {
  std::ostringstream os;
  os << "Config file keys (JSON):\n"
     << "  dsde.kind                     vp | sub_vp | ve (default vp)\n"
     << "  dsde.a                        rate exponent; >= 0 for vp/sub_vp, > 1 for ve\n"
     << "  dsde.b                        per-asset scale; number or array (broadcast)\n"
     << "  objective.lambda0             constant weight lambda_0(t) (default 1)\n"
     << "  objective.gh_order            Gauss-Hermite order D (default 4)\n"
     << "  objective.simpson_subintervals  even Simpson subinterval count S (default 8)\n"
     << "  objective.residual_mode       consistent | paper_literal_ve\n"
     << "  train.epochs                  epoch budget (default 0)\n"
     << "  train.batch_size              mini-batch size (default 32)\n"
     << "  train.learning_rate           Adam step size (default 1e-3)\n"
     << "  train.adam_beta1              first-moment decay (default 0.9)\n"
     << "  train.adam_beta2              second-moment decay (default 0.999)\n"
     << "  train.adam_eps                Adam epsilon (default 1e-8)\n"
     << "  train.seed                    init/shuffle seed\n"
     << "  train.shuffle                 shuffle each epoch (default true)\n"
     << "  train.hidden                  hidden units h (default 16)\n"
     << "  train.checkpoint_every        checkpoint cadence in epochs (default 100)\n"
     << "  path.steps                    Euler-Maruyama steps K (default 256)\n"
     << "  path.forward_scheme           euler_maruyama | exact_transition\n"
     << "  path.seed                     scenario-generation seed\n"
     << "  validation.permutations       CvM permutation count B (default 1000)\n"
     << "  validation.bins               histogram bins (default 50)\n"
     << "  validation.qq_levels          Q-Q quantile levels L (default 99)\n"
     << "  validation.seed               permutation seed\n"
     << "  data.prices_csv               price CSV (date,<tickers...>)\n"
     << "  data.returns_csv              precomputed returns CSV\n"
     << "  data.window_start             first row of the training window\n"
     << "  data.window_length            window length (-1 = to the end)\n"
     << "  data.log_returns              use log returns (default false)\n"
     << "  output_dir                    output directory\n"
     << "  scenarios.m                   synthetic scenario count (default 1024)\n"
     << "  threads                       worker thread cap (default 1)\n"
     << "Unknown keys are rejected.\n";
  return os.str();
}

}  // namespace mktdiff

// SPDX-License-Identifier: Apache-2.0
#include "mktdiff/sampler.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "parallel.hpp"

namespace mktdiff {

std::string to_string(ForwardScheme s) {
  return s == ForwardScheme::euler_maruyama ? "euler_maruyama"
                                            : "exact_transition";
}

ForwardScheme forward_scheme_from_string(const std::string& s) {
  if (s == "euler_maruyama") return ForwardScheme::euler_maruyama;
  if (s == "exact_transition") return ForwardScheme::exact_transition;
  throw std::invalid_argument("unknown forward scheme: '" + s + "'");
}

void PathConfig::validate() const {
  if (steps < 2) throw std::invalid_argument("PathConfig: steps must be >= 2");
}

std::vector<std::vector<double>> forward_path_states(
    const DsdeSpec& spec, std::span<const double> x_init,
    const PathConfig& cfg, NoiseSource& noise) {
  cfg.validate();
  const int d = spec.dim();
  if (static_cast<int>(x_init.size()) != d)
    throw std::invalid_argument("forward_path: x_init has wrong dimension");
  const int K = cfg.steps;
  const double delta = 1.0 / K;
  const double sqrt_delta = std::sqrt(delta);

  std::vector<std::vector<double>> states;
  states.reserve(K + 1);
  states.emplace_back(x_init.begin(), x_init.end());
  std::vector<double> z(d);
  for (int j = 0; j < K; ++j) {
    const double t = static_cast<double>(j) / K;  // left endpoint, <= 1-delta
    const DriftDiffusion dd = drift_diffusion(spec, t, states.back());
    noise.normals(z);
    std::vector<double> next(d);
    for (int k = 0; k < d; ++k)
      next[k] = states.back()[k] + dd.drift[k] * delta +
                dd.sigma[k] * sqrt_delta * z[k];
    states.push_back(std::move(next));
  }
  return states;
}

std::vector<double> forward_path(const DsdeSpec& spec,
                                 std::span<const double> x_init,
                                 const PathConfig& cfg, NoiseSource& noise) {
  cfg.validate();
  if (cfg.scheme == ForwardScheme::exact_transition) {
    const GaussMoments m = transition_moments(spec, 0.0, 1.0, x_init);
    std::vector<double> z(spec.dim());
    noise.normals(z);
    std::vector<double> out(spec.dim());
    for (int k = 0; k < spec.dim(); ++k)
      out[k] = m.mean[k] + std::sqrt(m.var[k]) * z[k];
    return out;
  }
  return forward_path_states(spec, x_init, cfg, noise).back();
}

std::vector<double> reverse_path(const DsdeSpec& spec, const ScoreFn& score,
                                 std::span<const double> x_term,
                                 const PathConfig& cfg, NoiseSource& noise) {
  cfg.validate();
  const int d = spec.dim();
  if (static_cast<int>(x_term.size()) != d)
    throw std::invalid_argument("reverse_path: x_term has wrong dimension");
  const int K = cfg.steps;
  const double delta = 1.0 / K;
  const double sqrt_delta = std::sqrt(delta);

  std::vector<double> x(x_term.begin(), x_term.end());
  std::vector<double> z(d);
  for (int j = K; j >= 1; --j) {
    const double t_star = static_cast<double>(j - 1) / K;  // avoids beta(1)
    const DriftDiffusion dd = drift_diffusion(spec, t_star, x);
    const std::vector<double> s = score(t_star, x);
    if (static_cast<int>(s.size()) != d)
      throw std::invalid_argument("reverse_path: score has wrong dimension");
    noise.normals(z);
    for (int k = 0; k < d; ++k) {
      const double drift_rev = dd.drift[k] - dd.sigma[k] * dd.sigma[k] * s[k];
      x[k] = x[k] - drift_rev * delta + dd.sigma[k] * sqrt_delta * z[k];
    }
  }
  return x;
}

ScoreFn make_ncsn_score(const ScoreParams& theta, const DsdeSpec& spec,
                        double t_min) {
  return [theta, spec, t_min](double t, std::span<const double> x) {
    return score_eval(theta, spec, std::max(t, t_min), x);
  };
}

std::vector<double> reverse_path(const DsdeSpec& spec, const ScoreParams& theta,
                                 std::span<const double> x_term,
                                 const PathConfig& cfg, NoiseSource& noise) {
  const double t_min = 1.0 / cfg.steps;
  return reverse_path(spec, make_ncsn_score(theta, spec, t_min), x_term, cfg,
                      noise);
}

namespace {

std::vector<double> one_scenario(const ReturnsDataset& ds, const DsdeSpec& spec,
                                 const ScoreParams& theta, int k,
                                 const PathConfig& cfg, int* index_out) {
  const std::uint64_t base = 3ull * static_cast<std::uint64_t>(k);
  rng::Stream pick(cfg.seed, base);
  const int idx = static_cast<int>(pick.next_below(ds.n()));
  if (index_out) *index_out = idx;

  StreamNoise fwd_noise{rng::Stream(cfg.seed, base + 1)};
  const std::vector<double> terminal =
      forward_path(spec, ds.row(idx), cfg, fwd_noise);

  StreamNoise rev_noise{rng::Stream(cfg.seed, base + 2)};
  return reverse_path(spec, theta, terminal, cfg, rev_noise);
}

}  // namespace

ScenarioSet generate_scenarios(const ReturnsDataset& ds, const DsdeSpec& spec,
                               const ScoreParams& theta, int m,
                               const PathConfig& cfg, int threads) {
  cfg.validate();
  if (m < 0) throw std::invalid_argument("generate_scenarios: m < 0");
  if (theta.d != ds.d() || theta.d != spec.dim())
    throw std::invalid_argument("generate_scenarios: dimension mismatch");

  ScenarioSet set;
  set.tickers = ds.tickers;
  set.seed = cfg.seed;
  set.steps = cfg.steps;
  set.scheme = cfg.scheme;
  set.checkpoint_id = params_id(theta);
  set.samples.assign(static_cast<std::size_t>(m) * ds.d(), 0.0);
  set.source_indices.assign(m, 0);

  detail::run_chunked(m, threads, [&](int, int begin, int end) {
    for (int k = begin; k < end; ++k) {
      int idx = 0;
      const std::vector<double> x0 = one_scenario(ds, spec, theta, k, cfg, &idx);
      set.source_indices[k] = idx;
      std::copy(x0.begin(), x0.end(),
                set.samples.begin() + static_cast<std::size_t>(k) * ds.d());
    }
  });
  return set;
}

std::vector<double> regenerate_scenario(const ReturnsDataset& ds,
                                        const DsdeSpec& spec,
                                        const ScoreParams& theta, int k,
                                        const PathConfig& cfg) {
  return one_scenario(ds, spec, theta, k, cfg, nullptr);
}

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += "\"\"";
    else out.push_back(ch);
  }
  out += '"';
  return out;
}

}  // namespace

void write_scenarios_csv(const std::string& path, const ScenarioSet& set) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open scenario file: " + path);
  out.precision(17);
  for (int k = 0; k < set.d(); ++k) {
    if (k) out << ',';
    out << csv_escape(set.tickers[k]);
  }
  out << '\n';
  for (int i = 0; i < set.m(); ++i) {
    const auto row = set.row(i);
    for (int k = 0; k < set.d(); ++k) {
      if (k) out << ',';
      out << row[k];
    }
    out << '\n';
  }
}

void write_scenarios_meta(const std::string& path, const ScenarioSet& set) {
  nlohmann::json j{{"seed", set.seed},
                   {"m", set.m()},
                   {"steps", set.steps},
                   {"forward_scheme", to_string(set.scheme)},
                   {"checkpoint_id", set.checkpoint_id},
                   {"source_indices", set.source_indices}};
  std::ofstream out(path);
  if (!out) throw DataError("cannot open meta file: " + path);
  out << j.dump(2) << '\n';
}

ScenarioSet read_scenarios_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open scenario file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty scenario file: " + path);
  std::vector<std::string> header = parse_csv_record(line);
  const bool has_date = !header.empty() && header[0] == "date";

  ScenarioSet set;
  set.tickers.assign(header.begin() + (has_date ? 1 : 0), header.end());
  const std::size_t d = set.tickers.size();
  if (d == 0) throw DataError("scenario file has no columns: " + path);

  int row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty()) continue;
    std::vector<std::string> f = parse_csv_record(line);
    if (f.size() != d + (has_date ? 1 : 0))
      throw DataError("row " + std::to_string(row_no) +
                      " has wrong field count in " + path);
    for (std::size_t k = 0; k < d; ++k) {
      const std::string& field = f[k + (has_date ? 1 : 0)];
      try {
        set.samples.push_back(std::stod(field));
      } catch (const std::exception&) {
        throw DataError("non-numeric cell '" + field + "' at row " +
                        std::to_string(row_no) + " in " + path);
      }
    }
    set.source_indices.push_back(-1);  // unknown provenance
  }
  return set;
}

}  // namespace mktdiff

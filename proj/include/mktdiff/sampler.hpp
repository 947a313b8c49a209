// SPDX-License-Identifier: Apache-2.0
#ifndef MKTDIFF_SAMPLER_HPP
#define MKTDIFF_SAMPLER_HPP

/**
 * @file sampler.hpp
 * @brief Euler-Maruyama encoding (forward SDE) and decoding (reverse-time SDE
 *        with a score function), plus scenario-set generation.
 *
 * Forward step, coefficients at the left endpoint t_j = j/K (so beta is never
 * evaluated at the t = 1 singularity):
 *
 *   X_{t_{j+1}} = X_{t_j} + alpha(t_j, X_{t_j}) delta + sigma(t_j) dW_j.
 *
 * Reverse step over [t_{j-1}, t_j], coefficients at t* = t_{j-1}, fresh
 * Brownian increments (the forward noise is never reused):
 *
 *   X_{t_{j-1}} = X_{t_j} - (alpha(t*, X_{t_j})
 *                            - sigma(t*)^2 s(t*, X_{t_j})) delta
 *                 + sigma(t*) dWbar_j.
 *
 * The fitted score K(x)/C(t) is singular at t = 0 (C(0) = 0), so the
 * ScoreParams adapter evaluates it at max(t, 1/K); an externally supplied
 * score function receives the raw t* values.
 *
 * Scenario k draws its index, forward noise, and reverse noise from streams
 * (seed, 3k), (seed, 3k+1), (seed, 3k+2), so any single scenario can be
 * regenerated in isolation.
 */

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mktdiff/data_ingest.hpp"
#include "mktdiff/dsde.hpp"
#include "mktdiff/rng.hpp"
#include "mktdiff/score_net.hpp"

namespace mktdiff {

enum class ForwardScheme { euler_maruyama, exact_transition };

std::string to_string(ForwardScheme s);
ForwardScheme forward_scheme_from_string(const std::string& s);

struct PathConfig {
  int steps = 256;  // K; delta = 1/K
  ForwardScheme scheme = ForwardScheme::euler_maruyama;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Source of N(0,1) increments; swap in ZeroNoise for drift-only paths.
struct NoiseSource {
  virtual ~NoiseSource() = default;
  virtual void normals(std::span<double> out) = 0;
};

class StreamNoise final : public NoiseSource {
 public:
  explicit StreamNoise(rng::Stream stream) : stream_(stream) {}
  void normals(std::span<double> out) override { stream_.fill_gaussian(out); }

 private:
  rng::Stream stream_;
};

struct ZeroNoise final : NoiseSource {
  void normals(std::span<double> out) override {
    for (double& v : out) v = 0.0;
  }
};

using ScoreFn =
    std::function<std::vector<double>(double t, std::span<const double> x)>;

/// Encode: run the forward SDE from x_init to t = 1, returning the terminal
/// value (exact_transition draws it from the closed-form kernel instead).
std::vector<double> forward_path(const DsdeSpec& spec,
                                 std::span<const double> x_init,
                                 const PathConfig& cfg, NoiseSource& noise);

/// All K+1 states of the Euler-Maruyama forward path (for diagnostics).
std::vector<std::vector<double>> forward_path_states(
    const DsdeSpec& spec, std::span<const double> x_init,
    const PathConfig& cfg, NoiseSource& noise);

/// Decode: run the reverse-time SDE from x_term at t = 1 down to t = 0.
std::vector<double> reverse_path(const DsdeSpec& spec, const ScoreFn& score,
                                 std::span<const double> x_term,
                                 const PathConfig& cfg, NoiseSource& noise);
std::vector<double> reverse_path(const DsdeSpec& spec, const ScoreParams& theta,
                                 std::span<const double> x_term,
                                 const PathConfig& cfg, NoiseSource& noise);

/// Wraps a trained network as a ScoreFn, clamping t to >= t_min.
ScoreFn make_ncsn_score(const ScoreParams& theta, const DsdeSpec& spec,
                        double t_min);

/// m synthetic scenarios with full provenance.
struct ScenarioSet {
  std::vector<std::string> tickers;  // d labels (copied from training data)
  std::vector<double> samples;       // m x d row-major
  std::vector<int> source_indices;   // m, drawn uniformly from [0, n)
  std::uint64_t seed = 0;
  int steps = 0;
  ForwardScheme scheme = ForwardScheme::euler_maruyama;
  std::string checkpoint_id;

  int m() const { return static_cast<int>(source_indices.size()); }
  int d() const { return static_cast<int>(tickers.size()); }
  std::span<const double> row(int k) const {
    return {samples.data() + static_cast<std::size_t>(k) * tickers.size(),
            tickers.size()};
  }
};

/// Steps A-C of scenario generation: pick i_k, encode x_{i_k}, decode with an
/// independent noise stream, collect the t = 0 value.
ScenarioSet generate_scenarios(const ReturnsDataset& ds, const DsdeSpec& spec,
                               const ScoreParams& theta, int m,
                               const PathConfig& cfg, int threads = 1);

/// Regenerates scenario row k alone (bitwise equal to row k of the full run).
std::vector<double> regenerate_scenario(const ReturnsDataset& ds,
                                        const DsdeSpec& spec,
                                        const ScoreParams& theta, int k,
                                        const PathConfig& cfg);

void write_scenarios_csv(const std::string& path, const ScenarioSet& set);
void write_scenarios_meta(const std::string& path, const ScenarioSet& set);
/// Reads a scenario CSV (plain ticker header); also accepts a returns CSV
/// with a leading date column.
ScenarioSet read_scenarios_csv(const std::string& path);

}  // namespace mktdiff

#endif  // MKTDIFF_SAMPLER_HPP

// SPDX-License-Identifier: Apache-2.0
#include "mktdiff/dsm_objective.hpp"

#include <cmath>
#include <vector>

#include "doctest.h"
#include "mktdiff/quadrature.hpp"
#include "mktdiff/rng.hpp"

using namespace mktdiff;

namespace {

ReturnsDataset make_ds(int n, int d, std::uint64_t seed, double scale = 1.0) {
  ReturnsDataset ds;
  mktdiff::rng::Stream rnd(seed, 0);
  for (int k = 0; k < d; ++k) ds.tickers.push_back("A" + std::to_string(k));
  for (int i = 0; i < n; ++i) {
    ds.dates.push_back("d" + std::to_string(i));
    for (int k = 0; k < d; ++k)
      ds.returns.push_back(scale * rnd.next_gaussian());
  }
  return ds;
}

ScoreParams random_params(int d, int h, std::uint64_t seed) {
  ScoreParams p = init_params(d, h, seed);
  mktdiff::rng::Stream rnd(seed, 1);
  for (auto& v : p.b) v = 0.5 * rnd.next_gaussian();
  for (auto& v : p.d_out) v = 0.5 * rnd.next_gaussian();
  return p;
}

// flattened parameter access for finite differencing
std::vector<double*> flatten(ScoreParams& p) {
  std::vector<double*> out;
  for (auto& v : p.w) out.push_back(&v);
  for (auto& v : p.b) out.push_back(&v);
  for (auto& v : p.c) out.push_back(&v);
  for (auto& v : p.d_out) out.push_back(&v);
  return out;
}

}  // namespace

TEST_CASE("residual pinned values") {
  const DsdeSpec spec = DsdeSpec::make(DsdeKind::vp, 0.0, {0.1});
  const std::vector<double> x{2.0};
  CHECK(residual(spec, 0.0, x)[0] == 0.0);
  CHECK(residual(spec, 1.0, x)[0] == 2.0);  // mu -> 0 limit
  CHECK(residual(spec, 0.5, x)[0] ==
        doctest::Approx(2.0 - 1.9318726578496912).epsilon(1e-12));

  const DsdeSpec ve = DsdeSpec::make(DsdeKind::ve, 2.0, {0.5});
  CHECK(residual(ve, 0.3, x, ResidualMode::consistent)[0] == 0.0);
  CHECK(residual(ve, 0.3, x, ResidualMode::paper_literal_ve)[0] == 2.0);
}

TEST_CASE("objective closed-form cases") {
  const DsdeSpec spec = DsdeSpec::make(DsdeKind::vp, 0.0, {0.1, 0.1, 0.1});
  ReturnsDataset ds;
  ds.tickers = {"A", "B", "C"};
  ds.dates = {"d0"};
  ds.returns = {0.0, 0.0, 0.0};
  ObjectiveConfig cfg;

  CHECK(objective(ScoreParams::zeros(3, 2), ds, spec, cfg) == 0.0);

  ScoreParams bias_only = ScoreParams::zeros(3, 2);
  bias_only.d_out = {1.0, 1.0, 1.0};
  CHECK(objective(bias_only, ds, spec, cfg) ==
        doctest::Approx(1.5).epsilon(1e-14));  // d/2
}

TEST_CASE("objective matches the Monte Carlo oracle") {
  const int d = 5;
  const ReturnsDataset ds = make_ds(16, d, 21, 0.8);
  std::vector<double> b(d, 0.1);
  const DsdeSpec spec = DsdeSpec::make(DsdeKind::vp, 0.0, b);
  ObjectiveConfig cfg;
  cfg.gh_order = 8;
  for (std::uint64_t seed : {3u, 4u}) {
    const ScoreParams theta = random_params(d, 4, seed);
    const double quad = objective(theta, ds, spec, cfg);
    const McResult mc = mc_oracle(theta, ds, spec, cfg, 20000, seed * 11);
    CHECK(std::abs(quad - mc.value) <= 3.0 * mc.std_error);
  }
}

TEST_CASE("gradient is zero in w and b when c vanishes") {
  const ReturnsDataset ds = make_ds(4, 2, 5);
  const DsdeSpec spec = DsdeSpec::make(DsdeKind::vp, 0.0, {0.1, 0.2});
  ObjectiveConfig cfg;
  ScoreParams theta = init_params(2, 3, 9);
  for (auto& v : theta.c) v = 0.0;
  theta.d_out = {0.3, -0.2};
  const ScoreParams g = gradient(theta, ds, spec, cfg);
  for (double v : g.w) CHECK(v == 0.0);
  for (double v : g.b) CHECK(v == 0.0);
}

TEST_CASE("d_out gradient vanishes at the closed-form minimizer") {
  // with c = 0 the loss is quadratic in d_out with minimizer
  // d* = -mean_i sum_t sw_t r_i(t)
  const int d = 2, n = 6;
  const ReturnsDataset ds = make_ds(n, d, 77, 0.5);
  const DsdeSpec spec = DsdeSpec::make(DsdeKind::vp, 0.0, {0.1, 0.3});
  ObjectiveConfig cfg;

  const QuadRule rule = make_quad_rule(cfg.gh_order, cfg.simpson_subintervals);
  std::vector<double> dstar(d, 0.0);
  for (int i = 0; i < n; ++i)
    for (std::size_t node = 0; node < rule.simpson_nodes.size(); ++node) {
      const std::vector<double> r =
          residual(spec, rule.simpson_nodes[node], ds.row(i));
      for (int k = 0; k < d; ++k)
        dstar[k] -= rule.simpson_weights[node] * r[k] / n;
    }

  ScoreParams theta = ScoreParams::zeros(d, 3);
  theta.d_out = dstar;
  const ScoreParams g = gradient(theta, ds, spec, cfg);
  for (double v : g.d_out) CHECK(std::abs(v) < 1e-13);
}

TEST_CASE("gradient matches central finite differences") {
  const int d = 3, h = 4, n = 8;
  const ReturnsDataset ds = make_ds(n, d, 13, 0.6);
  std::vector<double> b{0.1, 0.2, 0.15};
  ObjectiveConfig cfg;
  for (DsdeKind kind : {DsdeKind::vp, DsdeKind::sub_vp}) {
    const DsdeSpec spec =
        kind == DsdeKind::vp ? DsdeSpec::make(kind, 0.0, b)
                             : DsdeSpec::make(kind, 1.0, b);
    for (std::uint64_t seed : {1u, 2u}) {
      ScoreParams theta = random_params(d, h, seed);
      const ScoreParams g = gradient(theta, ds, spec, cfg);
      ScoreParams gcopy = g;  // flatten in the same order
      const std::vector<double*> gflat = flatten(gcopy);
      const std::vector<double*> tflat = flatten(theta);
      double worst = 0.0;
      for (std::size_t idx = 0; idx < tflat.size(); ++idx) {
        const double orig = *tflat[idx];
        const double step = 1e-5 * (1.0 + std::abs(orig));
        *tflat[idx] = orig + step;
        const double up = objective(theta, ds, spec, cfg);
        *tflat[idx] = orig - step;
        const double dn = objective(theta, ds, spec, cfg);
        *tflat[idx] = orig;
        const double fd = (up - dn) / (2.0 * step);
        const double denom = std::max(std::abs(fd), 1e-8);
        worst = std::max(worst, std::abs(*gflat[idx] - fd) / denom);
      }
      CHECK(worst < 1e-4);
    }
  }
}

TEST_CASE("batch objectives average to the full objective") {
  const ReturnsDataset ds = make_ds(10, 3, 55, 0.4);
  const DsdeSpec spec = DsdeSpec::make(DsdeKind::vp, 0.0, {0.1, 0.1, 0.1});
  ObjectiveConfig cfg;
  const ScoreParams theta = random_params(3, 4, 2);

  const std::vector<int> b1{0, 1, 2, 3};
  const std::vector<int> b2{4, 5, 6, 7, 8, 9};
  const double full = objective(theta, ds, spec, cfg);
  const double part = (4.0 * objective(theta, ds, spec, cfg, &b1) +
                       6.0 * objective(theta, ds, spec, cfg, &b2)) /
                      10.0;
  CHECK(part == doctest::Approx(full).epsilon(1e-12));
}

TEST_CASE("lambda0 scales objective and gradient exactly") {
  const ReturnsDataset ds = make_ds(5, 2, 66, 0.3);
  const DsdeSpec spec = DsdeSpec::make(DsdeKind::vp, 0.0, {0.1, 0.1});
  const ScoreParams theta = random_params(2, 3, 3);
  ObjectiveConfig cfg;
  ObjectiveConfig scaled = cfg;
  scaled.lambda0 = 3.0;
  CHECK(objective(theta, ds, spec, scaled) ==
        doctest::Approx(3.0 * objective(theta, ds, spec, cfg)).epsilon(1e-15));
  const ScoreParams g = gradient(theta, ds, spec, cfg);
  const ScoreParams gs = gradient(theta, ds, spec, scaled);
  for (std::size_t i = 0; i < g.w.size(); ++i)
    CHECK(gs.w[i] == doctest::Approx(3.0 * g.w[i]).epsilon(1e-14));
}

TEST_CASE("threaded evaluation is reproducible") {
  const ReturnsDataset ds = make_ds(12, 3, 31, 0.5);
  const DsdeSpec spec = DsdeSpec::make(DsdeKind::vp, 0.0, {0.1, 0.1, 0.1});
  const ScoreParams theta = random_params(3, 5, 8);
  ObjectiveConfig cfg1, cfg4;
  cfg4.threads = 4;
  const double l1 = objective(theta, ds, spec, cfg1);
  const double l4a = objective(theta, ds, spec, cfg4);
  const double l4b = objective(theta, ds, spec, cfg4);
  CHECK(l4a == l4b);  // bitwise at fixed thread count
  CHECK(l1 == doctest::Approx(l4a).epsilon(1e-13));
  const ScoreParams g4a = gradient(theta, ds, spec, cfg4);
  const ScoreParams g4b = gradient(theta, ds, spec, cfg4);
  CHECK(g4a.w == g4b.w);
  CHECK(g4a.c == g4b.c);
}

TEST_CASE("mc_oracle basics") {
  const DsdeSpec spec = DsdeSpec::make(DsdeKind::vp, 0.0, {0.1});
  ReturnsDataset ds;
  ds.tickers = {"A"};
  ds.dates = {"d0"};
  ds.returns = {0.0};
  ObjectiveConfig cfg;
  const McResult zero = mc_oracle(ScoreParams::zeros(1, 1), ds, spec, cfg,
                                  1000, 5);
  CHECK(zero.value == 0.0);
  CHECK(zero.std_error == 0.0);

  const ReturnsDataset big = make_ds(4, 2, 91, 0.5);
  const DsdeSpec spec2 = DsdeSpec::make(DsdeKind::vp, 0.0, {0.1, 0.1});
  const ScoreParams theta = random_params(2, 3, 17);
  const McResult a = mc_oracle(theta, big, spec2, cfg, 5000, 42);
  const McResult b = mc_oracle(theta, big, spec2, cfg, 5000, 42);
  CHECK(a.value == b.value);  // deterministic given seed
  CHECK(a.std_error == b.std_error);

  // doubling N shrinks the standard error by about sqrt(2)
  double ratio_sum = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const McResult half = mc_oracle(theta, big, spec2, cfg, 2000, seed);
    const McResult full = mc_oracle(theta, big, spec2, cfg, 4000, seed + 100);
    ratio_sum += half.std_error / full.std_error;
  }
  const double mean_ratio = ratio_sum / 20.0;
  CHECK(mean_ratio > 1.2);
  CHECK(mean_ratio < 1.7);

  CHECK_THROWS_AS(mc_oracle(theta, big, spec2, cfg, 50, 1),
                  std::invalid_argument);
}

TEST_CASE("VE residual modes change the objective") {
  const ReturnsDataset ds = make_ds(4, 2, 23, 0.5);
  const DsdeSpec ve = DsdeSpec::make(DsdeKind::ve, 2.0, {0.5, 0.5});
  const ScoreParams theta = random_params(2, 3, 4);
  ObjectiveConfig consistent, literal;
  literal.residual_mode = ResidualMode::paper_literal_ve;
  const double lc = objective(theta, ds, ve, consistent);
  const double ll = objective(theta, ds, ve, literal);
  CHECK(lc != ll);
  // each mode still matches its own MC oracle
  for (const auto& [cfg, name] :
       {std::pair{consistent, "consistent"}, std::pair{literal, "literal"}}) {
    (void)name;
    const double quad = objective(theta, ds, ve, cfg);
    const McResult mc = mc_oracle(theta, ds, ve, cfg, 20000, 7);
    CHECK(std::abs(quad - mc.value) <= 4.0 * mc.std_error);
  }
}

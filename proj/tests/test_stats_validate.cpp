// SPDX-License-Identifier: Apache-2.0
#include "mktdiff/stats_validate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "mktdiff/rng.hpp"
#include "oracles.hpp"

using namespace mktdiff;

TEST_CASE("portfolio projection") {
  const std::vector<double> X{1.0, 3.0, 2.0, 0.0};
  const std::vector<double> half{0.5, 0.5};
  const std::vector<double> p = portfolio_project(X, 2, 2, half);
  CHECK(p == std::vector<double>{2.0, 1.0});

  const std::vector<double> e1{1.0, 0.0};
  CHECK(portfolio_project(X, 2, 2, e1) == std::vector<double>{1.0, 2.0});

  const std::vector<double> equal_rows{0.7, 0.7, 0.7, 0.7};
  CHECK(portfolio_project(equal_rows, 2, 2, half) ==
        std::vector<double>{0.7, 0.7});

  CHECK_THROWS_AS(portfolio_project(X, 2, 2, std::vector<double>{0.9, 0.2}),
                  std::invalid_argument);
  CHECK_THROWS_AS(portfolio_project(X, 2, 2, std::vector<double>{1.5, -0.5}),
                  std::invalid_argument);
}

TEST_CASE("cvm statistic: rank form equals the ECDF definition") {
  const std::vector<double> P{1.0, 3.0}, Q{2.0, 4.0};
  const double t = cvm_statistic(P, Q);
  CHECK(t == doctest::Approx(oracles::cvm_ecdf_definition(P, Q)).epsilon(1e-14));
  CHECK(t == doctest::Approx(0.125).epsilon(1e-14));

  // random tie-free samples up to n = m = 6
  mktdiff::rng::Stream rnd(17, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rnd.next_below(5));
    const int m = 2 + static_cast<int>(rnd.next_below(5));
    std::vector<double> p(n), q(m);
    for (auto& v : p) v = rnd.next_gaussian();
    for (auto& v : q) v = rnd.next_gaussian();
    CHECK(cvm_statistic(p, q) ==
          doctest::Approx(oracles::cvm_ecdf_definition(p, q)).epsilon(1e-12));
    CHECK(cvm_statistic(p, q) == cvm_statistic(q, p));  // exact symmetry
  }
}

TEST_CASE("cvm statistic is rank-based and minimal for identical multisets") {
  const std::vector<double> P{0.1, 0.5, 0.9, 0.3}, Q{0.2, 0.4, 0.8};
  const auto cube = [](std::vector<double> v) {
    for (double& x : v) x = x * x * x;  // strictly increasing on these values
    return v;
  };
  CHECK(cvm_statistic(P, Q) == cvm_statistic(cube(P), cube(Q)));

  // P = Q as multisets attains the minimum over all relabelings (n = m = 3)
  const std::vector<double> base{0.3, 0.7, 1.1};
  std::vector<double> pooled(base);
  pooled.insert(pooled.end(), base.begin(), base.end());
  const double t_eq = cvm_statistic(base, base);
  std::vector<char> mask(6, 0);
  std::fill(mask.begin() + 3, mask.end(), 1);
  std::sort(mask.begin(), mask.end());
  double t_min = 1e300;
  do {
    std::vector<double> p, q;
    for (int i = 0; i < 6; ++i)
      (mask[i] == 0 ? p : q).push_back(pooled[i]);
    t_min = std::min(t_min, cvm_statistic(p, q));
  } while (std::next_permutation(mask.begin(), mask.end()));
  CHECK(t_eq == doctest::Approx(t_min).epsilon(1e-14));
  CHECK(t_eq == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("cvm p-value: exhaustive enumeration at n = m = 3") {
  const std::vector<double> P{0.1, 0.9, 0.4}, Q{0.6, 0.2, 1.4};
  const double t_obs = cvm_statistic(P, Q);

  std::vector<double> pooled(P);
  pooled.insert(pooled.end(), Q.begin(), Q.end());
  std::vector<char> mask(6, 0);
  std::fill(mask.begin() + 3, mask.end(), 1);
  std::sort(mask.begin(), mask.end());
  int ge = 0, total = 0;
  do {
    std::vector<double> p, q;
    for (int i = 0; i < 6; ++i)
      (mask[i] == 0 ? p : q).push_back(pooled[i]);
    ge += cvm_statistic(p, q) >= t_obs;
    ++total;
  } while (std::next_permutation(mask.begin(), mask.end()));
  CHECK(total == 20);

  const double p_exact = static_cast<double>(ge) / total;
  CHECK(cvm_pvalue(P, Q, 1000, 5) == p_exact);  // enumerated, seed-free
}

TEST_CASE("cvm p-value: power against a large shift") {
  mktdiff::rng::Stream rnd(31, 0);
  std::vector<double> P(100), Q(100);
  for (auto& v : P) v = rnd.next_gaussian();
  // pooled sd ~ 1, so shift by 5 pooled standard deviations
  for (std::size_t i = 0; i < Q.size(); ++i) Q[i] = rnd.next_gaussian() + 5.0;
  CHECK(cvm_pvalue(P, Q, 999, 7) <= 0.01);
}

TEST_CASE("cvm p-value: null calibration at level 0.05") {
  int rejections = 0;
  const int reps = 200;
  for (int rep = 0; rep < reps; ++rep) {
    mktdiff::rng::Stream rnd(1000 + rep, 0);
    std::vector<double> P(40), Q(40);
    for (auto& v : P) v = rnd.next_gaussian();
    for (auto& v : Q) v = rnd.next_gaussian();
    if (cvm_pvalue(P, Q, 199, 2000 + rep) <= 0.05) ++rejections;
  }
  const double rate = static_cast<double>(rejections) / reps;
  CHECK(rate >= 0.02);
  CHECK(rate <= 0.08);
}

TEST_CASE("sample covariance") {
  const std::vector<double> same{0.4, -0.1, 0.4, -0.1};
  for (double v : sample_covariance(same, 2, 2)) CHECK(v == 0.0);

  const std::vector<double> X{1.0, 0.0, -1.0, 0.0};
  CHECK(sample_covariance(X, 2, 2) ==
        std::vector<double>{2.0, 0.0, 0.0, 0.0});

  mktdiff::rng::Stream rnd(3, 0);
  const int rows = 10000, d = 5;
  std::vector<double> G(static_cast<std::size_t>(rows) * d);
  for (auto& v : G) v = rnd.next_gaussian();
  const std::vector<double> S = sample_covariance(G, rows, d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      CHECK(S[a * d + b] == S[b * d + a]);  // exact symmetry
  double frob = 0.0;
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      const double target = a == b ? 1.0 : 0.0;
      frob += (S[a * d + b] - target) * (S[a * d + b] - target);
    }
  CHECK(std::sqrt(frob) <= 3.0 * std::sqrt(d * (d + 1) / static_cast<double>(rows)));

  CHECK_THROWS_AS(sample_covariance(std::vector<double>{1.0, 2.0}, 1, 2),
                  std::invalid_argument);
}

TEST_CASE("condition number") {
  CHECK(condition_number(std::vector<double>{1.0, 0.0, 0.0, 1.0}, 2) == 1.0);
  CHECK(condition_number(std::vector<double>{4.0, 0.0, 0.0, 1.0}, 2) == 4.0);

  // random SPD matrices against the independent Jacobi oracle
  mktdiff::rng::Stream rnd(5, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const int d = 4;
    std::vector<double> A(static_cast<std::size_t>(d) * d);
    for (auto& v : A) v = rnd.next_gaussian();
    std::vector<double> S(static_cast<std::size_t>(d) * d, 0.0);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) {
        for (int k = 0; k < d; ++k) S[a * d + b] += A[a * d + k] * A[b * d + k];
        if (a == b) S[a * d + b] += 0.1;
      }
    const double kappa = condition_number(S, d);
    const double oracle = oracles::condition_number_jacobi(S, d);
    CHECK(kappa == doctest::Approx(oracle).epsilon(1e-8));

    std::vector<double> scaled = S;
    for (auto& v : scaled) v *= 37.5;
    CHECK(condition_number(scaled, d) ==
          doctest::Approx(kappa).epsilon(1e-12));
  }

  CHECK_THROWS_AS(
      condition_number(std::vector<double>{1.0, 0.5, -0.5, 1.0}, 2),
      std::invalid_argument);
  CHECK(std::isinf(
      condition_number(std::vector<double>{1.0, 0.0, 0.0, 0.0}, 2)));
}

TEST_CASE("qq pairs") {
  std::vector<double> P(100);
  std::iota(P.begin(), P.end(), 1.0);  // 1..100
  const std::vector<QqPair> diag = qq_pairs(P, P, 7);
  for (const QqPair& p : diag) CHECK(p.hist_q == p.synth_q);

  std::vector<double> Q(P);
  for (double& v : Q) v *= 2.0;
  for (const QqPair& p : qq_pairs(P, Q, 9))
    CHECK(p.synth_q == doctest::Approx(2.0 * p.hist_q).epsilon(1e-14));

  const std::vector<QqPair> three = qq_pairs(P, P, 3);
  CHECK(three[0].hist_q == doctest::Approx(25.75).epsilon(1e-14));
  CHECK(three[1].hist_q == doctest::Approx(50.5).epsilon(1e-14));
  CHECK(three[2].hist_q == doctest::Approx(75.25).epsilon(1e-14));

  // monotone in both coordinates
  mktdiff::rng::Stream rnd(9, 0);
  std::vector<double> R1(37), R2(53);
  for (auto& v : R1) v = rnd.next_gaussian();
  for (auto& v : R2) v = rnd.next_gaussian();
  const std::vector<QqPair> qq = qq_pairs(R1, R2, 19);
  for (std::size_t i = 1; i < qq.size(); ++i) {
    CHECK(qq[i].hist_q >= qq[i - 1].hist_q);
    CHECK(qq[i].synth_q >= qq[i - 1].synth_q);
  }

  CHECK_THROWS_AS(qq_pairs(std::vector<double>{}, P, 3),
                  std::invalid_argument);
}

TEST_CASE("histogram counts") {
  const std::vector<double> P{0.0, 0.1, 0.2, 0.9};
  const std::vector<double> Q{0.5, 1.0};
  const HistogramData hd = histogram_counts(P, Q, 4);
  CHECK(std::accumulate(hd.hist_count.begin(), hd.hist_count.end(), 0L) == 4);
  CHECK(std::accumulate(hd.synth_count.begin(), hd.synth_count.end(), 0L) == 2);
  CHECK(hd.bin_lo.front() == 0.0);
  CHECK(hd.bin_hi.back() == 1.0);
}

TEST_CASE("build_report end to end") {
  mktdiff::rng::Stream rnd(77, 0);
  ReturnsDataset hist;
  hist.tickers = {"A", "B"};
  for (int i = 0; i < 64; ++i) {
    hist.dates.push_back("d" + std::to_string(i));
    const double z1 = 0.01 * rnd.next_gaussian();
    const double z2 = 0.015 * rnd.next_gaussian();
    hist.returns.push_back(z1);
    hist.returns.push_back(0.5 * z1 + z2);
  }

  // synthetic = bootstrap resample of the historical rows
  ScenarioSet synth;
  synth.tickers = hist.tickers;
  for (int k = 0; k < 200; ++k) {
    const int i = static_cast<int>(rnd.next_below(64));
    synth.source_indices.push_back(i);
    synth.samples.push_back(hist.at(i, 0));
    synth.samples.push_back(hist.at(i, 1));
  }

  const ValidationReport r = build_report(hist, synth, {}, 999, 3, 20, 9);
  CHECK(r.n == 64);
  CHECK(r.m == 200);
  CHECK(r.weights == std::vector<double>{0.5, 0.5});
  CHECK(r.p_cvm >= 0.05);  // resample of the same data
  CHECK(r.p_cvm <= 1.0);
  CHECK(r.kappa_hist >= 1.0);
  CHECK(r.kappa_synth >= 1.0);
  REQUIRE(r.qq.size() == 9);

  // identical samples give identical condition numbers
  ScenarioSet same;
  same.tickers = hist.tickers;
  same.samples = hist.returns;
  same.source_indices.assign(64, 0);
  const ValidationReport rs = build_report(hist, same, {}, 999, 3, 20, 9);
  CHECK(rs.kappa_hist == rs.kappa_synth);

  ScenarioSet empty;
  empty.tickers = hist.tickers;
  CHECK_THROWS_AS(build_report(hist, empty, {}, 999, 3, 20, 9), DataError);

  // JSON round-trip is lossless
  const nlohmann::json j = r;
  const ValidationReport back = j.get<ValidationReport>();
  CHECK(back.t_cvm == r.t_cvm);
  CHECK(back.p_cvm == r.p_cvm);
  CHECK(back.kappa_hist == r.kappa_hist);
  CHECK(back.kappa_synth == r.kappa_synth);
  CHECK(back.weights == r.weights);
  REQUIRE(back.qq.size() == r.qq.size());
  for (std::size_t i = 0; i < r.qq.size(); ++i) {
    CHECK(back.qq[i].prob == r.qq[i].prob);
    CHECK(back.qq[i].hist_q == r.qq[i].hist_q);
    CHECK(back.qq[i].synth_q == r.qq[i].synth_q);
  }
  CHECK(back.histogram.bin_lo == r.histogram.bin_lo);
  CHECK(back.histogram.hist_count == r.histogram.hist_count);
}

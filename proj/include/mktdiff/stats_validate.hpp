// SPDX-License-Identifier: Apache-2.0
#ifndef MKTDIFF_STATS_VALIDATE_HPP
#define MKTDIFF_STATS_VALIDATE_HPP

/**
 * @file stats_validate.hpp
 * @brief Two-sample comparison of historical vs synthetic returns:
 *        portfolio projection, Cramer-von Mises statistic with permutation
 *        p-value, covariance condition numbers, Q-Q pairs, histograms.
 *
 * The CvM statistic uses the rank form with midranks for ties,
 *
 *   U = n sum_i (r_i - i)^2 + m sum_j (s_j - j)^2,
 *   T = U / (n m (n+m)) - (4 n m - 1) / (6 (n+m)),
 *
 * and the p-value is the permutation estimate (1 + #{T_b >= T_obs}) / (B+1)
 * over seeded relabelings of the pooled sample.  When the number of distinct
 * relabelings C(n+m, n) does not exceed B, they are enumerated exhaustively
 * and the p-value is exact.
 */

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mktdiff/data_ingest.hpp"
#include "mktdiff/sampler.hpp"

namespace mktdiff {

/// Row-wise <g|x_i>; weights must be nonnegative and sum to 1 (tol 1e-10).
std::vector<double> portfolio_project(std::span<const double> X, int rows,
                                      int d, std::span<const double> g);

/// Two-sample CvM statistic (rank form, midranks for ties); symmetric in
/// (P, Q).
double cvm_statistic(std::span<const double> P, std::span<const double> Q);

/// Permutation p-value; B >= 99; deterministic given seed; exact enumeration
/// when C(n+m, n) <= B.
double cvm_pvalue(std::span<const double> P, std::span<const double> Q, int B,
                  std::uint64_t seed);

/// Unbiased sample covariance (divisor rows-1), d x d row-major.
std::vector<double> sample_covariance(std::span<const double> X, int rows,
                                      int d);

/// lambda_max / lambda_min of a symmetric PSD matrix; +inf when
/// lambda_min <= 1e-300.  Rejects asymmetry beyond 1e-10.
double condition_number(std::span<const double> S, int d);

struct QqPair {
  double prob = 0.0;
  double hist_q = 0.0;
  double synth_q = 0.0;
};

/// Matched empirical quantiles at probabilities k/(L+1), k = 1..L, with
/// linear interpolation of order statistics (position p*(N-1)).
std::vector<QqPair> qq_pairs(std::span<const double> P,
                             std::span<const double> Q, int levels);

struct HistogramData {
  std::vector<double> bin_lo, bin_hi;
  std::vector<long> hist_count, synth_count;
};

HistogramData histogram_counts(std::span<const double> P,
                               std::span<const double> Q, int bins);

struct ValidationReport {
  double t_cvm = 0.0;
  double p_cvm = 0.0;
  double kappa_hist = 0.0;
  double kappa_synth = 0.0;
  std::vector<QqPair> qq;
  std::vector<double> weights;  // g actually used
  int n = 0;
  int m = 0;
  HistogramData histogram;
};

void to_json(nlohmann::json& j, const ValidationReport& r);
void from_json(const nlohmann::json& j, ValidationReport& r);

/// Assembles every metric; g empty selects the equally weighted portfolio.
ValidationReport build_report(const ReturnsDataset& hist,
                              const ScenarioSet& synth,
                              std::span<const double> g, int B,
                              std::uint64_t seed, int bins,
                              int qq_levels = 99);

void write_report_json(const std::string& path, const ValidationReport& r);
void write_qq_csv(const std::string& path, const ValidationReport& r);
void write_histogram_csv(const std::string& path, const ValidationReport& r);

}  // namespace mktdiff

#endif  // MKTDIFF_STATS_VALIDATE_HPP

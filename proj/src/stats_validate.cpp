// SPDX-License-Identifier: Apache-2.0
#include "mktdiff/stats_validate.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "mktdiff/rng.hpp"

namespace mktdiff {

std::vector<double> portfolio_project(std::span<const double> X, int rows,
                                      int d, std::span<const double> g) {
  if (static_cast<int>(g.size()) != d)
    throw std::invalid_argument("portfolio_project: weight dimension mismatch");
  if (static_cast<std::size_t>(rows) * d != X.size())
    throw std::invalid_argument("portfolio_project: matrix shape mismatch");
  double sum = 0.0;
  for (double gi : g) {
    if (!(gi >= 0.0))
      throw std::invalid_argument("portfolio_project: negative weight");
    sum += gi;
  }
  if (std::abs(sum - 1.0) > 1e-10)
    throw std::invalid_argument("portfolio_project: weights must sum to 1");
  std::vector<double> out(rows);
  for (int i = 0; i < rows; ++i) {
    double acc = 0.0;
    for (int k = 0; k < d; ++k)
      acc += g[k] * X[static_cast<std::size_t>(i) * d + k];
    out[i] = acc;
  }
  return out;
}

namespace {

/// Midranks (1-based) of each pooled value, plus per-sample rank lists in
/// ascending order.
double cvm_from_pooled(std::span<const double> values,
                       std::span<const char> labels, int n, int m) {
  const int N = n + m;
  std::vector<int> order(N);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return values[a] < values[b]; });

  std::vector<double> rank(N);
  int pos = 0;
  while (pos < N) {
    int end = pos;
    while (end + 1 < N && values[order[end + 1]] == values[order[pos]]) ++end;
    const double midrank = 0.5 * (pos + 1 + end + 1);
    for (int t = pos; t <= end; ++t) rank[order[t]] = midrank;
    pos = end + 1;
  }

  double up = 0.0, uq = 0.0;
  int ip = 0, iq = 0;
  for (int t = 0; t < N; ++t) {
    const int idx = order[t];
    if (labels[idx] == 0) {
      ++ip;
      up += (rank[idx] - ip) * (rank[idx] - ip);
    } else {
      ++iq;
      uq += (rank[idx] - iq) * (rank[idx] - iq);
    }
  }
  const double u = n * up + m * uq;
  const double nm = static_cast<double>(n) * m;
  return u / (nm * N) - (4.0 * nm - 1.0) / (6.0 * N);
}

}  // namespace

double cvm_statistic(std::span<const double> P, std::span<const double> Q) {
  const int n = static_cast<int>(P.size());
  const int m = static_cast<int>(Q.size());
  if (n < 1 || m < 1) throw std::invalid_argument("cvm_statistic: empty sample");
  std::vector<double> values(n + m);
  std::vector<char> labels(n + m);
  std::copy(P.begin(), P.end(), values.begin());
  std::copy(Q.begin(), Q.end(), values.begin() + n);
  std::fill(labels.begin(), labels.begin() + n, 0);
  std::fill(labels.begin() + n, labels.end(), 1);
  return cvm_from_pooled(values, labels, n, m);
}

namespace {

/// C(N, n) saturating at a cap (avoids overflow; only small values matter).
unsigned long long binomial_capped(int N, int n, unsigned long long cap) {
  unsigned long long r = 1;
  n = std::min(n, N - n);
  for (int k = 1; k <= n; ++k) {
    // r *= (N - n + k) / k, with overflow guard
    if (r > cap) return cap + 1;
    r = r * static_cast<unsigned long long>(N - n + k) / k;
  }
  return r;
}

}  // namespace

double cvm_pvalue(std::span<const double> P, std::span<const double> Q, int B,
                  std::uint64_t seed) {
  if (B < 99) throw std::invalid_argument("cvm_pvalue: B must be >= 99");
  const int n = static_cast<int>(P.size());
  const int m = static_cast<int>(Q.size());
  const int N = n + m;
  const double t_obs = cvm_statistic(P, Q);

  std::vector<double> pooled(N);
  std::copy(P.begin(), P.end(), pooled.begin());
  std::copy(Q.begin(), Q.end(), pooled.begin() + n);

  const unsigned long long total =
      binomial_capped(N, n, static_cast<unsigned long long>(B));
  if (total <= static_cast<unsigned long long>(B)) {
    // Exhaustive: every way of labeling n of the N pooled values as "P".
    std::vector<char> labels(N);
    std::fill(labels.begin(), labels.begin() + n, 0);
    std::fill(labels.begin() + n, labels.end(), 1);
    std::sort(labels.begin(), labels.end());
    long ge = 0, count = 0;
    do {
      if (cvm_from_pooled(pooled, labels, n, m) >= t_obs) ++ge;
      ++count;
    } while (std::next_permutation(labels.begin(), labels.end()));
    return static_cast<double>(ge) / count;
  }

  std::vector<char> labels(N);
  long ge = 0;
  for (int b = 0; b < B; ++b) {
    std::fill(labels.begin(), labels.begin() + n, 0);
    std::fill(labels.begin() + n, labels.end(), 1);
    rng::Stream stream(seed, static_cast<std::uint64_t>(b));
    for (int i = N - 1; i > 0; --i) {
      const int j = static_cast<int>(stream.next_below(i + 1));
      std::swap(labels[i], labels[j]);
    }
    if (cvm_from_pooled(pooled, labels, n, m) >= t_obs) ++ge;
  }
  return (1.0 + ge) / (B + 1.0);
}

std::vector<double> sample_covariance(std::span<const double> X, int rows,
                                      int d) {
  if (rows < 2)
    throw std::invalid_argument("sample_covariance: need at least 2 rows");
  if (static_cast<std::size_t>(rows) * d != X.size())
    throw std::invalid_argument("sample_covariance: matrix shape mismatch");
  std::vector<double> mean(d, 0.0);
  for (int i = 0; i < rows; ++i)
    for (int k = 0; k < d; ++k) mean[k] += X[static_cast<std::size_t>(i) * d + k];
  for (double& v : mean) v /= rows;

  std::vector<double> cov(static_cast<std::size_t>(d) * d, 0.0);
  for (int i = 0; i < rows; ++i)
    for (int a = 0; a < d; ++a) {
      const double da = X[static_cast<std::size_t>(i) * d + a] - mean[a];
      for (int b = a; b < d; ++b) {
        const double db = X[static_cast<std::size_t>(i) * d + b] - mean[b];
        cov[static_cast<std::size_t>(a) * d + b] += da * db;
      }
    }
  for (int a = 0; a < d; ++a)
    for (int b = a; b < d; ++b) {
      const double v = cov[static_cast<std::size_t>(a) * d + b] / (rows - 1);
      cov[static_cast<std::size_t>(a) * d + b] = v;
      cov[static_cast<std::size_t>(b) * d + a] = v;
    }
  return cov;
}

double condition_number(std::span<const double> S, int d) {
  if (static_cast<std::size_t>(d) * d != S.size())
    throw std::invalid_argument("condition_number: matrix shape mismatch");
  double scale = 0.0;
  for (double v : S) scale = std::max(scale, std::abs(v));
  for (int a = 0; a < d; ++a)
    for (int b = a + 1; b < d; ++b) {
      const double diff = std::abs(S[static_cast<std::size_t>(a) * d + b] -
                                   S[static_cast<std::size_t>(b) * d + a]);
      if (diff > 1e-10 * std::max(1.0, scale))
        throw std::invalid_argument("condition_number: asymmetric input");
    }
  Eigen::Map<const Eigen::MatrixXd> mat(S.data(), d, d);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mat,
                                                    Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("condition_number: eigen decomposition failed");
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (lo < -1e-8 * std::max(1.0, std::abs(hi)))
    throw std::invalid_argument("condition_number: matrix not PSD");
  if (lo <= 1e-300) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

namespace {

double quantile_sorted(const std::vector<double>& sorted, double prob) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double pos = prob * static_cast<double>(n - 1);
  const auto idx = static_cast<std::size_t>(pos);
  if (idx + 1 >= n) return sorted[n - 1];
  const double frac = pos - static_cast<double>(idx);
  return sorted[idx] * (1.0 - frac) + sorted[idx + 1] * frac;
}

}  // namespace

std::vector<QqPair> qq_pairs(std::span<const double> P,
                             std::span<const double> Q, int levels) {
  if (P.empty() || Q.empty())
    throw std::invalid_argument("qq_pairs: empty sample");
  if (levels < 1) throw std::invalid_argument("qq_pairs: levels must be >= 1");
  std::vector<double> sp(P.begin(), P.end()), sq(Q.begin(), Q.end());
  std::sort(sp.begin(), sp.end());
  std::sort(sq.begin(), sq.end());
  std::vector<QqPair> out(levels);
  for (int k = 1; k <= levels; ++k) {
    const double prob = static_cast<double>(k) / (levels + 1);
    out[k - 1] = {prob, quantile_sorted(sp, prob), quantile_sorted(sq, prob)};
  }
  return out;
}

HistogramData histogram_counts(std::span<const double> P,
                               std::span<const double> Q, int bins) {
  if (bins < 1) throw std::invalid_argument("histogram: bins must be >= 1");
  if (P.empty() || Q.empty())
    throw std::invalid_argument("histogram: empty sample");
  double lo = P[0], hi = P[0];
  for (double v : P) { lo = std::min(lo, v); hi = std::max(hi, v); }
  for (double v : Q) { lo = std::min(lo, v); hi = std::max(hi, v); }
  if (lo == hi) { lo -= 0.5; hi += 0.5; }
  const double width = (hi - lo) / bins;

  HistogramData hd;
  hd.bin_lo.resize(bins);
  hd.bin_hi.resize(bins);
  hd.hist_count.assign(bins, 0);
  hd.synth_count.assign(bins, 0);
  for (int b = 0; b < bins; ++b) {
    hd.bin_lo[b] = lo + b * width;
    hd.bin_hi[b] = b + 1 == bins ? hi : lo + (b + 1) * width;
  }
  auto bucket = [&](double v) {
    const int b = static_cast<int>((v - lo) / width);
    return std::clamp(b, 0, bins - 1);
  };
  for (double v : P) ++hd.hist_count[bucket(v)];
  for (double v : Q) ++hd.synth_count[bucket(v)];
  return hd;
}

void to_json(nlohmann::json& j, const ValidationReport& r) {
  std::vector<double> probs, hq, sq;
  for (const QqPair& p : r.qq) {
    probs.push_back(p.prob);
    hq.push_back(p.hist_q);
    sq.push_back(p.synth_q);
  }
  j = nlohmann::json{{"t_cvm", r.t_cvm},
                     {"p_cvm", r.p_cvm},
                     {"kappa_hist", r.kappa_hist},
                     {"kappa_synth", r.kappa_synth},
                     {"weights", r.weights},
                     {"n", r.n},
                     {"m", r.m},
                     {"qq_prob", probs},
                     {"qq_hist", hq},
                     {"qq_synth", sq},
                     {"histogram",
                      {{"bin_lo", r.histogram.bin_lo},
                       {"bin_hi", r.histogram.bin_hi},
                       {"hist_count", r.histogram.hist_count},
                       {"synth_count", r.histogram.synth_count}}}};
}

void from_json(const nlohmann::json& j, ValidationReport& r) {
  r.t_cvm = j.at("t_cvm").get<double>();
  r.p_cvm = j.at("p_cvm").get<double>();
  r.kappa_hist = j.at("kappa_hist").get<double>();
  r.kappa_synth = j.at("kappa_synth").get<double>();
  r.weights = j.at("weights").get<std::vector<double>>();
  r.n = j.at("n").get<int>();
  r.m = j.at("m").get<int>();
  const auto probs = j.at("qq_prob").get<std::vector<double>>();
  const auto hq = j.at("qq_hist").get<std::vector<double>>();
  const auto sq = j.at("qq_synth").get<std::vector<double>>();
  r.qq.clear();
  for (std::size_t i = 0; i < probs.size(); ++i)
    r.qq.push_back({probs[i], hq[i], sq[i]});
  const auto& h = j.at("histogram");
  r.histogram.bin_lo = h.at("bin_lo").get<std::vector<double>>();
  r.histogram.bin_hi = h.at("bin_hi").get<std::vector<double>>();
  r.histogram.hist_count = h.at("hist_count").get<std::vector<long>>();
  r.histogram.synth_count = h.at("synth_count").get<std::vector<long>>();
}

ValidationReport build_report(const ReturnsDataset& hist,
                              const ScenarioSet& synth,
                              std::span<const double> g, int B,
                              std::uint64_t seed, int bins, int qq_levels) {
  const int d = hist.d();
  if (synth.d() != d)
    throw DataError("build_report: historical and synthetic dimensions differ");
  if (synth.m() < 2)
    throw DataError("build_report: need at least 2 synthetic rows");
  if (hist.n() < 2)
    throw DataError("build_report: need at least 2 historical rows");

  ValidationReport r;
  r.weights = g.empty()
                  ? std::vector<double>(d, 1.0 / d)
                  : std::vector<double>(g.begin(), g.end());
  r.n = hist.n();
  r.m = synth.m();

  const std::vector<double> P =
      portfolio_project(hist.returns, hist.n(), d, r.weights);
  const std::vector<double> Q =
      portfolio_project(synth.samples, synth.m(), d, r.weights);

  r.t_cvm = cvm_statistic(P, Q);
  r.p_cvm = cvm_pvalue(P, Q, B, seed);
  r.kappa_hist = condition_number(sample_covariance(hist.returns, hist.n(), d), d);
  r.kappa_synth =
      condition_number(sample_covariance(synth.samples, synth.m(), d), d);
  r.qq = qq_pairs(P, Q, qq_levels);
  r.histogram = histogram_counts(P, Q, bins);
  return r;
}

void write_report_json(const std::string& path, const ValidationReport& r) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open report file: " + path);
  out << nlohmann::json(r).dump(2) << '\n';
}

void write_qq_csv(const std::string& path, const ValidationReport& r) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open qq file: " + path);
  out.precision(17);
  out << "prob,hist_q,synth_q\n";
  for (const QqPair& p : r.qq)
    out << p.prob << ',' << p.hist_q << ',' << p.synth_q << '\n';
}

void write_histogram_csv(const std::string& path, const ValidationReport& r) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open histogram file: " + path);
  out.precision(17);
  out << "bin_lo,bin_hi,hist_count,synth_count\n";
  for (std::size_t b = 0; b < r.histogram.bin_lo.size(); ++b)
    out << r.histogram.bin_lo[b] << ',' << r.histogram.bin_hi[b] << ','
        << r.histogram.hist_count[b] << ',' << r.histogram.synth_count[b]
        << '\n';
}

}  // namespace mktdiff

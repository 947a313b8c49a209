// SPDX-License-Identifier: Apache-2.0
#include "mktdiff/score_net.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "mktdiff/quadrature.hpp"
#include "mktdiff/rng.hpp"

namespace mktdiff {

void ScoreParams::validate() const {
  if (d < 1 || h < 1)
    throw std::invalid_argument("ScoreParams: d and h must be >= 1");
  const auto hd = static_cast<std::size_t>(h) * d;
  if (w.size() != hd || b.size() != static_cast<std::size_t>(h) ||
      c.size() != hd || d_out.size() != static_cast<std::size_t>(d))
    throw std::invalid_argument("ScoreParams: field sizes inconsistent");
  for (const auto* vec : {&w, &b, &c, &d_out})
    for (double v : *vec)
      if (!std::isfinite(v))
        throw std::invalid_argument("ScoreParams: non-finite entry");
}

ScoreParams ScoreParams::zeros(int d, int h) {
  ScoreParams p;
  p.d = d;
  p.h = h;
  p.w.assign(static_cast<std::size_t>(h) * d, 0.0);
  p.b.assign(h, 0.0);
  p.c.assign(static_cast<std::size_t>(d) * h, 0.0);
  p.d_out.assign(d, 0.0);
  return p;
}

std::vector<double> k_forward(const ScoreParams& p, std::span<const double> x) {
  if (static_cast<int>(x.size()) != p.d)
    throw std::invalid_argument("k_forward: x has wrong dimension");
  std::vector<double> act(p.h);
  for (int j = 0; j < p.h; ++j) {
    double u = p.b[j];
    for (int m = 0; m < p.d; ++m) u += p.w_at(j, m) * x[m];
    act[j] = softplus(u);
  }
  std::vector<double> out(p.d_out.begin(), p.d_out.end());
  for (int k = 0; k < p.d; ++k) {
    double s = 0.0;
    for (int j = 0; j < p.h; ++j) s += p.c_at(k, j) * act[j];
    out[k] += s;
  }
  return out;
}

std::vector<double> k_jacobian_x(const ScoreParams& p,
                                 std::span<const double> x) {
  if (static_cast<int>(x.size()) != p.d)
    throw std::invalid_argument("k_jacobian_x: x has wrong dimension");
  std::vector<double> sig(p.h);
  for (int j = 0; j < p.h; ++j) {
    double u = p.b[j];
    for (int m = 0; m < p.d; ++m) u += p.w_at(j, m) * x[m];
    sig[j] = sigmoid(u);
  }
  std::vector<double> jac(static_cast<std::size_t>(p.d) * p.d, 0.0);
  for (int k = 0; k < p.d; ++k)
    for (int m = 0; m < p.d; ++m) {
      double s = 0.0;
      for (int j = 0; j < p.h; ++j) s += p.c_at(k, j) * sig[j] * p.w_at(j, m);
      jac[static_cast<std::size_t>(k) * p.d + m] = s;
    }
  return jac;
}

std::vector<double> score_eval(const ScoreParams& p, const DsdeSpec& spec,
                               double t, std::span<const double> x) {
  if (spec.dim() != p.d)
    throw std::invalid_argument("score_eval: spec/params dimension mismatch");
  const std::vector<double> origin(p.d, 0.0);
  const GaussMoments m = transition_moments(spec, 0.0, t, origin);
  for (double v : m.var)
    if (!(v > 0.0))
      throw std::invalid_argument(
          "score_eval: C(t) has a zero component (t = 0 rejected)");
  std::vector<double> s = k_forward(p, x);
  for (int k = 0; k < p.d; ++k) s[k] /= m.var[k];
  return s;
}

std::vector<double> true_gaussian_score(std::span<const double> mu,
                                        std::span<const double> var,
                                        std::span<const double> x) {
  if (mu.size() != var.size() || mu.size() != x.size())
    throw std::invalid_argument("true_gaussian_score: dimension mismatch");
  std::vector<double> s(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(var[k] > 0.0))
      throw std::invalid_argument("true_gaussian_score: zero variance");
    s[k] = -(x[k] - mu[k]) / var[k];
  }
  return s;
}

ScoreParams init_params(int d, int h, std::uint64_t seed) {
  if (d < 1 || h < 1)
    throw std::invalid_argument("init_params: d and h must be >= 1");
  ScoreParams p = ScoreParams::zeros(d, h);
  rng::Stream stream(seed, 0);
  const double sw = 1.0 / std::sqrt(static_cast<double>(d));
  for (auto& v : p.w) v = sw * stream.next_gaussian();
  const double sc = 1.0 / std::sqrt(static_cast<double>(h));
  for (auto& v : p.c) v = sc * stream.next_gaussian();
  return p;
}

std::string params_id(const ScoreParams& p) {
  // FNV-1a over the raw parameter bytes.
  std::uint64_t hash = 0xcbf29ce484222325ull;
  auto mix = [&hash](const std::vector<double>& vec) {
    for (double v : vec) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      for (int i = 0; i < 8; ++i) {
        hash ^= (bits >> (8 * i)) & 0xffu;
        hash *= 0x100000001b3ull;
      }
    }
  };
  mix(p.w);
  mix(p.b);
  mix(p.c);
  mix(p.d_out);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(hash));
  return buf;
}

nlohmann::json checkpoint_to_json(const ScoreParams& p, const DsdeSpec& spec,
                                  const nlohmann::json& train_config) {
  p.validate();
  return nlohmann::json{{"format", "mktdiff-checkpoint-v1"},
                        {"id", params_id(p)},
                        {"d", p.d},
                        {"h", p.h},
                        {"w", p.w},
                        {"b", p.b},
                        {"c", p.c},
                        {"d_out", p.d_out},
                        {"dsde", spec},
                        {"train", train_config}};
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  Checkpoint ck;
  ck.params.d = j.at("d").get<int>();
  ck.params.h = j.at("h").get<int>();
  ck.params.w = j.at("w").get<std::vector<double>>();
  ck.params.b = j.at("b").get<std::vector<double>>();
  ck.params.c = j.at("c").get<std::vector<double>>();
  ck.params.d_out = j.at("d_out").get<std::vector<double>>();
  ck.params.validate();
  ck.spec = j.at("dsde").get<DsdeSpec>();
  ck.train_config = j.value("train", nlohmann::json::object());
  ck.id = j.value("id", params_id(ck.params));
  return ck;
}

void save_checkpoint(const std::string& path, const ScoreParams& p,
                     const DsdeSpec& spec,
                     const nlohmann::json& train_config) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open checkpoint file: " + path);
  out << checkpoint_to_json(p, spec, train_config).dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint file: " + path);
  nlohmann::json j;
  in >> j;
  return checkpoint_from_json(j);
}

}  // namespace mktdiff

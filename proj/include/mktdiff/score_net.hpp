// SPDX-License-Identifier: Apache-2.0
#ifndef MKTDIFF_SCORE_NET_HPP
#define MKTDIFF_SCORE_NET_HPP

/**
 * @file score_net.hpp
 * @brief Noise-conditional score network: a single hidden layer of softplus
 *        units
 *
 *          K^k(x) = sum_j c[k][j] softplus(<w_j|x> + b_j) + d_out^k,
 *
 *        with fitted score s(t, x) = K(x) / C(t) (component-wise division by
 *        the transition variance).
 *
 * Index convention: w is h x d with row j the input weights of hidden unit j;
 * c is d x h with c[k][j] the weight from hidden unit j to output k.  The
 * output bias is named d_out because d is taken by the data dimension.
 */

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mktdiff/dsde.hpp"

namespace mktdiff {

struct ScoreParams {
  int d = 0;  // data dimension
  int h = 0;  // hidden units
  std::vector<double> w;      // h x d, row-major
  std::vector<double> b;      // h
  std::vector<double> c;      // d x h, row-major
  std::vector<double> d_out;  // d

  double& w_at(int j, int m) { return w[static_cast<std::size_t>(j) * d + m]; }
  double w_at(int j, int m) const { return w[static_cast<std::size_t>(j) * d + m]; }
  double& c_at(int k, int j) { return c[static_cast<std::size_t>(k) * h + j]; }
  double c_at(int k, int j) const { return c[static_cast<std::size_t>(k) * h + j]; }

  std::size_t size() const { return w.size() + b.size() + c.size() + d_out.size(); }
  void validate() const;

  static ScoreParams zeros(int d, int h);
};

/// K(x; theta).
std::vector<double> k_forward(const ScoreParams& p, std::span<const double> x);

/// dK/dx as a d x d row-major matrix (output k, input m).
std::vector<double> k_jacobian_x(const ScoreParams& p,
                                 std::span<const double> x);

/// s(t, x; theta) = K(x; theta) / C(t); rejects t with a zero variance
/// component (t = 0).
std::vector<double> score_eval(const ScoreParams& p, const DsdeSpec& spec,
                               double t, std::span<const double> x);

/// Exact Gaussian score -(x - mu)/var; test oracle for samplers and
/// training sanity checks.
std::vector<double> true_gaussian_score(std::span<const double> mu,
                                        std::span<const double> var,
                                        std::span<const double> x);

/// Seeded initialization: w ~ N(0, 1/d), c ~ N(0, 1/h), b = d_out = 0.
ScoreParams init_params(int d, int h, std::uint64_t seed);

/// Short content hash of the parameter values (checkpoint provenance id).
std::string params_id(const ScoreParams& p);

/// Checkpoint JSON: parameters plus the DsdeSpec and training config that
/// produced them.
nlohmann::json checkpoint_to_json(const ScoreParams& p, const DsdeSpec& spec,
                                  const nlohmann::json& train_config);
struct Checkpoint {
  ScoreParams params;
  DsdeSpec spec;
  nlohmann::json train_config;
  std::string id;
};
Checkpoint checkpoint_from_json(const nlohmann::json& j);
void save_checkpoint(const std::string& path, const ScoreParams& p,
                     const DsdeSpec& spec, const nlohmann::json& train_config);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace mktdiff

#endif  // MKTDIFF_SCORE_NET_HPP

// SPDX-License-Identifier: Apache-2.0
#include "mktdiff/quadrature.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mktdiff {

double softplus(double u) {
  // log(1+e^u) = max(u,0) + log1p(e^{-|u|})
  return std::max(u, 0.0) + std::log1p(std::exp(-std::abs(u)));
}

double sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

QuadRule gh_rule(int order) {
  if (order < 1 || order > 64)
    throw std::invalid_argument("gh_rule: order must be in [1,64]");

  QuadRule rule;
  rule.order = order;
  if (order == 1) {
    rule.nodes = {0.0};
    rule.weights = {1.0};
    return rule;
  }

  // Golub-Welsch: eigen-decompose the Jacobi matrix of the (physicists')
  // Hermite polynomials; off-diagonal entries sqrt(k/2).
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    const double off = std::sqrt(0.5 * k);
    jacobi(k, k - 1) = off;
    jacobi(k - 1, k) = off;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("gh_rule: eigen decomposition failed");

  rule.nodes.resize(order);
  rule.weights.resize(order);
  for (int p = 0; p < order; ++p) {
    rule.nodes[p] = es.eigenvalues()(p);
    const double v0 = es.eigenvectors()(0, p);
    // mu0 = sqrt(pi) cancels against the 1/sqrt(pi) normalization, leaving
    // the squared first eigenvector components, which already sum to 1.
    rule.weights[p] = v0 * v0;
  }

  // Symmetrize node/weight pairs (eigenvalues come back sorted).
  for (int p = 0, q = order - 1; p < q; ++p, --q) {
    const double z = 0.5 * (rule.nodes[q] - rule.nodes[p]);
    rule.nodes[p] = -z;
    rule.nodes[q] = z;
    const double w = 0.5 * (rule.weights[p] + rule.weights[q]);
    rule.weights[p] = w;
    rule.weights[q] = w;
  }
  if (order % 2 == 1) rule.nodes[order / 2] = 0.0;

  double sum = 0.0;
  for (double w : rule.weights) sum += w;
  for (double& w : rule.weights) w /= sum;
  return rule;
}

QuadRule make_quad_rule(int order, int simpson_s) {
  if (simpson_s < 2 || simpson_s % 2 != 0)
    throw std::invalid_argument("make_quad_rule: S must be even and >= 2");
  QuadRule rule = gh_rule(order);
  rule.simpson_s = simpson_s;
  rule.simpson_nodes.resize(simpson_s + 1);
  rule.simpson_weights.resize(simpson_s + 1);
  const double h = 1.0 / simpson_s;
  for (int j = 0; j <= simpson_s; ++j) {
    rule.simpson_nodes[j] = static_cast<double>(j) / simpson_s;
    double w = (j == 0 || j == simpson_s) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
    rule.simpson_weights[j] = w * h / 3.0;
  }
  rule.simpson_nodes.back() = 1.0;
  return rule;
}

namespace quad_detail {

double c_metric_norm(std::span<const double> w, std::span<const double> var) {
  double s = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) s += w[k] * w[k] * var[k];
  return std::sqrt(s);
}

}  // namespace quad_detail

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

void check_dims(std::span<const double> w, const GaussMoments& m,
                const char* who) {
  if (w.size() != m.mean.size() || w.size() != m.var.size())
    throw std::invalid_argument(std::string(who) + ": dimension mismatch");
}

bool all_zero(std::span<const double> w) {
  return std::all_of(w.begin(), w.end(), [](double v) { return v == 0.0; });
}

}  // namespace

double int_i1(const QuadRule& rule, std::span<const double> w, double bias,
              const GaussMoments& m, const Activation& act) {
  check_dims(w, m, "int_i1");
  const double norm = quad_detail::c_metric_norm(w, m.var);
  const double mean = dot(w, m.mean) + bias;
  const double scale = norm * kSqrt2;
  double acc = 0.0;
  for (int p = 0; p < rule.order; ++p)
    acc += rule.weights[p] * act.value(scale * rule.nodes[p] + mean);
  return acc;
}

double int_i2(const QuadRule& rule, std::span<const double> w1, double b1,
              std::span<const double> w2, double b2, const GaussMoments& m,
              const Activation& act) {
  check_dims(w1, m, "int_i2");
  check_dims(w2, m, "int_i2");
  if (all_zero(w1) || all_zero(w2))
    throw std::invalid_argument("int_i2: zero weight vector");

  const double n1 = quad_detail::c_metric_norm(w1, m.var);
  const double n2 = quad_detail::c_metric_norm(w2, m.var);
  const double m1 = dot(w1, m.mean) + b1;
  const double m2 = dot(w2, m.mean) + b2;

  double c = 0.0, s = 1.0;
  if (n1 > 0.0 && n2 > 0.0) {
    double cdot = 0.0;
    for (std::size_t k = 0; k < w1.size(); ++k)
      cdot += w1[k] * w2[k] * m.var[k];
    c = std::clamp(cdot / (n1 * n2), -1.0, 1.0);
    s = std::sqrt(std::max(0.0, 1.0 - c * c));
  }

  const double a1 = n1 * kSqrt2;
  const double a2 = n2 * kSqrt2;

  if (s < quad_detail::kParallelSinEps && n1 > 0.0 && n2 > 0.0) {
    // (Anti)parallel directions: 1-D quadrature of the product along the
    // common axis.
    const double sign = c < 0.0 ? -1.0 : 1.0;
    double acc = 0.0;
    for (int p = 0; p < rule.order; ++p) {
      const double z = rule.nodes[p];
      acc += rule.weights[p] * act.value(a1 * z + m1) *
             act.value(sign * a2 * z + m2);
    }
    return acc;
  }

  double acc = 0.0;
  for (int p = 0; p < rule.order; ++p) {
    const double zp = rule.nodes[p];
    const double u1 = act.value(a1 * zp + m1);
    double row = 0.0;
    for (int q = 0; q < rule.order; ++q) {
      const double zq = rule.nodes[q];
      row += rule.weights[q] * act.value(a2 * (s * zq + c * zp) + m2);
    }
    acc += rule.weights[p] * u1 * row;
  }
  return acc;
}

double simpson_integrate(int subintervals,
                         const std::function<double(double)>& f) {
  if (subintervals < 2 || subintervals % 2 != 0)
    throw std::invalid_argument("simpson_integrate: S must be even and >= 2");
  const double h = 1.0 / subintervals;
  double acc = f(0.0) + f(1.0);
  for (int j = 1; j < subintervals; ++j) {
    const double t = static_cast<double>(j) / subintervals;
    acc += (j % 2 == 1 ? 4.0 : 2.0) * f(t);
  }
  return acc * h / 3.0;
}

}  // namespace mktdiff

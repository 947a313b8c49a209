// SPDX-License-Identifier: Apache-2.0
#ifndef MKTDIFF_QUADRATURE_HPP
#define MKTDIFF_QUADRATURE_HPP

/**
 * @file quadrature.hpp
 * @brief Normalized Gauss-Hermite rules, Simpson time grids, and the 1-D/2-D
 *        reductions of the Gaussian integrals of one activation (int_i1) and
 *        of a product of two activations (int_i2).
 *
 * The Gauss-Hermite weights are pre-divided by sqrt(pi), so a rule of order D
 * approximates standard-normal expectations directly:
 *
 *   sum_p w_p f(sqrt(2) z_p)  ~=  E[f(Z)],   Z ~ N(0,1),
 *
 * exactly for polynomials f of degree <= 2D-1.
 *
 * With X ~ N(mean, diag(var)) and the C-metric norm
 * ||w||_C = sqrt(sum_k w_k^2 var_k), the d-dimensional integrals reduce to
 *
 *   int_i1 = sum_p w_p a(||w||_C sqrt(2) z_p + <w|mean> + b)
 *   int_i2 = sum_{p,q} w_p w_q a(u1_p) a(||w2||_C sqrt(2)(s z_q + c z_p)
 *                                        + <w2|mean> + b2)
 *
 * where c and s are the cosine and |sine| of the angle between sqrt(C) w1 and
 * sqrt(C) w2.  When that angle is numerically zero the 2-D tensor rule wastes
 * its q nodes; int_i2 then falls back to a 1-D quadrature of the product
 * along the common direction.
 */

#include <functional>
#include <span>
#include <vector>

#include "mktdiff/dsde.hpp"

namespace mktdiff {

/// A smooth activation and its derivative; int_i1/int_i2 are generic in it.
struct Activation {
  double (*value)(double);
  double (*deriv)(double);
};

/// softplus(u) = log(1 + e^u), computed overflow-safely.
double softplus(double u);
/// d/du softplus = logistic sigmoid.
double sigmoid(double u);

inline constexpr Activation softplus_activation{&softplus, &sigmoid};

/// Gauss-Hermite nodes/weights of order D plus a composite-Simpson grid on
/// [0,1] with S (even) subintervals.
struct QuadRule {
  int order = 0;                       // D
  std::vector<double> nodes;           // roots of H_D, symmetric about 0
  std::vector<double> weights;         // normalized: sum = 1
  int simpson_s = 0;                   // S
  std::vector<double> simpson_nodes;   // S+1 times in [0,1]
  std::vector<double> simpson_weights; // (1/S)/3 * {1,4,2,...,4,1}
};

/// Gauss-Hermite part only (Golub-Welsch).  1 <= D <= 64.
QuadRule gh_rule(int order);

/// Full rule: Gauss-Hermite of order D plus Simpson grid of S subintervals.
QuadRule make_quad_rule(int order, int simpson_s);

/// E[a(<w|X> + bias)] for X ~ N(m.mean, diag(m.var)), reduced to 1-D.
double int_i1(const QuadRule& rule, std::span<const double> w, double bias,
              const GaussMoments& m,
              const Activation& act = softplus_activation);

/// E[a(<w1|X> + b1) a(<w2|X> + b2)], reduced to 2-D (w1, w2 non-zero).
double int_i2(const QuadRule& rule, std::span<const double> w1, double b1,
              std::span<const double> w2, double b2, const GaussMoments& m,
              const Activation& act = softplus_activation);

/// Composite Simpson estimate of int_0^1 f(t) dt; S even, S >= 2.
double simpson_integrate(int subintervals,
                         const std::function<double(double)>& f);

namespace quad_detail {
/// ||w||_C = ||sqrt(diag(var)) w||; the metric in which angles are taken.
double c_metric_norm(std::span<const double> w, std::span<const double> var);
/// Angle threshold below which int_i2 switches to the parallel fallback.
inline constexpr double kParallelSinEps = 1e-7;
}  // namespace quad_detail

}  // namespace mktdiff

#endif  // MKTDIFF_QUADRATURE_HPP

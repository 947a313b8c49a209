// SPDX-License-Identifier: Apache-2.0
#ifndef MKTDIFF_DSDE_HPP
#define MKTDIFF_DSDE_HPP

/**
 * @file dsde.hpp
 * @brief Denoising SDE families (VP, sub-VP, VE) and their Gaussian
 *        transition structure.
 *
 * All three families are linear SDEs with diagonal diffusion, treated
 * component-wise (Hadamard semantics): beta, tau and the transition moments
 * are d-vectors.
 *
 * VP:     dX = -1/2 beta(t) X dt + sqrt(beta(t)) dW,
 *         beta_i(t) = b_i (1-t)^{-(1+a)}.
 *         Under the time change tau(t) = int_0^t beta, X becomes a unit
 *         Ornstein-Uhlenbeck process: conditional mean y e^{-dtau/2},
 *         variance 1 - e^{-dtau}.
 * sub-VP: same drift, diffusion sqrt(beta(t)(1 - e^{-2 tau(t)})).
 * VE:     dX = sqrt(v'(t)) dW with v_i(t) = b_i a^t (a > 1); driftless,
 *         conditional mean y, variance v(t) - v(u).
 *
 * tau(1) = +inf for VP/sub-VP; the limit is represented by IEEE infinity so
 * that exp(-tau) saturates to exactly 0 and the t=1 moments come out as the
 * exact white-noise limit without special-case branches.
 */

#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace mktdiff {

enum class DsdeKind { vp, sub_vp, ve };

std::string to_string(DsdeKind kind);
DsdeKind dsde_kind_from_string(const std::string& s);

/// Mean and diagonal covariance of a Gaussian transition kernel.
struct GaussMoments {
  std::vector<double> mean;
  std::vector<double> var;
};

/// Hyperparameters of a denoising-SDE family.
///
/// Invariants: all b_i > 0; VP/sub-VP require a >= 0, VE requires a > 1.
struct DsdeSpec {
  DsdeKind kind = DsdeKind::vp;
  double a = 0.0;
  std::vector<double> b;  // per-asset scale, size d

  int dim() const { return static_cast<int>(b.size()); }
  void validate() const;  // throws std::invalid_argument on violation

  static DsdeSpec make(DsdeKind kind, double a, std::vector<double> b);
};

void to_json(nlohmann::json& j, const DsdeSpec& spec);
void from_json(const nlohmann::json& j, DsdeSpec& spec);

/// Instantaneous noise intensity beta(t) (for VE: dv/dt).
/// Throws for t outside [0,1), resp. [0,1] for VE.
std::vector<double> beta(const DsdeSpec& spec, double t);

/// Time change tau(t) = int_0^t beta(s) ds (VE: tau = v(t)).
/// tau(1) = +inf for VP/sub-VP, returned as IEEE infinity.
std::vector<double> tau(const DsdeSpec& spec, double t);

/// Moments of the transition kernel p(t, . | u, y); u = 0 gives the marginal
/// started at y.  Requires 0 <= u <= t <= 1.
GaussMoments transition_moments(const DsdeSpec& spec, double u, double t,
                                std::span<const double> y);

struct DriftDiffusion {
  std::vector<double> drift;
  std::vector<double> sigma;
};

/// Instantaneous SDE coefficients alpha(t, x) and sigma(t).
DriftDiffusion drift_diffusion(const DsdeSpec& spec, double t,
                               std::span<const double> x);

}  // namespace mktdiff

#endif  // MKTDIFF_DSDE_HPP

// SPDX-License-Identifier: Apache-2.0
#include "mktdiff/dsde.hpp"

#include <cmath>
#include <stdexcept>

namespace mktdiff {

std::string to_string(DsdeKind kind) {
  switch (kind) {
    case DsdeKind::vp: return "vp";
    case DsdeKind::sub_vp: return "sub_vp";
    case DsdeKind::ve: return "ve";
  }
  throw std::logic_error("unknown DsdeKind");
}

DsdeKind dsde_kind_from_string(const std::string& s) {
  if (s == "vp") return DsdeKind::vp;
  if (s == "sub_vp") return DsdeKind::sub_vp;
  if (s == "ve") return DsdeKind::ve;
  throw std::invalid_argument("unknown dsde kind: '" + s +
                              "' (expected vp|sub_vp|ve)");
}

void DsdeSpec::validate() const {
  if (b.empty()) throw std::invalid_argument("DsdeSpec: b must be non-empty");
  for (double bi : b) {
    if (!(bi > 0.0) || !std::isfinite(bi))
      throw std::invalid_argument("DsdeSpec: all b_i must be positive finite");
  }
  if (!std::isfinite(a)) throw std::invalid_argument("DsdeSpec: a not finite");
  if (kind == DsdeKind::ve) {
    if (!(a > 1.0)) throw std::invalid_argument("DsdeSpec: VE requires a > 1");
  } else {
    if (!(a >= 0.0))
      throw std::invalid_argument("DsdeSpec: VP/sub-VP require a >= 0");
  }
}

DsdeSpec DsdeSpec::make(DsdeKind kind, double a, std::vector<double> b) {
  DsdeSpec spec{kind, a, std::move(b)};
  spec.validate();
  return spec;
}

void to_json(nlohmann::json& j, const DsdeSpec& spec) {
  j = nlohmann::json{
      {"kind", to_string(spec.kind)}, {"a", spec.a}, {"b", spec.b}};
}

void from_json(const nlohmann::json& j, DsdeSpec& spec) {
  spec.kind = dsde_kind_from_string(j.at("kind").get<std::string>());
  spec.a = j.at("a").get<double>();
  const auto& bj = j.at("b");
  if (bj.is_number()) {
    spec.b = {bj.get<double>()};
  } else {
    spec.b = bj.get<std::vector<double>>();
  }
  spec.validate();
}

namespace {

void check_time_in_unit(double t, const char* what) {
  if (!(t >= 0.0 && t <= 1.0))
    throw std::invalid_argument(std::string(what) + " outside [0,1]");
}

}  // namespace

std::vector<double> beta(const DsdeSpec& spec, double t) {
  const int d = spec.dim();
  std::vector<double> out(d);
  if (spec.kind == DsdeKind::ve) {
    check_time_in_unit(t, "beta: t");
    const double g = std::log(spec.a) * std::pow(spec.a, t);
    for (int i = 0; i < d; ++i) out[i] = spec.b[i] * g;
    return out;
  }
  if (!(t >= 0.0 && t < 1.0))
    throw std::invalid_argument("beta: t must lie in [0,1) for VP/sub-VP");
  const double g = std::pow(1.0 - t, -(1.0 + spec.a));
  for (int i = 0; i < d; ++i) out[i] = spec.b[i] * g;
  return out;
}

std::vector<double> tau(const DsdeSpec& spec, double t) {
  check_time_in_unit(t, "tau: t");
  const int d = spec.dim();
  std::vector<double> out(d);
  if (spec.kind == DsdeKind::ve) {
    const double g = std::pow(spec.a, t);
    for (int i = 0; i < d; ++i) out[i] = spec.b[i] * g;
    return out;
  }
  // t = 1 yields +inf through log/pow; exp(-tau) then saturates to 0.
  double g;
  if (spec.a == 0.0) {
    g = -std::log1p(-t);
  } else {
    g = (std::pow(1.0 - t, -spec.a) - 1.0) / spec.a;
  }
  for (int i = 0; i < d; ++i) out[i] = spec.b[i] * g;
  return out;
}

GaussMoments transition_moments(const DsdeSpec& spec, double u, double t,
                                std::span<const double> y) {
  check_time_in_unit(u, "transition_moments: u");
  check_time_in_unit(t, "transition_moments: t");
  if (u > t) throw std::invalid_argument("transition_moments: u > t");
  const int d = spec.dim();
  if (static_cast<int>(y.size()) != d)
    throw std::invalid_argument("transition_moments: y has wrong dimension");

  GaussMoments m;
  m.mean.assign(y.begin(), y.end());
  m.var.assign(d, 0.0);
  if (u == t) return m;  // identity kernel (also avoids inf - inf at t = 1)

  const std::vector<double> tau_u = tau(spec, u);
  const std::vector<double> tau_t = tau(spec, t);

  switch (spec.kind) {
    case DsdeKind::vp:
      for (int i = 0; i < d; ++i) {
        const double dtau = tau_t[i] - tau_u[i];
        m.mean[i] = y[i] * std::exp(-0.5 * dtau);
        m.var[i] = -std::expm1(-dtau);
      }
      break;
    case DsdeKind::sub_vp:
      // Conditional variance of the time-changed process
      //   Var(Z_tau | Z_sigma) = (1 - e^{-dtau})(1 - e^{-dtau - 2 tau(u)});
      // reduces to (1 - e^{-tau})^2 when started from u = 0.
      for (int i = 0; i < d; ++i) {
        const double dtau = tau_t[i] - tau_u[i];
        m.mean[i] = y[i] * std::exp(-0.5 * dtau);
        m.var[i] = -std::expm1(-dtau) * -std::expm1(-dtau - 2.0 * tau_u[i]);
      }
      break;
    case DsdeKind::ve:
      for (int i = 0; i < d; ++i) {
        m.var[i] = tau_t[i] - tau_u[i];
      }
      break;
  }
  return m;
}

DriftDiffusion drift_diffusion(const DsdeSpec& spec, double t,
                               std::span<const double> x) {
  const int d = spec.dim();
  if (static_cast<int>(x.size()) != d)
    throw std::invalid_argument("drift_diffusion: x has wrong dimension");
  const std::vector<double> bt = beta(spec, t);

  DriftDiffusion dd;
  dd.drift.assign(d, 0.0);
  dd.sigma.assign(d, 0.0);
  switch (spec.kind) {
    case DsdeKind::vp:
      for (int i = 0; i < d; ++i) {
        dd.drift[i] = -0.5 * bt[i] * x[i];
        dd.sigma[i] = std::sqrt(bt[i]);
      }
      break;
    case DsdeKind::sub_vp: {
      const std::vector<double> tau_t = tau(spec, t);
      for (int i = 0; i < d; ++i) {
        dd.drift[i] = -0.5 * bt[i] * x[i];
        dd.sigma[i] = std::sqrt(bt[i] * -std::expm1(-2.0 * tau_t[i]));
      }
      break;
    }
    case DsdeKind::ve:
      for (int i = 0; i < d; ++i) dd.sigma[i] = std::sqrt(bt[i]);
      break;
  }
  return dd;
}

}  // namespace mktdiff

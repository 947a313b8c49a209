// SPDX-License-Identifier: Apache-2.0
#include "mktdiff/dsm_objective.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mktdiff/quadrature.hpp"
#include "mktdiff/rng.hpp"
#include "parallel.hpp"

namespace mktdiff {

void ObjectiveConfig::validate() const {
  if (!(lambda0 >= 0.0) || !std::isfinite(lambda0))
    throw std::invalid_argument("ObjectiveConfig: lambda0 must be >= 0");
  if (gh_order < 1 || gh_order > 64)
    throw std::invalid_argument("ObjectiveConfig: gh_order must be in [1,64]");
  if (simpson_subintervals < 2 || simpson_subintervals % 2 != 0)
    throw std::invalid_argument("ObjectiveConfig: simpson_subintervals must be even");
  if (threads < 1)
    throw std::invalid_argument("ObjectiveConfig: threads must be >= 1");
}

std::vector<double> residual(const DsdeSpec& spec, double t,
                             std::span<const double> x_i, ResidualMode mode) {
  if (static_cast<int>(x_i.size()) != spec.dim())
    throw std::invalid_argument("residual: x has wrong dimension");
  std::vector<double> r(x_i.size(), 0.0);
  if (spec.kind == DsdeKind::ve) {
    if (mode == ResidualMode::paper_literal_ve)
      r.assign(x_i.begin(), x_i.end());
    return r;
  }
  const std::vector<double> tau_t = tau(spec, t);
  for (std::size_t k = 0; k < x_i.size(); ++k)
    r[k] = x_i[k] * -std::expm1(-0.5 * tau_t[k]);
  return r;
}

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

// softplus and its derivative from one exp() evaluation
inline void softplus_sigmoid(double u, double& sp, double& sg) {
  const double e = std::exp(-std::abs(u));
  sp = std::max(u, 0.0) + std::log1p(e);
  sg = u >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
}

inline double softplus_only(double u) {
  return std::max(u, 0.0) + std::log1p(std::exp(-std::abs(u)));
}

// Per-Simpson-node quantities shared by all data rows.
struct NodeContext {
  double t = 0.0;
  double sw = 0.0;                 // Simpson weight
  std::vector<double> var;         // d: C(t)
  std::vector<double> decay;       // d: mu(t, x) = decay * x
  std::vector<double> res_factor;  // d: r(t, x) = res_factor * x
  std::vector<double> norm;        // h: ||w_j||_C
  std::vector<double> cang, sang;  // h*h: angle cos / |sin| in the C metric
};

NodeContext make_node_context(const ScoreParams& th, const DsdeSpec& spec,
                              const ObjectiveConfig& cfg, double t, double sw) {
  const int d = th.d, h = th.h;
  NodeContext nc;
  nc.t = t;
  nc.sw = sw;
  nc.var.resize(d);
  nc.decay.resize(d);
  nc.res_factor.resize(d);

  if (spec.kind == DsdeKind::ve) {
    const std::vector<double> tau_t = tau(spec, t);
    const std::vector<double> tau_0 = tau(spec, 0.0);
    for (int k = 0; k < d; ++k) {
      nc.var[k] = tau_t[k] - tau_0[k];
      nc.decay[k] = 1.0;
      nc.res_factor[k] =
          cfg.residual_mode == ResidualMode::paper_literal_ve ? 1.0 : 0.0;
    }
  } else {
    const std::vector<double> tau_t = tau(spec, t);
    for (int k = 0; k < d; ++k) {
      const double e1 = -std::expm1(-tau_t[k]);  // 1 - e^{-tau}
      nc.var[k] = spec.kind == DsdeKind::vp ? e1 : e1 * e1;
      nc.decay[k] = std::exp(-0.5 * tau_t[k]);
      nc.res_factor[k] = -std::expm1(-0.5 * tau_t[k]);
    }
  }

  nc.norm.resize(h);
  for (int j = 0; j < h; ++j) {
    double s = 0.0;
    for (int m = 0; m < d; ++m) {
      const double wj = th.w_at(j, m);
      s += wj * wj * nc.var[m];
    }
    nc.norm[j] = std::sqrt(s);
  }

  nc.cang.assign(static_cast<std::size_t>(h) * h, 0.0);
  nc.sang.assign(static_cast<std::size_t>(h) * h, 1.0);
  for (int j = 0; j < h; ++j) {
    nc.cang[static_cast<std::size_t>(j) * h + j] = 1.0;
    nc.sang[static_cast<std::size_t>(j) * h + j] = 0.0;
    for (int k = j + 1; k < h; ++k) {
      double c = 0.0, s = 1.0;
      if (nc.norm[j] > 0.0 && nc.norm[k] > 0.0) {
        double dot = 0.0;
        for (int m = 0; m < d; ++m)
          dot += th.w_at(j, m) * th.w_at(k, m) * nc.var[m];
        c = std::clamp(dot / (nc.norm[j] * nc.norm[k]), -1.0, 1.0);
        s = std::sqrt(std::max(0.0, 1.0 - c * c));
      }
      nc.cang[static_cast<std::size_t>(j) * h + k] = c;
      nc.cang[static_cast<std::size_t>(k) * h + j] = c;
      nc.sang[static_cast<std::size_t>(j) * h + k] = s;
      nc.sang[static_cast<std::size_t>(k) * h + j] = s;
    }
  }
  return nc;
}

struct Scratch {
  std::vector<double> mean, rho;       // d
  std::vector<double> mdot, i1, v;     // h
  std::vector<double> s1, s1z;         // h (gradient reductions of I1)
  std::vector<double> a, p;            // h*D activation tables
  std::vector<double> i2;              // h*h
  std::vector<double> row_r, row_rp, row_rpz;  // D
  std::vector<double> bvals, bderiv;   // D (parallel fallback)

  void resize(int d, int h, int D) {
    mean.resize(d);
    rho.resize(d);
    mdot.resize(h);
    i1.resize(h);
    v.resize(h);
    s1.resize(h);
    s1z.resize(h);
    a.resize(static_cast<std::size_t>(h) * D);
    p.resize(static_cast<std::size_t>(h) * D);
    i2.resize(static_cast<std::size_t>(h) * h);
    row_r.resize(D);
    row_rp.resize(D);
    row_rpz.resize(D);
    bvals.resize(D);
    bderiv.resize(D);
  }
};

/// Evaluates one (data row, time node) cell; adds fac * cell value to the
/// returned loss and, when grad is non-null, the exact derivative
/// contributions into it.
double eval_cell(const ScoreParams& th, std::span<const double> x,
                 const NodeContext& nc, const std::vector<double>& sz,
                 const std::vector<double>& qw, const std::vector<double>& gram,
                 double fac, ScoreParams* grad, Scratch& s) {
  const int d = th.d, h = th.h;
  const int D = static_cast<int>(sz.size());
  const bool want_grad = grad != nullptr;

  double term_a = 0.0;
  for (int k = 0; k < d; ++k) {
    s.mean[k] = nc.decay[k] * x[k];
    s.rho[k] = nc.res_factor[k] * x[k] + th.d_out[k];
    term_a += 0.5 * s.rho[k] * s.rho[k];
  }

  for (int j = 0; j < h; ++j) {
    double u = th.b[j];
    for (int m = 0; m < d; ++m) u += th.w_at(j, m) * s.mean[m];
    s.mdot[j] = u;
  }

  for (int j = 0; j < h; ++j) {
    const double nj = nc.norm[j];
    double i1 = 0.0, s1 = 0.0, s1z = 0.0;
    for (int p = 0; p < D; ++p) {
      const double u = nj * sz[p] + s.mdot[j];
      double sp, sg;
      if (want_grad) {
        softplus_sigmoid(u, sp, sg);
        s.p[static_cast<std::size_t>(j) * D + p] = sg;
        s1 += qw[p] * sg;
        s1z += qw[p] * sg * sz[p];
      } else {
        sp = softplus_only(u);
      }
      s.a[static_cast<std::size_t>(j) * D + p] = sp;
      i1 += qw[p] * sp;
    }
    s.i1[j] = i1;
    s.s1[j] = s1;
    s.s1z[j] = s1z;
  }

  double term_b = 0.0;
  for (int j = 0; j < h; ++j) {
    double vj = 0.0;
    for (int k = 0; k < d; ++k) vj += th.c_at(k, j) * s.rho[k];
    s.v[j] = vj;
    term_b += vj * s.i1[j];
  }

  double term_c = 0.0;
  for (int j = 0; j < h; ++j) {
    const double nj = nc.norm[j];
    const double* arow_j = &s.a[static_cast<std::size_t>(j) * D];
    const double* prow_j = &s.p[static_cast<std::size_t>(j) * D];
    for (int k = j; k < h; ++k) {
      const double nk = nc.norm[k];
      const double cang = nc.cang[static_cast<std::size_t>(j) * h + k];
      const double sang = nc.sang[static_cast<std::size_t>(j) * h + k];
      const double g = gram[static_cast<std::size_t>(j) * h + k];
      const double pcoef = (j == k ? 0.5 : 1.0) * g;

      const bool fallback =
          j == k || (nj > 0.0 && nk > 0.0 &&
                     sang < quad_detail::kParallelSinEps);

      double i2 = 0.0;
      double dm_j = 0.0, dn_j = 0.0, dm_k = 0.0, dn_k = 0.0, dangle = 0.0;

      if (fallback) {
        const double sign = cang < 0.0 ? -1.0 : 1.0;
        if (j == k) {
          for (int p = 0; p < D; ++p) {
            s.bvals[p] = arow_j[p];
            if (want_grad) s.bderiv[p] = prow_j[p];
          }
        } else {
          for (int p = 0; p < D; ++p) {
            const double u = sign * nk * sz[p] + s.mdot[k];
            if (want_grad)
              softplus_sigmoid(u, s.bvals[p], s.bderiv[p]);
            else
              s.bvals[p] = softplus_only(u);
          }
        }
        for (int p = 0; p < D; ++p) {
          const double wp = qw[p];
          i2 += wp * arow_j[p] * s.bvals[p];
          if (want_grad) {
            dm_j += wp * prow_j[p] * s.bvals[p];
            dn_j += wp * prow_j[p] * sz[p] * s.bvals[p];
            dm_k += wp * arow_j[p] * s.bderiv[p];
            dn_k += sign * wp * arow_j[p] * s.bderiv[p] * sz[p];
          }
        }
      } else {
        for (int p = 0; p < D; ++p) {
          const double base = nk * cang * sz[p] + s.mdot[k];
          double r = 0.0, rp = 0.0, rpz = 0.0;
          if (want_grad) {
            for (int q = 0; q < D; ++q) {
              double sp, sg;
              softplus_sigmoid(base + nk * sang * sz[q], sp, sg);
              r += qw[q] * sp;
              rp += qw[q] * sg;
              rpz += qw[q] * sg * sz[q];
            }
          } else {
            for (int q = 0; q < D; ++q)
              r += qw[q] * softplus_only(base + nk * sang * sz[q]);
          }
          s.row_r[p] = r;
          s.row_rp[p] = rp;
          s.row_rpz[p] = rpz;
        }
        for (int p = 0; p < D; ++p) {
          const double wp = qw[p];
          i2 += wp * arow_j[p] * s.row_r[p];
          if (want_grad) {
            dm_j += wp * prow_j[p] * s.row_r[p];
            dn_j += wp * prow_j[p] * sz[p] * s.row_r[p];
            dm_k += wp * arow_j[p] * s.row_rp[p];
            dn_k += wp * arow_j[p] *
                    (sang * s.row_rpz[p] + cang * sz[p] * s.row_rp[p]);
            dangle += wp * arow_j[p] *
                      (sz[p] * s.row_rp[p] - (cang / sang) * s.row_rpz[p]);
          }
        }
        dangle *= nk;
      }

      s.i2[static_cast<std::size_t>(j) * h + k] = i2;
      s.i2[static_cast<std::size_t>(k) * h + j] = i2;
      term_c += pcoef * i2;

      if (want_grad && pcoef != 0.0) {
        const double w = fac * pcoef;
        grad->b[j] += w * dm_j;
        grad->b[k] += w * dm_k;
        const bool angle_free = !fallback && nj > 0.0 && nk > 0.0;
        for (int m = 0; m < d; ++m) {
          const double vm = nc.var[m];
          const double wjm = th.w_at(j, m);
          const double wkm = th.w_at(k, m);
          const double dnj_dw = nj > 0.0 ? wjm * vm / nj : 0.0;
          const double dnk_dw = nk > 0.0 ? wkm * vm / nk : 0.0;
          double gj = dn_j * dnj_dw + dm_j * s.mean[m];
          double gk = dn_k * dnk_dw + dm_k * s.mean[m];
          if (angle_free) {
            gj += dangle * (wkm * vm / (nj * nk) - cang * wjm * vm / (nj * nj));
            gk += dangle * (wjm * vm / (nj * nk) - cang * wkm * vm / (nk * nk));
          }
          grad->w_at(j, m) += w * gj;
          grad->w_at(k, m) += w * gk;
        }
      }
    }
  }

  if (want_grad) {
    for (int m = 0; m < d; ++m) {
      double acc = s.rho[m];
      for (int j = 0; j < h; ++j) acc += th.c_at(m, j) * s.i1[j];
      grad->d_out[m] += fac * acc;
    }
    for (int m = 0; m < d; ++m)
      for (int j = 0; j < h; ++j) {
        double acc = s.rho[m] * s.i1[j];
        for (int k = 0; k < h; ++k)
          acc += th.c_at(m, k) * s.i2[static_cast<std::size_t>(j) * h + k];
        grad->c_at(m, j) += fac * acc;
      }
    for (int j = 0; j < h; ++j) {
      grad->b[j] += fac * s.v[j] * s.s1[j];
      const double nj = nc.norm[j];
      for (int m = 0; m < d; ++m) {
        const double dnj_dw = nj > 0.0 ? th.w_at(j, m) * nc.var[m] / nj : 0.0;
        grad->w_at(j, m) +=
            fac * s.v[j] * (s.s1z[j] * dnj_dw + s.s1[j] * s.mean[m]);
      }
    }
  }

  return term_a + term_b + term_c;
}

struct EvalSetup {
  std::vector<int> batch;
  std::vector<double> sz, qw;        // sqrt(2) * nodes, weights
  std::vector<NodeContext> nodes;
  std::vector<double> gram;          // h*h: (c^T c)[j][k]
};

EvalSetup prepare(const ScoreParams& theta, const ReturnsDataset& ds,
                  const DsdeSpec& spec, const ObjectiveConfig& cfg,
                  const std::vector<int>* batch) {
  theta.validate();
  cfg.validate();
  spec.validate();
  if (theta.d != ds.d() || theta.d != spec.dim())
    throw std::invalid_argument("objective: dimension mismatch");

  EvalSetup setup;
  if (batch) {
    if (batch->empty())
      throw std::invalid_argument("objective: empty batch");
    for (int i : *batch)
      if (i < 0 || i >= ds.n())
        throw std::out_of_range("objective: batch index out of range");
    setup.batch = *batch;
  } else {
    setup.batch.resize(ds.n());
    for (int i = 0; i < ds.n(); ++i) setup.batch[i] = i;
  }

  const QuadRule rule =
      make_quad_rule(cfg.gh_order, cfg.simpson_subintervals);
  setup.sz.resize(rule.order);
  for (int p = 0; p < rule.order; ++p) setup.sz[p] = kSqrt2 * rule.nodes[p];
  setup.qw = rule.weights;

  setup.nodes.reserve(rule.simpson_nodes.size());
  for (std::size_t node = 0; node < rule.simpson_nodes.size(); ++node)
    setup.nodes.push_back(make_node_context(theta, spec, cfg,
                                            rule.simpson_nodes[node],
                                            rule.simpson_weights[node]));

  const int h = theta.h;
  setup.gram.assign(static_cast<std::size_t>(h) * h, 0.0);
  for (int j = 0; j < h; ++j)
    for (int k = j; k < h; ++k) {
      double g = 0.0;
      for (int l = 0; l < theta.d; ++l)
        g += theta.c_at(l, j) * theta.c_at(l, k);
      setup.gram[static_cast<std::size_t>(j) * h + k] = g;
      setup.gram[static_cast<std::size_t>(k) * h + j] = g;
    }
  return setup;
}

double evaluate(const ScoreParams& theta, const ReturnsDataset& ds,
                const DsdeSpec& spec, const ObjectiveConfig& cfg,
                const std::vector<int>* batch, ScoreParams* grad_out) {
  const EvalSetup setup = prepare(theta, ds, spec, cfg, batch);
  const int nprime = static_cast<int>(setup.batch.size());
  const double inv_n = 1.0 / nprime;
  const int nchunks = std::min(cfg.threads, nprime);

  std::vector<double> chunk_loss(std::max(nchunks, 1), 0.0);
  std::vector<ScoreParams> chunk_grad;
  if (grad_out)
    chunk_grad.assign(std::max(nchunks, 1),
                      ScoreParams::zeros(theta.d, theta.h));

  detail::run_chunked(nprime, cfg.threads, [&](int chunk, int begin, int end) {
    Scratch scratch;
    scratch.resize(theta.d, theta.h, static_cast<int>(setup.sz.size()));
    ScoreParams* grad = grad_out ? &chunk_grad[chunk] : nullptr;
    double loss = 0.0;
    for (int bi = begin; bi < end; ++bi) {
      const std::span<const double> x = ds.row(setup.batch[bi]);
      for (const NodeContext& nc : setup.nodes) {
        const double fac = nc.sw * cfg.lambda0 * inv_n;
        loss += fac * eval_cell(theta, x, nc, setup.sz, setup.qw, setup.gram,
                                fac, grad, scratch);
      }
    }
    chunk_loss[chunk] = loss;
  });

  double loss = 0.0;
  for (double l : chunk_loss) loss += l;
  if (grad_out) {
    *grad_out = ScoreParams::zeros(theta.d, theta.h);
    for (const ScoreParams& g : chunk_grad) {
      for (std::size_t i = 0; i < g.w.size(); ++i) grad_out->w[i] += g.w[i];
      for (std::size_t i = 0; i < g.b.size(); ++i) grad_out->b[i] += g.b[i];
      for (std::size_t i = 0; i < g.c.size(); ++i) grad_out->c[i] += g.c[i];
      for (std::size_t i = 0; i < g.d_out.size(); ++i)
        grad_out->d_out[i] += g.d_out[i];
    }
  }
  return loss;
}

}  // namespace

double objective(const ScoreParams& theta, const ReturnsDataset& ds,
                 const DsdeSpec& spec, const ObjectiveConfig& cfg,
                 const std::vector<int>* batch) {
  return evaluate(theta, ds, spec, cfg, batch, nullptr);
}

ScoreParams gradient(const ScoreParams& theta, const ReturnsDataset& ds,
                     const DsdeSpec& spec, const ObjectiveConfig& cfg,
                     const std::vector<int>* batch) {
  ScoreParams grad;
  evaluate(theta, ds, spec, cfg, batch, &grad);
  return grad;
}

McResult mc_oracle(const ScoreParams& theta, const ReturnsDataset& ds,
                   const DsdeSpec& spec, const ObjectiveConfig& cfg,
                   long samples, std::uint64_t seed) {
  if (samples < 100)
    throw std::invalid_argument("mc_oracle: need at least 100 samples");
  const EvalSetup setup = prepare(theta, ds, spec, cfg, nullptr);
  const int n = ds.n();
  const int d = theta.d;
  const int nnodes = static_cast<int>(setup.nodes.size());
  const int ncells = n * nnodes;
  const double inv_n = 1.0 / n;
  const long per_cell = samples;  // N draws for every (row, node) cell

  std::vector<double> cell_mean(ncells, 0.0), cell_var(ncells, 0.0);

  detail::run_chunked(ncells, cfg.threads, [&](int, int begin, int end) {
    std::vector<double> x(d), hidden(theta.h), kx(d), sqrtv(d), mean(d), r(d);
    for (int cell = begin; cell < end; ++cell) {
      const int i = cell / nnodes;
      const NodeContext& nc = setup.nodes[cell % nnodes];
      const std::span<const double> xi = ds.row(i);
      for (int k = 0; k < d; ++k) {
        mean[k] = nc.decay[k] * xi[k];
        sqrtv[k] = std::sqrt(nc.var[k]);
        r[k] = nc.res_factor[k] * xi[k];
      }
      rng::Stream stream(seed, static_cast<std::uint64_t>(cell));
      double sum = 0.0, sumsq = 0.0;
      for (long s = 0; s < per_cell; ++s) {
        for (int k = 0; k < d; ++k)
          x[k] = mean[k] + sqrtv[k] * stream.next_gaussian();
        for (int j = 0; j < theta.h; ++j) {
          double u = theta.b[j];
          for (int m = 0; m < d; ++m) u += theta.w_at(j, m) * x[m];
          hidden[j] = softplus_only(u);
        }
        double val = 0.0;
        for (int k = 0; k < d; ++k) {
          double kk = theta.d_out[k];
          for (int j = 0; j < theta.h; ++j)
            kk += theta.c_at(k, j) * hidden[j];
          const double e = kk + r[k];
          val += e * e;
        }
        val *= 0.5 * cfg.lambda0;
        sum += val;
        sumsq += val * val;
      }
      const double m1 = sum / per_cell;
      cell_mean[cell] = m1;
      cell_var[cell] =
          std::max(0.0, (sumsq - per_cell * m1 * m1) / (per_cell - 1));
    }
  });

  McResult out;
  double var_acc = 0.0;
  for (int cell = 0; cell < ncells; ++cell) {
    const double coeff = setup.nodes[cell % nnodes].sw * inv_n;
    out.value += coeff * cell_mean[cell];
    var_acc += coeff * coeff * cell_var[cell] / per_cell;
  }
  out.std_error = std::sqrt(var_acc);
  return out;
}

}  // namespace mktdiff

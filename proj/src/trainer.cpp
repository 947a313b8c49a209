// SPDX-License-Identifier: Apache-2.0
#include "mktdiff/trainer.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "mktdiff/rng.hpp"

namespace mktdiff {

void TrainConfig::validate(int n) const {
  if (epochs < 0) throw std::invalid_argument("TrainConfig: epochs < 0");
  if (batch_size < 1 || batch_size > n)
    throw std::invalid_argument("TrainConfig: batch_size must be in [1, n]");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) ||
      !(adam_beta2 > 0.0 && adam_beta2 < 1.0))
    throw std::invalid_argument("TrainConfig: adam betas must lie in (0,1)");
  if (!(adam_eps > 0.0))
    throw std::invalid_argument("TrainConfig: adam_eps must be > 0");
  if (hidden < 1) throw std::invalid_argument("TrainConfig: hidden must be >= 1");
  if (checkpoint_every < 1)
    throw std::invalid_argument("TrainConfig: checkpoint_every must be >= 1");
}

OptimizerState OptimizerState::zeros_like(const ScoreParams& p) {
  OptimizerState st;
  st.m = ScoreParams::zeros(p.d, p.h);
  st.v = ScoreParams::zeros(p.d, p.h);
  return st;
}

namespace {

void adam_update_field(std::vector<double>& theta, const std::vector<double>& g,
                       std::vector<double>& m, std::vector<double>& v,
                       double lr, double b1, double b2, double eps,
                       double bc1, double bc2) {
  for (std::size_t i = 0; i < theta.size(); ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    theta[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

}  // namespace

void adam_step(ScoreParams& theta, const ScoreParams& grad,
               OptimizerState& state, const TrainConfig& cfg) {
  if (theta.d != grad.d || theta.h != grad.h ||
      theta.d != state.m.d || theta.h != state.m.h)
    throw std::invalid_argument("adam_step: shape mismatch");
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.adam_beta1, state.step);
  const double bc2 = 1.0 - std::pow(cfg.adam_beta2, state.step);
  adam_update_field(theta.w, grad.w, state.m.w, state.v.w, cfg.learning_rate,
                    cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, bc1, bc2);
  adam_update_field(theta.b, grad.b, state.m.b, state.v.b, cfg.learning_rate,
                    cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, bc1, bc2);
  adam_update_field(theta.c, grad.c, state.m.c, state.v.c, cfg.learning_rate,
                    cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, bc1, bc2);
  adam_update_field(theta.d_out, grad.d_out, state.m.d_out, state.v.d_out,
                    cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2,
                    cfg.adam_eps, bc1, bc2);
}

TrainResult train(const ReturnsDataset& ds, const DsdeSpec& spec,
                  const ObjectiveConfig& obj_cfg, const TrainConfig& train_cfg,
                  const CheckpointHook& hook) {
  train_cfg.validate(ds.n());
  obj_cfg.validate();

  TrainResult result;
  result.params = init_params(ds.d(), train_cfg.hidden, train_cfg.seed);
  OptimizerState state = OptimizerState::zeros_like(result.params);

  auto full_loss = [&]() {
    const double loss = objective(result.params, ds, spec, obj_cfg);
    if (!std::isfinite(loss))
      throw NumericError("train: non-finite loss");
    return loss;
  };
  result.loss_history.push_back(full_loss());

  std::vector<int> order(ds.n());
  for (int i = 0; i < ds.n(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= train_cfg.epochs; ++epoch) {
    if (train_cfg.shuffle) {
      // Fisher-Yates off a per-epoch stream
      rng::Stream stream(train_cfg.seed, 0x10000000u + epoch);
      for (int i = ds.n() - 1; i > 0; --i) {
        const int j = static_cast<int>(stream.next_below(i + 1));
        std::swap(order[i], order[j]);
      }
    }
    for (int begin = 0; begin < ds.n(); begin += train_cfg.batch_size) {
      const int end = std::min(begin + train_cfg.batch_size, ds.n());
      const std::vector<int> batch(order.begin() + begin, order.begin() + end);
      const ScoreParams grad =
          gradient(result.params, ds, spec, obj_cfg, &batch);
      adam_step(result.params, grad, state, train_cfg);
    }
    result.loss_history.push_back(full_loss());
    if (hook && epoch % train_cfg.checkpoint_every == 0 &&
        epoch != train_cfg.epochs)
      hook(epoch, result.params, result.loss_history);
  }
  if (hook) hook(train_cfg.epochs, result.params, result.loss_history);
  return result;
}

void write_loss_csv(const std::string& path,
                    const std::vector<double>& history) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open loss file: " + path);
  out.precision(17);
  out << "epoch,loss\n";
  for (std::size_t e = 0; e < history.size(); ++e)
    out << e << ',' << history[e] << '\n';
}

}  // namespace mktdiff

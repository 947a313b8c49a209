// SPDX-License-Identifier: Apache-2.0
#ifndef MKTDIFF_TRAINER_HPP
#define MKTDIFF_TRAINER_HPP

/**
 * @file trainer.hpp
 * @brief Mini-batch Adam optimization of the score network against the
 *        quadrature DSM objective.
 *
 * Training is deterministic given (data, config, seed): the parameter init,
 * the per-epoch shuffles, and the gradient reductions all run off counter
 * -based streams, and epoch losses are recorded from full-dataset objective
 * evaluations.
 */

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mktdiff/data_ingest.hpp"
#include "mktdiff/dsde.hpp"
#include "mktdiff/dsm_objective.hpp"
#include "mktdiff/score_net.hpp"

namespace mktdiff {

/// Training failed numerically (non-finite loss or gradient).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  int epochs = 0;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  bool shuffle = true;
  int hidden = 16;          // h
  int checkpoint_every = 100;

  void validate(int n) const;  // n = dataset rows
};

struct OptimizerState {
  ScoreParams m;  // first-moment accumulator
  ScoreParams v;  // second-moment accumulator, entries >= 0
  long step = 0;

  static OptimizerState zeros_like(const ScoreParams& p);
};

/// One bias-corrected Adam update; increments the step counter.
void adam_step(ScoreParams& theta, const ScoreParams& grad,
               OptimizerState& state, const TrainConfig& cfg);

struct TrainResult {
  ScoreParams params;
  /// loss_history[0] is the initial full-dataset loss; entry e >= 1 is the
  /// full-dataset loss after epoch e.
  std::vector<double> loss_history;
};

/// Invoked after every `checkpoint_every` epochs and once at the end.
using CheckpointHook =
    std::function<void(int epoch, const ScoreParams&, const std::vector<double>& loss_history)>;

TrainResult train(const ReturnsDataset& ds, const DsdeSpec& spec,
                  const ObjectiveConfig& obj_cfg, const TrainConfig& train_cfg,
                  const CheckpointHook& hook = nullptr);

/// Loss history CSV: header `epoch,loss`.
void write_loss_csv(const std::string& path,
                    const std::vector<double>& history);

}  // namespace mktdiff

#endif  // MKTDIFF_TRAINER_HPP

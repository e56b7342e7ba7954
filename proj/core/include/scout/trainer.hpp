#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "scout/adam.hpp"
#include "scout/dataset.hpp"
#include "scout/model.hpp"

namespace scout {

struct TrainConfig {
  ModelConfig model;
  LossWeights weights;
  AdamConfig adam;
  int batch_size = 512;
  int epochs = 200;
  std::uint64_t seed = 0;
  /// K x d (1 = intervened); when set, psi is frozen to it.
  std::optional<Eigen::MatrixXi> known_targets;

  void validate() const;
};

struct EpochMetrics {
  int epoch = 0;  // 1-based
  double mean_loss = 0.0;
  std::optional<double> graph_auprc;
  std::optional<double> target_auprc;
  double wallclock_s = 0.0;
};

struct StepInfo {
  int epoch = 0;
  int batch = 0;
  double loss = 0.0;
  const ModelState* state = nullptr;
};

struct TrainCallbacks {
  /// After every optimiser step (and the Lipschitz projection).
  std::function<void(const StepInfo&)> on_step;
  /// After every epoch with that epoch's metrics.
  std::function<void(const EpochMetrics&, const ModelState&)> on_epoch;
};

struct TrainResult {
  ModelState state;
  std::vector<EpochMetrics> metrics;
  int epochs_completed = 0;
  bool diverged = false;
  std::string diagnostics;  // set when training stopped on a numerical failure
};

/// Initial state for a dataset under a configuration (rng substream "init").
ModelState initial_state(const Dataset& data, const TrainConfig& config);

/// Minibatch training: each epoch shuffles the rows, splits them into
/// floor(N / B) batches (a single batch when N < B) and for each batch samples
/// masks, evaluates the loss, takes an Adam step and projects theta and
/// theta~ back to the Lipschitz bound. A non-finite loss or gradient stops
/// training and returns the last good state with diverged = true.
TrainResult train(const Dataset& data, const TrainConfig& config, const TrainCallbacks& callbacks = {});

/// Training continued from an explicit state.
TrainResult train(const Dataset& data, const TrainConfig& config, ModelState state,
                  const TrainCallbacks& callbacks = {});

/// CSV with header epoch,mean_loss,graph_auprc,target_auprc,wallclock_s; missing AUPRCs are left empty.
std::string metrics_to_csv(const std::vector<EpochMetrics>& metrics);

/// Mean loss over all full batches of a dataset at a fixed state, with masks and
/// series draws from `seed` (useful for monitoring without updating).
double evaluate_loss(const Dataset& data, const TrainConfig& config, const ModelState& state, std::uint64_t seed);

}  // namespace scout

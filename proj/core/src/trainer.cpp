#include "scout/trainer.hpp"

#include <chrono>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "scout/errors.hpp"
#include "scout/metrics.hpp"

namespace scout {

void TrainConfig::validate() const {
  model.validate();
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (!(adam.lr > 0) || !(adam.eps > 0) || !(adam.beta1 >= 0 && adam.beta1 < 1) || !(adam.beta2 >= 0 && adam.beta2 < 1)) {
    throw ConfigError("invalid Adam settings");
  }
  if (!(weights.lambda_graph >= 0) || !(weights.lambda_target >= 0)) {
    throw ConfigError("regulariser weights must be non-negative");
  }
}

ModelState initial_state(const Dataset& data, const TrainConfig& config) {
  config.validate();
  data.validate();
  Rng rng = Rng(config.seed).substream("init");
  ModelState state = ModelState::init(data.d, data.num_experiments, config.model, rng);
  if (config.known_targets) freeze_targets(state, *config.known_targets);
  return state;
}

namespace {

std::vector<std::vector<Eigen::Index>> make_batches(Eigen::Index n, int batch_size, Rng& rng) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  for (std::size_t i = order.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_index(i));
    std::swap(order[i - 1], order[j]);
  }
  std::vector<std::vector<Eigen::Index>> batches;
  const auto b = static_cast<std::size_t>(batch_size);
  if (order.size() < b) {
    batches.push_back(order);
    return batches;
  }
  for (std::size_t start = 0; start + b <= order.size(); start += b) {
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(start + b));
  }
  return batches;
}

struct Batch {
  Eigen::MatrixXd x;
  std::vector<int> experiment;
};

Batch gather(const Dataset& data, const std::vector<Eigen::Index>& rows) {
  Batch b;
  b.x.resize(static_cast<Eigen::Index>(rows.size()), data.d);
  b.experiment.resize(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    b.x.row(static_cast<Eigen::Index>(r)) = data.x.row(rows[r]);
    b.experiment[r] = data.experiment[static_cast<std::size_t>(rows[r])];
  }
  return b;
}

// Builds the loss for one batch on `tape` with draws from `rng`.
BatchLoss build_loss(ad::Tape& tape, ModelVars& vars, const Batch& batch, const ModelState& state,
                     const TrainConfig& config, Rng& rng) {
  vars = record_parameters(tape, state, config.model);
  const MaskSample masks =
      sample_masks(state.phi, state.psi, config.model.tau_graph, config.model.tau_target, rng);
  std::optional<BatchSeriesDraw> series;
  if (config.model.logdet == LogdetMode::Series) {
    series = draw_batch_series(batch.x.rows(), state.d, config.model.poisson_mean, rng);
  }
  return batch_loss(tape, vars, state, batch.x, batch.experiment, masks, config.model, config.weights,
                    config.model.logdet, series ? &*series : nullptr);
}

std::optional<double> graph_score(const Dataset& data, const ModelState& state) {
  if (!data.truth || data.truth->graph.size() != state.d) return std::nullopt;
  if (data.truth->graph.adjacency().sum() == 0) return std::nullopt;
  return graph_recovery(state.edge_probabilities(), data.truth->graph);
}

std::optional<double> target_score(const Dataset& data, const ModelState& state) {
  if (!data.truth) return std::nullopt;
  const auto& t = data.truth->targets;
  if (t.rows() != state.num_experiments || t.cols() != state.d || t.sum() == 0) return std::nullopt;
  return target_recovery(state.target_probabilities(), t);
}

}  // namespace

TrainResult train(const Dataset& data, const TrainConfig& config, const TrainCallbacks& callbacks) {
  return train(data, config, initial_state(data, config), callbacks);
}

TrainResult train(const Dataset& data, const TrainConfig& config, ModelState state,
                  const TrainCallbacks& callbacks) {
  config.validate();
  data.validate();
  state.validate();
  if (data.rows() == 0) throw ConfigError("cannot train on an empty dataset");
  if (state.d != data.d || state.num_experiments != data.num_experiments) {
    throw ConfigError("model state does not match the dataset dimensions");
  }

  TrainResult result;
  AdamState adam;
  const Rng root(config.seed);
  const auto t0 = std::chrono::steady_clock::now();

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng shuffle_rng = root.substream("shuffle", static_cast<std::uint64_t>(epoch));
    const auto batches = make_batches(data.rows(), config.batch_size, shuffle_rng);
    double loss_sum = 0.0;
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      const Batch batch = gather(data, batches[bi]);
      Rng step_rng = root.substream("step", static_cast<std::uint64_t>(epoch) * 1000003ULL + bi);
      const ModelState last_good = state;
      try {
        ad::Tape tape;
        ModelVars vars;
        const BatchLoss loss = build_loss(tape, vars, batch, state, config, step_rng);
        const double value = loss.loss.scalar();
        if (!std::isfinite(value)) throw NumericalError("loss is not finite");
        tape.backward(loss.loss);

        std::vector<Eigen::MatrixXd*> params{&state.theta, &state.theta_tilde, &state.spline_obs, &state.spline_int,
                                             &state.phi};
        std::vector<Eigen::MatrixXd> grads{vars.theta.grad(), vars.theta_tilde.grad(), vars.spline_obs.grad(),
                                           vars.spline_int.grad(), vars.phi.grad()};
        Eigen::MatrixXd log_lambda_row;
        if (!state.targets_known) {
          params.push_back(&state.psi);
          grads.push_back(vars.psi.grad());
        }
        if (config.model.precondition) {
          log_lambda_row = state.log_lambda.transpose();
          params.push_back(&log_lambda_row);
          grads.push_back(vars.log_lambda.grad());
        }
        adam_step(params, grads, adam, config.adam);
        if (config.model.precondition) state.log_lambda = log_lambda_row.transpose();
        rescale_model(state, config.model.lipschitz);
        if (!state.theta.allFinite() || !state.theta_tilde.allFinite()) {
          throw NumericalError("parameters became non-finite after the update");
        }
        loss_sum += value;
        if (callbacks.on_step) callbacks.on_step({epoch, static_cast<int>(bi), value, &state});
      } catch (const NumericalError& e) {
        std::ostringstream msg;
        msg << "numerical failure at epoch " << epoch << ", batch " << bi << ": " << e.what();
        result.state = last_good;
        result.diverged = true;
        result.diagnostics = msg.str();
        result.epochs_completed = epoch - 1;
        return result;
      }
    }
    EpochMetrics m;
    m.epoch = epoch;
    m.mean_loss = loss_sum / static_cast<double>(batches.size());
    m.graph_auprc = graph_score(data, state);
    m.target_auprc = target_score(data, state);
    m.wallclock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.metrics.push_back(m);
    result.epochs_completed = epoch;
    if (callbacks.on_epoch) callbacks.on_epoch(m, state);
  }
  result.state = std::move(state);
  return result;
}

std::string metrics_to_csv(const std::vector<EpochMetrics>& metrics) {
  std::string out = "epoch,mean_loss,graph_auprc,target_auprc,wallclock_s\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  for (const auto& m : metrics) {
    out += std::to_string(m.epoch) + "," + num(m.mean_loss) + ",";
    if (m.graph_auprc) out += num(*m.graph_auprc);
    out += ",";
    if (m.target_auprc) out += num(*m.target_auprc);
    std::snprintf(buf, sizeof(buf), ",%.3f\n", m.wallclock_s);
    out += buf;
  }
  return out;
}

double evaluate_loss(const Dataset& data, const TrainConfig& config, const ModelState& state, std::uint64_t seed) {
  Rng rng(seed);
  const auto batches = make_batches(data.rows(), config.batch_size, rng);
  double total = 0.0;
  for (const auto& rows : batches) {
    ad::Tape tape;
    ModelVars vars;
    total += build_loss(tape, vars, gather(data, rows), state, config, rng).loss.scalar();
  }
  return total / static_cast<double>(batches.size());
}

}  // namespace scout

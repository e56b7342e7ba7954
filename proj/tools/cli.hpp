#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "scout/dataset.hpp"
#include "scout/trainer.hpp"

namespace scout::cli {

/// Everything a run needs. Defaults reproduce the standard synthetic protocol
/// and the published training hyperparameters.
struct RunConfig {
  // data generation
  int nodes = 10;
  double density = 2.0;
  std::string sem = "nonlinear";
  std::string noise = "gaussian";
  std::optional<double> noise_param1;  // family default when unset
  std::optional<double> noise_param2;
  std::string intervention = "shift";
  double shift = 2.0;
  double scale = 2.0;
  double alpha = -1.0;
  double hard_shift = 0.0;
  int samples = 1000;
  std::string design = "single";  // single | single+obs | random
  int max_targets = 1;            // random design: targets per experiment drawn from 1..max_targets
  long cycles = -1;               // exact simple-cycle count, -1 = unconstrained
  double lipschitz = 0.9;
  int trials = 1;

  // training
  int epochs = 200;
  int batch_size = 512;
  double lr = 0.01;
  double lambda_graph = 0.001;
  double lambda_target = 0.01;
  double tau_graph = 1.0;
  double tau_target = 0.5;
  double poisson_mean = 4.0;
  std::string logdet = "series";
  std::string activation = "nonlinear";
  bool precondition = false;
  int checkpoint_every = 0;
  double test_fraction = 0.0;

  // evaluation / logdet-check
  int kl_bins = 100;
  long draws = 100000;
  bool zero = false;

  // paths
  std::string data;
  std::string truth;
  std::string known_targets;
  std::string checkpoint;
  std::string output_dir = ".";

  std::uint64_t seed = 0;

  /// Fills family-dependent defaults (noise parameters) and checks ranges.
  void resolve();
  TrainConfig train_config() const;
  NoiseFamily noise_family() const;
  InterventionSpec intervention_spec(Rng& rng) const;
};

std::string to_json(const RunConfig& config);
/// Overlays the keys present in `text` onto `base`. Accepts a bare config
/// object or a run_meta.json (whose "config" entry is used).
RunConfig merge_json(RunConfig base, const std::string& text);

/// Samples graph, SEM and data for one trial from the generation fields.
Dataset generate(const RunConfig& config, std::uint64_t seed);

/// Entry point shared by the executable and the tests. Returns the process
/// exit code: 0 success, 2 configuration error, 3 numerical failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace scout::cli

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scout/graph.hpp"
#include "scout/sem.hpp"

namespace scout {

/// Ground truth attached to a synthetic dataset.
struct Truth {
  DirectedGraph graph{1};
  Eigen::MatrixXi targets;  // K x d, 1 = intervened
  std::optional<GroundTruthSem> sem;
  std::optional<InterventionSpec> spec;
  std::uint64_t seed = 0;
};

/// n rows of d-dimensional observations, each tagged with its experiment.
struct Dataset {
  int d = 0;
  int num_experiments = 0;
  Eigen::MatrixXd x;            // n x d
  std::vector<int> experiment;  // n entries in [0, num_experiments)
  std::optional<Truth> truth;

  Eigen::Index rows() const { return x.rows(); }
  void validate() const;
  Dataset select(const std::vector<Eigen::Index>& rows) const;
  /// Rows belonging to experiment k, as a matrix.
  Eigen::MatrixXd experiment_rows(int k) const;
};

struct GenerateOptions {
  int samples_per_experiment = 1000;
  double tol = 1e-10;
  int max_iter = 1000;
};

/// For each experiment k (in parallel, one rng substream per experiment) and
/// each sample: draw eta, solve x = f^(I_k)(x) + eta, append (x, k).
Dataset generate_dataset(const GroundTruthSem& sem, const InterventionSpec& spec, const GenerateOptions& options,
                         const Rng& rng);

/// Deterministic shuffled split; returns (train, test) with round(n * test_fraction) test rows.
std::pair<Dataset, Dataset> split_dataset(const Dataset& data, double test_fraction, const Rng& rng);

/// 1 - targets: the observed-mask polarity (1 = observed) the likelihood uses.
Eigen::MatrixXd observed_mask(const Eigen::MatrixXi& intervened);

// CSV: header x0,...,x{d-1},experiment; values at 17 significant digits.
std::string dataset_to_csv(const Dataset& data);
Dataset dataset_from_csv(const std::string& text);
void write_dataset_csv(const std::string& path, const Dataset& data);
Dataset read_dataset_csv(const std::string& path);

// Truth sidecar: {"graph": adjacency rows, "targets": K x d (1 = intervened), "spec": {...}, "seed": int, ...}.
std::string truth_to_json(const Truth& truth);
Truth truth_from_json(const std::string& text);
void write_truth_json(const std::string& path, const Truth& truth);
Truth read_truth_json(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace scout

#pragma once

#include <string>

#include "scout/model.hpp"

namespace scout {

/// A saved model: parameters, the model configuration needed to evaluate it,
/// and the epoch it was taken after. `extra_config` is an optional JSON object
/// merged into the "config" entry (e.g. the resolved training settings).
struct Checkpoint {
  ModelState state;
  ModelConfig model;
  int epoch = 0;
  std::string extra_config = "{}";
};

std::string checkpoint_to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const std::string& text);

void write_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(const std::string& path);

/// ModelConfig as a JSON object string and back; unknown keys are ignored and
/// missing keys keep their defaults.
std::string model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const std::string& text);

}  // namespace scout

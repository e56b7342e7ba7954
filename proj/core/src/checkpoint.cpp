#include "scout/checkpoint.hpp"

#include <cmath>

#include "json_util.hpp"
#include "scout/dataset.hpp"
#include "scout/errors.hpp"

namespace scout {

namespace {

nlohmann::json model_config_json(const ModelConfig& c) {
  return {{"activation", to_string(c.activation)},
          {"tau_graph", c.tau_graph},
          {"tau_target", c.tau_target},
          {"poisson_mean", c.poisson_mean},
          {"logdet", to_string(c.logdet)},
          {"precondition", c.precondition},
          {"lipschitz", c.lipschitz},
          {"init_range", c.init_range},
          {"spline",
           {{"bins", c.spline.bins},
            {"bound", c.spline.bound},
            {"min_bin", c.spline.min_bin},
            {"min_derivative", c.spline.min_derivative}}}};
}

ModelConfig model_config_from(const nlohmann::json& j) {
  ModelConfig c;
  if (j.contains("activation")) c.activation = mechanism_kind_from_string(j.at("activation").get<std::string>());
  c.tau_graph = j.value("tau_graph", c.tau_graph);
  c.tau_target = j.value("tau_target", c.tau_target);
  c.poisson_mean = j.value("poisson_mean", c.poisson_mean);
  if (j.contains("logdet")) c.logdet = logdet_mode_from_string(j.at("logdet").get<std::string>());
  c.precondition = j.value("precondition", c.precondition);
  c.lipschitz = j.value("lipschitz", c.lipschitz);
  c.init_range = j.value("init_range", c.init_range);
  if (j.contains("spline")) {
    const auto& s = j.at("spline");
    c.spline.bins = s.value("bins", c.spline.bins);
    c.spline.bound = s.value("bound", c.spline.bound);
    c.spline.min_bin = s.value("min_bin", c.spline.min_bin);
    c.spline.min_derivative = s.value("min_derivative", c.spline.min_derivative);
  }
  c.validate();
  return c;
}

}  // namespace

std::string model_config_to_json(const ModelConfig& config) { return model_config_json(config).dump(2); }

ModelConfig model_config_from_json(const std::string& text) {
  try {
    return model_config_from(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
}

std::string checkpoint_to_json(const Checkpoint& cp) {
  cp.state.validate();
  nlohmann::json config = nlohmann::json::parse(cp.extra_config.empty() ? "{}" : cp.extra_config);
  if (!config.is_object()) throw ConfigError("checkpoint extra config must be a JSON object");
  config["model"] = model_config_json(cp.model);
  config["targets_known"] = cp.state.targets_known;

  nlohmann::json j;
  j["theta"] = detail::matrix_to_json(cp.state.theta);
  j["theta_tilde"] = detail::matrix_to_json(cp.state.theta_tilde);
  j["spline_obs"] = detail::matrix_to_json(cp.state.spline_obs);
  j["spline_int"] = detail::matrix_to_json(cp.state.spline_int);
  j["phi"] = detail::matrix_to_json(cp.state.phi);
  j["psi"] = detail::matrix_to_json(cp.state.psi);
  j["lambda_diag"] = detail::vector_to_json(cp.state.lambda_diag());
  j["config"] = std::move(config);
  j["epoch"] = cp.epoch;
  return j.dump(2) + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    Checkpoint cp;
    cp.state.theta = detail::matrix_from_json<double>(j.at("theta"));
    cp.state.theta_tilde = detail::matrix_from_json<double>(j.at("theta_tilde"));
    cp.state.spline_obs = detail::matrix_from_json<double>(j.at("spline_obs"));
    cp.state.spline_int = detail::matrix_from_json<double>(j.at("spline_int"));
    cp.state.phi = detail::matrix_from_json<double>(j.at("phi"));
    cp.state.psi = detail::matrix_from_json<double>(j.at("psi"));
    const Eigen::VectorXd lambda = detail::vector_from_json(j.at("lambda_diag"));
    if ((lambda.array() <= 0).any()) throw ConfigError("checkpoint: lambda_diag must be positive");
    cp.state.log_lambda = lambda.array().log().matrix();
    cp.state.d = static_cast<int>(cp.state.theta.rows());
    cp.state.num_experiments = static_cast<int>(cp.state.psi.rows());
    cp.epoch = j.at("epoch").get<int>();
    nlohmann::json config = j.at("config");
    cp.state.targets_known = config.value("targets_known", false);
    cp.model = config.contains("model") ? model_config_from(config.at("model")) : ModelConfig{};
    if (cp.state.spline_obs.cols() != cp.model.spline.param_count()) {
      throw ConfigError("checkpoint: spline parameters do not match the spline configuration");
    }
    config.erase("model");
    config.erase("targets_known");
    cp.extra_config = config.dump();
    cp.state.validate();
    return cp;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("checkpoint: ") + e.what());
  }
}

void write_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  write_text_file(path, checkpoint_to_json(checkpoint));
}

Checkpoint read_checkpoint(const std::string& path) { return checkpoint_from_json(read_text_file(path)); }

}  // namespace scout

#include "scout/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json_util.hpp"
#include "scout/errors.hpp"
#include "scout/parallel.hpp"

namespace scout {

void Dataset::validate() const {
  if (d < 1) throw std::invalid_argument("dataset: d must be >= 1");
  if (x.cols() != d) throw std::invalid_argument("dataset: column count does not match d");
  if (static_cast<Eigen::Index>(experiment.size()) != x.rows()) {
    throw std::invalid_argument("dataset: experiment tags do not match row count");
  }
  for (int k : experiment) {
    if (k < 0 || k >= num_experiments) throw std::invalid_argument("dataset: experiment index out of range");
  }
  if (truth) {
    if (truth->targets.rows() != num_experiments || truth->targets.cols() != d) {
      throw std::invalid_argument("dataset: truth target matrix must be K x d");
    }
    if ((truth->targets.array() != 0 && truth->targets.array() != 1).any()) {
      throw std::invalid_argument("dataset: truth target matrix must be binary");
    }
  }
}

Dataset Dataset::select(const std::vector<Eigen::Index>& rows) const {
  Dataset out;
  out.d = d;
  out.num_experiments = num_experiments;
  out.truth = truth;
  out.x.resize(static_cast<Eigen::Index>(rows.size()), d);
  out.experiment.resize(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.x.row(static_cast<Eigen::Index>(r)) = x.row(rows[r]);
    out.experiment[r] = experiment[rows[r]];
  }
  return out;
}

Eigen::MatrixXd Dataset::experiment_rows(int k) const {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index r = 0; r < rows(); ++r)
    if (experiment[r] == k) idx.push_back(r);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), d);
  for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = x.row(idx[r]);
  return out;
}

Dataset generate_dataset(const GroundTruthSem& sem, const InterventionSpec& spec, const GenerateOptions& options,
                         const Rng& rng) {
  sem.validate();
  const int d = sem.size();
  spec.validate(d);
  if (options.samples_per_experiment < 1) throw std::invalid_argument("samples per experiment must be >= 1");
  const int k_count = spec.num_experiments();
  const Eigen::Index n = options.samples_per_experiment;

  Dataset data;
  data.d = d;
  data.num_experiments = k_count;
  data.x.resize(n * k_count, d);
  data.experiment.resize(static_cast<std::size_t>(n * k_count));

  parallel_for(static_cast<std::size_t>(k_count), [&](std::size_t kk) {
    const int k = static_cast<int>(kk);
    Rng stream = rng.substream("data", kk);
    const ExperimentMechanism mech = apply_intervention(sem, spec, k);
    for (Eigen::Index s = 0; s < n; ++s) {
      const Eigen::VectorXd eta = mech.sample_noise(stream);
      FixedPointResult fp = solve_fixed_point([&](const Eigen::VectorXd& v) { return mech.evaluate(v); }, eta,
                                              options.tol, options.max_iter);
      const Eigen::Index row = k * n + s;
      data.x.row(row) = fp.x.transpose();
      data.experiment[static_cast<std::size_t>(row)] = k;
    }
  });

  Truth truth;
  truth.graph = sem.graph;
  truth.targets = spec.target_matrix(d);
  truth.sem = sem;
  truth.spec = spec;
  truth.seed = rng.seed();
  data.truth = std::move(truth);
  return data;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& data, double test_fraction, const Rng& rng) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw std::invalid_argument("test fraction must lie in (0,1)");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(data.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng stream = rng.substream("split");
  // Fisher-Yates with our own index draws so the permutation is platform-stable.
  for (std::size_t i = order.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(stream.uniform_index(i));
    std::swap(order[i - 1], order[j]);
  }
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(order.size())));
  std::vector<Eigen::Index> test(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<Eigen::Index> train(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {data.select(train), data.select(test)};
}

Eigen::MatrixXd observed_mask(const Eigen::MatrixXi& intervened) {
  return (1 - intervened.array()).cast<double>().matrix();
}

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string dataset_to_csv(const Dataset& data) {
  std::string out;
  out.reserve(static_cast<std::size_t>(data.rows() * (data.d + 1) * 24));
  for (int j = 0; j < data.d; ++j) out += "x" + std::to_string(j) + ",";
  out += "experiment\n";
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    for (int j = 0; j < data.d; ++j) {
      out += format_double(data.x(r, j));
      out += ',';
    }
    out += std::to_string(data.experiment[static_cast<std::size_t>(r)]);
    out += '\n';
  }
  return out;
}

Dataset dataset_from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("dataset CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header;
  {
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 2 || header.back() != "experiment") {
    throw std::invalid_argument("dataset CSV header must be x0,...,x{d-1},experiment");
  }
  const int d = static_cast<int>(header.size()) - 1;
  for (int j = 0; j < d; ++j) {
    if (header[static_cast<std::size_t>(j)] != "x" + std::to_string(j)) {
      throw std::invalid_argument("dataset CSV header column " + std::to_string(j) + " must be x" + std::to_string(j));
    }
  }
  std::vector<double> values;
  std::vector<int> tags;
  int max_k = -1;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    int col = 0;
    while (std::getline(ls, cell, ',')) {
      if (col < d) {
        values.push_back(std::stod(cell));
      } else if (col == d) {
        tags.push_back(std::stoi(cell));
        max_k = std::max(max_k, tags.back());
      }
      ++col;
    }
    if (col != d + 1) throw std::invalid_argument("dataset CSV row has wrong column count");
  }
  Dataset data;
  data.d = d;
  data.num_experiments = max_k + 1;
  data.x.resize(static_cast<Eigen::Index>(tags.size()), d);
  for (std::size_t r = 0; r < tags.size(); ++r)
    for (int j = 0; j < d; ++j) data.x(static_cast<Eigen::Index>(r), j) = values[r * static_cast<std::size_t>(d) + static_cast<std::size_t>(j)];
  data.experiment = std::move(tags);
  data.validate();
  return data;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

void write_dataset_csv(const std::string& path, const Dataset& data) { write_text_file(path, dataset_to_csv(data)); }

Dataset read_dataset_csv(const std::string& path) { return dataset_from_csv(read_text_file(path)); }

std::string truth_to_json(const Truth& truth) {
  nlohmann::json j;
  j["graph"] = detail::matrix_to_json(truth.graph.adjacency());
  j["targets"] = detail::matrix_to_json(truth.targets);
  j["seed"] = truth.seed;
  if (truth.spec) {
    const auto& s = *truth.spec;
    j["spec"] = {{"kind", to_string(s.kind)},  {"shift", s.shift},   {"scale", s.scale},
                 {"alpha", s.alpha},           {"hard_shift", s.hard_shift}, {"targets", s.targets}};
  }
  if (truth.sem) {
    const auto& m = *truth.sem;
    j["sem"] = {{"kind", to_string(m.kind)},
                {"weights", detail::matrix_to_json(m.weights)},
                {"lipschitz", m.lipschitz},
                {"noise", {{"family", to_string(m.noise.kind)}, {"param1", m.noise.param1}, {"param2", m.noise.param2}}}};
  }
  return j.dump(2) + "\n";
}

Truth truth_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  Truth t;
  const auto& g = j.at("graph");
  if (g.is_object()) {
    t.graph = DirectedGraph::from_json(g.dump());
  } else {
    t.graph = DirectedGraph::from_adjacency(detail::matrix_from_json<int>(g));
  }
  t.targets = detail::matrix_from_json<int>(j.at("targets"));
  if (t.targets.size() > 0 && t.targets.cols() != t.graph.size()) {
    throw std::invalid_argument("truth: target matrix must have d columns");
  }
  t.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("spec")) {
    const auto& s = j.at("spec");
    InterventionSpec spec;
    spec.kind = intervention_kind_from_string(s.at("kind").get<std::string>());
    spec.shift = s.value("shift", spec.shift);
    spec.scale = s.value("scale", spec.scale);
    spec.alpha = s.value("alpha", spec.alpha);
    spec.hard_shift = s.value("hard_shift", spec.hard_shift);
    spec.targets = s.at("targets").get<std::vector<NodeSet>>();
    t.spec = spec;
  }
  if (j.contains("sem")) {
    const auto& s = j.at("sem");
    GroundTruthSem sem;
    sem.graph = t.graph;
    sem.kind = mechanism_kind_from_string(s.at("kind").get<std::string>());
    sem.weights = detail::matrix_from_json<double>(s.at("weights"));
    sem.lipschitz = s.at("lipschitz").get<double>();
    const auto& nz = s.at("noise");
    sem.noise = {noise_kind_from_string(nz.at("family").get<std::string>()), nz.at("param1").get<double>(),
                 nz.at("param2").get<double>()};
    sem.validate();
    t.sem = sem;
  }
  return t;
}

void write_truth_json(const std::string& path, const Truth& truth) { write_text_file(path, truth_to_json(truth)); }

Truth read_truth_json(const std::string& path) { return truth_from_json(read_text_file(path)); }

}  // namespace scout

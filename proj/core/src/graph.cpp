#include "scout/graph.hpp"

#include <algorithm>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace scout {

DirectedGraph::DirectedGraph(int d) : d_(d) {
  if (d < 1) throw std::invalid_argument("DirectedGraph: node count must be >= 1");
  adj_ = Eigen::MatrixXi::Zero(d, d);
}

DirectedGraph DirectedGraph::from_adjacency(const Eigen::MatrixXi& adjacency) {
  if (adjacency.rows() != adjacency.cols()) {
    throw std::invalid_argument("DirectedGraph: adjacency must be square");
  }
  DirectedGraph g(static_cast<int>(adjacency.rows()));
  for (int i = 0; i < g.d_; ++i) {
    for (int j = 0; j < g.d_; ++j) {
      const int v = adjacency(i, j);
      if (v != 0 && v != 1) throw std::invalid_argument("DirectedGraph: adjacency must be binary");
      if (v == 1) g.add_edge(i, j);
    }
  }
  return g;
}

DirectedGraph DirectedGraph::from_edges(int d, const std::vector<std::pair<int, int>>& edges) {
  DirectedGraph g(d);
  for (auto [i, j] : edges) g.add_edge(i, j);
  return g;
}

void DirectedGraph::add_edge(int from, int to) {
  if (from < 0 || to < 0 || from >= d_ || to >= d_) {
    throw std::out_of_range("DirectedGraph: node index out of range");
  }
  if (from == to) throw std::invalid_argument("DirectedGraph: self-loops are excluded");
  adj_(from, to) = 1;
}

void DirectedGraph::remove_edge(int from, int to) { adj_(from, to) = 0; }

int DirectedGraph::edge_count() const { return adj_.sum(); }

std::vector<std::pair<int, int>> DirectedGraph::edges() const {
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < d_; ++j)
      if (adj_(i, j)) out.emplace_back(i, j);
  return out;
}

NodeSet DirectedGraph::parents(int node) const {
  NodeSet out;
  for (int j = 0; j < d_; ++j)
    if (adj_(j, node)) out.push_back(j);
  return out;
}

NodeSet DirectedGraph::children(int node) const {
  NodeSet out;
  for (int j = 0; j < d_; ++j)
    if (adj_(node, j)) out.push_back(j);
  return out;
}

Eigen::MatrixXi DirectedGraph::reachability() const {
  Eigen::MatrixXi r = adj_;
  for (int i = 0; i < d_; ++i) r(i, i) = 1;
  for (int k = 0; k < d_; ++k)
    for (int i = 0; i < d_; ++i)
      if (r(i, k))
        for (int j = 0; j < d_; ++j)
          if (r(k, j)) r(i, j) = 1;
  return r;
}

NodeSet DirectedGraph::ancestors(const NodeSet& nodes) const {
  std::vector<char> mark(d_, 0);
  std::vector<int> stack(nodes.begin(), nodes.end());
  for (int n : nodes) mark[n] = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int p = 0; p < d_; ++p) {
      if (adj_(p, v) && !mark[p]) {
        mark[p] = 1;
        stack.push_back(p);
      }
    }
  }
  NodeSet out;
  for (int i = 0; i < d_; ++i)
    if (mark[i]) out.push_back(i);
  return out;
}

bool DirectedGraph::has_cycle() const {
  // 0 = unvisited, 1 = on stack, 2 = done
  std::vector<char> state(d_, 0);
  std::function<bool(int)> visit = [&](int v) {
    state[v] = 1;
    for (int w = 0; w < d_; ++w) {
      if (!adj_(v, w)) continue;
      if (state[w] == 1) return true;
      if (state[w] == 0 && visit(w)) return true;
    }
    state[v] = 2;
    return false;
  };
  for (int v = 0; v < d_; ++v)
    if (state[v] == 0 && visit(v)) return true;
  return false;
}

std::string DirectedGraph::to_json() const {
  nlohmann::json j;
  j["d"] = d_;
  nlohmann::json edges = nlohmann::json::array();
  for (auto [a, b] : this->edges()) edges.push_back({a, b});
  j["edges"] = edges;
  return j.dump();
}

DirectedGraph DirectedGraph::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  DirectedGraph g(j.at("d").get<int>());
  for (const auto& e : j.at("edges")) g.add_edge(e.at(0).get<int>(), e.at(1).get<int>());
  return g;
}

std::string DirectedGraph::to_csv() const {
  std::ostringstream os;
  for (int i = 0; i < d_; ++i) {
    for (int j = 0; j < d_; ++j) os << (j ? "," : "") << adj_(i, j);
    os << '\n';
  }
  return os.str();
}

DirectedGraph DirectedGraph::from_csv(const std::string& text) {
  std::vector<std::vector<int>> rows;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    std::vector<int> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stoi(cell));
    rows.push_back(std::move(row));
  }
  const int d = static_cast<int>(rows.size());
  Eigen::MatrixXi a(d, d);
  for (int i = 0; i < d; ++i) {
    if (static_cast<int>(rows[i].size()) != d) throw std::invalid_argument("adjacency CSV is not square");
    for (int j = 0; j < d; ++j) a(i, j) = rows[i][j];
  }
  return from_adjacency(a);
}

DirectedGraph er_sample(int d, double density, Rng& rng) {
  if (d < 2) throw std::invalid_argument("er_sample: need d >= 2");
  if (density < 0 || density > d - 1) {
    throw std::invalid_argument("er_sample: density must lie in [0, d-1]");
  }
  const double p = density / (d - 1);
  DirectedGraph g(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (i != j && rng.uniform() < p) g.add_edge(i, j);
  return g;
}

std::vector<NodeSet> tarjan_scc(const DirectedGraph& g) {
  const int d = g.size();
  std::vector<int> index(d, -1), low(d, 0);
  std::vector<char> on_stack(d, 0);
  std::vector<int> stack;
  std::vector<NodeSet> components;
  int counter = 0;

  std::function<void(int)> strongconnect = [&](int v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = 1;
    for (int w = 0; w < d; ++w) {
      if (!g.has_edge(v, w)) continue;
      if (index[w] < 0) {
        strongconnect(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      NodeSet comp;
      int w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = 0;
        comp.push_back(w);
      } while (w != v);
      std::sort(comp.begin(), comp.end());
      components.push_back(std::move(comp));
    }
  };

  for (int v = 0; v < d; ++v)
    if (index[v] < 0) strongconnect(v);
  return components;
}

std::vector<int> scc_labels(const DirectedGraph& g) {
  std::vector<int> label(g.size(), -1);
  const auto comps = tarjan_scc(g);
  for (int c = 0; c < static_cast<int>(comps.size()); ++c)
    for (int v : comps[c]) label[v] = c;
  return label;
}

std::int64_t count_simple_cycles(const DirectedGraph& g, std::int64_t limit) {
  // Johnson (1975): for each start s, enumerate elementary circuits through s
  // in the subgraph induced by nodes >= s.
  const int d = g.size();
  std::int64_t count = 0;
  std::vector<char> blocked(d);
  std::vector<std::vector<int>> blocked_by(d);

  std::function<void(int)> unblock = [&](int u) {
    blocked[u] = 0;
    auto pending = std::move(blocked_by[u]);
    blocked_by[u].clear();
    for (int w : pending)
      if (blocked[w]) unblock(w);
  };

  for (int s = 0; s < d && count < limit; ++s) {
    std::fill(blocked.begin(), blocked.end(), 0);
    for (auto& b : blocked_by) b.clear();

    std::function<bool(int)> circuit = [&](int v) {
      bool found = false;
      blocked[v] = 1;
      for (int w = s; w < d && count < limit; ++w) {
        if (!g.has_edge(v, w)) continue;
        if (w == s) {
          ++count;
          found = true;
        } else if (!blocked[w] && circuit(w)) {
          found = true;
        }
      }
      if (found) {
        unblock(v);
      } else {
        for (int w = s; w < d; ++w) {
          if (!g.has_edge(v, w)) continue;
          auto& list = blocked_by[w];
          if (std::find(list.begin(), list.end(), v) == list.end()) list.push_back(v);
        }
      }
      return found;
    };
    circuit(s);
  }
  return count;
}

DirectedGraph er_sample_with_cycles(int d, double density, std::int64_t cycles, Rng& rng,
                                    int max_attempts) {
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    DirectedGraph g = er_sample(d, density, rng);
    if (count_simple_cycles(g, cycles + 1) == cycles) return g;
  }
  throw std::runtime_error("er_sample_with_cycles: no graph with the requested cycle count found");
}

}  // namespace scout

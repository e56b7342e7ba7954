#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "scout/stochastic.hpp"

namespace scout {

using NodeSet = std::vector<int>;

/// Directed graph on nodes 0..d-1 with adjacency(i, j) == 1 meaning i -> j.
/// Self-loops are not representable.
class DirectedGraph {
 public:
  explicit DirectedGraph(int d = 1);
  static DirectedGraph from_adjacency(const Eigen::MatrixXi& adjacency);
  static DirectedGraph from_edges(int d, const std::vector<std::pair<int, int>>& edges);

  int size() const { return d_; }
  bool has_edge(int from, int to) const { return adj_(from, to) != 0; }
  void add_edge(int from, int to);
  void remove_edge(int from, int to);
  int edge_count() const;

  const Eigen::MatrixXi& adjacency() const { return adj_; }
  std::vector<std::pair<int, int>> edges() const;
  NodeSet parents(int node) const;
  NodeSet children(int node) const;

  /// reach(i, j) == 1 iff a directed path i -> ... -> j of length >= 0 exists.
  Eigen::MatrixXi reachability() const;
  NodeSet ancestors(const NodeSet& nodes) const;  // includes the nodes themselves
  bool has_cycle() const;

  std::string to_json() const;  // {"d": int, "edges": [[i,j],...]}
  static DirectedGraph from_json(const std::string& text);
  std::string to_csv() const;  // dense 0/1 matrix, one row per line
  static DirectedGraph from_csv(const std::string& text);

  bool operator==(const DirectedGraph& other) const { return d_ == other.d_ && adj_ == other.adj_; }

 private:
  int d_;
  Eigen::MatrixXi adj_;
};

/// Erdos-Renyi digraph: each ordered pair (i != j) present with prob density/(d-1).
DirectedGraph er_sample(int d, double density, Rng& rng);

/// Strongly connected components (Tarjan). Components are listed in the order
/// Tarjan completes them; nodes inside a component are sorted ascending.
std::vector<NodeSet> tarjan_scc(const DirectedGraph& g);

/// component_of[i] = index into tarjan_scc(g).
std::vector<int> scc_labels(const DirectedGraph& g);

/// Number of simple directed cycles (Johnson). Counting stops at `limit`.
std::int64_t count_simple_cycles(const DirectedGraph& g, std::int64_t limit = INT64_MAX);

/// ER graph conditioned on having exactly `cycles` simple cycles, by rejection.
DirectedGraph er_sample_with_cycles(int d, double density, std::int64_t cycles, Rng& rng,
                                    int max_attempts = 100000);

}  // namespace scout

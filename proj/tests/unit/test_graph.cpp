#include <functional>
#include <set>

#include "doctest.h"
#include "scout/graph.hpp"

using namespace scout;

namespace {

// Floyd-Warshall style transitive closure, reflexive.
Eigen::MatrixXi closure(const DirectedGraph& g) {
  const int d = g.size();
  Eigen::MatrixXi r = g.adjacency();
  for (int i = 0; i < d; ++i) r(i, i) = 1;
  for (int k = 0; k < d; ++k)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        if (r(i, k) && r(k, j)) r(i, j) = 1;
  return r;
}

bool dfs_has_cycle(const DirectedGraph& g) {
  const int d = g.size();
  std::vector<int> color(static_cast<std::size_t>(d), 0);
  std::function<bool(int)> visit = [&](int u) {
    color[static_cast<std::size_t>(u)] = 1;
    for (int v = 0; v < d; ++v) {
      if (!g.has_edge(u, v)) continue;
      if (color[static_cast<std::size_t>(v)] == 1) return true;
      if (color[static_cast<std::size_t>(v)] == 0 && visit(v)) return true;
    }
    color[static_cast<std::size_t>(u)] = 2;
    return false;
  };
  for (int u = 0; u < d; ++u)
    if (color[static_cast<std::size_t>(u)] == 0 && visit(u)) return true;
  return false;
}

std::set<NodeSet> as_set(std::vector<NodeSet> comps) { return {comps.begin(), comps.end()}; }

}  // namespace

TEST_CASE("construction rejects self-loops and empty graphs") {
  CHECK_THROWS(DirectedGraph(0));
  DirectedGraph g(3);
  CHECK_THROWS(g.add_edge(1, 1));
  CHECK_THROWS(g.add_edge(0, 3));
  Eigen::MatrixXi a = Eigen::MatrixXi::Identity(2, 2);
  CHECK_THROWS(DirectedGraph::from_adjacency(a));
}

TEST_CASE("ER sampling") {
  Rng rng(1);
  double degree = 0;
  int cyclic = 0, cyclic_builtin = 0;
  for (int t = 0; t < 1000; ++t) {
    const DirectedGraph g = er_sample(10, 2.0, rng);
    degree += g.adjacency().sum() / 10.0;
    cyclic += dfs_has_cycle(g);
    cyclic_builtin += g.has_cycle();
    CHECK(g.adjacency().diagonal().sum() == 0);
  }
  degree /= 1000;
  CHECK(degree >= 1.9);
  CHECK(degree <= 2.1);
  CHECK(cyclic == cyclic_builtin);
  CHECK(er_sample(2, 0.0, rng).adjacency().sum() == 0);
  CHECK_THROWS(er_sample(10, 9.5, rng));
  CHECK_THROWS(er_sample(10, -1, rng));
  CHECK_THROWS(er_sample(1, 0.0, rng));
}

TEST_CASE("tarjan on small graphs") {
  const DirectedGraph chain = DirectedGraph::from_edges(3, {{0, 1}, {1, 2}});
  CHECK(as_set(tarjan_scc(chain)) == std::set<NodeSet>{{0}, {1}, {2}});
  // isolated 1 plus the 2-cycle 3 <-> 4 (0-based 0 and 2 <-> 3), node 1 isolated too
  const DirectedGraph two = DirectedGraph::from_edges(4, {{2, 3}, {3, 2}});
  CHECK(as_set(tarjan_scc(two)) == std::set<NodeSet>{{0}, {1}, {2, 3}});
}

TEST_CASE("tarjan matches reachability intersection on random graphs") {
  Rng rng(2);
  for (int t = 0; t < 200; ++t) {
    const DirectedGraph g = er_sample(10, 2.0, rng);
    const Eigen::MatrixXi r = closure(g);
    const auto labels = scc_labels(g);
    for (int i = 0; i < 10; ++i)
      for (int j = 0; j < 10; ++j) {
        const bool same = r(i, j) && r(j, i);
        CHECK(same == (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)]));
      }
    CHECK(r == g.reachability());
  }
}

TEST_CASE("ancestors include the nodes themselves") {
  const DirectedGraph g = DirectedGraph::from_edges(4, {{0, 1}, {1, 2}});
  CHECK(g.ancestors({2}) == NodeSet{0, 1, 2});
  CHECK(g.ancestors({3}) == NodeSet{3});
  CHECK(g.parents(1) == NodeSet{0});
  CHECK(g.children(1) == NodeSet{2});
}

TEST_CASE("simple cycle counting") {
  CHECK(count_simple_cycles(DirectedGraph::from_edges(3, {{0, 1}, {1, 2}})) == 0);
  CHECK(count_simple_cycles(DirectedGraph::from_edges(2, {{0, 1}, {1, 0}})) == 1);
  // complete digraph on n nodes has sum_{k=2}^n C(n,k) (k-1)! simple cycles; n = 4 gives 6 + 8 + 6 = 20
  DirectedGraph k4(4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (i != j) k4.add_edge(i, j);
  CHECK(count_simple_cycles(k4) == 20);
  CHECK(count_simple_cycles(k4, 5) == 5);
}

TEST_CASE("rejection sampling hits the requested cycle count") {
  Rng rng(5);
  for (int c : {0, 1, 3}) {
    const DirectedGraph g = er_sample_with_cycles(8, 1.5, c, rng);
    CHECK(count_simple_cycles(g) == c);
  }
}

TEST_CASE("serialisation round trips") {
  Rng rng(6);
  const DirectedGraph g = er_sample(7, 2.0, rng);
  CHECK(DirectedGraph::from_json(g.to_json()) == g);
  CHECK(DirectedGraph::from_csv(g.to_csv()) == g);
  CHECK_THROWS(DirectedGraph::from_json(R"({"d": 2, "edges": [[0, 0]]})"));
}

#pragma once

#include "scout/graph.hpp"

namespace scout {

// Separation queries by exhaustive simple-path enumeration. Exponential in d;
// intended for verification on small graphs (d <= 12), not for inference.

/// True iff every simple path between A and B is sigma-blocked given C.
/// Throws std::invalid_argument if A, B, C are not pairwise disjoint.
bool sigma_separated(const DirectedGraph& g, const NodeSet& a, const NodeSet& b, const NodeSet& c);

/// True iff every simple path between A and B is d-blocked given C.
bool d_separated(const DirectedGraph& g, const NodeSet& a, const NodeSet& b, const NodeSet& c);

}  // namespace scout

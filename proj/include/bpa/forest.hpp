#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bpa/pairwise.hpp"

namespace bpa {

/// Undirected acyclic graph over variable indices. A tree containing two
/// discrete vertices may only connect them through discrete vertices
/// (no forbidden paths), which keeps the model strongly decomposable.
struct Forest {
  int p = 0;
  std::vector<VarKind> node_kinds;
  std::vector<std::pair<int, int>> edges;        // u < v, insertion order
  std::vector<std::vector<int>> adjacency;
  std::vector<double> edge_weights;              // parallel to edges
  Criterion criterion = Criterion::BIC;

  bool has_edge(int u, int v) const;
  double total_weight() const;
};

struct BuildOptions {
  // When true, admissibility is decided from per-component bookkeeping
  // (both endpoints discrete, or at most one side holds discrete nodes)
  // instead of a BFS over the tentative merged tree. Same result, O(1).
  bool fast_admissibility = false;
};

/// Kruskal sweep over edges in decreasing weight order (ties by (u,v)).
/// An edge enters iff its weight is positive, it joins two components, and
/// the merged tree contains no forbidden path.
Forest build_forest(const std::vector<EdgeScore>& scores, Criterion criterion,
                    const std::vector<VarKind>& node_kinds,
                    const BuildOptions& opts = {});

/// Number of edges on the unique forest path from y to x; direct neighbors
/// are at distance 1. Empty when the nodes lie in different trees.
std::optional<int> distance(const Forest& forest, int y, int x);

/// Variables at distance <= k from the target, for one k.
struct PathStep {
  int k = 1;
  std::vector<int> members;  // sorted, excludes the target
};

/// Nested path-steps for k = 1..eccentricity(y). Empty when y is isolated.
std::vector<PathStep> path_steps(const Forest& forest, int y);

/// Graphviz rendering; discrete nodes are boxes, continuous ellipses, the
/// highlighted target is filled.
std::string export_dot(const Forest& forest,
                       const std::vector<std::string>& names,
                       int highlight = -1);

std::string forest_to_json(const Forest& forest,
                           const std::vector<std::string>& names);

}  // namespace bpa

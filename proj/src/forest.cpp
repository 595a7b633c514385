#include "bpa/forest.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace bpa {

namespace {

class UnionFind {
 public:
  explicit UnionFind(int n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }

  int root(int i) {
    while (parent_[i] != i) {
      parent_[i] = parent_[parent_[i]];
      i = parent_[i];
    }
    return i;
  }

  bool connected(int a, int b) { return root(a) == root(b); }

  void unite(int a, int b) {
    int ra = root(a), rb = root(b);
    if (ra == rb) return;
    if (size_[ra] < size_[rb]) std::swap(ra, rb);
    parent_[rb] = ra;
    size_[ra] += size_[rb];
  }

 private:
  std::vector<int> parent_;
  std::vector<int> size_;
};

// Walks the merged tree (current adjacency plus the candidate edge) and
// checks that its discrete vertices induce a connected subgraph -- the
// tree form of the no-forbidden-path condition.
bool merge_is_admissible(const std::vector<std::vector<int>>& adjacency,
                         const std::vector<VarKind>& kinds, int a, int b) {
  // collect the merged tree's nodes
  std::vector<int> nodes;
  std::vector<char> in_tree(kinds.size(), 0);
  std::deque<int> queue = {a, b};
  in_tree[a] = in_tree[b] = 1;
  while (!queue.empty()) {
    int u = queue.front();
    queue.pop_front();
    nodes.push_back(u);
    for (int w : adjacency[u]) {
      if (!in_tree[w]) {
        in_tree[w] = 1;
        queue.push_back(w);
      }
    }
  }

  std::vector<int> discrete;
  for (int u : nodes) {
    if (kinds[u] == VarKind::Discrete) discrete.push_back(u);
  }
  if (discrete.size() <= 1) return true;

  // BFS restricted to discrete vertices, treating (a, b) as present
  std::vector<char> seen(kinds.size(), 0);
  std::deque<int> q = {discrete.front()};
  seen[discrete.front()] = 1;
  size_t reached = 0;
  auto visit = [&](int w) {
    if (!seen[w] && kinds[w] == VarKind::Discrete) {
      seen[w] = 1;
      q.push_back(w);
    }
  };
  while (!q.empty()) {
    int u = q.front();
    q.pop_front();
    ++reached;
    for (int w : adjacency[u]) visit(w);
    if (u == a) visit(b);
    if (u == b) visit(a);
  }
  return reached == discrete.size();
}

}  // namespace

bool Forest::has_edge(int u, int v) const {
  if (u > v) std::swap(u, v);
  return std::find(edges.begin(), edges.end(), std::make_pair(u, v)) !=
         edges.end();
}

double Forest::total_weight() const {
  double w = 0.0;
  for (double x : edge_weights) w += x;
  return w;
}

Forest build_forest(const std::vector<EdgeScore>& scores, Criterion criterion,
                    const std::vector<VarKind>& node_kinds,
                    const BuildOptions& opts) {
  Forest forest;
  forest.p = static_cast<int>(node_kinds.size());
  forest.node_kinds = node_kinds;
  forest.adjacency.assign(forest.p, {});
  forest.criterion = criterion;

  std::vector<const EdgeScore*> order;
  order.reserve(scores.size());
  for (const auto& s : scores) {
    if (s.u < 0 || s.v < 0 || s.u >= forest.p || s.v >= forest.p ||
        s.u == s.v) {
      throw Error(ErrorCode::InvalidArgument, "edge endpoint out of range");
    }
    if (s.weight(criterion) > 0.0) order.push_back(&s);
  }
  std::stable_sort(order.begin(), order.end(),
                   [criterion](const EdgeScore* a, const EdgeScore* b) {
                     double wa = a->weight(criterion);
                     double wb = b->weight(criterion);
                     if (wa != wb) return wa > wb;
                     if (a->u != b->u) return a->u < b->u;
                     return a->v < b->v;
                   });

  UnionFind uf(forest.p);
  std::vector<int> discrete_count(forest.p, 0);
  for (int i = 0; i < forest.p; ++i) {
    if (node_kinds[i] == VarKind::Discrete) discrete_count[uf.root(i)] = 1;
  }

  for (const EdgeScore* e : order) {
    if (uf.connected(e->u, e->v)) continue;
    bool admissible;
    if (opts.fast_admissibility) {
      int du = discrete_count[uf.root(e->u)];
      int dv = discrete_count[uf.root(e->v)];
      bool both_ends_discrete = node_kinds[e->u] == VarKind::Discrete &&
                                node_kinds[e->v] == VarKind::Discrete;
      admissible = (du == 0 || dv == 0) || both_ends_discrete;
    } else {
      admissible =
          merge_is_admissible(forest.adjacency, node_kinds, e->u, e->v);
    }
    if (!admissible) continue;

    int count = discrete_count[uf.root(e->u)] + discrete_count[uf.root(e->v)];
    uf.unite(e->u, e->v);
    discrete_count[uf.root(e->u)] = count;

    forest.edges.emplace_back(e->u, e->v);
    forest.edge_weights.push_back(e->weight(criterion));
    forest.adjacency[e->u].push_back(e->v);
    forest.adjacency[e->v].push_back(e->u);
  }
  for (auto& nbrs : forest.adjacency) std::sort(nbrs.begin(), nbrs.end());
  return forest;
}

std::optional<int> distance(const Forest& forest, int y, int x) {
  if (y == x) throw Error(ErrorCode::SameNode, "distance of a node to itself");
  std::vector<int> dist(forest.p, -1);
  std::deque<int> queue = {y};
  dist[y] = 0;
  while (!queue.empty()) {
    int u = queue.front();
    queue.pop_front();
    if (u == x) return dist[u];
    for (int w : forest.adjacency[u]) {
      if (dist[w] < 0) {
        dist[w] = dist[u] + 1;
        queue.push_back(w);
      }
    }
  }
  return std::nullopt;
}

std::vector<PathStep> path_steps(const Forest& forest, int y) {
  std::vector<int> dist(forest.p, -1);
  std::deque<int> queue = {y};
  dist[y] = 0;
  int ecc = 0;
  while (!queue.empty()) {
    int u = queue.front();
    queue.pop_front();
    ecc = std::max(ecc, dist[u]);
    for (int w : forest.adjacency[u]) {
      if (dist[w] < 0) {
        dist[w] = dist[u] + 1;
        queue.push_back(w);
      }
    }
  }

  std::vector<PathStep> steps;
  std::vector<int> members;
  for (int k = 1; k <= ecc; ++k) {
    for (int u = 0; u < forest.p; ++u) {
      if (dist[u] == k) members.push_back(u);
    }
    std::sort(members.begin(), members.end());
    steps.push_back(PathStep{k, members});
  }
  return steps;
}

std::string export_dot(const Forest& forest,
                       const std::vector<std::string>& names, int highlight) {
  std::ostringstream out;
  out << "graph forest {\n";
  for (int u = 0; u < forest.p; ++u) {
    out << "  \"" << names.at(u) << "\" [shape="
        << (forest.node_kinds[u] == VarKind::Discrete ? "box" : "ellipse");
    if (u == highlight) out << ", style=filled, fillcolor=gold";
    out << "];\n";
  }
  for (size_t i = 0; i < forest.edges.size(); ++i) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", forest.edge_weights[i]);
    out << "  \"" << names.at(forest.edges[i].first) << "\" -- \""
        << names.at(forest.edges[i].second) << "\" [label=\"" << buf
        << "\"];\n";
  }
  out << "}\n";
  return out.str();
}

std::string forest_to_json(const Forest& forest,
                           const std::vector<std::string>& names) {
  nlohmann::ordered_json doc;
  doc["criterion"] = forest.criterion == Criterion::AIC ? "aic" : "bic";
  doc["nodes"] = nlohmann::ordered_json::array();
  for (int u = 0; u < forest.p; ++u) {
    doc["nodes"].push_back(
        {{"name", names.at(u)},
         {"kind", forest.node_kinds[u] == VarKind::Discrete ? "discrete"
                                                            : "continuous"}});
  }
  doc["edges"] = nlohmann::ordered_json::array();
  for (size_t i = 0; i < forest.edges.size(); ++i) {
    doc["edges"].push_back({{"u", names.at(forest.edges[i].first)},
                            {"v", names.at(forest.edges[i].second)},
                            {"weight", forest.edge_weights[i]}});
  }
  return doc.dump(2) + "\n";
}

}  // namespace bpa

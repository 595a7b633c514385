#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <deque>

#include "bpa/forest.hpp"
#include "bpa/rng.hpp"
#include "forest_oracle.hpp"
#include "test_util.hpp"

using namespace bpa;
using namespace testutil;

namespace {

EdgeScore mk_edge(int u, int v, double weight) {
  EdgeScore e;
  e.u = u;
  e.v = v;
  e.mi = weight;
  e.df = 0;  // unused here; weights are set directly
  e.weight_aic = weight;
  e.weight_bic = weight;
  return e;
}

std::vector<VarKind> continuous_nodes(int p) {
  return std::vector<VarKind>(p, VarKind::Continuous);
}

// asserts the defining property directly: within a tree, the path between
// any two discrete nodes never leaves the discrete node set
void check_no_forbidden_path(const Forest& f) {
  for (int u = 0; u < f.p; ++u) {
    if (f.node_kinds[u] != VarKind::Discrete) continue;
    std::vector<int> prev(f.p, -1);
    std::deque<int> q{u};
    std::vector<char> seen(f.p, 0);
    seen[u] = 1;
    while (!q.empty()) {
      int a = q.front();
      q.pop_front();
      for (int b : f.adjacency[a]) {
        if (!seen[b]) {
          seen[b] = 1;
          prev[b] = a;
          q.push_back(b);
        }
      }
    }
    for (int v = 0; v < f.p; ++v) {
      if (v == u || !seen[v] || f.node_kinds[v] != VarKind::Discrete) continue;
      for (int w = prev[v]; w != u && w != -1; w = prev[w]) {
        CHECK(f.node_kinds[w] == VarKind::Discrete);
      }
    }
  }
}

// the Eq.-style example tree: two layers of known members plus a detached
// component, used for the distance and path-step checks
Forest example_forest() {
  // 0=Y 1..14 = X1..X14
  std::vector<EdgeScore> edges = {
      mk_edge(0, 1, 10), mk_edge(0, 2, 9),   mk_edge(1, 3, 8),
      mk_edge(1, 4, 7),  mk_edge(1, 5, 6),   mk_edge(2, 9, 5),
      mk_edge(2, 11, 4), mk_edge(3, 6, 3),   mk_edge(3, 7, 2.5),
      mk_edge(4, 8, 2),  mk_edge(9, 10, 1.5), mk_edge(12, 13, 1.2),
      mk_edge(13, 14, 1.1)};
  return build_forest(edges, Criterion::BIC, continuous_nodes(15));
}

}  // namespace

TEST_CASE("kruskal keeps the heaviest acyclic edges") {
  auto f = build_forest({mk_edge(0, 1, 3), mk_edge(1, 2, 2), mk_edge(0, 2, 1)},
                        Criterion::BIC, continuous_nodes(3));
  CHECK(f.edges.size() == 2);
  CHECK(f.has_edge(0, 1));
  CHECK(f.has_edge(1, 2));
  CHECK_FALSE(f.has_edge(0, 2));
}

TEST_CASE("non-positive weights leave isolated nodes") {
  auto f = build_forest({mk_edge(0, 1, 0.0), mk_edge(1, 2, -4), mk_edge(0, 2, -1)},
                        Criterion::BIC, continuous_nodes(3));
  CHECK(f.edges.empty());
}

TEST_CASE("a discrete-continuous-discrete chain is rejected") {
  std::vector<VarKind> kinds = {VarKind::Discrete, VarKind::Continuous,
                                VarKind::Discrete};
  auto f = build_forest({mk_edge(0, 1, 5), mk_edge(1, 2, 4)}, Criterion::BIC,
                        kinds);
  CHECK(f.edges.size() == 1);
  CHECK(f.has_edge(0, 1));
  CHECK_FALSE(f.has_edge(1, 2));
  check_no_forbidden_path(f);
}

TEST_CASE("infinite-weight sentinel edges are admitted first") {
  double inf = std::numeric_limits<double>::infinity();
  auto f = build_forest(
      {mk_edge(0, 1, 2), mk_edge(1, 2, inf), mk_edge(0, 2, 1)},
      Criterion::BIC, continuous_nodes(3));
  CHECK(f.has_edge(1, 2));
}

TEST_CASE("distance semantics") {
  auto f = example_forest();
  SUBCASE("neighbors are at distance one") {
    CHECK(distance(f, 0, 1) == 1);
    CHECK(distance(f, 0, 2) == 1);
  }
  SUBCASE("a third-layer node") { CHECK(distance(f, 0, 6) == 3); }
  SUBCASE("another tree is unreachable") {
    CHECK_FALSE(distance(f, 0, 12).has_value());
    CHECK_FALSE(distance(f, 0, 14).has_value());
  }
  SUBCASE("same node is an error") {
    CHECK_THROWS_AS(distance(f, 3, 3), Error);
  }
}

TEST_CASE("path steps accumulate BFS layers") {
  auto f = example_forest();
  auto steps = path_steps(f, 0);
  REQUIRE(steps.size() == 3);
  CHECK(steps[0].members == std::vector<int>{1, 2});
  CHECK(steps[1].members == std::vector<int>{1, 2, 3, 4, 5, 9, 11});
  CHECK(steps[2].members ==
        std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11});
  // nodes of the second tree never appear
  for (const auto& s : steps) {
    for (int m : s.members) CHECK(m < 12);
  }
}

TEST_CASE("path steps on simple shapes") {
  SUBCASE("star") {
    std::vector<EdgeScore> edges;
    for (int leaf = 1; leaf <= 5; ++leaf) edges.push_back(mk_edge(0, leaf, leaf));
    auto f = build_forest(edges, Criterion::BIC, continuous_nodes(6));
    auto steps = path_steps(f, 0);
    REQUIRE(steps.size() == 1);
    CHECK(steps[0].members.size() == 5);
  }
  SUBCASE("chain") {
    auto f = build_forest({mk_edge(0, 1, 3), mk_edge(1, 2, 2), mk_edge(2, 3, 1)},
                          Criterion::BIC, continuous_nodes(4));
    auto steps = path_steps(f, 0);
    REQUIRE(steps.size() == 3);
    CHECK(steps[0].members == std::vector<int>{1});
    CHECK(steps[1].members == std::vector<int>{1, 2});
    CHECK(steps[2].members == std::vector<int>{1, 2, 3});
  }
  SUBCASE("isolated target yields no steps") {
    auto f = build_forest({mk_edge(1, 2, 5)}, Criterion::BIC,
                          continuous_nodes(3));
    CHECK(path_steps(f, 0).empty());
  }
  SUBCASE("path steps strictly grow") {
    auto f = example_forest();
    auto steps = path_steps(f, 0);
    for (size_t i = 1; i < steps.size(); ++i) {
      CHECK(steps[i - 1].members.size() < steps[i].members.size());
    }
  }
}

TEST_CASE("greedy forest matches the exhaustive oracle on random graphs") {
  Rng rng(20240315);
  int violations = 0;
  for (int trial = 0; trial < 200; ++trial) {
    int p = 3 + static_cast<int>(rng.below(4));  // 3..6 nodes
    std::vector<VarKind> kinds(p);
    for (auto& k : kinds) {
      k = rng.uniform01() < 0.4 ? VarKind::Discrete : VarKind::Continuous;
    }
    std::vector<EdgeScore> scores;
    std::vector<OracleEdge> oracle_edges;
    for (int u = 0; u < p; ++u) {
      for (int v = u + 1; v < p; ++v) {
        double w = rng.uniform(-1.0, 2.0);
        scores.push_back(mk_edge(u, v, w));
        oracle_edges.push_back({u, v, w});
      }
    }
    auto f = build_forest(scores, Criterion::BIC, kinds);
    check_no_forbidden_path(f);
    double best = oracle_best_forest_weight(oracle_edges, p, kinds);
    if (std::fabs(f.total_weight() - best) > 1e-9) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("fast admissibility bookkeeping agrees with the BFS check") {
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    int p = 4 + static_cast<int>(rng.below(5));
    std::vector<VarKind> kinds(p);
    for (auto& k : kinds) {
      k = rng.uniform01() < 0.5 ? VarKind::Discrete : VarKind::Continuous;
    }
    std::vector<EdgeScore> scores;
    for (int u = 0; u < p; ++u) {
      for (int v = u + 1; v < p; ++v) {
        scores.push_back(mk_edge(u, v, rng.uniform(-1.0, 2.0)));
      }
    }
    auto slow = build_forest(scores, Criterion::BIC, kinds);
    BuildOptions fast;
    fast.fast_admissibility = true;
    auto quick = build_forest(scores, Criterion::BIC, kinds, fast);
    CHECK(slow.edges == quick.edges);
  }
}

TEST_CASE("identical inputs give identical forests") {
  Rng rng(123);
  std::vector<EdgeScore> scores;
  for (int u = 0; u < 8; ++u) {
    for (int v = u + 1; v < 8; ++v) {
      scores.push_back(mk_edge(u, v, rng.uniform(-1.0, 3.0)));
    }
  }
  auto shuffled = scores;
  std::reverse(shuffled.begin(), shuffled.end());
  auto a = build_forest(scores, Criterion::BIC, continuous_nodes(8));
  auto b = build_forest(shuffled, Criterion::BIC, continuous_nodes(8));
  CHECK(a.edges == b.edges);
}

TEST_CASE("cumulative per-edge MI over path steps is non-decreasing") {
  Rng rng(55);
  int p = 10;
  std::vector<EdgeScore> scores;
  for (int u = 0; u < p; ++u) {
    for (int v = u + 1; v < p; ++v) {
      scores.push_back(mk_edge(u, v, rng.uniform(0.1, 2.0)));
    }
  }
  auto f = build_forest(scores, Criterion::BIC, continuous_nodes(p));
  auto steps = path_steps(f, 0);
  // plug-in per-variable MI surrogate: weight of each member's tree edge
  double prev = -1.0;
  for (const auto& s : steps) {
    double acc = 0.0;
    for (int m : s.members) {
      for (const auto& e : scores) {
        if ((e.u == m || e.v == m) && f.has_edge(e.u, e.v)) acc += e.mi;
      }
    }
    CHECK(acc >= prev);
    prev = acc;
  }
}

TEST_CASE("dot export") {
  SUBCASE("empty forest lists the nodes") {
    auto f = build_forest({}, Criterion::BIC, continuous_nodes(3));
    auto dot = export_dot(f, {"a", "b", "c"});
    CHECK(dot.find("\"a\"") != std::string::npos);
    CHECK(dot.find("--") == std::string::npos);
  }
  SUBCASE("one edge renders one connection") {
    auto f = build_forest({mk_edge(0, 1, 1)}, Criterion::BIC,
                          continuous_nodes(2));
    auto dot = export_dot(f, {"a", "b"});
    CHECK(dot.find("\"a\" -- \"b\"") != std::string::npos);
  }
  SUBCASE("target is filled and discrete nodes are boxes") {
    std::vector<VarKind> kinds = {VarKind::Discrete, VarKind::Continuous};
    auto f = build_forest({mk_edge(0, 1, 1)}, Criterion::BIC, kinds);
    auto dot = export_dot(f, {"d", "c"}, 1);
    CHECK(dot.find("shape=box") != std::string::npos);
    CHECK(dot.find("style=filled") != std::string::npos);
  }
}

#include "gabp/graph.hpp"

#include "corpus.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <set>

namespace gabp {
namespace {

LinearGaussianModel model_from_scopes(const std::vector<std::vector<int>>& scopes,
                                      std::vector<Index> dims = {}) {
  LinearGaussianModel m;
  const int M = static_cast<int>(scopes.size());
  if (dims.empty()) dims.assign(M, 1);
  for (int i = 1; i <= M; ++i) m.variables.push_back({i, dims[i - 1], Matrix::Identity(dims[i - 1], dims[i - 1])});
  for (int n = 1; n <= M; ++n) {
    FactorSpec f;
    f.id = n;
    f.scope = scopes[n - 1];
    Index rows = 1;
    for (int i : f.scope) rows = std::max(rows, dims[i - 1]);
    for (int i : f.scope) f.coeff[i] = Matrix::Identity(rows, dims[i - 1]);
    f.noise_cov = Matrix::Identity(rows, rows);
    f.obs = Vector::Zero(rows);
    m.factors.push_back(f);
  }
  return m;
}

// Four agents: agent 1 talks to 2, agent 2 to everyone, agents 3 and 4 to each other.
LinearGaussianModel four_agent_network() {
  return model_from_scopes({{1, 2}, {1, 2, 3, 4}, {2, 3, 4}, {2, 3, 4}});
}

// Number of simple cycles of the bipartite graph, by exhaustive DFS from each
// cycle's smallest node.
int count_simple_cycles(const FactorGraph& g) {
  const int V = g.num_vars();
  const int N = V + g.num_factors();
  std::vector<std::vector<int>> adj(N);
  for (int n = 0; n < g.num_factors(); ++n) {
    for (int j : g.factor_nbrs[n]) {
      adj[V + n].push_back(j);
      adj[j].push_back(V + n);
    }
  }
  int cycles = 0;
  std::vector<bool> on_path(N, false);
  for (int s = 0; s < N; ++s) {
    std::function<void(int, int, int)> dfs = [&](int u, int parent, int len) {
      on_path[u] = true;
      for (int w : adj[u]) {
        if (w == s && len >= 3 && w != parent) ++cycles;
        if (w > s && !on_path[w]) dfs(w, u, len + 1);
      }
      on_path[u] = false;
    };
    dfs(s, -1, 1);
  }
  return cycles / 2;  // each cycle is traversed in both directions
}

TEST(BuildFactorGraph, FourAgentNetworkScopes) {
  const auto g = build_factor_graph(four_agent_network());
  ASSERT_EQ(g.num_factors(), 4);
  EXPECT_EQ(g.factor_nbrs[0], (std::vector<int>{0, 1}));
  EXPECT_EQ(g.factor_nbrs[1], (std::vector<int>{0, 1, 2, 3}));
  EXPECT_EQ(g.factor_nbrs[2], (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(g.factor_nbrs[3], (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(g.var_nbrs[0], (std::vector<int>{0, 1}));
  EXPECT_EQ(g.var_nbrs[1], (std::vector<int>{0, 1, 2, 3}));
  EXPECT_EQ(g.num_edges(), 12);
}

TEST(BuildFactorGraph, SingleAgent) {
  const auto g = build_factor_graph(model_from_scopes({{1}}));
  EXPECT_EQ(g.factor_nbrs, (std::vector<std::vector<int>>{{0}}));
  EXPECT_EQ(g.var_nbrs, (std::vector<std::vector<int>>{{0}}));
}

TEST(BuildFactorGraph, TwoAgentChain) {
  const auto g = build_factor_graph(model_from_scopes({{1, 2}, {1, 2}}));
  EXPECT_EQ(g.var_nbrs[0].size(), 2u);
  EXPECT_EQ(g.var_nbrs[1].size(), 2u);
}

TEST(BuildFactorGraph, AdjacencyIsSymmetricOnCorpus) {
  for (const auto& nm : testing::corpus()) {
    const auto g = build_factor_graph(nm.model);
    for (int n = 0; n < g.num_factors(); ++n) {
      for (int j : g.factor_nbrs[n]) {
        const auto& b = g.var_nbrs[j];
        EXPECT_TRUE(std::find(b.begin(), b.end(), n) != b.end()) << nm.name;
      }
    }
    for (int j = 0; j < g.num_vars(); ++j) {
      for (int n : g.var_nbrs[j]) {
        const auto& b = g.factor_nbrs[n];
        EXPECT_TRUE(std::find(b.begin(), b.end(), j) != b.end()) << nm.name;
      }
    }
  }
}

TEST(ClassifyTopology, ChainIsForest) {
  const auto t = classify_topology(build_factor_graph(model_from_scopes({{1, 2}, {2, 3}, {3, 4}, {4}})));
  EXPECT_EQ(t.kind, TopologyKind::kForest);
  EXPECT_EQ(t.cycle_rank, 0);
  EXPECT_TRUE(t.loop_members.empty());
}

TEST(ClassifyTopology, CounterexampleHasSingleLoop) {
  const auto t = classify_topology(build_factor_graph(testing::counterexample_model(Vector::Zero(3))));
  EXPECT_EQ(t.kind, TopologyKind::kSingleLoopPlusForest);
  EXPECT_EQ(t.cycle_rank, 1);
  // Loop x1 - f1 - x4 - f3 - x2 - f2 - x1.
  const std::set<std::pair<int, int>> members(t.loop_members.begin(), t.loop_members.end());
  const std::set<std::pair<int, int>> expected{{1, 1}, {1, 4}, {3, 4}, {3, 2}, {2, 2}, {2, 1}};
  EXPECT_EQ(members, expected);
}

TEST(ClassifyTopology, FullyConnectedIsMultiLoop) {
  const std::vector<int> all{1, 2, 3, 4, 5};
  const auto m = model_from_scopes({all, all, all, all, all});
  const auto t = classify_topology(build_factor_graph(m));
  EXPECT_EQ(t.kind, TopologyKind::kMultiLoop);
  EXPECT_EQ(t.cycle_rank, testing::cycle_rank_union_find(m));
  EXPECT_EQ(t.cycle_rank, 25 - 10 + 1);
}

TEST(ClassifyTopology, DisconnectedReportsWorstComponent) {
  const auto m = model_from_scopes({{1, 2}, {1, 2}, {3}});
  const auto t = classify_topology(build_factor_graph(m));
  EXPECT_EQ(t.components, 2);
  EXPECT_EQ(t.kind, TopologyKind::kSingleLoopPlusForest);
  ASSERT_EQ(t.component_kinds.size(), 2u);
}

TEST(ClassifyTopology, AgreesWithCycleEnumeration) {
  for (auto kind : {TopologyKind::kForest, TopologyKind::kSingleLoopPlusForest,
                    TopologyKind::kMultiLoop}) {
    for (const auto& m : testing::random_models(kind, 25, 500, 5, 1)) {
      const auto g = build_factor_graph(m);
      if (g.num_vars() + g.num_factors() > 12) continue;
      const int cycles = count_simple_cycles(g);
      const auto t = classify_topology(g);
      EXPECT_EQ(t.kind == TopologyKind::kForest, cycles == 0);
      EXPECT_EQ(t.kind == TopologyKind::kSingleLoopPlusForest, cycles == 1);
      EXPECT_EQ(t.cycle_rank, testing::cycle_rank_union_find(m));
    }
  }
}

TEST(CanonicalEdgeOrder, FourAgentNetworkOrder) {
  const auto g = build_factor_graph(four_agent_network());
  const auto e = canonical_edge_order(g);
  std::vector<std::pair<int, int>> f2v;
  for (const auto& r : e.f2v) f2v.emplace_back(g.factor_ids[r.factor], g.var_ids[r.var]);
  const std::vector<std::pair<int, int>> expected{{1, 1}, {1, 2}, {2, 1}, {2, 2}, {2, 3}, {2, 4},
                                                  {3, 2}, {3, 3}, {3, 4}, {4, 2}, {4, 3}, {4, 4}};
  EXPECT_EQ(f2v, expected);
  std::vector<std::pair<int, int>> v2f;
  for (const auto& r : e.v2f) v2f.emplace_back(g.var_ids[r.var], g.factor_ids[r.factor]);
  EXPECT_TRUE(std::is_sorted(v2f.begin(), v2f.end()));
  EXPECT_EQ(v2f.size(), 12u);
}

TEST(CanonicalEdgeOrder, SingleAgent) {
  const auto e = canonical_edge_order(build_factor_graph(model_from_scopes({{1}})));
  ASSERT_EQ(e.f2v.size(), 1u);
  EXPECT_EQ(e.f2v[0], (EdgeRef{0, 0}));
}

TEST(CanonicalEdgeOrder, UnitDimsGiveConsecutiveOffsets) {
  const auto e = canonical_edge_order(build_factor_graph(four_agent_network()));
  for (size_t k = 0; k < e.f2v_offset.size(); ++k) EXPECT_EQ(e.f2v_offset[k], Index(k));
  for (size_t k = 0; k < e.v2f_offset.size(); ++k) EXPECT_EQ(e.v2f_offset[k], Index(k));
}

TEST(CanonicalEdgeOrder, OffsetsFollowVariableDims) {
  const auto g = build_factor_graph(model_from_scopes({{1, 2}, {1, 2, 3}, {2, 3}}, {2, 3, 1}));
  const auto e = canonical_edge_order(g);
  for (size_t k = 0; k < e.f2v.size(); ++k) {
    EXPECT_EQ(e.f2v_offset[k + 1] - e.f2v_offset[k], g.var_dims[e.f2v[k].var]);
  }
  for (size_t k = 0; k < e.v2f.size(); ++k) {
    EXPECT_EQ(e.v2f_offset[k + 1] - e.v2f_offset[k], g.var_dims[e.v2f[k].var]);
  }
  EXPECT_EQ(e.f2v_dim(), e.v2f_dim());
  EXPECT_EQ(e.f2v_dim(), 2 + 3 + 2 + 3 + 1 + 3 + 1);
}

TEST(CanonicalEdgeOrder, IndexRoundTripsOnCorpus) {
  for (const auto& nm : testing::corpus()) {
    const auto g = build_factor_graph(nm.model);
    const auto e = canonical_edge_order(g);
    for (int k = 0; k < static_cast<int>(e.f2v.size()); ++k) {
      EXPECT_EQ(e.f2v_index(g, e.f2v[k].factor, e.f2v[k].var), k) << nm.name;
    }
    for (int k = 0; k < static_cast<int>(e.v2f.size()); ++k) {
      EXPECT_EQ(e.v2f_index(g, e.v2f[k].var, e.v2f[k].factor), k) << nm.name;
    }
  }
}

TEST(GraphDiameter, Chain) {
  // x1 - f1 - x2 - f2 - x3 - f3: longest shortest path has 5 edges.
  EXPECT_EQ(graph_diameter(build_factor_graph(model_from_scopes({{1, 2}, {2, 3}, {3}}))), 5);
  EXPECT_EQ(graph_diameter(build_factor_graph(model_from_scopes({{1}}))), 1);
}

TEST(ToDot, ShapesAndEdges) {
  const auto dot = to_dot(build_factor_graph(model_from_scopes({{1, 2}, {2}})));
  EXPECT_NE(dot.find("x1 [shape=circle"), std::string::npos);
  EXPECT_NE(dot.find("f2 [shape=square"), std::string::npos);
  EXPECT_NE(dot.find("f1 -- x2;"), std::string::npos);
  EXPECT_EQ(dot.find("f2 -- x1;"), std::string::npos);
}

}  // namespace
}  // namespace gabp

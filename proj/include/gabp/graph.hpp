#pragma once

#include "gabp/model.hpp"

#include <string>
#include <utility>
#include <vector>

namespace gabp {

/// Bipartite factor graph. Nodes are addressed by position (0-based, ascending
/// id order); ids are kept alongside for reporting.
struct FactorGraph {
  std::vector<int> var_ids;
  std::vector<Index> var_dims;
  std::vector<int> factor_ids;
  /// B(f_n): variable positions adjacent to factor position n, ascending.
  std::vector<std::vector<int>> factor_nbrs;
  /// B(j): factor positions adjacent to variable position j, ascending.
  std::vector<std::vector<int>> var_nbrs;

  int num_vars() const { return static_cast<int>(var_ids.size()); }
  int num_factors() const { return static_cast<int>(factor_ids.size()); }
  int num_edges() const;
  int var_pos(int id) const;
  int factor_pos(int id) const;
};

FactorGraph build_factor_graph(const LinearGaussianModel& model);

/// A directed edge between factor position and variable position.
struct EdgeRef {
  int factor = 0;
  int var = 0;
  bool operator==(const EdgeRef&) const = default;
};

/// Canonical ordering of directed edges.
///   f2v: ascending on factor id, then variable id.
///   v2f: ascending on variable id, then factor id.
/// Offsets give each edge's start row in the stacked vectors (length = dim of
/// the variable the edge touches).
struct EdgeIndex {
  std::vector<EdgeRef> f2v;
  std::vector<EdgeRef> v2f;
  std::vector<Index> f2v_offset;  ///< size f2v.size() + 1
  std::vector<Index> v2f_offset;  ///< size v2f.size() + 1

  /// Per (factor, slot in factor_nbrs) -> f2v edge index.
  std::vector<std::vector<int>> f2v_at;
  /// Per (variable, slot in var_nbrs) -> v2f edge index.
  std::vector<std::vector<int>> v2f_at;

  int f2v_index(const FactorGraph& g, int factor, int var) const;
  int v2f_index(const FactorGraph& g, int var, int factor) const;
  Index f2v_dim() const { return f2v_offset.back(); }
  Index v2f_dim() const { return v2f_offset.back(); }
};

EdgeIndex canonical_edge_order(const FactorGraph& graph);

struct TopologyClass {
  TopologyKind kind = TopologyKind::kForest;
  /// Independent cycles (E - V + C) of the bipartite graph.
  int cycle_rank = 0;
  int components = 0;
  std::vector<TopologyKind> component_kinds;
  /// (factor id, variable id) pairs on the loop; filled iff cycle_rank == 1.
  std::vector<std::pair<int, int>> loop_members;
};

TopologyClass classify_topology(const FactorGraph& graph);

/// Graph eccentricity bound: longest shortest path (in edges) inside any
/// component of the bipartite graph.
int graph_diameter(const FactorGraph& graph);

/// DOT text: circles for variables, boxes for factors.
std::string to_dot(const FactorGraph& graph);

}  // namespace gabp

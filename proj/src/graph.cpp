#include "gabp/graph.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <sstream>

namespace gabp {

int FactorGraph::num_edges() const {
  int e = 0;
  for (const auto& nb : factor_nbrs) e += static_cast<int>(nb.size());
  return e;
}

int FactorGraph::var_pos(int id) const {
  auto it = std::lower_bound(var_ids.begin(), var_ids.end(), id);
  if (it == var_ids.end() || *it != id) throw Error("unknown variable " + std::to_string(id));
  return static_cast<int>(it - var_ids.begin());
}

int FactorGraph::factor_pos(int id) const {
  auto it = std::lower_bound(factor_ids.begin(), factor_ids.end(), id);
  if (it == factor_ids.end() || *it != id) throw Error("unknown factor " + std::to_string(id));
  return static_cast<int>(it - factor_ids.begin());
}

FactorGraph build_factor_graph(const LinearGaussianModel& model) {
  require_valid(model);
  FactorGraph g;
  for (const auto& v : model.variables) {
    g.var_ids.push_back(v.id);
    g.var_dims.push_back(v.dim);
  }
  g.var_nbrs.resize(g.var_ids.size());
  for (const auto& f : model.factors) {
    const int fp = static_cast<int>(g.factor_ids.size());
    g.factor_ids.push_back(f.id);
    std::vector<int> nb;
    for (int id : f.scope) {
      const int vp = g.var_pos(id);
      nb.push_back(vp);
      g.var_nbrs[vp].push_back(fp);
    }
    g.factor_nbrs.push_back(std::move(nb));
  }
  return g;
}

int EdgeIndex::f2v_index(const FactorGraph& g, int factor, int var) const {
  const auto& nb = g.factor_nbrs[factor];
  auto it = std::lower_bound(nb.begin(), nb.end(), var);
  if (it == nb.end() || *it != var) throw Error("no such factor-to-variable edge");
  return f2v_at[factor][it - nb.begin()];
}

int EdgeIndex::v2f_index(const FactorGraph& g, int var, int factor) const {
  const auto& nb = g.var_nbrs[var];
  auto it = std::lower_bound(nb.begin(), nb.end(), factor);
  if (it == nb.end() || *it != factor) throw Error("no such variable-to-factor edge");
  return v2f_at[var][it - nb.begin()];
}

EdgeIndex canonical_edge_order(const FactorGraph& g) {
  // Positions are already in ascending id order, so nested loops give the
  // canonical lexicographic order directly.
  EdgeIndex idx;
  idx.f2v_offset.push_back(0);
  idx.f2v_at.resize(g.factor_nbrs.size());
  for (int n = 0; n < g.num_factors(); ++n) {
    for (int i : g.factor_nbrs[n]) {
      idx.f2v_at[n].push_back(static_cast<int>(idx.f2v.size()));
      idx.f2v.push_back({n, i});
      idx.f2v_offset.push_back(idx.f2v_offset.back() + g.var_dims[i]);
    }
  }
  idx.v2f_offset.push_back(0);
  idx.v2f_at.resize(g.var_nbrs.size());
  for (int j = 0; j < g.num_vars(); ++j) {
    for (int n : g.var_nbrs[j]) {
      idx.v2f_at[j].push_back(static_cast<int>(idx.v2f.size()));
      idx.v2f.push_back({n, j});
      idx.v2f_offset.push_back(idx.v2f_offset.back() + g.var_dims[j]);
    }
  }
  return idx;
}

namespace {

// Bipartite nodes: variables are [0, V), factors are [V, V + F).
std::vector<std::vector<int>> adjacency(const FactorGraph& g) {
  const int V = g.num_vars();
  std::vector<std::vector<int>> adj(V + g.num_factors());
  for (int n = 0; n < g.num_factors(); ++n) {
    for (int j : g.factor_nbrs[n]) {
      adj[V + n].push_back(j);
      adj[j].push_back(V + n);
    }
  }
  return adj;
}

std::vector<int> components_of(const std::vector<std::vector<int>>& adj, int& count) {
  std::vector<int> comp(adj.size(), -1);
  count = 0;
  for (std::size_t s = 0; s < adj.size(); ++s) {
    if (comp[s] >= 0) continue;
    std::deque<int> q{static_cast<int>(s)};
    comp[s] = count;
    while (!q.empty()) {
      const int u = q.front();
      q.pop_front();
      for (int w : adj[u]) {
        if (comp[w] < 0) {
          comp[w] = count;
          q.push_back(w);
        }
      }
    }
    ++count;
  }
  return comp;
}

TopologyKind kind_for_rank(int rank) {
  if (rank == 0) return TopologyKind::kForest;
  if (rank == 1) return TopologyKind::kSingleLoopPlusForest;
  return TopologyKind::kMultiLoop;
}

}  // namespace

TopologyClass classify_topology(const FactorGraph& g) {
  const auto adj = adjacency(g);
  int ncomp = 0;
  const auto comp = components_of(adj, ncomp);
  std::vector<int> nodes(ncomp, 0);
  std::vector<int> edges(ncomp, 0);
  for (std::size_t u = 0; u < adj.size(); ++u) {
    ++nodes[comp[u]];
    edges[comp[u]] += static_cast<int>(adj[u].size());
  }
  TopologyClass t;
  t.components = ncomp;
  for (int c = 0; c < ncomp; ++c) {
    const int rank = edges[c] / 2 - nodes[c] + 1;
    t.cycle_rank += rank;
    t.component_kinds.push_back(kind_for_rank(rank));
  }
  t.kind = kind_for_rank(t.cycle_rank);

  if (t.cycle_rank == 1) {
    // Strip leaves; with a single independent cycle the 2-core is that cycle.
    std::vector<int> degree(adj.size());
    std::deque<int> leaves;
    for (std::size_t u = 0; u < adj.size(); ++u) {
      degree[u] = static_cast<int>(adj[u].size());
      if (degree[u] <= 1) leaves.push_back(static_cast<int>(u));
    }
    std::vector<bool> removed(adj.size(), false);
    while (!leaves.empty()) {
      const int u = leaves.front();
      leaves.pop_front();
      if (removed[u]) continue;
      removed[u] = true;
      for (int w : adj[u]) {
        if (!removed[w] && --degree[w] == 1) leaves.push_back(w);
      }
    }
    const int V = g.num_vars();
    for (int n = 0; n < g.num_factors(); ++n) {
      if (removed[V + n]) continue;
      for (int j : g.factor_nbrs[n]) {
        if (!removed[j]) t.loop_members.emplace_back(g.factor_ids[n], g.var_ids[j]);
      }
    }
  }
  return t;
}

int graph_diameter(const FactorGraph& g) {
  const auto adj = adjacency(g);
  int best = 0;
  std::vector<int> dist(adj.size());
  for (std::size_t s = 0; s < adj.size(); ++s) {
    std::fill(dist.begin(), dist.end(), -1);
    dist[s] = 0;
    std::deque<int> q{static_cast<int>(s)};
    while (!q.empty()) {
      const int u = q.front();
      q.pop_front();
      best = std::max(best, dist[u]);
      for (int w : adj[u]) {
        if (dist[w] < 0) {
          dist[w] = dist[u] + 1;
          q.push_back(w);
        }
      }
    }
  }
  return best;
}

std::string to_dot(const FactorGraph& g) {
  std::ostringstream os;
  os << "graph factor_graph {\n";
  for (int j = 0; j < g.num_vars(); ++j) {
    os << "  x" << g.var_ids[j] << " [shape=circle, label=\"x" << g.var_ids[j] << "\"];\n";
  }
  for (int n = 0; n < g.num_factors(); ++n) {
    os << "  f" << g.factor_ids[n] << " [shape=square, label=\"f" << g.factor_ids[n] << "\"];\n";
  }
  for (int n = 0; n < g.num_factors(); ++n) {
    for (int j : g.factor_nbrs[n]) {
      os << "  f" << g.factor_ids[n] << " -- x" << g.var_ids[j] << ";\n";
    }
  }
  os << "}\n";
  return os.str();
}

}  // namespace gabp

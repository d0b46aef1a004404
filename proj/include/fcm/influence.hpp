#ifndef FCM_INFLUENCE_HPP
#define FCM_INFLUENCE_HPP

#include <algorithm>
#include <cstddef>
#include <functional>
#include <vector>

#include "fcm/core.hpp"

namespace fcm {

inline constexpr std::size_t kDefaultMaxPaths = 10000;

using NodePath = std::vector<NodeId>;

struct PathSet {
  std::vector<NodePath> paths;
  bool truncated = false;
};

/// A directed path with its transitive edge product and activation-slope weight.
struct CausalPath {
  NodePath node_ids;
  double edge_product = 0.0;
  double weight_psi = 0.0;
  double influence = 0.0;
  int negative_edges = 0;
};

struct InfluenceReport {
  NodeId from = 0;
  NodeId to = 0;
  std::vector<CausalPath> paths;
  double total = 0.0;
  bool truncated = false;
  bool cycle_warning = false;  // some node on an r->s path sits on a directed cycle
};

namespace detail {

inline void check_node(const FcmModel& model, NodeId id) {
  if (id >= model.size())
    throw Error(ErrorKind::invalid_argument, "node id " + std::to_string(id) + " out of range");
}

// Nodes lying on at least one directed cycle (nontrivial SCC or self-loop).
inline std::vector<bool> nodes_on_cycles(const EdgeMatrix& e) {
  const std::size_t n = e.size();
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<bool> on_stack(n, false);
  std::vector<NodeId> stack;
  int counter = 0, comps = 0;
  std::vector<int> comp_size;
  std::function<void(NodeId)> strong = [&](NodeId v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (NodeId w = 0; w < n; ++w) {
      if (e.at(v, w) == 0.0) continue;
      if (index[w] < 0) {
        strong(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      int size = 0;
      NodeId w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        comp[w] = comps;
        ++size;
      } while (w != v);
      comp_size.push_back(size);
      ++comps;
    }
  };
  for (NodeId v = 0; v < n; ++v)
    if (index[v] < 0) strong(v);
  std::vector<bool> cyclic(n, false);
  for (NodeId v = 0; v < n; ++v) cyclic[v] = comp_size[comp[v]] > 1 || e.at(v, v) != 0.0;
  return cyclic;
}

}  // namespace detail

/// All simple directed paths r -> s over nonzero edges, depth first with
/// successors visited in increasing id order. Stops after max_paths.
inline PathSet enumerate_paths(const FcmModel& model, NodeId r, NodeId s,
                               std::size_t max_paths = kDefaultMaxPaths) {
  detail::check_node(model, r);
  detail::check_node(model, s);
  if (r == s) throw Error(ErrorKind::invalid_argument, "path endpoints must differ");
  const std::size_t n = model.size();
  PathSet out;
  std::vector<bool> on_path(n, false);
  NodePath path{r};
  on_path[r] = true;
  std::function<bool(NodeId)> dfs = [&](NodeId v) -> bool {
    for (NodeId w = 0; w < n; ++w) {
      if (model.edges.at(v, w) == 0.0 || on_path[w]) continue;
      path.push_back(w);
      if (w == s) {
        if (out.paths.size() >= max_paths) {
          out.truncated = true;
          return false;
        }
        out.paths.push_back(path);
      } else {
        on_path[w] = true;
        const bool go_on = dfs(w);
        on_path[w] = false;
        if (!go_on) return false;
      }
      path.pop_back();
    }
    return true;
  };
  dfs(r);
  return out;
}

/// Influence of path.front() on path.back() at the operating point `state`:
/// product of edges times product of downstream activation slopes.
inline CausalPath path_influence(const FcmModel& model, const StateVector& state, const NodePath& path) {
  if (path.size() < 2) throw Error(ErrorKind::invalid_argument, "a causal path needs at least two nodes");
  if (state.size() != model.size())
    throw Error(ErrorKind::dimension_mismatch, "state does not match the model");
  CausalPath out{path, 1.0, 1.0, 0.0, 0};
  for (std::size_t l = 0; l + 1 < path.size(); ++l) {
    detail::check_node(model, path[l]);
    detail::check_node(model, path[l + 1]);
    const double e = model.edges.at(path[l], path[l + 1]);
    out.edge_product *= e;
    if (e < 0.0) ++out.negative_edges;
    const NodeId down = path[l + 1];
    out.weight_psi *= activation_derivative(model.nodes[down].activation, state.values[down]);
  }
  out.influence = out.edge_product * out.weight_psi;
  return out;
}

/// Sum of path influences over every simple r -> s path, in enumeration order.
inline InfluenceReport total_influence(const FcmModel& model, const StateVector& state, NodeId r, NodeId s,
                                       std::size_t max_paths = kDefaultMaxPaths) {
  PathSet set = enumerate_paths(model, r, s, max_paths);
  InfluenceReport report;
  report.from = r;
  report.to = s;
  report.truncated = set.truncated;
  const auto cyclic = detail::nodes_on_cycles(model.edges);
  for (const auto& p : set.paths) {
    report.paths.push_back(path_influence(model, state, p));
    report.total += report.paths.back().influence;
    for (NodeId v : p)
      if (cyclic[v]) report.cycle_warning = true;
  }
  return report;
}

}  // namespace fcm

#endif  // FCM_INFLUENCE_HPP

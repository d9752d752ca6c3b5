#pragma once

// PathFinder negotiated-congestion routing over the RR graph.

#include <algorithm>
#include <limits>
#include <map>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "m3dfpga/place.hpp"
#include "m3dfpga/rrgraph.hpp"

namespace m3d {

struct RouteTree {
  std::string net;
  std::vector<int> nodes;          // rr node ids in the tree
  std::map<int, int> parent;       // rr node -> upstream rr node (-1 at the root)
};

struct RoutingResult {
  std::vector<RouteTree> trees;
  int iterations = 0;
  std::vector<double> history;  // final history cost per rr node
};

struct RouterConfig {
  double pres_fac_first = 0.5;
  double pres_fac_mult = 1.8;
  int max_iterations = 60;
  double base_wire_cost = 1.0;
  double base_pin_cost = 0.95;  // pins slightly cheaper so exits are taken
  // Optional per-segment-length wire cost overrides (e.g. delay-derived).
  // When a length is absent the topological default (length x base cost)
  // applies.
  std::map<int, double> wire_cost_per_len;
};

class UnroutableError : public std::runtime_error {
 public:
  std::map<int, int> overuse;  // rr node -> usage beyond capacity
  UnroutableError(const std::string& what, std::map<int, int> o)
      : std::runtime_error(what), overuse(std::move(o)) {}
};

namespace detail {

inline double rr_base_cost(const RRGraph& g, int id, const RouterConfig& cfg) {
  const RRNode& n = g.node(id);
  switch (n.kind) {
    case RRKind::CHANX:
    case RRKind::CHANY: {
      auto it = cfg.wire_cost_per_len.find(n.seg_len);
      if (it != cfg.wire_cost_per_len.end()) return it->second;
      return cfg.base_wire_cost * n.seg_len;
    }
    case RRKind::SINK:
      return 0.0;
    default:
      return cfg.base_pin_cost;
  }
}

}  // namespace detail

// Label-setting (Dijkstra) search from the net's current tree to one sink.
// Ties break toward the lowest node id, so the search is deterministic.
inline bool route_one_sink(const RRGraph& g, const RouterConfig& cfg,
                           const std::vector<int>& usage, const std::vector<double>& history,
                           double pres_fac, RouteTree& tree, int sink) {
  const size_t n = g.nodes.size();
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<int> prev(n, -2);
  using Label = std::pair<double, int>;
  std::priority_queue<Label, std::vector<Label>, std::greater<Label>> pq;
  for (int t : tree.nodes) {
    dist[static_cast<size_t>(t)] = 0.0;
    prev[static_cast<size_t>(t)] = -1;
    pq.push({0.0, t});
  }
  auto node_cost = [&](int id) {
    const RRNode& nd = g.node(id);
    const int over = usage[static_cast<size_t>(id)] + 1 - nd.capacity;
    const double pres = over > 0 ? 1.0 + pres_fac * over : 1.0;
    return detail::rr_base_cost(g, id, cfg) * (1.0 + history[static_cast<size_t>(id)]) * pres;
  };
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[static_cast<size_t>(u)]) continue;
    if (u == sink) break;
    for (int v : g.edges[static_cast<size_t>(u)]) {
      const RRNode& nv = g.node(v);
      if (nv.kind == RRKind::SINK && v != sink) continue;  // don't pass through sinks
      const double nd = d + node_cost(v);
      if (nd < dist[static_cast<size_t>(v)]) {
        dist[static_cast<size_t>(v)] = nd;
        prev[static_cast<size_t>(v)] = u;
        pq.push({nd, v});
      }
    }
  }
  if (prev[static_cast<size_t>(sink)] == -2) return false;
  // Commit the new branch.
  std::vector<int> branch;
  for (int v = sink; prev[static_cast<size_t>(v)] != -1; v = prev[static_cast<size_t>(v)]) {
    branch.push_back(v);
    tree.parent[v] = prev[static_cast<size_t>(v)];
  }
  for (auto it = branch.rbegin(); it != branch.rend(); ++it) tree.nodes.push_back(*it);
  return true;
}

inline RoutingResult route_pathfinder(const RRGraph& g, const std::vector<PlacedNet>& nets,
                                      const RouterConfig& cfg = {}) {
  RoutingResult res;
  res.history.assign(g.nodes.size(), 0.0);
  std::vector<int> usage(g.nodes.size(), 0);
  res.trees.assign(nets.size(), {});

  double pres_fac = cfg.pres_fac_first;
  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    res.iterations = iter;
    for (size_t ni = 0; ni < nets.size(); ++ni) {
      const PlacedNet& net = nets[ni];
      RouteTree& tree = res.trees[ni];
      // Rip up.
      for (int id : tree.nodes) --usage[static_cast<size_t>(id)];
      tree.nodes.clear();
      tree.parent.clear();
      tree.net = net.name;
      const int src = g.source_at[static_cast<size_t>(g.tile_index(net.driver.x, net.driver.y))];
      tree.nodes.push_back(src);
      tree.parent[src] = -1;
      for (const Loc& s : net.sinks) {
        const int sink = g.sink_at[static_cast<size_t>(g.tile_index(s.x, s.y))];
        if (!route_one_sink(g, cfg, usage, res.history, pres_fac, tree, sink))
          throw UnroutableError("route: no path for net '" + net.name + "'", {});
      }
      for (int id : tree.nodes) ++usage[static_cast<size_t>(id)];
    }
    // Congestion bookkeeping.
    bool overused = false;
    std::map<int, int> overuse;
    for (size_t i = 0; i < g.nodes.size(); ++i) {
      const int over = usage[i] - g.nodes[i].capacity;
      if (over > 0) {
        overused = true;
        overuse[static_cast<int>(i)] = over;
        res.history[i] += over;
      }
    }
    if (!overused) return res;
    if (iter == cfg.max_iterations)
      throw UnroutableError("route: congestion unresolved after " +
                                std::to_string(cfg.max_iterations) + " iterations",
                            std::move(overuse));
    pres_fac *= cfg.pres_fac_mult;
  }
  return res;
}

// Independent legality check: recount usage from the trees themselves.
inline void check_routing(const RRGraph& g, const RoutingResult& res) {
  std::vector<int> usage(g.nodes.size(), 0);
  for (const auto& tree : res.trees) {
    for (int id : tree.nodes) {
      if (id < 0 || id >= static_cast<int>(g.nodes.size()))
        throw std::runtime_error("routing: tree references a nonexistent rr node");
      ++usage[static_cast<size_t>(id)];
    }
    for (const auto& [child, par] : tree.parent) {
      if (par < 0) continue;
      const auto& adj = g.edges[static_cast<size_t>(par)];
      if (!std::binary_search(adj.begin(), adj.end(), child))
        throw std::runtime_error("routing: tree uses a nonexistent rr edge");
    }
  }
  for (size_t i = 0; i < g.nodes.size(); ++i)
    if (usage[i] > g.nodes[i].capacity)
      throw std::runtime_error("routing: node " + std::to_string(i) + " used " +
                               std::to_string(usage[i]) + " times, capacity " +
                               std::to_string(g.nodes[i].capacity));
}

}  // namespace m3d

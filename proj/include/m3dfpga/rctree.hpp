#pragma once

// RC tree and first-moment (Elmore) delay.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace m3d {

struct RcTree {
  struct Node {
    int parent = -1;   // -1 for the root
    double r = 0.0;    // ohm, resistance of the edge to the parent
                       // (for the root: driver source resistance)
    double c = 0.0;    // farad
  };
  std::vector<Node> nodes;  // node 0 is the root; parents precede children

  int add_node(int parent, double r, double c) {
    if (parent >= static_cast<int>(nodes.size()) || (parent < 0 && !nodes.empty()))
      throw std::invalid_argument("RcTree: parent must precede child");
    if (r < 0.0 || c < 0.0) throw std::invalid_argument("RcTree: negative r or c");
    nodes.push_back({parent, r, c});
    return static_cast<int>(nodes.size()) - 1;
  }
};

// Elmore first moment to `sink`: sum over nodes k of c_k times the resistance
// shared between the root->sink and root->k paths.
inline double elmore_delay(const RcTree& tree, int sink) {
  const int n = static_cast<int>(tree.nodes.size());
  if (sink < 0 || sink >= n) throw std::invalid_argument("elmore_delay: no such sink node");
  // Depth and cumulative resistance from the root for every node.
  std::vector<double> rpath(static_cast<size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    const auto& nd = tree.nodes[static_cast<size_t>(i)];
    rpath[static_cast<size_t>(i)] = nd.r + (nd.parent >= 0 ? rpath[static_cast<size_t>(nd.parent)] : 0.0);
  }
  // Mark the root->sink path.
  std::vector<char> on_path(static_cast<size_t>(n), 0);
  for (int v = sink; v >= 0; v = tree.nodes[static_cast<size_t>(v)].parent)
    on_path[static_cast<size_t>(v)] = 1;
  double delay = 0.0;
  for (int k = 0; k < n; ++k) {
    // Walk up from k to the deepest ancestor on the sink path.
    int v = k;
    while (!on_path[static_cast<size_t>(v)]) v = tree.nodes[static_cast<size_t>(v)].parent;
    delay += tree.nodes[static_cast<size_t>(k)].c * rpath[static_cast<size_t>(v)];
  }
  return delay;
}

// 50% step-response crossing estimate.
inline double t50_delay(const RcTree& tree, int sink) {
  return std::log(2.0) * elmore_delay(tree, sink);
}

// Uniform wire as a chain of pi segments appended below `at`; returns the far
// node.  r_total/c_total are the lumped wire parasitics.
inline int append_wire(RcTree& tree, int at, double r_total, double c_total, int segments = 4) {
  int cur = at;
  for (int i = 0; i < segments; ++i) {
    tree.nodes[static_cast<size_t>(cur)].c += 0.5 * c_total / segments;
    cur = tree.add_node(cur, r_total / segments, 0.5 * c_total / segments);
  }
  return cur;
}

}  // namespace m3d

#pragma once

// Routing-resource graph: island-style tiles, staggered mixed-length wire
// segments, disjoint switch blocks, fc-pattern pin connections.

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "m3dfpga/tile.hpp"

namespace m3d {

enum class RRKind { SOURCE, SINK, IPIN, OPIN, CHANX, CHANY };

inline const char* to_string(RRKind k) {
  switch (k) {
    case RRKind::SOURCE: return "SOURCE";
    case RRKind::SINK: return "SINK";
    case RRKind::IPIN: return "IPIN";
    case RRKind::OPIN: return "OPIN";
    case RRKind::CHANX: return "CHANX";
    case RRKind::CHANY: return "CHANY";
  }
  return "?";
}

struct RRNode {
  RRKind kind = RRKind::SOURCE;
  int x = 0, y = 0;    // tile for pins, channel row/col + span start for wires
  int track = -1;      // wire track index
  int seg_len = 0;     // links covered by this wire
  int pin = -1;        // pin index for IPIN/OPIN
  int capacity = 1;
};

struct RRGraph {
  int grid = 0, w = 0, l = 0, fs = 3;
  std::vector<RRNode> nodes;
  std::vector<std::vector<int>> edges;  // adjacency, sorted ascending

  std::vector<int> source_at, sink_at;           // per tile (y*grid+x)
  std::vector<std::vector<int>> opins_at, ipins_at;

  int tile_index(int x, int y) const { return y * grid + x; }
  const RRNode& node(int id) const { return nodes[static_cast<size_t>(id)]; }
};

namespace detail {

struct LinkKey {  // one unit-length channel position
  bool horizontal;
  int chan;  // row (horizontal) or column (vertical)
  int pos;   // link index along the channel
  int track;
  bool operator<(const LinkKey& o) const {
    return std::tie(horizontal, chan, pos, track) <
           std::tie(o.horizontal, o.chan, o.pos, o.track);
  }
};

}  // namespace detail

// Track t carries length-1 wires for t < ceil(w/2), length-l wires otherwise;
// long wires stagger their start by (t mod l) so ends spread across columns.
inline int rr_track_length(int t, int w, int l) { return t < (w + 1) / 2 ? 1 : l; }

// Documented closed form for the wire-node count of one channel with G-1
// links: length-1 tracks contribute G-1 wires each; a length-l track with
// offset o contributes one wire per start in {o-l, o, o+l, ...} whose span
// intersects [0, G-1).
inline int rr_wires_per_channel(int grid, int w, int l) {
  int count = 0;
  for (int t = 0; t < w; ++t) {
    const int len = rr_track_length(t, w, l);
    if (len == 1) {
      count += grid - 1;
    } else {
      const int o = t % len;
      for (int s = o - len; s < grid - 1; s += len)
        if (std::min(grid - 2, s + len - 1) >= std::max(0, s)) ++count;
    }
  }
  return count;
}

inline RRGraph build_rr_graph(const TileSpec& spec, int grid) {
  spec.validate();
  if (grid < 2) throw std::invalid_argument("rr graph: grid side must be >= 2");
  RRGraph g;
  g.grid = grid;
  g.w = spec.w;
  g.l = spec.l;
  g.fs = spec.fs;

  const int n_opin = spec.n;
  const int n_ipin = spec.i;
  g.source_at.assign(static_cast<size_t>(grid * grid), -1);
  g.sink_at.assign(static_cast<size_t>(grid * grid), -1);
  g.opins_at.assign(static_cast<size_t>(grid * grid), {});
  g.ipins_at.assign(static_cast<size_t>(grid * grid), {});

  auto add = [&](RRNode n) {
    g.nodes.push_back(n);
    return static_cast<int>(g.nodes.size()) - 1;
  };

  for (int y = 0; y < grid; ++y)
    for (int x = 0; x < grid; ++x) {
      const int t = g.tile_index(x, y);
      g.source_at[static_cast<size_t>(t)] =
          add({RRKind::SOURCE, x, y, -1, 0, -1, n_opin});
      g.sink_at[static_cast<size_t>(t)] = add({RRKind::SINK, x, y, -1, 0, -1, n_ipin});
      for (int p = 0; p < n_opin; ++p)
        g.opins_at[static_cast<size_t>(t)].push_back(add({RRKind::OPIN, x, y, -1, 0, p, 1}));
      for (int p = 0; p < n_ipin; ++p)
        g.ipins_at[static_cast<size_t>(t)].push_back(add({RRKind::IPIN, x, y, -1, 0, p, 1}));
    }

  // Wires.  link_owner maps every covered unit link to its wire node.
  std::map<detail::LinkKey, int> link_owner;
  // wire ends: (junction, track, horizontal) -> wire ids ending there
  std::map<std::tuple<int, int, int, bool>, std::vector<int>> ends;
  for (int horizontal = 1; horizontal >= 0; --horizontal) {
    for (int chan = 0; chan < grid; ++chan) {
      for (int t = 0; t < spec.w; ++t) {
        const int len = rr_track_length(t, spec.w, spec.l);
        const int o = len == 1 ? 0 : t % len;
        for (int s = o - len; s < grid - 1; s += len) {
          const int x0 = std::max(0, s), x1 = std::min(grid - 2, s + len - 1);
          if (x1 < x0) continue;
          RRNode n;
          n.kind = horizontal ? RRKind::CHANX : RRKind::CHANY;
          n.x = horizontal ? x0 : chan;
          n.y = horizontal ? chan : x0;
          n.track = t;
          n.seg_len = x1 - x0 + 1;
          const int id = add(n);
          for (int p = x0; p <= x1; ++p)
            link_owner[{horizontal == 1, chan, p, t}] = id;
          for (int j : {x0, x1 + 1}) {
            const int jx = horizontal ? j : chan;
            const int jy = horizontal ? chan : j;
            ends[{jx, jy, t, horizontal == 1}].push_back(id);
          }
        }
      }
    }
  }

  g.edges.assign(g.nodes.size(), {});
  auto connect = [&](int a, int b) { g.edges[static_cast<size_t>(a)].push_back(b); };

  // Disjoint switch block: at every junction, same-track wire ends meet.
  for (int jy = 0; jy < grid; ++jy)
    for (int jx = 0; jx < grid; ++jx)
      for (int t = 0; t < spec.w; ++t) {
        std::vector<int> here;
        for (bool h : {true, false}) {
          auto it = ends.find({jx, jy, t, h});
          if (it != ends.end()) here.insert(here.end(), it->second.begin(), it->second.end());
        }
        for (int a : here)
          for (int b : here)
            if (a != b) connect(a, b);
      }

  // Pin connections at the tile's adjacent links.
  const int nc_in = static_cast<int>(std::ceil(spec.w * spec.fc_in));
  const int nc_out = static_cast<int>(std::ceil(spec.w * spec.fc_out));
  const int stride_in = std::max(1, spec.w / std::max(1, nc_in));
  const int stride_out = std::max(1, spec.w / std::max(1, nc_out));
  for (int y = 0; y < grid; ++y)
    for (int x = 0; x < grid; ++x) {
      const int t = g.tile_index(x, y);
      const int hx_pos = std::min(x, grid - 2);
      const int vy_pos = std::min(y, grid - 2);
      auto wire_at = [&](bool h, int track) {
        auto it = link_owner.find({h, h ? y : x, h ? hx_pos : vy_pos, track});
        return it == link_owner.end() ? -1 : it->second;
      };
      for (int p = 0; p < n_ipin; ++p) {
        const int ipin = g.ipins_at[static_cast<size_t>(t)][static_cast<size_t>(p)];
        connect(ipin, g.sink_at[static_cast<size_t>(t)]);
        for (int j = 0; j < nc_in; ++j) {
          const int track = (p + j * stride_in) % spec.w;
          for (bool h : {true, false}) {
            const int wid = wire_at(h, track);
            if (wid >= 0) connect(wid, ipin);
          }
        }
      }
      for (int p = 0; p < n_opin; ++p) {
        const int opin = g.opins_at[static_cast<size_t>(t)][static_cast<size_t>(p)];
        connect(g.source_at[static_cast<size_t>(t)], opin);
        for (int j = 0; j < nc_out; ++j) {
          const int track = (p + 1 + j * stride_out) % spec.w;
          for (bool h : {true, false}) {
            const int wid = wire_at(h, track);
            if (wid >= 0) connect(opin, wid);
          }
        }
      }
    }

  for (auto& adj : g.edges) {
    std::sort(adj.begin(), adj.end());
    adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
  }
  return g;
}

inline int rr_chan_node_count(const RRGraph& g) {
  int n = 0;
  for (const auto& nd : g.nodes)
    if (nd.kind == RRKind::CHANX || nd.kind == RRKind::CHANY) ++n;
  return n;
}

}  // namespace m3d

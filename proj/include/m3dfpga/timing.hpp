#pragma once

// Static timing analysis over the packed/placed/routed design and final
// design-metric extraction.

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "m3dfpga/rctree.hpp"
#include "m3dfpga/route.hpp"
#include "m3dfpga/sizing.hpp"

namespace m3d {

// Elmore sink delays of one routed net under the arch's switch/segment model.
// Every rr hop is a switch (r_on driving, c_in load); wire nodes add their
// distributed RC.
inline std::map<int, double> net_wire_delays(const RRGraph& g, const RouteTree& tree,
                                             const ArchModel& arch) {
  std::map<int, double> out;
  if (tree.nodes.empty()) return out;
  RcTree rc;
  std::map<int, int> rc_of;  // rr node -> rc node
  rc_of[tree.nodes.front()] = rc.add_node(-1, arch.switch_r_on, 0.0);
  for (size_t i = 1; i < tree.nodes.size(); ++i) {
    const int id = tree.nodes[i];
    const int par = tree.parent.at(id);
    const RRNode& n = g.node(id);
    double r = 0.0, c = 0.0;
    switch (n.kind) {
      case RRKind::CHANX:
      case RRKind::CHANY:
        r = arch.switch_r_on + arch.seg_r_per_tile * n.seg_len;
        c = arch.switch_c_in + arch.seg_c_per_tile * n.seg_len;
        break;
      case RRKind::OPIN:
        c = arch.switch_c_out;
        break;
      case RRKind::IPIN:
      case RRKind::SINK:
        c = arch.switch_c_in;
        break;
      case RRKind::SOURCE:
        break;
    }
    rc_of[id] = rc.add_node(rc_of.at(par), r, c);
  }
  for (const int id : tree.nodes)
    if (g.node(id).kind == RRKind::SINK) out[id] = t50_delay(rc, rc_of.at(id));
  return out;
}

struct StaResult {
  double cpd = 0.0;   // s
  double f_max = 0.0; // Hz
  std::map<std::string, double> arrival;  // per signal
};

// One timing edge: signal `from` feeding `to` with interconnect delay.
struct TimingEdge {
  std::string from, to;
  double delay = 0.0;
};

// The full design context a timing run needs.
struct RoutedDesign {
  PackedNetlist packed;
  Placement placement;
  std::vector<PlacedNet> nets;
  RoutingResult routing;
};

namespace detail {

// Interconnect delay of `sig` arriving at tile `to`, from the routed trees.
inline double routed_delay(const RRGraph& g, const RoutedDesign& d, const ArchModel& arch,
                           const std::string& sig, const Loc& to) {
  for (size_t i = 0; i < d.nets.size(); ++i) {
    if (d.nets[i].name != sig) continue;
    const int sink = g.sink_at[static_cast<size_t>(g.tile_index(to.x, to.y))];
    const std::map<int, double> delays = net_wire_delays(g, d.routing.trees[i], arch);
    auto it = delays.find(sink);
    if (it != delays.end()) return it->second;
  }
  return 0.0;  // intra-tile: no routed wire
}

}  // namespace detail

// Timing DAG: edges from every signal to the signals it combinationally
// feeds, delays = routed interconnect + receiving-block delay.  Sequential
// boundaries (latches) cut the graph.
inline std::vector<TimingEdge> build_timing_edges(const RRGraph& g, const RoutedDesign& d,
                                                  const ArchModel& arch) {
  const LogicNetlist& nl = d.packed.nl;
  std::vector<TimingEdge> edges;
  const double lut_d = arch.blocks.at("lut").delay + arch.blocks.at("ble_out").delay;
  const double entry_d = arch.blocks.at("cb_mux").delay + arch.blocks.at("clb_xbar").delay;
  const double local_d = arch.blocks.at("clb_xbar").delay;

  std::map<std::string, Loc> cluster_of_signal;
  std::map<std::string, int> cluster_idx_of_signal;
  for (size_t c = 0; c < d.packed.clusters.size(); ++c)
    for (const auto& b : d.packed.clusters[c].bles) {
      cluster_idx_of_signal[b.output] = static_cast<int>(c);
      if (b.lut >= 0)
        cluster_idx_of_signal[nl.luts[static_cast<size_t>(b.lut)].output] = static_cast<int>(c);
    }
  auto tile_of = [&](const std::string& sig) -> Loc {
    auto it = cluster_idx_of_signal.find(sig);
    if (it != cluster_idx_of_signal.end())
      return d.placement.cluster_loc[static_cast<size_t>(it->second)];
    return d.placement.pad_loc.at(sig);
  };
  auto same_cluster = [&](const std::string& a, const std::string& b) {
    auto ia = cluster_idx_of_signal.find(a);
    auto ib = cluster_idx_of_signal.find(b);
    return ia != cluster_idx_of_signal.end() && ib != cluster_idx_of_signal.end() &&
           ia->second == ib->second;
  };

  for (const auto& lut : nl.luts) {
    const Loc here = tile_of(lut.output);
    for (const auto& in : lut.inputs) {
      TimingEdge e;
      e.from = in;
      e.to = lut.output;
      if (same_cluster(in, lut.output))
        e.delay = local_d + lut_d;
      else
        e.delay = detail::routed_delay(g, d, arch, in, here) + entry_d + lut_d;
      edges.push_back(std::move(e));
    }
  }
  // Latch D pins and primary outputs are endpoints: give them sink markers.
  for (const auto& l : nl.latches) {
    TimingEdge e;
    e.from = l.input;
    e.to = "$latch$" + l.output;
    e.delay = same_cluster(l.input, l.output)
                  ? 0.0
                  : detail::routed_delay(g, d, arch, l.input, tile_of(l.output)) + entry_d;
    edges.push_back(std::move(e));
  }
  for (const auto& po : nl.outputs) {
    TimingEdge e;
    e.from = po;
    e.to = "$po$" + po;
    e.delay = detail::routed_delay(g, d, arch, po, d.placement.pad_loc.at(po));
    edges.push_back(std::move(e));
  }
  return edges;
}

// Topological longest path.  Sources: primary inputs and latch outputs
// (clock-to-q from the arch ff block).
inline StaResult run_sta(const RRGraph& g, const RoutedDesign& d, const ArchModel& arch) {
  const std::vector<TimingEdge> edges = build_timing_edges(g, d, arch);
  const double clk_q = arch.blocks.at("ff").delay;

  std::map<std::string, double> arrival;
  for (const auto& pi : d.packed.nl.inputs) arrival[pi] = 0.0;
  for (const auto& l : d.packed.nl.latches) arrival[l.output] = clk_q;

  std::map<std::string, std::vector<const TimingEdge*>> fanin;
  std::map<std::string, int> indegree;
  std::set<std::string> nodes;
  for (const auto& e : edges) {
    fanin[e.to].push_back(&e);
    nodes.insert(e.from);
    nodes.insert(e.to);
  }
  for (const auto& n : nodes) indegree[n] = 0;
  for (const auto& e : edges)
    if (!arrival.count(e.to)) ++indegree[e.to];

  std::vector<std::string> order;
  for (const auto& [n, deg] : indegree)
    if (deg == 0 || arrival.count(n)) order.push_back(n);
  std::map<std::string, std::vector<const TimingEdge*>> fanout;
  for (const auto& e : edges) fanout[e.from].push_back(&e);
  std::map<std::string, int> remaining = indegree;
  std::set<std::string> queued(order.begin(), order.end());
  for (size_t head = 0; head < order.size(); ++head) {
    const std::string n = order[head];
    if (!arrival.count(n)) {
      double a = 0.0;
      for (const TimingEdge* e : fanin[n])
        a = std::max(a, arrival.at(e->from) + e->delay);
      arrival[n] = a;
    } else if (fanin.count(n)) {
      double a = arrival[n];
      for (const TimingEdge* e : fanin[n])
        a = std::max(a, arrival.at(e->from) + e->delay);
      arrival[n] = a;
    }
    for (const TimingEdge* e : fanout[n]) {
      if (arrival.count(e->to) || queued.count(e->to)) continue;
      if (--remaining[e->to] == 0) {
        order.push_back(e->to);
        queued.insert(e->to);
      }
    }
  }
  for (const auto& [n, deg] : remaining)
    if (!arrival.count(n))
      throw std::runtime_error("sta: combinational cycle through '" + n + "'");

  StaResult res;
  res.arrival = arrival;
  for (const auto& [n, a] : arrival)
    if (n.rfind("$po$", 0) == 0 || n.rfind("$latch$", 0) == 0)
      res.cpd = std::max(res.cpd, a);
  if (res.cpd <= 0.0)  // e.g. straight wire designs: floor at one LUT delay
    for (const auto& [n, a] : arrival) res.cpd = std::max(res.cpd, a);
  if (res.cpd <= 0.0)
    throw std::runtime_error("sta: design has no timed paths");
  res.f_max = 1.0 / res.cpd;
  return res;
}

struct DesignMetrics {
  double cpd = 0.0;    // s
  double f_max = 0.0;  // Hz
  double a_tot = 0.0;  // um^2
  double at2 = 0.0;    // um^2 * s^2
  std::map<int, int> occupancy;       // segment length -> used wire nodes
  std::map<std::pair<int, int>, double> congestion;  // (x,y) -> history cost
};

inline DesignMetrics design_metrics(const RRGraph& g, const RoutedDesign& d,
                                    const ArchModel& arch) {
  DesignMetrics m;
  if (!d.packed.nl.luts.empty() || !d.packed.nl.latches.empty()) {
    const StaResult sta = run_sta(g, d, arch);
    m.cpd = sta.cpd;
    m.f_max = sta.f_max;
  }
  std::set<Loc> occupied;
  for (const auto& l : d.placement.cluster_loc) occupied.insert(l);
  for (const auto& [pad, l] : d.placement.pad_loc) occupied.insert(l);
  if (d.packed.clusters.empty() && d.packed.nl.inputs.empty()) occupied.clear();
  m.a_tot = static_cast<double>(occupied.size()) * arch.tile_footprint_um2;
  m.at2 = m.a_tot * m.cpd * m.cpd;

  std::set<int> used;
  for (const auto& tree : d.routing.trees)
    for (int id : tree.nodes) used.insert(id);
  for (int id : used) {
    const RRNode& n = g.node(id);
    if (n.kind == RRKind::CHANX || n.kind == RRKind::CHANY) ++m.occupancy[n.seg_len];
  }
  for (size_t i = 0; i < d.routing.history.size(); ++i)
    if (d.routing.history[i] > 0.0) {
      const RRNode& n = g.node(static_cast<int>(i));
      m.congestion[{n.x, n.y}] += d.routing.history[i];
    }
  return m;
}

// End-to-end flow: pack, place, build rr, route, time.
struct FlowResult {
  RoutedDesign design;
  RRGraph rr;
  DesignMetrics metrics;
};

// Delay-derived router cost: the cost of a wire of length len is the Elmore
// estimate of one switch-plus-wire hop, normalised so a length-1 wire costs
// exactly 1.  Long wires amortise the switch delay over many tiles, so their
// relative cost drops as the per-tile segment RC shrinks.
inline RouterConfig router_config_for_arch(const ArchModel& arch) {
  auto hop = [&](int len) {
    double rw = arch.seg_r_per_tile * len;
    double cw = arch.seg_c_per_tile * len;
    return arch.switch_t_del + arch.switch_r_on * (arch.switch_c_in + cw) +
           rw * (0.5 * cw + arch.switch_c_in);
  };
  RouterConfig cfg;
  // Long wires clipped at the fabric edge cover fewer links than the
  // nominal length, so every possible span gets its own cost entry.
  for (int len = 1; len <= arch.l; ++len)
    cfg.wire_cost_per_len[len] = hop(len) / hop(1);
  return cfg;
}

inline FlowResult run_flow(const LogicNetlist& nl, const ArchModel& arch, unsigned seed) {
  TileSpec spec;
  spec.k = arch.k;
  spec.n = arch.n;
  spec.i = arch.i;
  spec.w = arch.w;
  spec.l = arch.l;
  spec.fs = arch.fs;
  spec.fc_in = arch.fc_in;
  spec.fc_out = arch.fc_out;

  FlowResult fr;
  fr.design.packed = pack_netlist(nl, spec);
  fr.design.placement = place_sa(fr.design.packed, seed);
  fr.design.nets = placed_nets(fr.design.packed, fr.design.placement);
  fr.rr = build_rr_graph(spec, fr.design.placement.grid);
  fr.design.routing = route_pathfinder(fr.rr, fr.design.nets, router_config_for_arch(arch));
  check_routing(fr.rr, fr.design.routing);
  fr.metrics = design_metrics(fr.rr, fr.design, arch);
  return fr;
}

}  // namespace m3d

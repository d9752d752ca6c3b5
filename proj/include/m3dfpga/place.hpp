#pragma once

// Simulated-annealing placement of packed clusters on a logic grid with a
// fixed IO ring.

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "m3dfpga/pack.hpp"

namespace m3d {

struct Loc {
  int x = 0, y = 0;
  bool operator==(const Loc& o) const { return x == o.x && y == o.y; }
  bool operator<(const Loc& o) const { return x != o.x ? x < o.x : y < o.y; }
};

// A routable point-to-multipoint net: one driver location, sink locations.
struct PlacedNet {
  std::string name;
  Loc driver;
  std::vector<Loc> sinks;
};

struct Placement {
  int grid = 0;                    // total side length including the IO ring
  std::vector<Loc> cluster_loc;    // per cluster
  std::map<std::string, Loc> pad_loc;  // PI/PO pads on the ring
  double cost = 0.0;
};

namespace detail {

inline std::vector<Loc> ring_slots(int grid) {
  std::vector<Loc> slots;
  for (int x = 0; x < grid; ++x) slots.push_back({x, 0});
  for (int y = 1; y < grid; ++y) slots.push_back({grid - 1, y});
  for (int x = grid - 2; x >= 0; --x) slots.push_back({x, grid - 1});
  for (int y = grid - 2; y >= 1; --y) slots.push_back({0, y});
  return slots;
}

// Net extraction: signal -> (driving cluster or pad, consuming clusters/pads).
struct NetPins {
  int driver_cluster = -1;  // -1: driven by a pad
  std::string driver_pad;
  std::vector<int> sink_clusters;
  std::vector<std::string> sink_pads;
};

inline std::map<std::string, NetPins> extract_nets(const PackedNetlist& p) {
  std::map<std::string, NetPins> nets;
  for (size_t c = 0; c < p.clusters.size(); ++c) {
    for (const auto& b : p.clusters[c].bles) {
      nets[b.output].driver_cluster = static_cast<int>(c);
      if (b.lut >= 0 && b.latch >= 0)  // combinational output also leaves the BLE
        nets[p.nl.luts[static_cast<size_t>(b.lut)].output].driver_cluster = static_cast<int>(c);
    }
    for (const auto& in : p.clusters[c].external_inputs)
      nets[in].sink_clusters.push_back(static_cast<int>(c));
  }
  for (const auto& pi : p.nl.inputs) nets[pi].driver_pad = pi;
  for (const auto& po : p.nl.outputs) nets[po].sink_pads.push_back(po);
  // Drop nets nobody consumes.
  for (auto it = nets.begin(); it != nets.end();)
    it = (it->second.sink_clusters.empty() && it->second.sink_pads.empty()) ? nets.erase(it)
                                                                            : std::next(it);
  return nets;
}

inline double hpwl(const Loc& d, const std::vector<Loc>& sinks) {
  int x0 = d.x, x1 = d.x, y0 = d.y, y1 = d.y;
  for (const auto& s : sinks) {
    x0 = std::min(x0, s.x);
    x1 = std::max(x1, s.x);
    y0 = std::min(y0, s.y);
    y1 = std::max(y1, s.y);
  }
  return static_cast<double>((x1 - x0) + (y1 - y0));
}

}  // namespace detail

inline double placement_cost(const PackedNetlist& p, const Placement& pl) {
  const auto nets = detail::extract_nets(p);
  double cost = 0.0;
  for (const auto& [name, pins] : nets) {
    Loc d = pins.driver_cluster >= 0 ? pl.cluster_loc[static_cast<size_t>(pins.driver_cluster)]
                                     : pl.pad_loc.at(pins.driver_pad);
    std::vector<Loc> sinks;
    for (int c : pins.sink_clusters) sinks.push_back(pl.cluster_loc[static_cast<size_t>(c)]);
    for (const auto& pad : pins.sink_pads) sinks.push_back(pl.pad_loc.at(pad));
    cost += detail::hpwl(d, sinks);  // uniform criticality weight
  }
  return cost;
}

inline int placement_grid_side(const PackedNetlist& p) {
  const int logic = std::max(
      1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(p.clusters.size())))));
  int grid = logic + 2;  // IO ring
  const size_t pads = p.nl.inputs.size() + p.nl.outputs.size();
  while (detail::ring_slots(grid).size() < pads) ++grid;
  return grid;
}

// VPR-classic schedule: T0 from the stddev of random-move costs, geometric
// cooling 0.9, 10*clusters^(4/3) moves per temperature, stop below 0.5%
// acceptance.  Deterministic for a given (netlist, seed).
inline Placement place_sa(const PackedNetlist& p, unsigned seed, int grid = 0) {
  Placement pl;
  pl.grid = grid > 0 ? grid : placement_grid_side(p);
  const int logic = pl.grid - 2;
  if (logic < 1) throw std::invalid_argument("place: grid too small for an IO ring");
  if (static_cast<size_t>(logic) * static_cast<size_t>(logic) < p.clusters.size())
    throw std::runtime_error("place: insufficient grid capacity for " +
                             std::to_string(p.clusters.size()) + " clusters");

  // Fixed pads, round-robin over the ring.
  std::vector<Loc> ring = detail::ring_slots(pl.grid);
  size_t slot = 0;
  const size_t pads = p.nl.inputs.size() + p.nl.outputs.size();
  const size_t stride = std::max<size_t>(1, ring.size() / std::max<size_t>(1, pads));
  for (const auto& pi : p.nl.inputs) pl.pad_loc[pi] = ring[(slot += stride) % ring.size()];
  for (const auto& po : p.nl.outputs) pl.pad_loc[po] = ring[(slot += stride) % ring.size()];

  // Initial placement in slot order.
  std::vector<Loc> slots;
  for (int y = 1; y <= logic; ++y)
    for (int x = 1; x <= logic; ++x) slots.push_back({x, y});
  pl.cluster_loc.assign(p.clusters.size(), Loc{});
  std::vector<int> occupant(slots.size(), -1);
  for (size_t c = 0; c < p.clusters.size(); ++c) {
    pl.cluster_loc[c] = slots[c];
    occupant[c] = static_cast<int>(c);
  }
  pl.cost = placement_cost(p, pl);
  if (p.clusters.size() < 2 || slots.size() < 2) return pl;

  std::mt19937 rng(seed);
  std::uniform_int_distribution<size_t> pick(0, slots.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto try_swap = [&](size_t a, size_t b) {
    const int ca = occupant[a], cb = occupant[b];
    if (ca >= 0) pl.cluster_loc[static_cast<size_t>(ca)] = slots[b];
    if (cb >= 0) pl.cluster_loc[static_cast<size_t>(cb)] = slots[a];
    std::swap(occupant[a], occupant[b]);
  };

  // Initial temperature from the cost spread of random moves.
  double mean = 0.0, m2 = 0.0;
  const int probes = 24;
  for (int i = 0; i < probes; ++i) {
    size_t a = pick(rng), b = pick(rng);
    if (a == b || (occupant[a] < 0 && occupant[b] < 0)) continue;
    try_swap(a, b);
    const double c = placement_cost(p, pl);
    try_swap(a, b);
    const double d = c - pl.cost;
    mean += d;
    m2 += d * d;
  }
  mean /= probes;
  double temp = std::sqrt(std::max(1e-12, m2 / probes - mean * mean));

  const long moves_per_temp = static_cast<long>(
      10.0 * std::pow(static_cast<double>(p.clusters.size()), 4.0 / 3.0));
  for (int round = 0; round < 200; ++round) {
    long accepted = 0;
    for (long m = 0; m < moves_per_temp; ++m) {
      size_t a = pick(rng), b = pick(rng);
      if (a == b || (occupant[a] < 0 && occupant[b] < 0)) continue;
      try_swap(a, b);
      const double cand = placement_cost(p, pl);
      const double delta = cand - pl.cost;
      if (delta <= 0.0 || unit(rng) < std::exp(-delta / temp)) {
        pl.cost = cand;
        ++accepted;
      } else {
        try_swap(a, b);
      }
    }
    temp *= 0.9;
    if (accepted < moves_per_temp / 200) break;  // acceptance under 0.5%
  }
  pl.cost = placement_cost(p, pl);
  return pl;
}

// Nets with physical endpoints, ready for routing.
inline std::vector<PlacedNet> placed_nets(const PackedNetlist& p, const Placement& pl) {
  std::vector<PlacedNet> out;
  for (const auto& [name, pins] : detail::extract_nets(p)) {
    PlacedNet n;
    n.name = name;
    n.driver = pins.driver_cluster >= 0
                   ? pl.cluster_loc[static_cast<size_t>(pins.driver_cluster)]
                   : pl.pad_loc.at(pins.driver_pad);
    std::set<Loc> sinks;
    for (int c : pins.sink_clusters) sinks.insert(pl.cluster_loc[static_cast<size_t>(c)]);
    for (const auto& pad : pins.sink_pads) sinks.insert(pl.pad_loc.at(pad));
    sinks.erase(n.driver);  // intra-tile connections need no routing
    if (sinks.empty()) continue;
    n.sinks.assign(sinks.begin(), sinks.end());
    out.push_back(std::move(n));
  }
  return out;
}

}  // namespace m3d

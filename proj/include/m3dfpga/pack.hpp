#pragma once

// Greedy affinity packing of LUT/FF pairs (BLEs) into CLB clusters.

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "m3dfpga/blif.hpp"
#include "m3dfpga/tile.hpp"

namespace m3d {

struct Ble {
  int lut = -1;    // index into LogicNetlist::luts, -1 for a latch-only BLE
  int latch = -1;  // index into LogicNetlist::latches, -1 if unregistered
  std::string output;  // net leaving the BLE
};

struct Cluster {
  std::vector<Ble> bles;
  std::set<std::string> external_inputs;  // distinct nets entering the cluster
};

struct PackedNetlist {
  LogicNetlist nl;
  std::vector<Cluster> clusters;
};

namespace detail {

// Cluster-external inputs if `extra` were added to `members`' output set.
inline std::set<std::string> cluster_inputs(const LogicNetlist& nl,
                                            const std::vector<Ble>& bles) {
  std::set<std::string> produced, needed;
  for (const auto& b : bles) {
    produced.insert(b.output);
    if (b.lut >= 0) produced.insert(nl.luts[static_cast<size_t>(b.lut)].output);
  }
  for (const auto& b : bles) {
    if (b.lut >= 0)
      for (const auto& in : nl.luts[static_cast<size_t>(b.lut)].inputs)
        if (!produced.count(in)) needed.insert(in);
    if (b.latch >= 0 && b.lut < 0) {
      const auto& in = nl.latches[static_cast<size_t>(b.latch)].input;
      if (!produced.count(in)) needed.insert(in);
    }
  }
  return needed;
}

}  // namespace detail

// One BLE per LUT; a latch is fused into the BLE of the LUT driving it, and
// latches fed by non-LUT signals become latch-only BLEs.
inline std::vector<Ble> form_bles(const LogicNetlist& nl) {
  std::vector<Ble> bles;
  std::map<std::string, int> lut_ble;  // lut output net -> ble index
  for (size_t i = 0; i < nl.luts.size(); ++i) {
    Ble b;
    b.lut = static_cast<int>(i);
    b.output = nl.luts[i].output;
    lut_ble[nl.luts[i].output] = static_cast<int>(bles.size());
    bles.push_back(b);
  }
  for (size_t i = 0; i < nl.latches.size(); ++i) {
    const LatchNode& l = nl.latches[i];
    auto it = lut_ble.find(l.input);
    if (it != lut_ble.end() && bles[static_cast<size_t>(it->second)].latch < 0) {
      Ble& b = bles[static_cast<size_t>(it->second)];
      b.latch = static_cast<int>(i);
      b.output = l.output;  // registered output leaves the BLE
    } else {
      Ble b;
      b.latch = static_cast<int>(i);
      b.output = l.output;
      bles.push_back(b);
    }
  }
  return bles;
}

inline PackedNetlist pack_netlist(const LogicNetlist& nl, const TileSpec& spec) {
  for (const auto& l : nl.luts)
    if (static_cast<int>(l.inputs.size()) > spec.k)
      throw std::runtime_error("pack: unmappable LUT '" + l.output + "' has " +
                               std::to_string(l.inputs.size()) + " inputs, k=" +
                               std::to_string(spec.k));
  PackedNetlist out;
  out.nl = nl;
  std::vector<Ble> bles = form_bles(nl);
  std::vector<char> packed(bles.size(), 0);

  for (size_t seed = 0; seed < bles.size(); ++seed) {
    if (packed[seed]) continue;
    Cluster cl;
    cl.bles.push_back(bles[seed]);
    packed[seed] = 1;
    while (static_cast<int>(cl.bles.size()) < spec.n) {
      // Candidate with the most shared nets; ties to the lowest index.
      int best = -1, best_shared = -1;
      std::set<std::string> have = detail::cluster_inputs(out.nl, cl.bles);
      for (const auto& b : cl.bles) have.insert(b.output);
      for (size_t c = 0; c < bles.size(); ++c) {
        if (packed[c]) continue;
        std::vector<Ble> trial = cl.bles;
        trial.push_back(bles[c]);
        if (static_cast<int>(detail::cluster_inputs(out.nl, trial).size()) > spec.i) continue;
        int shared = 0;
        if (bles[c].lut >= 0)
          for (const auto& in : nl.luts[static_cast<size_t>(bles[c].lut)].inputs)
            shared += have.count(in) ? 1 : 0;
        shared += have.count(bles[c].output) ? 1 : 0;
        if (shared > best_shared) {
          best_shared = shared;
          best = static_cast<int>(c);
        }
      }
      if (best < 0) break;
      cl.bles.push_back(bles[static_cast<size_t>(best)]);
      packed[static_cast<size_t>(best)] = 1;
    }
    cl.external_inputs = detail::cluster_inputs(out.nl, cl.bles);
    out.clusters.push_back(std::move(cl));
  }
  return out;
}

// Independent legality check: capacity, input budget, unique assignment.
inline void check_packing(const PackedNetlist& p, const TileSpec& spec) {
  std::set<int> seen_luts, seen_latches;
  for (const auto& cl : p.clusters) {
    if (static_cast<int>(cl.bles.size()) > spec.n)
      throw std::runtime_error("packing: cluster exceeds n BLEs");
    const std::set<std::string> ins = detail::cluster_inputs(p.nl, cl.bles);
    if (static_cast<int>(ins.size()) > spec.i)
      throw std::runtime_error("packing: cluster exceeds i external inputs");
    for (const auto& b : cl.bles) {
      if (b.lut >= 0 && !seen_luts.insert(b.lut).second)
        throw std::runtime_error("packing: LUT assigned twice");
      if (b.latch >= 0 && !seen_latches.insert(b.latch).second)
        throw std::runtime_error("packing: latch assigned twice");
    }
  }
  if (seen_luts.size() != p.nl.luts.size())
    throw std::runtime_error("packing: unassigned LUT");
  if (seen_latches.size() != p.nl.latches.size())
    throw std::runtime_error("packing: unassigned latch");
}

}  // namespace m3d

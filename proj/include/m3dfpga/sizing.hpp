#pragma once

// Transistor-width optimization over subcircuit classes and export of the
// resulting architecture model for the place-and-route engine.

#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "m3dfpga/cost.hpp"
#include "m3dfpga/tile.hpp"

namespace m3d {

// Discrete width-multiplier grid shared by every sizing class.
inline constexpr std::array<double, 7> kWidthGrid = {1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0};

struct DescentResult {
  std::vector<double> point;
  double objective = std::numeric_limits<double>::infinity();
  std::vector<double> trace;  // objective after every accepted move
  int passes = 0;
  bool converged = false;
};

class SizingDivergence : public std::runtime_error {
 public:
  DescentResult best;
  SizingDivergence(const std::string& what, DescentResult b)
      : std::runtime_error(what), best(std::move(b)) {}
};

// Cyclic coordinate descent: each step exhaustively scans one class over the
// grid, accepting only strict improvements; terminates when a full pass over
// all classes changes nothing.  Deterministic given the class order.
inline DescentResult coordinate_descent(
    std::vector<double> start, const std::vector<double>& grid,
    const std::function<double(const std::vector<double>&)>& objective, int max_passes = 20,
    std::vector<int> order = {}) {
  if (start.empty()) throw std::invalid_argument("coordinate_descent: empty start point");
  if (grid.empty()) throw std::invalid_argument("coordinate_descent: empty grid");
  if (order.empty())
    for (size_t i = 0; i < start.size(); ++i) order.push_back(static_cast<int>(i));
  if (order.size() != start.size())
    throw std::invalid_argument("coordinate_descent: order does not cover the classes");

  DescentResult res;
  res.point = std::move(start);
  res.objective = objective(res.point);
  res.trace.push_back(res.objective);
  for (int pass = 0; pass < max_passes; ++pass) {
    bool improved = false;
    for (int cls : order) {
      double best_w = res.point[static_cast<size_t>(cls)];
      double best_o = res.objective;
      for (double w : grid) {
        if (w == res.point[static_cast<size_t>(cls)]) continue;
        std::vector<double> cand = res.point;
        cand[static_cast<size_t>(cls)] = w;
        const double o = objective(cand);
        if (o < best_o) {
          best_o = o;
          best_w = w;
        }
      }
      if (best_o < res.objective) {
        res.point[static_cast<size_t>(cls)] = best_w;
        res.objective = best_o;
        res.trace.push_back(best_o);
        improved = true;
      }
    }
    res.passes = pass + 1;
    if (!improved) {
      res.converged = true;
      return res;
    }
  }
  throw SizingDivergence("coordinate_descent: still improving after max_passes", res);
}

struct SizingOutcome {
  SizingVector sizing;
  TileCostReport report;
  std::vector<double> trace;
  int passes = 0;
};

constexpr int kSizingClasses = 6;  // SizingVector::by_index order

inline SizingVector sizing_from_point(const std::vector<double>& p) {
  SizingVector s;
  for (int i = 0; i < kSizingClasses; ++i) s.by_index(i) = p[static_cast<size_t>(i)];
  return s;
}

// Area-delay product minimization over the tile's sizing classes.
inline SizingOutcome optimize_sizing(const TechnologyLibrary& lib, const TileSpec& spec,
                                     int max_passes = 20) {
  spec.validate();
  auto objective = [&](const std::vector<double>& p) {
    const TileNetlist t = build_full_tile(lib, spec, sizing_from_point(p));
    const TileCostReport r = tile_footprint(lib, t);
    return r.footprint * representative_cpd(lib, t);
  };
  std::vector<double> start(kSizingClasses, 1.0);
  const std::vector<double> grid(kWidthGrid.begin(), kWidthGrid.end());
  DescentResult d = coordinate_descent(std::move(start), grid, objective, max_passes);
  SizingOutcome out;
  out.sizing = sizing_from_point(d.point);
  out.report = tile_cost_report(lib, build_full_tile(lib, spec, out.sizing));
  out.trace = std::move(d.trace);
  out.passes = d.passes;
  return out;
}

// ---------------------------------------------------------------------------
// Architecture model export.

struct ArchBlock {
  double area = 0.0;   // um^2, raw device area owned by the block
  double delay = 0.0;  // s
};

struct ArchModel {
  // Topology.
  int k = 0, n = 0, i = 0, w = 0, l = 0, fs = 0;
  double fc_in = 0.0, fc_out = 0.0;
  // Style metadata.
  std::string variant;
  double v_dd = 0.0, v_sram = 0.0, v_sram_scb = 0.0;
  // Per-block timing/area.
  std::map<std::string, ArchBlock> blocks;
  // Routing switch (SB mux + buffer).
  double switch_r_on = 0.0, switch_c_in = 0.0, switch_c_out = 0.0, switch_t_del = 0.0;
  // Wire segment.
  double seg_r_per_tile = 0.0, seg_c_per_tile = 0.0;
  double tile_footprint_um2 = 0.0;

  void validate() const {
    auto pos = [](double v, const char* n) {
      if (!(v > 0.0) || !std::isfinite(v))
        throw std::invalid_argument(std::string("arch model: ") + n + " must be positive");
    };
    if (k < 2 || n < 1 || w < 2 || l < 1 || fs < 3)
      throw std::invalid_argument("arch model: bad topology");
    pos(v_dd, "v_dd");
    pos(v_sram, "v_sram");
    pos(v_sram_scb, "v_sram_scb");
    for (const auto& [name, b] : blocks) {
      pos(b.area, name.c_str());
      pos(b.delay, name.c_str());
    }
    pos(switch_r_on, "switch_r_on");
    pos(switch_c_in, "switch_c_in");
    pos(switch_c_out, "switch_c_out");
    pos(switch_t_del, "switch_t_del");
    pos(seg_r_per_tile, "seg_r_per_tile");
    pos(seg_c_per_tile, "seg_c_per_tile");
    pos(tile_footprint_um2, "tile_footprint");
  }
};

namespace detail {

inline double block_device_area(const TechnologyLibrary& lib, const TileNetlist& tile,
                                BlockKind owner) {
  double a = 0.0;
  for (const auto& s : tile.subcircuits)
    if (s.owner == owner)
      for (const auto& d : s.devices)
        a += transistor_area(lib.device(d.dev), d.width, lib.area_rules);
  return a;
}

}  // namespace detail

inline ArchModel export_arch(const TechnologyLibrary& lib, const TileNetlist& tile) {
  const std::vector<double> st = representative_stage_delays(lib, tile);
  const TileCostReport rep = tile_footprint(lib, tile);
  const TileSpec& sp = tile.spec;

  ArchModel m;
  m.k = sp.k;
  m.n = sp.n;
  m.i = sp.i;
  m.w = sp.w;
  m.l = sp.l;
  m.fs = sp.fs;
  m.fc_in = sp.fc_in;
  m.fc_out = sp.fc_out;
  m.variant = to_string(sp.style.variant);
  m.v_dd = sp.style.v_dd;
  m.v_sram = sp.style.v_sram;
  m.v_sram_scb = sp.style.v_sram_scb;

  m.blocks["cb_mux"] = {detail::block_device_area(lib, tile, BlockKind::CB_MUX), st[0]};
  m.blocks["clb_xbar"] = {detail::block_device_area(lib, tile, BlockKind::CLB_XBAR), st[1]};
  m.blocks["lut"] = {detail::block_device_area(lib, tile, BlockKind::LUT), st[2] + st[3]};
  m.blocks["ble_out"] = {detail::block_device_area(lib, tile, BlockKind::BLE_OUT), st[4]};
  m.blocks["sb_mux"] = {detail::block_device_area(lib, tile, BlockKind::SB_MUX), st[5]};
  // FF clock-to-q proxied by one driven buffer stage.
  const Subcircuit* sb = detail::find_block(tile, BlockKind::SB_MUX);
  const Subcircuit* sb_buf = detail::find_attachment(tile, BlockKind::BUFFER, sb->name);
  const double r_buf = detail::buffer_output_res(lib, *sb_buf, sp.style.v_dd);
  const double c_buf =
      detail::buffer_output_cap(lib, *sb_buf) + detail::buffer_input_cap(lib, *sb_buf);
  m.blocks["ff"] = {detail::block_device_area(lib, tile, BlockKind::FF),
                    2.0 * std::log(2.0) * r_buf * c_buf};

  m.switch_r_on = r_buf;
  m.switch_c_in = detail::buffer_input_cap(lib, *sb_buf);
  m.switch_c_out = detail::buffer_output_cap(lib, *sb_buf);
  m.switch_t_del = st[5];

  const double tile_side = std::sqrt(rep.footprint);
  const MetalLayer& m3 = lib.metal(std::min(3, static_cast<int>(lib.metal_layers.size())));
  m.seg_r_per_tile = m3.r_per_um * tile_side;
  m.seg_c_per_tile = m3.c_per_um * tile_side;
  m.tile_footprint_um2 = rep.footprint;
  m.validate();
  return m;
}

// Sectioned key=value serialization.  %.17g reproduces every double exactly,
// so export -> parse -> export is byte-identical.
inline std::string arch_to_text(const ArchModel& m) {
  m.validate();
  std::ostringstream os;
  char buf[64];
  auto num = [&](const char* key, double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << key << " = " << buf << "\n";
  };
  os << "# m3dfpga arch model\nformat_version = 1\n\n[topology]\n";
  os << "k = " << m.k << "\nn = " << m.n << "\ni = " << m.i << "\nw = " << m.w << "\nl = " << m.l
     << "\nfs = " << m.fs << "\n";
  num("fc_in", m.fc_in);
  num("fc_out", m.fc_out);
  os << "\n[style]\nvariant = " << m.variant << "\n";
  num("v_dd", m.v_dd);
  num("v_sram", m.v_sram);
  num("v_sram_scb", m.v_sram_scb);
  for (const auto& [name, b] : m.blocks) {  // std::map: stable alphabetical order
    os << "\n[block " << name << "]\n";
    num("area", b.area);
    num("delay", b.delay);
  }
  os << "\n[switch]\n";
  num("r_on", m.switch_r_on);
  num("c_in", m.switch_c_in);
  num("c_out", m.switch_c_out);
  num("t_del", m.switch_t_del);
  os << "\n[segment]\n";
  num("r_per_tile", m.seg_r_per_tile);
  num("c_per_tile", m.seg_c_per_tile);
  os << "\n[tile]\n";
  num("footprint", m.tile_footprint_um2);
  return os.str();
}

inline ArchModel arch_from_text(const std::string& text) {
  ArchModel m;
  std::istringstream is(text);
  std::string line, section;
  bool versioned = false;
  int lineno = 0;
  auto fail = [&](const std::string& why) {
    throw std::runtime_error("arch model line " + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header");
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const size_t eq = line.find(" = ");
    if (eq == std::string::npos) fail("expected 'key = value'");
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 3);
    if (section.empty()) {
      if (key == "format_version") {
        if (val != "1") fail("unsupported format version " + val);
        versioned = true;
      } else {
        fail("key before any section");
      }
      continue;
    }
    auto d = [&] {
      try {
        size_t used = 0;
        const double v = std::stod(val, &used);
        if (used != val.size()) throw std::invalid_argument(val);
        return v;
      } catch (const std::exception&) {
        fail("bad number '" + val + "'");
        return 0.0;
      }
    };
    auto n = [&] { return static_cast<int>(d()); };
    if (section == "topology") {
      if (key == "k") m.k = n();
      else if (key == "n") m.n = n();
      else if (key == "i") m.i = n();
      else if (key == "w") m.w = n();
      else if (key == "l") m.l = n();
      else if (key == "fs") m.fs = n();
      else if (key == "fc_in") m.fc_in = d();
      else if (key == "fc_out") m.fc_out = d();
      else fail("unknown topology key " + key);
    } else if (section == "style") {
      if (key == "variant") m.variant = val;
      else if (key == "v_dd") m.v_dd = d();
      else if (key == "v_sram") m.v_sram = d();
      else if (key == "v_sram_scb") m.v_sram_scb = d();
      else fail("unknown style key " + key);
    } else if (section.rfind("block ", 0) == 0) {
      ArchBlock& b = m.blocks[section.substr(6)];
      if (key == "area") b.area = d();
      else if (key == "delay") b.delay = d();
      else fail("unknown block key " + key);
    } else if (section == "switch") {
      if (key == "r_on") m.switch_r_on = d();
      else if (key == "c_in") m.switch_c_in = d();
      else if (key == "c_out") m.switch_c_out = d();
      else if (key == "t_del") m.switch_t_del = d();
      else fail("unknown switch key " + key);
    } else if (section == "segment") {
      if (key == "r_per_tile") m.seg_r_per_tile = d();
      else if (key == "c_per_tile") m.seg_c_per_tile = d();
      else fail("unknown segment key " + key);
    } else if (section == "tile") {
      if (key == "footprint") m.tile_footprint_um2 = d();
      else fail("unknown tile key " + key);
    } else {
      fail("unknown section " + section);
    }
  }
  if (!versioned) throw std::runtime_error("arch model: missing format_version header");
  m.validate();
  return m;
}

}  // namespace m3d

#pragma once

// Area, timing and power evaluation of generated tiles and standalone SB/CB
// multiplexer DUTs.

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "m3dfpga/rctree.hpp"
#include "m3dfpga/sram.hpp"
#include "m3dfpga/techlib.hpp"
#include "m3dfpga/tile.hpp"

namespace m3d {

struct TileCostReport {
  std::map<Tier, double> area_per_tier;        // um^2, congestion-adjusted
  double footprint = 0.0;                      // um^2
  std::map<BlockKind, double> block_area_shares;
  double cpd = 0.0;                            // s
  double static_power = 0.0;                   // W
  double config_static_share = 0.0;
};

inline double subcircuit_area(const TechnologyLibrary& lib, const Subcircuit& sub) {
  double a = 0.0;
  for (const auto& d : sub.devices) a += transistor_area(lib.device(d.dev), d.width, lib.area_rules);
  return a;
}

// BEOL pass-gate tier congestion inflation for wide channels.
inline double beol_congestion_factor(const AreaRules& rules, int w) {
  return std::max(1.0, static_cast<double>(w) / rules.beol_congestion_w0);
}

inline TileCostReport tile_footprint(const TechnologyLibrary& lib, const TileNetlist& tile) {
  if (!tile.tiers_assigned)
    throw std::invalid_argument("tile_footprint: tile is not tier-assigned");
  TileCostReport rep;
  std::map<Tier, double> raw;
  double total_device_area = 0.0;
  for (const auto& s : tile.subcircuits) {
    for (const auto& d : s.devices) {
      const double a = transistor_area(lib.device(d.dev), d.width, lib.area_rules);
      raw[d.tier] += a;
      rep.block_area_shares[s.block] += a;
      total_device_area += a;
    }
  }
  for (auto& [blk, a] : rep.block_area_shares) a /= total_device_area;
  const AreaRules& rules = lib.area_rules;
  for (const auto& [tier, a] : raw) {
    double adj = a;
    if (tier == Tier::FEOL) adj *= rules.feol_whitespace;
    if (tier == Tier::BEOL_PG) adj *= beol_congestion_factor(rules, tile.spec.w);
    rep.area_per_tier[tier] = adj;
    rep.footprint = std::max(rep.footprint, adj);
  }
  return rep;
}

// FEOL-footprint share of everything serving one principal block.
inline double owner_footprint_share(const TechnologyLibrary& lib, const TileNetlist& tile,
                                    BlockKind owner) {
  double own = 0.0, feol = 0.0;
  for (const auto& s : tile.subcircuits)
    for (const auto& d : s.devices) {
      if (d.tier != Tier::FEOL) continue;
      const double a = transistor_area(lib.device(d.dev), d.width, lib.area_rules);
      feol += a;
      if (s.owner == owner) own += a;
    }
  return feol > 0.0 ? own / feol : 0.0;
}

namespace detail {

inline const Subcircuit* find_block(const TileNetlist& tile, BlockKind kind) {
  for (const auto& s : tile.subcircuits)
    if (s.block == kind) return &s;
  return nullptr;
}

inline const Subcircuit* find_attachment(const TileNetlist& tile, BlockKind block,
                                         const std::string& owner_name) {
  const std::string prefix = (block == BlockKind::BUFFER ? "buf:" : "rest:") + owner_name;
  for (const auto& s : tile.subcircuits)
    if (s.block == block && s.name == prefix) return &s;
  return nullptr;
}

struct MuxRc {
  double r_stage1 = 0.0, r_stage2 = 0.0;  // 0 r_stage2 for single-level muxes
  double c_mid = 0.0, c_out = 0.0;
  double gate_v = 0.0;
  bool two_level = false;
};

// Per-branch on-resistance and node capacitances of a two-level mux.
inline MuxRc mux_rc(const TechnologyLibrary& lib, const Subcircuit& mux, double gate_v,
                    double v_dd) {
  MuxRc rc;
  rc.gate_v = gate_v;
  rc.two_level = mux.s2 > 1;
  const DeviceInst& leg = mux.devices.front();
  const DeviceParams& nd = lib.device(leg.dev);
  double r_n = effective_resistance(nd, gate_v, leg.width);
  double r = r_n;
  double c_par_branch = device_caps(nd, leg.width).c_parasitic;
  if (mux.transmission_gate) {
    const DeviceInst& legp = mux.devices[1];
    const DeviceParams& pd = lib.device(legp.dev);
    const double r_p = effective_resistance(pd, v_dd, legp.width);
    r = r_n * r_p / (r_n + r_p);
    c_par_branch += device_caps(pd, legp.width).c_parasitic;
  }
  rc.r_stage1 = r;
  if (rc.two_level) {
    rc.r_stage2 = r;
    rc.c_mid = c_par_branch * (mux.s1 + 1);  // one first-level group plus the second-level leg
    rc.c_out = c_par_branch * mux.s2;
  } else {
    rc.c_out = c_par_branch * mux.inputs;
  }
  return rc;
}

inline double buffer_input_cap(const TechnologyLibrary& lib, const Subcircuit& buf) {
  return device_caps(lib.device(buf.devices[0].dev), buf.devices[0].width).c_gate +
         device_caps(lib.device(buf.devices[1].dev), buf.devices[1].width).c_gate;
}

inline double buffer_output_res(const TechnologyLibrary& lib, const Subcircuit& buf, double v_dd) {
  // Output stage n/p average drive.
  const auto& n = buf.devices[2];
  const auto& p = buf.devices[3];
  const double rn = effective_resistance(lib.device(n.dev), v_dd, n.width);
  const double rp = effective_resistance(lib.device(p.dev), v_dd, p.width);
  return 0.5 * (rn + rp);
}

inline double buffer_output_cap(const TechnologyLibrary& lib, const Subcircuit& buf) {
  return device_caps(lib.device(buf.devices[2].dev), buf.devices[2].width).c_parasitic +
         device_caps(lib.device(buf.devices[3].dev), buf.devices[3].width).c_parasitic;
}

}  // namespace detail

// Elmore t50 of one driver stage: root resistance, then alternating series
// resistance / node capacitance entries.
struct StageElement {
  double r = 0.0;  // series resistance into the node
  double c = 0.0;  // node capacitance
};

inline double stage_t50(double driver_r, const std::vector<StageElement>& elems) {
  RcTree t;
  t.add_node(-1, driver_r, 0.0);
  int cur = 0;
  for (const auto& e : elems) cur = t.add_node(cur, e.r, e.c);
  return t50_delay(t, cur);
}

// Canonical tile critical path: CB mux, CB buffer + crossbar, crossbar buffer
// + LUT select load, LUT tree, BLE mux, SB mux, SB buffer + one L-tile wire
// segment.  Pass-gate resistances are evaluated at the rail their config bit
// drives.
// Stage delays of the canonical path, in traversal order:
//   0 CB mux, 1 CB buffer + crossbar, 2 crossbar buffer + LUT select load,
//   3 LUT tree, 4 BLE mux, 5 SB mux, 6 SB buffer + wire segment.
inline std::vector<double> representative_stage_delays(const TechnologyLibrary& lib,
                                                       const TileNetlist& tile) {
  if (!tile.tiers_assigned || !tile.mivs_inserted)
    throw std::invalid_argument("representative_cpd: tile must be tier-assigned with MIVs");
  const TileSpec& sp = tile.spec;
  const ImplStyle& st = sp.style;
  const AreaRules& rules = lib.area_rules;

  const Subcircuit* cb = detail::find_block(tile, BlockKind::CB_MUX);
  const Subcircuit* sb = detail::find_block(tile, BlockKind::SB_MUX);
  const Subcircuit* xbar = detail::find_block(tile, BlockKind::CLB_XBAR);
  const Subcircuit* lut = detail::find_block(tile, BlockKind::LUT);
  const Subcircuit* ble = detail::find_block(tile, BlockKind::BLE_OUT);
  if (!cb || !sb || !xbar || !lut || !ble)
    throw std::runtime_error("representative_cpd: incomplete tile");

  const Subcircuit* cb_buf = detail::find_attachment(tile, BlockKind::BUFFER, cb->name);
  const Subcircuit* sb_buf = detail::find_attachment(tile, BlockKind::BUFFER, sb->name);
  const Subcircuit* xbar_buf = detail::find_attachment(tile, BlockKind::BUFFER, xbar->name);
  const Subcircuit* lut_buf = detail::find_attachment(tile, BlockKind::BUFFER, lut->name);
  const Subcircuit* ble_buf = detail::find_attachment(tile, BlockKind::BUFFER, ble->name);
  const Subcircuit* cb_rest = detail::find_attachment(tile, BlockKind::RESTORER, cb->name);
  const Subcircuit* sb_rest = detail::find_attachment(tile, BlockKind::RESTORER, sb->name);

  const double tile_side = std::sqrt(tile_footprint(lib, tile).footprint);  // um
  const MetalLayer& m3 = lib.metal(std::min(3, static_cast<int>(lib.metal_layers.size())));
  const double miv_r = lib.miv.r, miv_c = lib.miv.c;
  (void)rules;

  auto rest_cap = [&](const Subcircuit* r) {
    if (!r) return 0.0;
    return device_caps(lib.device(r->devices[0].dev), r->devices[0].width).c_parasitic;
  };

  const bool scb_beol = !sb->devices.empty() && sb->devices.front().tier == Tier::BEOL_PG;

  std::vector<double> stages;

  // Stage 1: CB mux into its buffer.
  {
    auto rc = detail::mux_rc(lib, *cb, st.v_sram_scb, st.v_dd);
    std::vector<StageElement> e;
    if (scb_beol) e.push_back({miv_r, miv_c});
    if (rc.two_level) e.push_back({rc.r_stage1, rc.c_mid});
    e.push_back({rc.two_level ? rc.r_stage2 : rc.r_stage1, rc.c_out + rest_cap(cb_rest)});
    if (scb_beol) e.push_back({miv_r, miv_c});
    e.push_back({0.0, detail::buffer_input_cap(lib, *cb_buf)});
    stages.push_back(stage_t50(0.0, e));
  }
  // Stage 2: CB buffer through the crossbar mux.
  {
    auto rc = detail::mux_rc(lib, *xbar, st.v_sram, st.v_dd);
    std::vector<StageElement> e;
    e.push_back({0.0, detail::buffer_output_cap(lib, *cb_buf)});
    if (rc.two_level) e.push_back({rc.r_stage1, rc.c_mid});
    e.push_back({rc.two_level ? rc.r_stage2 : rc.r_stage1, rc.c_out});
    e.push_back({0.0, detail::buffer_input_cap(lib, *xbar_buf)});
    stages.push_back(stage_t50(detail::buffer_output_res(lib, *cb_buf, st.v_dd), e));
  }
  // Stage 3: crossbar buffer driving the LUT select line load.
  {
    // The widest select line toggles half the tree branches.
    const int branches = (1 << sp.k);
    double sel_load = 0.0;
    sel_load += branches * device_caps(lib.device(lut->devices[0].dev), lut->devices[0].width).c_gate;
    sel_load += branches * device_caps(lib.device(lut->devices[1].dev), lut->devices[1].width).c_gate;
    std::vector<StageElement> e = {{0.0, detail::buffer_output_cap(lib, *xbar_buf) + sel_load}};
    stages.push_back(stage_t50(detail::buffer_output_res(lib, *xbar_buf, st.v_dd), e));
  }
  // Stage 4: LUT pass tree, K transmission-gate stages.
  {
    const DeviceInst& ln = lut->devices[0];
    const DeviceInst& lp = lut->devices[1];
    const double rn = effective_resistance(lib.device(ln.dev), st.v_dd, ln.width);
    const double rp = effective_resistance(lib.device(lp.dev), st.v_dd, lp.width);
    const double r_tg = rn * rp / (rn + rp);
    const double c_node = 3.0 * (device_caps(lib.device(ln.dev), ln.width).c_parasitic +
                                 device_caps(lib.device(lp.dev), lp.width).c_parasitic);
    std::vector<StageElement> e;
    for (int lvl = 0; lvl < sp.k; ++lvl) e.push_back({r_tg, c_node});
    e.push_back({0.0, detail::buffer_input_cap(lib, *lut_buf)});
    stages.push_back(stage_t50(0.0, e));
  }
  // Stage 5: LUT buffer through the BLE output mux.
  {
    auto rc = detail::mux_rc(lib, *ble, st.v_sram, st.v_dd);
    std::vector<StageElement> e;
    e.push_back({0.0, detail::buffer_output_cap(lib, *lut_buf)});
    if (rc.two_level) e.push_back({rc.r_stage1, rc.c_mid});
    e.push_back({rc.two_level ? rc.r_stage2 : rc.r_stage1, rc.c_out});
    e.push_back({0.0, detail::buffer_input_cap(lib, *ble_buf)});
    stages.push_back(stage_t50(detail::buffer_output_res(lib, *lut_buf, st.v_dd), e));
  }
  // Stage 6: BLE buffer through the SB mux.
  {
    auto rc = detail::mux_rc(lib, *sb, st.v_sram_scb, st.v_dd);
    std::vector<StageElement> e;
    e.push_back({0.0, detail::buffer_output_cap(lib, *ble_buf)});
    if (scb_beol) e.push_back({miv_r, miv_c});
    if (rc.two_level) e.push_back({rc.r_stage1, rc.c_mid});
    e.push_back({rc.two_level ? rc.r_stage2 : rc.r_stage1, rc.c_out + rest_cap(sb_rest)});
    if (scb_beol) e.push_back({miv_r, miv_c});
    e.push_back({0.0, detail::buffer_input_cap(lib, *sb_buf)});
    stages.push_back(stage_t50(detail::buffer_output_res(lib, *ble_buf, st.v_dd), e));
  }
  // Stage 7: SB buffer driving one length-L wire segment and the next CB input.
  {
    const double wire_len = sp.l * tile_side;
    RcTree t;
    t.add_node(-1, detail::buffer_output_res(lib, *sb_buf, st.v_dd), 0.0);
    int cur = t.add_node(0, 0.0, detail::buffer_output_cap(lib, *sb_buf));
    cur = append_wire(t, cur, m3.r_per_um * wire_len, m3.c_per_um * wire_len, 4);
    const DeviceInst& cbp = cb->devices.front();
    double sink_c = device_caps(lib.device(cbp.dev), cbp.width).c_parasitic;
    if (scb_beol) sink_c += miv_c;
    cur = t.add_node(cur, 0.0, sink_c);
    stages.push_back(t50_delay(t, cur));
  }
  return stages;
}

inline double representative_cpd(const TechnologyLibrary& lib, const TileNetlist& tile) {
  double cpd = 0.0;
  for (double d : representative_stage_delays(lib, tile)) cpd += d;
  return cpd;
}

// ---------------------------------------------------------------------------
// Multiplexer design-under-test power (SB-Mux / CB-Mux building block).

struct MuxDut {
  int mux_size = 0;
  std::string pass_dev;
  double pass_width = 0.0;
  RcTree load;
  double v_sram_gate = 0.0;
  int n_sram = 0;
  double toggle_freq = 250e6;  // Hz
  double window = 4e-9;        // s

  void validate() const {
    if (window <= 0.0) throw std::invalid_argument("mux dut: window must be > 0");
    if (n_sram < 0 || mux_size <= 0) throw std::invalid_argument("mux dut: bad counts");
  }
};

enum class DutKind { SB, CB };

// Nominal bus lengths for the two DUT kinds.  The bus is a testbench
// parameter, identical across architectures, so the comparison isolates the
// mux structure itself: switch-box muxes drive inter-tile segments, connection
// -box muxes short intra-tile hops.
inline constexpr double kSbBusUm = 30.0;
inline constexpr double kCbBusUm = 7.0;

inline MuxDut make_mux_dut(const TechnologyLibrary& lib, const TileNetlist& tile, DutKind kind,
                           double bus_um = 0.0) {
  const Subcircuit* mux =
      detail::find_block(tile, kind == DutKind::SB ? BlockKind::SB_MUX : BlockKind::CB_MUX);
  if (!mux) throw std::runtime_error("make_mux_dut: tile has no such mux");
  MuxDut dut;
  dut.mux_size = mux->inputs;
  dut.pass_dev = mux->devices.front().dev;
  dut.pass_width = mux->devices.front().width;
  dut.v_sram_gate = tile.spec.style.v_sram_scb;
  dut.n_sram = mux->config_bits;
  if (bus_um <= 0.0) bus_um = kind == DutKind::SB ? kSbBusUm : kCbBusUm;
  const MetalLayer& m3 = lib.metal(std::min(3, static_cast<int>(lib.metal_layers.size())));
  dut.load.add_node(-1, 0.0, 0.0);
  append_wire(dut.load, 0, m3.r_per_um * bus_um, m3.c_per_um * bus_um, 4);
  return dut;
}

// Average power over the window per the source-integration model: dynamic
// charge delivered to every switched node, configuration-bit static power,
// off-device leakage, and the restorer fight current when present.
inline double mux_dut_power(const TechnologyLibrary& lib, const MuxDut& dut,
                            const ImplStyle& style) {
  dut.validate();
  const double cycles_f = dut.window * dut.toggle_freq;
  const double cycles = std::round(cycles_f);
  if (dut.toggle_freq > 0.0 && std::abs(cycles_f - cycles) > 1e-9)
    throw std::invalid_argument("mux_dut_power: window is not a multiple of the toggle period");

  const DeviceParams& pd = lib.device(dut.pass_dev);
  const double v_dd = style.v_dd;
  const double v_swing_internal = std::min(v_dd, dut.v_sram_gate - pd.vth_cond());
  if (v_swing_internal <= 0.0)
    throw std::runtime_error("mux_dut_power: pass gates cannot transfer any swing");
  const bool restorer = needs_level_restorer(lib, style, dut.pass_dev);
  const double v_swing_out = restorer ? v_dd : v_swing_internal;

  int s1 = 0, s2 = 0;
  detail::mux_stages(dut.mux_size, s1, s2);
  const DeviceCaps pc = device_caps(pd, dut.pass_width);

  // Switched nodes: mux internal node, mux output, two buffer stages, load.
  double e_cycle = 0.0;
  if (s2 > 1)
    e_cycle += pc.c_parasitic * (s1 + 1) * v_swing_internal * v_swing_internal;
  double c_out = pc.c_parasitic * (s2 > 1 ? s2 : dut.mux_size);
  const DeviceParams& bn = lib.device("si_n");
  const DeviceParams& bp = lib.device("si_p");
  const SizingVector default_sizing;
  const double wb_n = bn.w_min * default_sizing.buffer;
  const double wb_p = bp.w_min * default_sizing.buffer;
  if (restorer) {
    const DeviceParams& keeper = lib.device("si_p_keeper");
    c_out += device_caps(keeper, keeper.w_min).c_parasitic;
  }
  c_out += device_caps(bn, wb_n).c_gate + device_caps(bp, wb_p).c_gate;
  e_cycle += c_out * v_swing_out * v_swing_out;
  // Buffer internal + output node at full rail.
  const double c_buf = device_caps(bn, wb_n).c_parasitic + device_caps(bp, wb_p).c_parasitic;
  e_cycle += 2.0 * c_buf * v_dd * v_dd;
  double c_load = 0.0;
  for (const auto& n : dut.load.nodes) c_load += n.c;
  e_cycle += c_load * v_dd * v_dd;

  const double p_dyn = dut.toggle_freq > 0.0 ? e_cycle * cycles / dut.window : 0.0;

  // Static: configuration bits, off pass devices, restorer fight current.
  const SramCellSpec cell = style.variant == Variant::CMOS_2D ? si_sram_cell(lib)
                                                              : aos_sram_cell(lib);
  double p_static = dut.n_sram * sram_static_power(cell, dut.v_sram_gate);
  const int off_devices = (dut.mux_size - 1) + (s2 > 1 ? s2 - 1 : 0);
  p_static += off_devices * leakage_power(pd, dut.pass_width, v_dd);
  if (restorer) {
    const DeviceParams& keeper = lib.device("si_p_keeper");
    // Fights the pull-down half the time (output low at 50% duty).
    p_static += 0.5 * v_dd * drain_current(keeper, v_dd, v_dd, keeper.w_min);
  }
  return p_dyn + p_static;
}

// ---------------------------------------------------------------------------
// Tile static power and system-level aggregation.

struct TileStaticBreakdown {
  double config = 0.0;     // W, all configuration bits
  double routing_cfg = 0.0;  // W, SB/CB-owned configuration bits
  double buffers = 0.0;
  double restorers = 0.0;
  double ff = 0.0;
  double total() const { return config + buffers + restorers + ff; }
};

inline TileStaticBreakdown tile_static_power(const TechnologyLibrary& lib,
                                             const TileNetlist& tile) {
  const ImplStyle& st = tile.spec.style;
  const SramCellSpec cell =
      st.variant == Variant::CMOS_2D ? si_sram_cell(lib) : aos_sram_cell(lib);
  TileStaticBreakdown out;
  for (const auto& s : tile.subcircuits) {
    if (s.block == BlockKind::SRAM_BIT) {
      const bool scb = s.owner == BlockKind::SB_MUX || s.owner == BlockKind::CB_MUX;
      const double p = sram_static_power(cell, scb ? st.v_sram_scb : st.v_sram);
      out.config += p;
      if (scb) out.routing_cfg += p;
    } else if (s.block == BlockKind::BUFFER) {
      // One off device per inverter stage, n/p averaged.
      for (size_t d = 0; d + 1 < s.devices.size(); d += 2) {
        const double ln = leakage_power(lib.device(s.devices[d].dev), s.devices[d].width, st.v_dd);
        const double lp =
            leakage_power(lib.device(s.devices[d + 1].dev), s.devices[d + 1].width, st.v_dd);
        out.buffers += 0.5 * (ln + lp);
      }
    } else if (s.block == BlockKind::RESTORER) {
      const auto& d = s.devices[0];
      out.restorers += 0.5 * st.v_dd * drain_current(lib.device(d.dev), st.v_dd, st.v_dd, d.width);
    } else if (s.block == BlockKind::FF) {
      out.ff += lib.area_rules.ff_leakage_w;
    }
  }
  return out;
}

struct SystemPowerBreakdown {
  double config_share = 0.0;
  double routing_share = 0.0;
  double total_static = 0.0;  // W
};

inline SystemPowerBreakdown system_power_breakdown(const TechnologyLibrary& lib,
                                                   const TileNetlist& tile, int rows, int cols) {
  if (rows < 1 || cols < 1)
    throw std::invalid_argument("system_power_breakdown: grid must be at least 1x1");
  const TileStaticBreakdown t = tile_static_power(lib, tile);
  SystemPowerBreakdown out;
  const double tiles = static_cast<double>(rows) * cols;
  out.total_static = t.total() * tiles;
  out.config_share = t.total() > 0.0 ? t.config / t.total() : 0.0;
  out.routing_share = t.total() > 0.0 ? (t.routing_cfg + t.restorers) / t.total() : 0.0;
  return out;
}

inline TileCostReport tile_cost_report(const TechnologyLibrary& lib, const TileNetlist& tile) {
  TileCostReport rep = tile_footprint(lib, tile);
  rep.cpd = representative_cpd(lib, tile);
  const TileStaticBreakdown st = tile_static_power(lib, tile);
  rep.static_power = st.total();
  rep.config_static_share = st.total() > 0.0 ? st.config / st.total() : 0.0;
  return rep;
}

}  // namespace m3d

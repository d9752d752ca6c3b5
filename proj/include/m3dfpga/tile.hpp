#pragma once

// Tile generation: transistor-level netlist of one island-style FPGA tile
// (CLB + SB + CB halves), configuration-bit accounting, tier assignment for
// the monolithic-3D variants, and MIV insertion at tier crossings.

#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "m3dfpga/techlib.hpp"

namespace m3d {

enum class Variant { CMOS_2D, M3D_SRAM_ONLY, M3D_FULL };
enum class RestorerMode { Auto, On, Off };

inline const char* to_string(Variant v) {
  switch (v) {
    case Variant::CMOS_2D: return "CMOS_2D";
    case Variant::M3D_SRAM_ONLY: return "M3D_SRAM_ONLY";
    case Variant::M3D_FULL: return "M3D_FULL";
  }
  return "?";
}

inline Variant variant_from_string(const std::string& s) {
  if (s == "CMOS_2D") return Variant::CMOS_2D;
  if (s == "M3D_SRAM_ONLY") return Variant::M3D_SRAM_ONLY;
  if (s == "M3D_FULL") return Variant::M3D_FULL;
  throw std::runtime_error("unknown style variant '" + s + "'");
}

struct ImplStyle {
  Variant variant = Variant::CMOS_2D;
  double v_dd = 0.7;
  double v_sram = 0.8;
  double v_sram_scb = 0.8;  // rail for SB/CB configuration bits
  RestorerMode level_restorers = RestorerMode::Auto;
};

struct TileSpec {
  int k = 6, n = 10, i = 40, w = 150, l = 8, fs = 3;
  double fc_in = 0.15, fc_out = 0.10;
  ImplStyle style;

  void validate() const {
    if (k < 2) throw std::invalid_argument("tile spec: k must be >= 2");
    if (n < 1) throw std::invalid_argument("tile spec: n must be >= 1");
    if (i < 1) throw std::invalid_argument("tile spec: i must be >= 1");
    if (w < 2) throw std::invalid_argument("tile spec: w must be >= 2");
    if (l < 1) throw std::invalid_argument("tile spec: l must be >= 1");
    if (fs < 3) throw std::invalid_argument("tile spec: fs must be >= 3");
    if (fc_in <= 0.0 || fc_in > 1.0) throw std::invalid_argument("tile spec: fc_in outside (0,1]");
    if (fc_out <= 0.0 || fc_out > 1.0) throw std::invalid_argument("tile spec: fc_out outside (0,1]");
  }

  int cb_mux_inputs() const { return static_cast<int>(std::ceil(w * fc_in)); }
  int sb_mux_inputs() const { return fs + 1; }  // fs track ends + one CLB output pin
  int xbar_sources() const { return i + n; }
  // 50%-populated sparse crossbar.
  int xbar_mux_inputs() const { return (xbar_sources() + 1) / 2; }
};

enum class BlockKind { LUT, CLB_XBAR, BLE_OUT, FF, SB_MUX, CB_MUX, BUFFER, RESTORER, SRAM_BIT };
enum class Tier { FEOL, BEOL_PG, BEOL_SRAM_N, BEOL_SRAM_P };
enum class DeviceRole { pass, buf, restorer, sram_pu, sram_pd, sram_pg, ff };

inline const char* to_string(BlockKind b) {
  switch (b) {
    case BlockKind::LUT: return "LUT";
    case BlockKind::CLB_XBAR: return "CLB_XBAR";
    case BlockKind::BLE_OUT: return "BLE_OUT";
    case BlockKind::FF: return "FF";
    case BlockKind::SB_MUX: return "SB_MUX";
    case BlockKind::CB_MUX: return "CB_MUX";
    case BlockKind::BUFFER: return "BUFFER";
    case BlockKind::RESTORER: return "RESTORER";
    case BlockKind::SRAM_BIT: return "SRAM_BIT";
  }
  return "?";
}

inline const char* to_string(Tier t) {
  switch (t) {
    case Tier::FEOL: return "FEOL";
    case Tier::BEOL_PG: return "BEOL_PG";
    case Tier::BEOL_SRAM_N: return "BEOL_SRAM_N";
    case Tier::BEOL_SRAM_P: return "BEOL_SRAM_P";
  }
  return "?";
}

inline const char* to_string(DeviceRole r) {
  switch (r) {
    case DeviceRole::pass: return "pass";
    case DeviceRole::buf: return "buf";
    case DeviceRole::restorer: return "restorer";
    case DeviceRole::sram_pu: return "sram_pu";
    case DeviceRole::sram_pd: return "sram_pd";
    case DeviceRole::sram_pg: return "sram_pg";
    case DeviceRole::ff: return "ff";
  }
  return "?";
}

struct DeviceInst {
  std::string dev;  // technology library device name
  double width;     // um
  DeviceRole role;
  Tier tier = Tier::FEOL;
};

struct Subcircuit {
  std::string name;
  BlockKind block;
  BlockKind owner;       // principal block this subcircuit serves
  int inputs = 0;        // mux fan-in (mux blocks only)
  int s1 = 0, s2 = 0;    // two-level select stage sizes (s2 == 1: single level)
  int config_bits = 0;
  bool transmission_gate = false;
  std::vector<DeviceInst> devices;
  int miv_count = 0;
};

// Per-class width multipliers, in units of each device's w_min.
struct SizingVector {
  double lut_pass = 1.5;
  double xbar_pass = 2.0;
  double ble_pass = 2.0;
  double sb_pass = 2.0;
  double cb_pass = 3.0;
  double buffer = 4.0;

  double& by_index(int idx) {
    switch (idx) {
      case 0: return lut_pass;
      case 1: return xbar_pass;
      case 2: return ble_pass;
      case 3: return sb_pass;
      case 4: return cb_pass;
      case 5: return buffer;
    }
    throw std::out_of_range("SizingVector index");
  }
  static constexpr int n_classes = 6;
  static const char* class_name(int idx) {
    static const char* names[] = {"lut_pass", "xbar_pass", "ble_pass",
                                  "sb_pass",  "cb_pass",   "buffer"};
    return names[idx];
  }
};

struct TileNetlist {
  TileSpec spec;
  std::vector<Subcircuit> subcircuits;
  bool tiers_assigned = false;
  bool mivs_inserted = false;
};

struct ConfigBitCount {
  std::map<BlockKind, int> per_block;
  int total = 0;
};

namespace detail {

struct TileDevices {
  std::string clb_pass_n, clb_pass_p;  // CLB-internal transmission gates
  std::string scb_pass;                // SB/CB pass device (single n-type)
  std::string buf_n, buf_p;
  std::string restorer;
  std::string sram_pu, sram_pd, sram_pg;
};

inline TileDevices select_devices(const TechnologyLibrary& lib, const ImplStyle& style) {
  TileDevices d;
  d.clb_pass_n = "si_n";
  d.clb_pass_p = "si_p";
  d.buf_n = "si_n";
  d.buf_p = "si_p";
  d.restorer = "si_p_keeper";
  const bool aos_sram = style.variant != Variant::CMOS_2D;
  const bool aos_pg = style.variant == Variant::M3D_FULL;
  if (aos_sram && (!lib.has_device("aos_sno_p") || !lib.has_device("aos_iwo_n")))
    throw std::runtime_error("style requires BEOL SRAM devices missing from the technology library");
  if (aos_pg && !lib.has_device("aos_iwo_n"))
    throw std::runtime_error("style requires BEOL pass-gate device missing from the technology library");
  d.scb_pass = aos_pg ? "aos_iwo_n" : "si_n";
  d.sram_pu = aos_sram ? "aos_sno_p" : "si_p";
  d.sram_pd = aos_sram ? "aos_iwo_n" : "si_n";
  d.sram_pg = aos_sram ? "aos_iwo_n" : "si_n";
  return d;
}

inline void mux_stages(int inputs, int& s1, int& s2) {
  s1 = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(inputs))));
  s2 = (inputs + s1 - 1) / s1;
}

}  // namespace detail

// Restorer needed when the pass-gate overdrive cannot reach v_dd + vth.
inline bool needs_level_restorer(const TechnologyLibrary& lib, const ImplStyle& style,
                                 const std::string& pass_dev) {
  switch (style.level_restorers) {
    case RestorerMode::On: return true;
    case RestorerMode::Off: return false;
    case RestorerMode::Auto: break;
  }
  const DeviceParams& d = lib.device(pass_dev);
  return style.v_sram_scb < style.v_dd + d.vth_cond();
}

inline TileNetlist build_tile(const TechnologyLibrary& lib, const TileSpec& spec,
                              const SizingVector& sizing = {}) {
  spec.validate();
  const ImplStyle& style = spec.style;
  const auto dv = detail::select_devices(lib, style);
  TileNetlist tile;
  tile.spec = spec;

  auto width_of = [&](const std::string& dev, double mult) {
    return lib.device(dev).w_min * mult;
  };

  int sram_seq = 0;
  auto add_sram_bits = [&](BlockKind owner, const std::string& owner_name, int count) {
    for (int b = 0; b < count; ++b) {
      Subcircuit s;
      s.name = "sram:" + owner_name + ":" + std::to_string(b);
      s.block = BlockKind::SRAM_BIT;
      s.owner = owner;
      s.config_bits = 1;
      const bool aos = style.variant != Variant::CMOS_2D;
      const double wpu = width_of(dv.sram_pu, aos ? 4.0 : 1.0);  // 4:2:1 for the AOS cell
      const double wpd = width_of(dv.sram_pd, aos ? 2.0 : 1.0);
      const double wpg = width_of(dv.sram_pg, 1.0);
      s.devices = {{dv.sram_pu, wpu, DeviceRole::sram_pu}, {dv.sram_pu, wpu, DeviceRole::sram_pu},
                   {dv.sram_pd, wpd, DeviceRole::sram_pd}, {dv.sram_pd, wpd, DeviceRole::sram_pd},
                   {dv.sram_pg, wpg, DeviceRole::sram_pg}, {dv.sram_pg, wpg, DeviceRole::sram_pg}};
      tile.subcircuits.push_back(std::move(s));
      ++sram_seq;
    }
  };

  auto add_buffer = [&](BlockKind owner, const std::string& owner_name) {
    Subcircuit s;
    s.name = "buf:" + owner_name;
    s.block = BlockKind::BUFFER;
    s.owner = owner;
    const double wn = width_of(dv.buf_n, sizing.buffer);
    const double wp = width_of(dv.buf_p, sizing.buffer);
    // Two inverter stages.
    s.devices = {{dv.buf_n, wn, DeviceRole::buf}, {dv.buf_p, wp, DeviceRole::buf},
                 {dv.buf_n, wn, DeviceRole::buf}, {dv.buf_p, wp, DeviceRole::buf}};
    tile.subcircuits.push_back(std::move(s));
  };

  auto add_restorer = [&](BlockKind owner, const std::string& owner_name) {
    Subcircuit s;
    s.name = "rest:" + owner_name;
    s.block = BlockKind::RESTORER;
    s.owner = owner;
    s.devices = {{dv.restorer, width_of(dv.restorer, 1.0), DeviceRole::restorer}};
    tile.subcircuits.push_back(std::move(s));
  };

  // Two-level mux with one config bit per select line (shared first-level
  // select across groups).  Transmission-gate muxes carry an n/p device pair
  // per branch; pass-gate muxes a single n device.
  auto add_mux = [&](BlockKind block, const std::string& name, int inputs, bool tgate,
                     const std::string& pass_n, const std::string& pass_p, double mult,
                     bool with_buffer, bool with_restorer) {
    Subcircuit s;
    s.name = name;
    s.block = block;
    s.owner = block;
    s.inputs = inputs;
    detail::mux_stages(inputs, s.s1, s.s2);
    s.transmission_gate = tgate;
    const int branches = inputs + (s.s2 > 1 ? s.s2 : 0);
    for (int b = 0; b < branches; ++b) {
      s.devices.push_back({pass_n, width_of(pass_n, mult), DeviceRole::pass});
      if (tgate) s.devices.push_back({pass_p, width_of(pass_p, mult), DeviceRole::pass});
    }
    s.config_bits = s.s2 > 1 ? s.s1 + s.s2 : s.s1;
    const int bits = s.config_bits;
    tile.subcircuits.push_back(std::move(s));
    add_sram_bits(block, name, bits);
    if (with_restorer) add_restorer(block, name);
    if (with_buffer) add_buffer(block, name);
  };

  // LUTs: K-level transmission-gate binary trees, 2^K SRAM-driven data inputs.
  for (int lut = 0; lut < spec.n; ++lut) {
    const std::string name = "lut" + std::to_string(lut);
    Subcircuit s;
    s.name = name;
    s.block = BlockKind::LUT;
    s.owner = BlockKind::LUT;
    s.inputs = 1 << spec.k;
    s.transmission_gate = true;
    const int tree_branches = (1 << (spec.k + 1)) - 2;
    for (int b = 0; b < tree_branches; ++b) {
      s.devices.push_back({dv.clb_pass_n, width_of(dv.clb_pass_n, sizing.lut_pass), DeviceRole::pass});
      s.devices.push_back({dv.clb_pass_p, width_of(dv.clb_pass_p, sizing.lut_pass), DeviceRole::pass});
    }
    s.config_bits = 1 << spec.k;
    tile.subcircuits.push_back(std::move(s));
    add_sram_bits(BlockKind::LUT, name, 1 << spec.k);
    add_buffer(BlockKind::LUT, name);
  }

  // Local crossbar: one mux per LUT selection input.
  for (int m = 0; m < spec.n * spec.k; ++m)
    add_mux(BlockKind::CLB_XBAR, "xbar" + std::to_string(m), spec.xbar_mux_inputs(), true,
            dv.clb_pass_n, dv.clb_pass_p, sizing.xbar_pass, true, false);

  // BLE output/feedback muxes and flip-flops.
  for (int b = 0; b < spec.n; ++b) {
    add_mux(BlockKind::BLE_OUT, "bleout" + std::to_string(b), 2, true, dv.clb_pass_n,
            dv.clb_pass_p, sizing.ble_pass, true, false);
    Subcircuit ff;
    ff.name = "ff" + std::to_string(b);
    ff.block = BlockKind::FF;
    ff.owner = BlockKind::FF;
    for (int d = 0; d < 10; ++d) {
      ff.devices.push_back({dv.buf_n, width_of(dv.buf_n, 1.0), DeviceRole::ff});
      ff.devices.push_back({dv.buf_p, width_of(dv.buf_p, 1.0), DeviceRole::ff});
    }
    ff.config_bits = 1;  // initial-state bit
    tile.subcircuits.push_back(std::move(ff));
    add_sram_bits(BlockKind::FF, "ff" + std::to_string(b), 1);
  }

  // Routing muxes: pass-gate based, level restorer when not overdriven.
  const bool restore = needs_level_restorer(lib, style, dv.scb_pass);
  for (int m = 0; m < spec.w; ++m)
    add_mux(BlockKind::SB_MUX, "sb" + std::to_string(m), spec.sb_mux_inputs(), false,
            dv.scb_pass, "", sizing.sb_pass, true, restore);
  for (int m = 0; m < spec.i; ++m)
    add_mux(BlockKind::CB_MUX, "cb" + std::to_string(m), spec.cb_mux_inputs(), false,
            dv.scb_pass, "", sizing.cb_pass, true, restore);

  (void)sram_seq;
  return tile;
}

inline ConfigBitCount count_config_bits(const TileNetlist& tile) {
  ConfigBitCount out;
  for (const auto& s : tile.subcircuits) {
    if (s.block != BlockKind::SRAM_BIT) continue;
    out.per_block[s.owner] += 1;
    out.total += 1;
  }
  return out;
}

inline TileNetlist assign_tiers(const TechnologyLibrary& lib, const TileNetlist& tile_in,
                                const ImplStyle& style) {
  TileNetlist tile = tile_in;
  for (auto& s : tile.subcircuits)
    for (auto& d : s.devices) d.tier = Tier::FEOL;

  if (style.variant != Variant::CMOS_2D) {
    // Configuration bits move to the two SRAM tiers.
    for (auto& s : tile.subcircuits) {
      if (s.block != BlockKind::SRAM_BIT) continue;
      for (auto& d : s.devices) {
        // n devices share the lower tier, p devices the upper one.
        d.tier = (d.role == DeviceRole::sram_pu) ? Tier::BEOL_SRAM_P : Tier::BEOL_SRAM_N;
      }
    }
  }
  if (style.variant == Variant::M3D_FULL) {
    for (auto& s : tile.subcircuits) {
      if (s.block != BlockKind::SB_MUX && s.block != BlockKind::CB_MUX) continue;
      for (auto& d : s.devices)
        if (d.role == DeviceRole::pass) d.tier = Tier::BEOL_PG;
    }
  }
  // A device routed to a BEOL tier must be a BEOL-class device.
  for (const auto& s : tile.subcircuits)
    for (const auto& d : s.devices)
      if (d.tier != Tier::FEOL && lib.device(d.dev).tier_class != TierClass::BEOL)
        throw std::runtime_error("style places FEOL device '" + d.dev + "' on a BEOL tier");
  tile.tiers_assigned = true;
  return tile;
}

inline TileNetlist insert_mivs(const TileNetlist& tile_in, const TechnologyLibrary& lib) {
  TileNetlist tile = tile_in;
  (void)lib;
  for (auto& s : tile.subcircuits) {
    s.miv_count = 0;
    if (s.block == BlockKind::SRAM_BIT) {
      const bool beol = !s.devices.empty() && s.devices.front().tier != Tier::FEOL;
      if (beol) s.miv_count = 5;  // inverter + feedback pairs, one storage-node via
    } else if (s.block == BlockKind::SB_MUX || s.block == BlockKind::CB_MUX) {
      const bool beol = !s.devices.empty() && s.devices.front().tier == Tier::BEOL_PG;
      if (beol) s.miv_count = 2;  // signal up into the PG tier and back down
    }
  }
  tile.mivs_inserted = true;
  return tile;
}

inline TileNetlist build_full_tile(const TechnologyLibrary& lib, const TileSpec& spec,
                                   const SizingVector& sizing = {}) {
  return insert_mivs(assign_tiers(lib, build_tile(lib, spec, sizing), spec.style), lib);
}

inline void write_tile_netlist(std::ostream& os, const TileNetlist& tile) {
  const TileSpec& sp = tile.spec;
  os << "tile-netlist v1\n";
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "spec k=%d n=%d i=%d w=%d l=%d fs=%d fc_in=%.6g fc_out=%.6g style=%s "
                "v_dd=%.6g v_sram=%.6g v_sram_scb=%.6g\n",
                sp.k, sp.n, sp.i, sp.w, sp.l, sp.fs, sp.fc_in, sp.fc_out,
                to_string(sp.style.variant), sp.style.v_dd, sp.style.v_sram,
                sp.style.v_sram_scb);
  os << buf;
  for (const auto& s : tile.subcircuits) {
    std::snprintf(buf, sizeof buf, "subckt %s block=%s owner=%s inputs=%d s1=%d s2=%d bits=%d miv=%d\n",
                  s.name.c_str(), to_string(s.block), to_string(s.owner), s.inputs, s.s1,
                  s.s2, s.config_bits, s.miv_count);
    os << buf;
    for (const auto& d : s.devices) {
      std::snprintf(buf, sizeof buf, "  dev %s w=%.6g role=%s tier=%s\n", d.dev.c_str(),
                    d.width, to_string(d.role), to_string(d.tier));
      os << buf;
    }
  }
  os << "end\n";
}

}  // namespace m3d

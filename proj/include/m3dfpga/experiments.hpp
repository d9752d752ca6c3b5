#pragma once

// Experiment orchestration: corpus-wide architecture comparison, the
// retarget calculator, named figure presets, and CSV emission.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "m3dfpga/timing.hpp"

namespace m3d {

// ---------------------------------------------------------------------------
// CSV artifacts
// ---------------------------------------------------------------------------

// All cell values are kept as already-formatted strings so that emission is
// idempotent: emit -> parse -> emit reproduces the bytes exactly.
struct CsvTable {
  std::vector<std::string> notes;    // leading comment lines, without "# "
  std::vector<std::string> columns;  // header names
  std::vector<std::vector<std::string>> rows;
};

inline std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_to_text(const CsvTable& t) {
  std::string out;
  for (const auto& n : t.notes) out += "# " + n + "\n";
  auto join = [&](const std::vector<std::string>& cells) {
    std::string line;
    for (size_t i = 0; i < cells.size(); ++i) {
      if (i) line += ",";
      line += cells[i];
    }
    return line + "\n";
  };
  out += join(t.columns);
  for (const auto& r : t.rows) {
    if (r.size() != t.columns.size())
      throw std::invalid_argument("csv_to_text: row width does not match header");
    out += join(r);
  }
  return out;
}

inline CsvTable csv_from_text(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : s) {
      if (c == ',') {
        cells.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    cells.push_back(cur);
    return cells;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      if (header_seen)
        throw std::invalid_argument("csv line " + std::to_string(lineno) +
                                    ": comment after header");
      t.notes.push_back(line.substr(2));
      continue;
    }
    auto cells = split(line);
    if (!header_seen) {
      t.columns = cells;
      header_seen = true;
    } else {
      if (cells.size() != t.columns.size())
        throw std::invalid_argument("csv line " + std::to_string(lineno) +
                                    ": expected " + std::to_string(t.columns.size()) +
                                    " cells, got " + std::to_string(cells.size()));
      t.rows.push_back(std::move(cells));
    }
  }
  if (!header_seen) throw std::invalid_argument("csv: missing header line");
  return t;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
  f << text;
}

// ---------------------------------------------------------------------------
// Benchmark corpus
// ---------------------------------------------------------------------------

struct Benchmark {
  std::string name;
  LogicNetlist netlist;
};

inline std::vector<Benchmark> load_corpus(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.path().extension() == ".blif") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<Benchmark> out;
  for (const auto& f : files) {
    std::ifstream in(f);
    std::stringstream ss;
    ss << in.rdbuf();
    out.push_back({f.stem().string(), parse_blif(ss.str())});
  }
  if (out.empty()) throw std::invalid_argument("load_corpus: no .blif files in " + dir.string());
  return out;
}

// Reference operating points: both variants run logic at v_dd=0.7 and
// v_sram=0.8; the BEOL routing-configuration rail is boosted to 1.2 V where
// the SB/CB bits live above the metal stack.
inline ArchModel reference_arch(const TechnologyLibrary& lib, Variant v) {
  TileSpec spec;
  spec.style.variant = v;
  spec.style.v_sram_scb = (v == Variant::CMOS_2D) ? 0.8 : 1.2;
  return export_arch(lib, build_full_tile(lib, spec));
}

// ---------------------------------------------------------------------------
// Architecture comparison (corpus-wide)
// ---------------------------------------------------------------------------

struct BenchmarkDelta {
  std::string name;
  bool routed = false;
  std::string failure;  // reason when !routed
  double cpd_a = 0.0, a_tot_a = 0.0, at2_a = 0.0;
  double cpd_b = 0.0, a_tot_b = 0.0, at2_b = 0.0;
  // Signed fractional deltas of arch_b relative to arch_a (negative = lower).
  double delta_area = 0.0, delta_cpd = 0.0, delta_at2 = 0.0;
};

struct ComparisonReport {
  std::vector<BenchmarkDelta> rows;
  int routed_count = 0;
  double geomean_delta_area = 0.0;
  double geomean_delta_cpd = 0.0;
  double geomean_delta_at2 = 0.0;
  std::vector<std::string> warnings;
};

inline ComparisonReport compare_architectures(const std::vector<Benchmark>& corpus,
                                              const ArchModel& arch_a, const ArchModel& arch_b,
                                              unsigned seed) {
  if (corpus.empty()) throw std::invalid_argument("compare_architectures: empty corpus");
  ComparisonReport rep;
  double ga = 1.0, gt = 1.0;
  for (const auto& b : corpus) {
    BenchmarkDelta row;
    row.name = b.name;
    try {
      FlowResult fa = run_flow(b.netlist, arch_a, seed);
      FlowResult fb = run_flow(b.netlist, arch_b, seed);
      row.cpd_a = fa.metrics.cpd;
      row.a_tot_a = fa.metrics.a_tot;
      row.at2_a = fa.metrics.at2;
      row.cpd_b = fb.metrics.cpd;
      row.a_tot_b = fb.metrics.a_tot;
      row.at2_b = fb.metrics.at2;
      if (row.a_tot_a <= 0.0 || row.cpd_a <= 0.0)
        throw std::runtime_error("degenerate baseline metrics");
      row.delta_area = row.a_tot_b / row.a_tot_a - 1.0;
      row.delta_cpd = row.cpd_b / row.cpd_a - 1.0;
      // AT^2 delta follows from the area and delay deltas by construction.
      row.delta_at2 =
          (1.0 + row.delta_area) * (1.0 + row.delta_cpd) * (1.0 + row.delta_cpd) - 1.0;
      row.routed = true;
      ++rep.routed_count;
      ga *= 1.0 + row.delta_area;
      gt *= 1.0 + row.delta_cpd;
    } catch (const std::exception& e) {
      row.failure = e.what();
      rep.warnings.push_back("benchmark '" + b.name + "' excluded from geomean: " + e.what());
    }
    rep.rows.push_back(std::move(row));
  }
  if (rep.routed_count > 0) {
    const double inv = 1.0 / rep.routed_count;
    const double ra = std::pow(ga, inv), rt = std::pow(gt, inv);
    rep.geomean_delta_area = ra - 1.0;
    rep.geomean_delta_cpd = rt - 1.0;
    rep.geomean_delta_at2 = ra * rt * rt - 1.0;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Retarget calculator
// ---------------------------------------------------------------------------

struct RetargetInput {
  double base_area_mm2 = 736.0;  // planar baseline implementation
  double base_delay_ns = 4.17;
  double area_scale = 1.0;  // dimensionless fractions, e.g. from ArchModel ratios
  double delay_scale = 1.0;

  void validate() const {
    if (base_area_mm2 <= 0.0 || base_delay_ns <= 0.0)
      throw std::invalid_argument("retarget: base area and delay must be > 0");
    if (area_scale <= 0.0 || delay_scale <= 0.0)
      throw std::invalid_argument("retarget: scales must be > 0");
  }
};

struct RetargetResult {
  double area_mm2 = 0.0;
  double delay_ns = 0.0;
  double at2_mm2_ns2 = 0.0;
  double delta_area = 0.0;
  double delta_delay = 0.0;
  double delta_at2 = 0.0;
};

inline RetargetResult retarget_estimate(const RetargetInput& inp) {
  inp.validate();
  RetargetResult r;
  r.area_mm2 = inp.base_area_mm2 * inp.area_scale;
  r.delay_ns = inp.base_delay_ns * inp.delay_scale;
  r.at2_mm2_ns2 = r.area_mm2 * r.delay_ns * r.delay_ns;
  r.delta_area = inp.area_scale - 1.0;
  r.delta_delay = inp.delay_scale - 1.0;
  r.delta_at2 = inp.area_scale * inp.delay_scale * inp.delay_scale - 1.0;
  return r;
}

// A system-scale critical path crosses several long routing segments between
// the logic stages; eight hops stands in for the die-crossing wirelength.
inline constexpr int kRetargetWireHops = 8;

// Scale fractions read off two architecture models: footprint ratio for area
// and, for delay, the block path plus kRetargetWireHops switch-plus-segment
// hops so that the wire advantage of the denser tile is represented.
inline RetargetInput retarget_scales_from_arch(const ArchModel& arch_a, const ArchModel& arch_b) {
  auto path_delay = [](const ArchModel& a) {
    double d = 0.0;
    for (const auto& [name, blk] : a.blocks)
      if (name != "ff") d += blk.delay;
    const double rw = a.seg_r_per_tile * a.l, cw = a.seg_c_per_tile * a.l;
    const double hop = a.switch_t_del + a.switch_r_on * (a.switch_c_in + cw) +
                       rw * (0.5 * cw + a.switch_c_in);
    return d + kRetargetWireHops * hop;
  };
  RetargetInput inp;
  inp.area_scale = arch_b.tile_footprint_um2 / arch_a.tile_footprint_um2;
  inp.delay_scale = path_delay(arch_b) / path_delay(arch_a);
  inp.validate();
  return inp;
}

// ---------------------------------------------------------------------------
// DUT power sweep grid (figure 6b analog)
// ---------------------------------------------------------------------------

// The reference bus parameters are not fully specified, so the sweep covers
// channel width and a bus-length multiplier around the nominal testbench.
inline const std::vector<int>& dut_sweep_widths() {
  static const std::vector<int> v = {100, 150, 200};
  return v;
}
inline const std::vector<double>& dut_sweep_bus_scales() {
  static const std::vector<double> v = {0.75, 1.0, 1.25};
  return v;
}

struct DutSweepPoint {
  DutKind kind;
  int w = 0;
  double bus_um = 0.0;
  double power_cmos_w = 0.0;
  double power_aos_w = 0.0;
};

inline std::vector<DutSweepPoint> dut_power_sweep(const TechnologyLibrary& lib) {
  auto make_tile = [&](Variant v, double scb, int w) {
    TileSpec spec;
    spec.w = w;
    spec.style.variant = v;
    spec.style.v_sram_scb = scb;
    return build_full_tile(lib, spec);
  };
  std::vector<DutSweepPoint> out;
  for (DutKind kind : {DutKind::SB, DutKind::CB}) {
    const double nominal = (kind == DutKind::SB) ? kSbBusUm : kCbBusUm;
    for (int w : dut_sweep_widths()) {
      TileNetlist t2d = make_tile(Variant::CMOS_2D, 0.8, w);
      TileNetlist tm = make_tile(Variant::M3D_FULL, 1.2, w);
      for (double s : dut_sweep_bus_scales()) {
        DutSweepPoint p;
        p.kind = kind;
        p.w = w;
        p.bus_um = nominal * s;
        p.power_cmos_w =
            mux_dut_power(lib, make_mux_dut(lib, t2d, kind, p.bus_um), t2d.spec.style);
        p.power_aos_w = mux_dut_power(lib, make_mux_dut(lib, tm, kind, p.bus_um), tm.spec.style);
        out.push_back(p);
      }
    }
  }
  return out;
}

// Mean fractional power reduction of the AOS mux over the sweep grid.
inline double dut_mean_reduction(const std::vector<DutSweepPoint>& sweep, DutKind kind) {
  double sum = 0.0;
  int n = 0;
  for (const auto& p : sweep)
    if (p.kind == kind) {
      sum += 1.0 - p.power_aos_w / p.power_cmos_w;
      ++n;
    }
  if (n == 0) throw std::invalid_argument("dut_mean_reduction: no points of this kind");
  return sum / n;
}

// ---------------------------------------------------------------------------
// Figure presets
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& figure_ids() {
  static const std::vector<std::string> v = {"3c", "3d", "5a", "5b", "6b", "8", "9a"};
  return v;
}

inline CsvTable comparison_to_csv(const ComparisonReport& rep) {
  CsvTable t;
  t.notes = {"per-benchmark comparison of arch_b against arch_a at a common seed",
             "deltas are signed fractions of arch_b relative to arch_a"};
  t.columns = {"benchmark", "routed",     "cpd_a_s",   "a_tot_a_um2", "at2_a",
               "cpd_b_s",   "a_tot_b_um2", "at2_b",    "delta_area",  "delta_cpd",
               "delta_at2"};
  for (const auto& r : rep.rows) {
    if (!r.routed) {
      t.rows.push_back({r.name, "0", "nan", "nan", "nan", "nan", "nan", "nan", "nan", "nan",
                        "nan"});
      continue;
    }
    t.rows.push_back({r.name, "1", format_g17(r.cpd_a), format_g17(r.a_tot_a),
                      format_g17(r.at2_a), format_g17(r.cpd_b), format_g17(r.a_tot_b),
                      format_g17(r.at2_b), format_g17(r.delta_area), format_g17(r.delta_cpd),
                      format_g17(r.delta_at2)});
  }
  t.rows.push_back({"geomean", std::to_string(rep.routed_count), "nan", "nan", "nan", "nan",
                    "nan", "nan", format_g17(rep.geomean_delta_area),
                    format_g17(rep.geomean_delta_cpd), format_g17(rep.geomean_delta_at2)});
  return t;
}

inline CsvTable reproduce_figure(const std::string& fig, const TechnologyLibrary& lib,
                                 const std::vector<Benchmark>& corpus, unsigned seed) {
  auto tile_at = [&](Variant v, double scb) {
    TileSpec spec;
    spec.style.variant = v;
    spec.style.v_sram_scb = scb;
    return build_full_tile(lib, spec);
  };
  CsvTable t;
  if (fig == "3c") {
    t.notes = {"configuration-bit static power vs storage rail",
               "aos: BEOL oxide-channel cell, cmos: planar FinFET cell"};
    t.columns = {"v_sram", "aos_power_w", "cmos_power_w"};
    SramCellSpec aos = aos_sram_cell(lib), si = si_sram_cell(lib);
    for (int i = 0; i <= 12; ++i) {
      const double v = 0.6 + 0.05 * i;
      t.rows.push_back({format_g17(v), format_g17(sram_static_power(aos, v)),
                        format_g17(sram_static_power(si, v))});
    }
  } else if (fig == "3d") {
    t.notes = {"representative tile critical path vs routing-configuration rail",
               "logic rails pinned at v_dd=0.7, v_sram=0.8"};
    t.columns = {"v_sram_scb", "cpd_cmos_2d_s", "cpd_m3d_full_s"};
    for (int i = 0; i <= 4; ++i) {
      const double v = 0.8 + 0.1 * i;
      t.rows.push_back({format_g17(v),
                        format_g17(representative_cpd(lib, tile_at(Variant::CMOS_2D, v))),
                        format_g17(representative_cpd(lib, tile_at(Variant::M3D_FULL, v)))});
    }
  } else if (fig == "5a") {
    t.notes = {"tile footprint composition by block; shares sum to 1 per variant"};
    t.columns = {"variant", "block", "area_share"};
    for (Variant v : {Variant::CMOS_2D, Variant::M3D_SRAM_ONLY, Variant::M3D_FULL}) {
      TileNetlist tile = tile_at(v, v == Variant::CMOS_2D ? 0.8 : 1.2);
      TileCostReport rep = tile_footprint(lib, tile);
      for (const auto& [blk, share] : rep.block_area_shares)
        t.rows.push_back({to_string(v), to_string(blk), format_g17(share)});
    }
  } else if (fig == "5b") {
    t.notes = {"congestion-adjusted tile area per tier and resulting footprint"};
    t.columns = {"variant", "tier", "area_um2", "footprint_um2"};
    for (Variant v : {Variant::CMOS_2D, Variant::M3D_SRAM_ONLY, Variant::M3D_FULL}) {
      TileNetlist tile = tile_at(v, v == Variant::CMOS_2D ? 0.8 : 1.2);
      TileCostReport rep = tile_footprint(lib, tile);
      for (const auto& [tier, area] : rep.area_per_tier)
        t.rows.push_back(
            {to_string(v), to_string(tier), format_g17(area), format_g17(rep.footprint)});
    }
  } else if (fig == "6b") {
    t.notes = {"routing mux DUT power over the bus sweep grid",
               "cmos: planar pass gates at 0.8 V, aos: oxide pass gates at 1.2 V"};
    t.columns = {"dut", "w", "bus_um", "power_cmos_w", "power_aos_w"};
    for (const auto& p : dut_power_sweep(lib))
      t.rows.push_back({p.kind == DutKind::SB ? "sb" : "cb", std::to_string(p.w),
                        format_g17(p.bus_um), format_g17(p.power_cmos_w),
                        format_g17(p.power_aos_w)});
  } else if (fig == "8") {
    ComparisonReport rep =
        compare_architectures(corpus, reference_arch(lib, Variant::CMOS_2D),
                              reference_arch(lib, Variant::M3D_FULL), seed);
    t = comparison_to_csv(rep);
  } else if (fig == "9a") {
    t.notes = {"routed wire occupancy by segment length per benchmark and variant"};
    t.columns = {"benchmark", "variant", "seg_len", "used_wires"};
    for (Variant v : {Variant::CMOS_2D, Variant::M3D_FULL}) {
      ArchModel arch = reference_arch(lib, v);
      for (const auto& b : corpus) {
        FlowResult fr = run_flow(b.netlist, arch, seed);
        for (const auto& [len, used] : fr.metrics.occupancy)
          t.rows.push_back({b.name, to_string(v), std::to_string(len), std::to_string(used)});
      }
    }
  } else {
    throw std::invalid_argument("reproduce_figure: unknown figure id '" + fig + "'");
  }
  return t;
}

}  // namespace m3d

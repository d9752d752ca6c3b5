#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "m3dfpga/experiments.hpp"

namespace fs = std::filesystem;
using namespace m3d;

namespace {

// Exit codes: 0 success, 2 validation error, 3 unroutable, 4 numerical failure.
constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitUnroutable = 3;
constexpr int kExitNumerical = 4;

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot read file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// --- tile spec file: '#' comments and "key = value" lines -----------------

TileSpec tile_spec_from_text(const std::string& text) {
  TileSpec spec;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw std::invalid_argument("tile spec line " + std::to_string(lineno) +
                                    ": expected key = value");
      continue;
    }
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      const auto b = s.find_last_not_of(" \t\r");
      return s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    try {
      if (key == "k") spec.k = std::stoi(val);
      else if (key == "n") spec.n = std::stoi(val);
      else if (key == "i") spec.i = std::stoi(val);
      else if (key == "w") spec.w = std::stoi(val);
      else if (key == "l") spec.l = std::stoi(val);
      else if (key == "fs") spec.fs = std::stoi(val);
      else if (key == "fc_in") spec.fc_in = std::stod(val);
      else if (key == "fc_out") spec.fc_out = std::stod(val);
      else if (key == "variant") spec.style.variant = variant_from_string(val);
      else if (key == "v_dd") spec.style.v_dd = std::stod(val);
      else if (key == "v_sram") spec.style.v_sram = std::stod(val);
      else if (key == "v_sram_scb") spec.style.v_sram_scb = std::stod(val);
      else
        throw std::invalid_argument("unknown key '" + key + "'");
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("tile spec line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  spec.validate();
  return spec;
}

// --- tile netlist text dump: one subcircuit block per stanza ---------------

std::string tile_to_text(const TileNetlist& tile) {
  std::ostringstream out;
  const TileSpec& s = tile.spec;
  out << "tile k=" << s.k << " n=" << s.n << " i=" << s.i << " w=" << s.w << " l=" << s.l
      << " fs=" << s.fs << " fc_in=" << format_g17(s.fc_in) << " fc_out=" << format_g17(s.fc_out)
      << "\n";
  out << "style variant=" << to_string(s.style.variant) << " v_dd=" << format_g17(s.style.v_dd)
      << " v_sram=" << format_g17(s.style.v_sram)
      << " v_sram_scb=" << format_g17(s.style.v_sram_scb) << "\n\n";
  for (const auto& sub : tile.subcircuits) {
    out << "subcircuit " << sub.name << "\n";
    out << "  block " << to_string(sub.block) << " owner " << to_string(sub.owner) << "\n";
    if (sub.inputs > 0)
      out << "  mux inputs=" << sub.inputs << " s1=" << sub.s1 << " s2=" << sub.s2 << "\n";
    if (sub.config_bits > 0) out << "  config_bits " << sub.config_bits << "\n";
    if (sub.miv_count > 0) out << "  miv_count " << sub.miv_count << "\n";
    for (const auto& d : sub.devices)
      out << "  device " << d.dev << " width=" << format_g17(d.width) << " role="
          << to_string(d.role) << " tier=" << to_string(d.tier) << "\n";
    out << "\n";
  }
  return out.str();
}

void emit(const fs::path& out_dir, const std::string& name, const CsvTable& table,
          const std::string& explicit_out) {
  fs::path path = explicit_out.empty() ? out_dir / name : fs::path(explicit_out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_text_file(path, csv_to_text(table));
  std::cout << path.string() << "\n";
}

struct Common {
  std::string tech = "data/tech_7nm.lib";
  std::string spec = "data/tile_default.spec";
  unsigned seed = 42;
  int jobs = 1;  // accepted for interface stability; evaluation is serial
  std::string out_dir = ".";

  TechnologyLibrary lib() const { return load_technology_library(tech); }
  TileSpec tile_spec() const { return tile_spec_from_text(slurp(spec)); }
};

TileSpec styled(TileSpec spec, const std::string& style) {
  if (!style.empty()) {
    spec.style.variant = variant_from_string(style);
    spec.style.v_sram_scb = spec.style.variant == Variant::CMOS_2D ? 0.8 : 1.2;
  }
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"m3dfpga: transistor-level FPGA tile modeling and exploration"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--tech", common.tech, "technology library file");
  app.add_option("--spec", common.spec, "tile specification file");
  app.add_option("--seed", common.seed, "rng seed for placement");
  app.add_option("--jobs", common.jobs, "worker budget (results are order-independent)");
  app.add_option("--out-dir", common.out_dir, "directory for emitted artifacts");

  // analyze-sram
  auto* sram_cmd = app.add_subcommand("analyze-sram", "sweep a configuration cell over v_sram");
  std::string cell_name = "aos";
  double vmin = 0.6, vmax = 1.2;
  int steps = 13;
  std::string out_file;
  sram_cmd->add_option("--cell", cell_name, "cell name: aos or si");
  sram_cmd->add_option("--vmin", vmin);
  sram_cmd->add_option("--vmax", vmax);
  sram_cmd->add_option("--steps", steps);
  sram_cmd->add_option("--out", out_file, "output csv path");

  // build-tile
  auto* build_cmd = app.add_subcommand("build-tile", "generate and dump a tile netlist");
  std::string style, netlist_out;
  build_cmd->add_option("--style", style, "variant override: CMOS_2D, M3D_SRAM_ONLY, M3D_FULL");
  build_cmd->add_option("--out", netlist_out, "netlist text file");

  // tile-report
  auto* report_cmd = app.add_subcommand("tile-report", "cost report for one tile");
  report_cmd->add_option("--style", style, "variant override");
  report_cmd->add_option("--out", out_file, "output csv path");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "mux DUT power sweep");
  std::string dut_name = "sb", param = "bus_um";
  double from = 0.0, to = 0.0;
  int sweep_steps = 5;
  sweep_cmd->add_option("--dut", dut_name, "sb or cb")->required();
  sweep_cmd->add_option("--param", param, "bus_um, mux_size, w, or fc_in")->required();
  sweep_cmd->add_option("--from", from)->required();
  sweep_cmd->add_option("--to", to)->required();
  sweep_cmd->add_option("--steps", sweep_steps)->required();
  sweep_cmd->add_option("--out", out_file, "output csv path");

  // size
  auto* size_cmd = app.add_subcommand("size", "optimize transistor sizing, export arch model");
  std::string arch_out = "arch.model";
  size_cmd->add_option("--style", style, "variant override");
  size_cmd->add_option("--out", arch_out, "architecture model file");

  // pnr
  auto* pnr_cmd = app.add_subcommand("pnr", "pack, place, and route one netlist");
  std::string arch_file, blif_file, congestion_out;
  pnr_cmd->add_option("--arch", arch_file, "architecture model file")->required();
  pnr_cmd->add_option("--blif", blif_file, "mapped netlist")->required();
  pnr_cmd->add_option("--out", out_file, "metrics csv path");
  pnr_cmd->add_option("--congestion-map", congestion_out, "per-tile history csv");

  // compare
  auto* compare_cmd = app.add_subcommand("compare", "corpus comparison of two architectures");
  std::string corpus_dir = "data/benchmarks", arch_a_file, arch_b_file;
  compare_cmd->add_option("--corpus", corpus_dir, "directory of .blif benchmarks");
  compare_cmd->add_option("--arch-a", arch_a_file, "baseline arch (default: planar tile)");
  compare_cmd->add_option("--arch-b", arch_b_file, "candidate arch (default: full-BEOL tile)");
  compare_cmd->add_option("--out", out_file, "output csv path");

  // retarget
  auto* retarget_cmd = app.add_subcommand("retarget", "closed-form implementation estimate");
  RetargetInput rt;
  retarget_cmd->add_option("--base-area", rt.base_area_mm2, "baseline area, mm^2");
  retarget_cmd->add_option("--base-delay", rt.base_delay_ns, "baseline delay, ns");
  auto* rt_as = retarget_cmd->add_option("--area-scale", rt.area_scale);
  auto* rt_ds = retarget_cmd->add_option("--delay-scale", rt.delay_scale);
  retarget_cmd->add_option("--arch-a", arch_a_file, "derive scales from this baseline arch");
  retarget_cmd->add_option("--arch-b", arch_b_file, "derive scales from this candidate arch");
  retarget_cmd->add_option("--out", out_file, "output csv path");

  // reproduce-figure
  auto* fig_cmd = app.add_subcommand("reproduce-figure", "emit a named figure data set");
  std::string fig_id;
  fig_cmd->add_option("figure", fig_id, "one of 3c, 3d, 5a, 5b, 6b, 8, 9a")->required();
  fig_cmd->add_option("--corpus", corpus_dir, "directory of .blif benchmarks");
  fig_cmd->add_option("--out", out_file, "output csv path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kExitOk : kExitValidation;
  }

  try {
    const fs::path out_dir = common.out_dir;

    if (sram_cmd->parsed()) {
      auto lib = common.lib();
      SramCellSpec cell = cell_name == "aos"  ? aos_sram_cell(lib)
                          : cell_name == "si" ? si_sram_cell(lib)
                                              : sram_cell_by_name(lib, cell_name);
      if (steps < 2 || vmax <= vmin)
        throw std::invalid_argument("analyze-sram: need steps >= 2 and vmax > vmin");
      CsvTable t;
      t.notes = {"configuration cell '" + cell_name + "' swept over the storage rail"};
      t.columns = {"v_sram", "static_power_w", "hsnm_v", "write_delay_s"};
      for (int s = 0; s < steps; ++s) {
        const double v = vmin + (vmax - vmin) * s / (steps - 1);
        std::string wd = "nan";
        try {
          wd = format_g17(write_delay(cell, v, v));
        } catch (const std::exception&) {
          // unwritable at this rail; the column records nan
        }
        t.rows.push_back({format_g17(v), format_g17(sram_static_power(cell, v)),
                          format_g17(hold_snm(cell, v)), wd});
      }
      emit(out_dir, "sram_" + cell_name + ".csv", t, out_file);
    } else if (build_cmd->parsed()) {
      auto lib = common.lib();
      TileNetlist tile = build_full_tile(lib, styled(common.tile_spec(), style));
      fs::path path = netlist_out.empty() ? out_dir / "tile.netlist" : fs::path(netlist_out);
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
      write_text_file(path, tile_to_text(tile));
      std::cout << path.string() << "\n";
    } else if (report_cmd->parsed()) {
      auto lib = common.lib();
      TileNetlist tile = build_full_tile(lib, styled(common.tile_spec(), style));
      TileCostReport rep = tile_cost_report(lib, tile);
      CsvTable t;
      t.notes = {"tile cost report for variant " + std::string(to_string(tile.spec.style.variant))};
      t.columns = {"field", "value"};
      t.rows.push_back({"footprint_um2", format_g17(rep.footprint)});
      t.rows.push_back({"cpd_s", format_g17(rep.cpd)});
      t.rows.push_back({"static_power_w", format_g17(rep.static_power)});
      t.rows.push_back({"config_static_share", format_g17(rep.config_static_share)});
      for (const auto& [tier, area] : rep.area_per_tier)
        t.rows.push_back({std::string("area_") + to_string(tier), format_g17(area)});
      for (const auto& [blk, share] : rep.block_area_shares)
        t.rows.push_back({std::string("share_") + to_string(blk), format_g17(share)});
      emit(out_dir, "tile_report.csv", t, out_file);
    } else if (sweep_cmd->parsed()) {
      auto lib = common.lib();
      const DutKind kind = dut_name == "sb"   ? DutKind::SB
                           : dut_name == "cb" ? DutKind::CB
                                              : throw std::invalid_argument(
                                                    "sweep: --dut must be sb or cb");
      if (sweep_steps < 2 || to <= from)
        throw std::invalid_argument("sweep: need steps >= 2 and to > from");
      CsvTable t;
      t.notes = {"mux DUT power vs " + param + " (" + dut_name + ")"};
      t.columns = {param, "power_w"};
      for (int s = 0; s < sweep_steps; ++s) {
        const double x = from + (to - from) * s / (sweep_steps - 1);
        TileSpec spec = styled(common.tile_spec(), style);
        double bus_um = 0.0;
        if (param == "w") spec.w = static_cast<int>(std::lround(x));
        else if (param == "fc_in") spec.fc_in = x;
        else if (param == "bus_um") bus_um = x;
        else if (param != "mux_size")
          throw std::invalid_argument("sweep: unknown --param '" + param + "'");
        TileNetlist tile = build_full_tile(lib, spec);
        MuxDut dut = make_mux_dut(lib, tile, kind, bus_um);
        if (param == "mux_size") {
          dut.mux_size = static_cast<int>(std::lround(x));
          if (dut.mux_size < 2) throw std::invalid_argument("sweep: mux_size must be >= 2");
          int s1 = 0, s2 = 0;
          detail::mux_stages(dut.mux_size, s1, s2);
          dut.n_sram = s1 + s2;
        }
        t.rows.push_back({format_g17(x), format_g17(mux_dut_power(lib, dut, spec.style))});
      }
      emit(out_dir, "sweep_" + dut_name + "_" + param + ".csv", t, out_file);
    } else if (size_cmd->parsed()) {
      auto lib = common.lib();
      TileSpec spec = styled(common.tile_spec(), style);
      SizingOutcome outcome = optimize_sizing(lib, spec);
      TileNetlist tile = build_full_tile(lib, spec, outcome.sizing);
      fs::path path = fs::path(arch_out);
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
      write_text_file(path, arch_to_text(export_arch(lib, tile)));
      std::cout << path.string() << "\n";
    } else if (pnr_cmd->parsed()) {
      ArchModel arch = arch_from_text(slurp(arch_file));
      LogicNetlist nl = parse_blif(slurp(blif_file));
      FlowResult fr = run_flow(nl, arch, common.seed);
      CsvTable t;
      t.notes = {"pack/place/route metrics; one row per used segment length"};
      t.columns = {"benchmark", "variant", "cpd_s",   "fmax_hz",
                   "a_tot_um2", "at2",     "seg_len", "seg_used"};
      auto occ = fr.metrics.occupancy;
      if (occ.empty()) occ[0] = 0;
      for (const auto& [len, used] : occ)
        t.rows.push_back({nl.model, arch.variant, format_g17(fr.metrics.cpd),
                          format_g17(fr.metrics.f_max), format_g17(fr.metrics.a_tot),
                          format_g17(fr.metrics.at2), std::to_string(len),
                          std::to_string(used)});
      emit(out_dir, nl.model + "_metrics.csv", t, out_file);
      if (!congestion_out.empty()) {
        CsvTable c;
        c.notes = {"accumulated negotiation history per tile"};
        c.columns = {"x", "y", "history"};
        for (const auto& [xy, h] : fr.metrics.congestion)
          c.rows.push_back({std::to_string(xy.first), std::to_string(xy.second), format_g17(h)});
        emit(out_dir, "congestion.csv", c, congestion_out);
      }
    } else if (compare_cmd->parsed()) {
      auto lib = common.lib();
      auto corpus = load_corpus(corpus_dir);
      ArchModel a = arch_a_file.empty() ? reference_arch(lib, Variant::CMOS_2D)
                                        : arch_from_text(slurp(arch_a_file));
      ArchModel b = arch_b_file.empty() ? reference_arch(lib, Variant::M3D_FULL)
                                        : arch_from_text(slurp(arch_b_file));
      ComparisonReport rep = compare_architectures(corpus, a, b, common.seed);
      for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
      emit(out_dir, "compare.csv", comparison_to_csv(rep), out_file);
      if (rep.routed_count == 0) return kExitUnroutable;
    } else if (retarget_cmd->parsed()) {
      if (!arch_a_file.empty() || !arch_b_file.empty()) {
        if (arch_a_file.empty() || arch_b_file.empty())
          throw std::invalid_argument("retarget: --arch-a and --arch-b go together");
        if (*rt_as || *rt_ds)
          throw std::invalid_argument("retarget: give either explicit scales or arch files");
        RetargetInput derived = retarget_scales_from_arch(arch_from_text(slurp(arch_a_file)),
                                                          arch_from_text(slurp(arch_b_file)));
        rt.area_scale = derived.area_scale;
        rt.delay_scale = derived.delay_scale;
      }
      RetargetResult r = retarget_estimate(rt);
      CsvTable t;
      t.notes = {"closed-form retarget of a fixed implementation onto the scaled fabric"};
      t.columns = {"field", "value"};
      t.rows.push_back({"area_mm2", format_g17(r.area_mm2)});
      t.rows.push_back({"delay_ns", format_g17(r.delay_ns)});
      t.rows.push_back({"at2_mm2_ns2", format_g17(r.at2_mm2_ns2)});
      t.rows.push_back({"delta_area", format_g17(r.delta_area)});
      t.rows.push_back({"delta_delay", format_g17(r.delta_delay)});
      t.rows.push_back({"delta_at2", format_g17(r.delta_at2)});
      emit(out_dir, "retarget.csv", t, out_file);
    } else if (fig_cmd->parsed()) {
      auto lib = common.lib();
      auto corpus = load_corpus(corpus_dir);
      CsvTable t = reproduce_figure(fig_id, lib, corpus, common.seed);
      emit(out_dir, "figure_" + fig_id + ".csv", t, out_file);
    }
    return kExitOk;
  } catch (const UnroutableError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUnroutable;
  } catch (const SizingDivergence& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    const std::string what = e.what();
    return what.find("diverge") != std::string::npos || what.find("overflow") != std::string::npos
               ? kExitNumerical
               : kExitValidation;
  }
}

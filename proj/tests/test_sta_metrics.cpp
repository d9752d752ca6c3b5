#include <doctest.h>

#include <cmath>
#include <functional>
#include <map>
#include <string>

#include "m3dfpga/timing.hpp"

using namespace m3d;

namespace {

const TechnologyLibrary& lib() {
  static TechnologyLibrary l =
      load_technology_library(std::string(M3D_DATA_DIR) + "/tech_7nm.lib");
  return l;
}

ArchModel default_arch(Variant v) {
  TileSpec sp;
  sp.style.variant = v;
  if (v != Variant::CMOS_2D) sp.style.v_sram_scb = 1.2;
  return export_arch(lib(), build_full_tile(lib(), sp));
}

// Arch with hand-picked block delays and negligible interconnect.
ArchModel toy_arch(double lut_delay) {
  ArchModel m = default_arch(Variant::CMOS_2D);
  for (auto& [name, b] : m.blocks) b.delay = 1e-30;
  m.blocks["lut"].delay = lut_delay;
  m.switch_r_on = 1e-30;
  m.switch_c_in = 1e-30;
  m.switch_c_out = 1e-30;
  m.seg_r_per_tile = 1e-30;
  m.seg_c_per_tile = 1e-30;
  return m;
}

LogicNetlist series_luts() {
  return parse_blif(
      ".model s\n.inputs a\n.outputs y\n.names a m\n1 1\n.names m y\n1 1\n.end\n");
}

}  // namespace

TEST_CASE("two series LUTs give cpd = d1 + d2 with zero wire delay") {
  const double d = 7.5e-11;
  ArchModel arch = toy_arch(d);
  FlowResult fr = run_flow(series_luts(), arch, 1);
  CHECK(fr.metrics.cpd == doctest::Approx(2.0 * d).epsilon(1e-9));
  CHECK(fr.metrics.f_max == doctest::Approx(1.0 / fr.metrics.cpd));
}

TEST_CASE("sta equals a memoized longest-path oracle on random DAGs") {
  ArchModel arch = default_arch(Variant::M3D_FULL);
  for (unsigned seed : {3u, 9u}) {
    LogicNetlist nl;
    nl.model = "dag";
    std::mt19937 rng(seed);
    for (int i = 0; i < 5; ++i) nl.inputs.push_back("pi" + std::to_string(i));
    std::vector<std::string> nets = nl.inputs;
    for (int i = 0; i < 30; ++i) {
      LutNode l;
      l.output = "n" + std::to_string(i);
      std::uniform_int_distribution<int> pick(0, static_cast<int>(nets.size()) - 1);
      std::set<std::string> in;
      while (in.size() < 3) in.insert(nets[static_cast<size_t>(pick(rng))]);
      l.inputs.assign(in.begin(), in.end());
      l.cover = {"111 1"};
      nets.push_back(l.output);
      nl.luts.push_back(std::move(l));
    }
    nl.outputs = {nl.luts.back().output, nl.luts[20].output};
    FlowResult fr = run_flow(nl, arch, seed);

    // Oracle: recursive memoized longest path over the same timing edges.
    const std::vector<TimingEdge> edges = build_timing_edges(fr.rr, fr.design, arch);
    std::map<std::string, std::vector<const TimingEdge*>> fanin;
    for (const auto& e : edges) fanin[e.to].push_back(&e);
    std::map<std::string, double> memo;
    for (const auto& pi : nl.inputs) memo[pi] = 0.0;
    std::function<double(const std::string&)> longest = [&](const std::string& n) -> double {
      auto it = memo.find(n);
      if (it != memo.end()) return it->second;
      double a = 0.0;
      for (const TimingEdge* e : fanin[n]) a = std::max(a, longest(e->from) + e->delay);
      memo[n] = a;
      return a;
    };
    double oracle = 0.0;
    for (const auto& e : edges)
      if (e.to.rfind("$po$", 0) == 0) oracle = std::max(oracle, longest(e.to));
    CHECK(fr.metrics.cpd == doctest::Approx(oracle).epsilon(1e-12));
  }
}

TEST_CASE("at2 and f_max identities hold exactly") {
  ArchModel arch = default_arch(Variant::CMOS_2D);
  FlowResult fr = run_flow(series_luts(), arch, 4);
  CHECK(fr.metrics.at2 == fr.metrics.a_tot * fr.metrics.cpd * fr.metrics.cpd);
  CHECK(std::abs(fr.metrics.at2 / (fr.metrics.a_tot * fr.metrics.cpd * fr.metrics.cpd) - 1.0) <=
        1e-12);
  CHECK(fr.metrics.f_max == 1.0 / fr.metrics.cpd);
}

TEST_CASE("empty design yields all-zero metrics") {
  LogicNetlist nl;
  nl.model = "empty";
  ArchModel arch = default_arch(Variant::CMOS_2D);
  FlowResult fr = run_flow(nl, arch, 1);
  CHECK(fr.metrics.cpd == 0.0);
  CHECK(fr.metrics.a_tot == 0.0);
  CHECK(fr.metrics.at2 == 0.0);
  CHECK(fr.metrics.occupancy.empty());
}

TEST_CASE("occupancy histogram counts exactly the used wire nodes") {
  ArchModel arch = default_arch(Variant::M3D_FULL);
  LogicNetlist nl = parse_blif(
      ".model h\n.inputs a b c d\n.outputs y z\n.names a b y\n11 1\n.names c d z\n11 1\n.end\n");
  FlowResult fr = run_flow(nl, arch, 2);
  std::set<int> used;
  for (const auto& t : fr.design.routing.trees)
    for (int id : t.nodes)
      if (fr.rr.node(id).kind == RRKind::CHANX || fr.rr.node(id).kind == RRKind::CHANY)
        used.insert(id);
  int total = 0;
  for (const auto& [len, cnt] : fr.metrics.occupancy) total += cnt;
  CHECK(total == static_cast<int>(used.size()));
}

TEST_CASE("routed wire delays are positive and grow with distance") {
  ArchModel arch = default_arch(Variant::CMOS_2D);
  TileSpec sp;
  sp.w = 8;
  sp.l = 2;
  RRGraph g = build_rr_graph(sp, 5);
  auto delay_for = [&](Loc sink) {
    PlacedNet n;
    n.name = "d";
    n.driver = {0, 2};
    n.sinks = {sink};
    RoutingResult r = route_pathfinder(g, {n});
    const int s = g.sink_at[static_cast<size_t>(g.tile_index(sink.x, sink.y))];
    return net_wire_delays(g, r.trees[0], arch).at(s);
  };
  const double near = delay_for({1, 2});
  const double far = delay_for({4, 2});
  CHECK(near > 0.0);
  CHECK(far > near);
}

TEST_CASE("sta rejects combinational cycles by name") {
  // Assembled directly: the parser would already reject this.
  LogicNetlist nl;
  nl.model = "cyc";
  nl.inputs = {"x"};
  LutNode a;
  a.output = "a";
  a.inputs = {"b", "x"};
  a.cover = {"11 1"};
  LutNode b;
  b.output = "b";
  b.inputs = {"a"};
  b.cover = {"1 1"};
  nl.luts = {a, b};
  nl.outputs = {"a"};
  TileSpec sp;
  ArchModel arch = default_arch(Variant::CMOS_2D);
  RoutedDesign d;
  d.packed = pack_netlist(nl, sp);
  d.placement = place_sa(d.packed, 1);
  d.nets = placed_nets(d.packed, d.placement);
  RRGraph g = build_rr_graph(sp, d.placement.grid);
  d.routing = route_pathfinder(g, d.nets);
  CHECK_THROWS_WITH_AS(run_sta(g, d, arch), doctest::Contains("cycle"), std::runtime_error);
}

TEST_CASE("the full flow is bitwise deterministic") {
  ArchModel arch = default_arch(Variant::M3D_FULL);
  LogicNetlist nl = series_luts();
  FlowResult a = run_flow(nl, arch, 11);
  FlowResult b = run_flow(nl, arch, 11);
  CHECK(a.metrics.cpd == b.metrics.cpd);
  CHECK(a.metrics.a_tot == b.metrics.a_tot);
  CHECK(a.metrics.at2 == b.metrics.at2);
  CHECK(a.metrics.occupancy == b.metrics.occupancy);
  CHECK(a.metrics.congestion == b.metrics.congestion);
}

TEST_CASE("registered designs time register-to-register paths") {
  ArchModel arch = default_arch(Variant::CMOS_2D);
  LogicNetlist nl = parse_blif(
      ".model r\n.inputs x\n.outputs q\n.names q x d\n11 1\n.latch d q re clk 0\n.end\n");
  FlowResult fr = run_flow(nl, arch, 6);
  // clk-to-q + LUT + capture must all be inside the cycle.
  CHECK(fr.metrics.cpd >= arch.blocks.at("ff").delay + arch.blocks.at("lut").delay);
  CHECK(fr.metrics.f_max == 1.0 / fr.metrics.cpd);
}

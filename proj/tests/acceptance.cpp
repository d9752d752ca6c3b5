#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "m3dfpga/experiments.hpp"

using namespace m3d;

namespace {

const std::string kLibPath = std::string(M3D_DATA_DIR) + "/tech_7nm.lib";
const std::string kCorpusDir = std::string(M3D_DATA_DIR) + "/benchmarks";

TechnologyLibrary lib() { return load_technology_library(kLibPath); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void report(int n, const char* what, bool ok) {
  std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", n, what);
  CHECK(ok);
}

TileNetlist make_tile(const TechnologyLibrary& l, Variant v, double scb) {
  TileSpec sp;
  sp.style.variant = v;
  sp.style.v_sram_scb = scb;
  return build_full_tile(l, sp);
}

// Dense grid-search square-inscription oracle over the butterfly curve.
double snm_grid_oracle(const SramCellSpec& c, double v) {
  const int n = 2001;
  const VtcCurve a = inverter_vtc(c.pu_dev, c.w_pu, c.pd_dev, c.w_pd, v, n);
  auto fa = [&](double x) { return detail::vtc_at(a, x); };
  auto fbinv = [&](double x) { return detail::vtc_inv_at(a, x); };
  const double step = v / (n - 1);
  double lobe1 = 0.0, lobe2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = i * step;
    const double d = fa(x) - fbinv(x);
    if (d > 0.0) {
      const double y0 = fbinv(x);
      for (int j = n - 1; j >= 0; --j) {
        const double s = j * step;
        if (s <= lobe1) break;
        if (fa(x + s) - y0 - s >= 0.0) { lobe1 = std::max(lobe1, s); break; }
      }
    } else if (d < 0.0) {
      const double y0 = fa(x);
      for (int j = n - 1; j >= 0; --j) {
        const double s = j * step;
        if (s <= lobe2) break;
        if (fbinv(x + s) - y0 - s >= 0.0) { lobe2 = std::max(lobe2, s); break; }
      }
    }
  }
  return std::min(lobe1, lobe2);
}

// Path-intersection Elmore oracle, independent of the library's up-walk.
double elmore_oracle(const RcTree& t, int sink) {
  const int n = static_cast<int>(t.nodes.size());
  std::vector<std::vector<int>> path(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i)
    for (int v = i; v >= 0; v = t.nodes[static_cast<size_t>(v)].parent)
      path[static_cast<size_t>(i)].push_back(v);
  std::set<int> sink_path(path[static_cast<size_t>(sink)].begin(),
                          path[static_cast<size_t>(sink)].end());
  double d = 0.0;
  for (int k = 0; k < n; ++k) {
    double r_common = 0.0;
    for (int v : path[static_cast<size_t>(k)])
      if (sink_path.count(v)) r_common += t.nodes[static_cast<size_t>(v)].r;
    d += t.nodes[static_cast<size_t>(k)].c * r_common;
  }
  return d;
}

double sta_longest_path_oracle(const RRGraph& rr, const RoutedDesign& d, const ArchModel& arch,
                               const LogicNetlist& nl) {
  const std::vector<TimingEdge> edges = build_timing_edges(rr, d, arch);
  std::map<std::string, std::vector<const TimingEdge*>> fanin;
  for (const auto& e : edges) fanin[e.to].push_back(&e);
  std::map<std::string, double> memo;
  for (const auto& pi : nl.inputs) memo[pi] = 0.0;
  for (const auto& lt : nl.latches) memo[lt.output] = arch.blocks.at("ff").delay;
  std::function<double(const std::string&)> longest = [&](const std::string& n) -> double {
    auto it = memo.find(n);
    if (it != memo.end()) return it->second;
    double a = 0.0;
    for (const TimingEdge* e : fanin[n]) a = std::max(a, longest(e->from) + e->delay);
    memo[n] = a;
    return a;
  };
  double cpd = 0.0;
  for (const auto& e : edges) cpd = std::max(cpd, longest(e.to));
  return cpd;
}

}  // namespace

TEST_CASE("criterion 1") {
  const auto t0 = std::chrono::steady_clock::now();
  auto l = lib();
  const double red = 1.0 - sram_static_power(aos_sram_cell(l), 0.8) /
                               sram_static_power(si_sram_cell(l), 0.8);
  const bool ok = std::abs(red - 0.601) <= 0.10 && seconds_since(t0) < 1.0;
  report(1, "oxide configuration cell static power reduction 60.1% +- 10 points", ok);
}

TEST_CASE("criterion 2") {
  const auto t0 = std::chrono::steady_clock::now();
  auto l = lib();
  const SramCellSpec aos = aos_sram_cell(l), si = si_sram_cell(l);
  bool ok = std::abs(hold_snm(aos, 1.0) - 0.226) <= 0.025 &&
            std::abs(hold_snm(si, 0.8) - 0.339) <= 0.025;
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> scale(1.0, 2.0), rail(0.7, 1.1);
  for (int i = 0; i < 5 && ok; ++i) {
    SramCellSpec c = (i % 2 == 0) ? aos : si;
    c.w_pu *= scale(rng);
    c.w_pd *= scale(rng);
    const double v = rail(rng);
    ok = std::abs(hold_snm(c, v) - snm_grid_oracle(c, v)) <= 1e-3;
  }
  ok = ok && seconds_since(t0) < 10.0;
  report(2, "hold noise margins in band and solver matches the dense grid oracle", ok);
}

TEST_CASE("criterion 3") {
  auto l = lib();
  const double ratio = write_delay(aos_sram_cell(l), 0.7, 0.7) /
                       write_delay(si_sram_cell(l), 0.7, 0.7);
  report(3, "write-delay ratio 26x +- 30%", std::abs(ratio - 26.0) <= 0.30 * 26.0);
}

TEST_CASE("criterion 4") {
  const auto t0 = std::chrono::steady_clock::now();
  auto l = lib();
  TileNetlist t2d = make_tile(l, Variant::CMOS_2D, 0.8);
  TileNetlist tso = make_tile(l, Variant::M3D_SRAM_ONLY, 1.2);
  TileNetlist tfull = make_tile(l, Variant::M3D_FULL, 1.2);
  const double f2d = tile_footprint(l, t2d).footprint;
  const double red_so = 1.0 - tile_footprint(l, tso).footprint / f2d;
  const double red_full = 1.0 - tile_footprint(l, tfull).footprint / f2d;
  const double sb = owner_footprint_share(l, tso, BlockKind::SB_MUX);
  const double cb = owner_footprint_share(l, tso, BlockKind::CB_MUX);
  const bool ok = std::abs(red_so - 0.49) <= 0.08 && std::abs(red_full - 0.59) <= 0.08 &&
                  std::abs(sb - 0.176) <= 0.04 && std::abs(cb - 0.138) <= 0.04 &&
                  seconds_since(t0) < 30.0;
  report(4, "footprint reductions 49%/59% +- 8 points with SB/CB shares in band", ok);
}

TEST_CASE("criterion 5") {
  auto l = lib();
  const double cpd_2d = representative_cpd(l, make_tile(l, Variant::CMOS_2D, 0.8));
  const double cpd_full = representative_cpd(l, make_tile(l, Variant::M3D_FULL, 1.2));
  bool ok = std::abs(1.0 - cpd_full / cpd_2d - 0.08) <= 0.04;
  double prev = std::numeric_limits<double>::infinity();
  for (double v : {0.8, 0.9, 1.0, 1.1, 1.2}) {
    const double c = representative_cpd(l, make_tile(l, Variant::M3D_FULL, v));
    ok = ok && c < prev;
    prev = c;
  }
  report(5, "tile critical path 8% +- 4 points faster, monotone in the boost rail", ok);
}

TEST_CASE("criterion 6") {
  auto l = lib();
  const auto sweep = dut_power_sweep(l);
  const double sb = dut_mean_reduction(sweep, DutKind::SB);
  const double cb = dut_mean_reduction(sweep, DutKind::CB);
  // Boosted oxide bits against the planar bits they replace (not against
  // themselves at the logic rail).
  const double bit_up =
      sram_static_power(aos_sram_cell(l), 1.2) / sram_static_power(si_sram_cell(l), 0.8) - 1.0;
  const bool ok = std::abs(sb - 0.137) <= 0.06 && std::abs(cb - 0.26) <= 0.08 &&
                  std::abs(bit_up - 0.291) <= 0.08;
  report(6, "mux DUT power reductions and per-bit static increase in band", ok);
}

TEST_CASE("criterion 7") {
  const auto t0 = std::chrono::steady_clock::now();
  auto l = lib();
  bool ok = true;

  // Elmore vs the path-intersection oracle, 100 random trees.
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> ur(10.0, 5000.0);
  std::uniform_real_distribution<double> uc(1e-16, 5e-14);
  for (int trial = 0; trial < 100 && ok; ++trial) {
    std::uniform_int_distribution<int> un(2, 40);
    const int n = un(rng);
    RcTree t;
    t.add_node(-1, ur(rng), uc(rng));
    for (int i = 1; i < n; ++i) {
      std::uniform_int_distribution<int> up(0, i - 1);
      t.add_node(up(rng), ur(rng), uc(rng));
    }
    std::uniform_int_distribution<int> us(0, n - 1);
    const int sink = us(rng);
    const double want = elmore_oracle(t, sink);
    ok = std::abs(elmore_delay(t, sink) - want) <= 1e-12 * want;
  }

  // STA vs a memoized longest-path oracle over every corpus instance.
  const auto corpus = load_corpus(kCorpusDir);
  const ArchModel arch = reference_arch(l, Variant::M3D_FULL);
  for (const auto& b : corpus) {
    if (!ok) break;
    FlowResult fr = run_flow(b.netlist, arch, 42);
    const double oracle = sta_longest_path_oracle(fr.rr, fr.design, arch, b.netlist);
    ok = std::abs(fr.metrics.cpd - oracle) <= 1e-12 * oracle;
  }

  // Single-net route vs plain Dijkstra on the uncongested costs.
  if (ok) {
    TileSpec sp;
    sp.w = 6;
    sp.l = 2;
    RRGraph g = build_rr_graph(sp, 4);
    PlacedNet net{"n", {0, 1}, {{3, 2}}};
    RouterConfig cfg;
    RoutingResult r = route_pathfinder(g, {net}, cfg);
    check_routing(g, r);
    auto base = [&](int id) {
      const RRNode& n = g.node(id);
      if (n.kind == RRKind::CHANX || n.kind == RRKind::CHANY)
        return cfg.base_wire_cost * n.seg_len;
      if (n.kind == RRKind::SINK) return 0.0;
      return cfg.base_pin_cost;
    };
    const int src = g.source_at[static_cast<size_t>(g.tile_index(0, 1))];
    const int dst = g.sink_at[static_cast<size_t>(g.tile_index(3, 2))];
    std::vector<double> dist(g.nodes.size(), std::numeric_limits<double>::infinity());
    std::priority_queue<std::pair<double, int>, std::vector<std::pair<double, int>>,
                        std::greater<>> pq;
    dist[static_cast<size_t>(src)] = 0.0;
    pq.push({0.0, src});
    while (!pq.empty()) {
      auto [du, u] = pq.top();
      pq.pop();
      if (du > dist[static_cast<size_t>(u)]) continue;
      for (int v : g.edges[static_cast<size_t>(u)]) {
        if (g.node(v).kind == RRKind::SINK && v != dst) continue;
        const double dv = du + base(v);
        if (dv < dist[static_cast<size_t>(v)]) {
          dist[static_cast<size_t>(v)] = dv;
          pq.push({dv, v});
        }
      }
    }
    double got = 0.0;
    for (int id : r.trees[0].nodes)
      if (id != src) got += base(id);
    ok = std::abs(got - dist[static_cast<size_t>(dst)]) <= 1e-12;
  }

  // Two-class coordinate descent vs the exhaustive grid on a separable toy.
  if (ok) {
    auto objective = [](const std::vector<double>& p) {
      return (1.0 + 2.0 * p[0]) * (0.5 + 3.0 / p[0]) +
             (1.0 + 0.7 * p[1]) * (0.5 + 5.0 / p[1]);
    };
    std::vector<double> grid(kWidthGrid.begin(), kWidthGrid.end());
    DescentResult got = coordinate_descent({1.0, 1.0}, grid, objective);
    double best = std::numeric_limits<double>::infinity();
    for (double a : grid)
      for (double b : grid) best = std::min(best, objective({a, b}));
    ok = std::abs(got.objective - best) <= 1e-12 * best;
  }

  // SNM solver vs the grid oracle at the calibration points.
  if (ok)
    ok = std::abs(hold_snm(aos_sram_cell(l), 1.0) - snm_grid_oracle(aos_sram_cell(l), 1.0)) <=
             1e-3 &&
         std::abs(hold_snm(si_sram_cell(l), 0.8) - snm_grid_oracle(si_sram_cell(l), 0.8)) <= 1e-3;

  ok = ok && seconds_since(t0) < 120.0;
  report(7, "oracle equivalence suite (elmore, sta, routing, sizing, snm) under 2 minutes", ok);
}

TEST_CASE("criterion 8") {
  const auto t0 = std::chrono::steady_clock::now();
  auto l = lib();
  const auto corpus = load_corpus(kCorpusDir);
  const ArchModel a = reference_arch(l, Variant::CMOS_2D);
  const ArchModel b = reference_arch(l, Variant::M3D_FULL);
  ComparisonReport rep = compare_architectures(corpus, a, b, 42);
  bool ok = corpus.size() >= 6 && rep.routed_count == static_cast<int>(corpus.size());
  ok = ok && rep.geomean_delta_area <= -0.45 && rep.geomean_delta_at2 <= -0.55;
  for (const auto& r : rep.rows) ok = ok && r.delta_cpd <= -0.03 && r.delta_cpd >= -0.40;
  const std::string once = csv_to_text(comparison_to_csv(rep));
  const std::string twice = csv_to_text(comparison_to_csv(compare_architectures(corpus, a, b, 42)));
  ok = ok && once == twice && seconds_since(t0) < 600.0;
  report(8, "corpus comparison bands hold, bitwise deterministic, under 10 minutes", ok);
}

TEST_CASE("criterion 9") {
  auto l = lib();
  const auto corpus = load_corpus(kCorpusDir);
  const ArchModel a = reference_arch(l, Variant::CMOS_2D);
  const ArchModel b = reference_arch(l, Variant::M3D_FULL);
  auto long_fraction = [](const DesignMetrics& m) {
    double tot = 0.0, lng = 0.0;
    for (const auto& [len, used] : m.occupancy) {
      tot += used;
      if (len > 1) lng += used;
    }
    return tot > 0.0 ? lng / tot : 0.0;
  };
  int shifted = 0;
  for (const auto& bench : corpus) {
    const double fa = long_fraction(run_flow(bench.netlist, a, 42).metrics);
    const double fb = long_fraction(run_flow(bench.netlist, b, 42).metrics);
    if (fb > fa) ++shifted;
  }
  report(9, "long-segment occupancy strictly higher on at least 3 benchmarks", shifted >= 3);
}

TEST_CASE("criterion 10") {
  RetargetInput inp;
  inp.area_scale = 0.576;
  inp.delay_scale = 0.794;
  RetargetResult r = retarget_estimate(inp);
  const bool ok = std::abs(r.area_mm2 - 423.8) <= 0.5 && std::abs(r.delay_ns - 3.31) <= 0.01 &&
                  std::abs(r.delta_at2 - (-0.637)) <= 0.003;
  report(10, "retarget calculator reproduces 423.8 mm^2, 3.31 ns, -63.7% AT^2", ok);
}

TEST_CASE("criterion 11") {
  auto l = lib();
  ConfigBitCount bits = count_config_bits(make_tile(l, Variant::CMOS_2D, 0.8));
  const bool ok = bits.total >= 2000 && bits.total <= 5000 &&
                  bits.per_block[BlockKind::LUT] == 640;
  report(11, "default tile configuration bits in [2000, 5000] with exactly 640 LUT bits", ok);
}

TEST_CASE("criterion 12") {
  auto l = lib();
  const auto corpus = load_corpus(kCorpusDir);
  const ArchModel arch = reference_arch(l, Variant::M3D_FULL);
  bool ok = true;

  // Routing and packing legality plus the AT^2 identity on two instances.
  for (size_t i = 0; i < 2 && ok; ++i) {
    FlowResult fr = run_flow(corpus[i].netlist, arch, 42);
    TileSpec spec;
    spec.k = arch.k;
    spec.n = arch.n;
    spec.i = arch.i;
    check_routing(fr.rr, fr.design.routing);       // throws on an illegal route
    check_packing(fr.design.packed, spec);         // throws on an illegal packing
    ok = fr.metrics.at2 == fr.metrics.a_tot * fr.metrics.cpd * fr.metrics.cpd;
    FlowResult again = run_flow(corpus[i].netlist, arch, 42);
    ok = ok && again.metrics.cpd == fr.metrics.cpd && again.metrics.a_tot == fr.metrics.a_tot;
  }

  // Elmore monotonicity: growing any node capacitance never speeds a sink up.
  if (ok) {
    RcTree t;
    t.add_node(-1, 100.0, 1e-15);
    t.add_node(0, 200.0, 2e-15);
    t.add_node(1, 300.0, 1e-15);
    const double before = elmore_delay(t, 2);
    t.nodes[1].c *= 3.0;
    ok = elmore_delay(t, 2) >= before;
  }

  // Device model: current linear in width, continuous across the knee.
  if (ok) {
    const DeviceParams& d = l.device("aos_iwo_n");
    const double i1 = drain_current(d, 0.7, 0.5, d.w_min);
    const double i2 = drain_current(d, 0.7, 0.5, 2.0 * d.w_min);
    ok = std::abs(i2 - 2.0 * i1) <= 1e-9 * std::abs(i2);
    const double step = 1e-7;
    for (double v : {0.06, 0.2, 0.35}) {  // spans the linear/saturation knee
      const double lo = drain_current(d, 0.7, v - step, d.w_min);
      const double hi = drain_current(d, 0.7, v + step, d.w_min);
      ok = ok && std::abs(hi - lo) <= 1e-3 * std::max(std::abs(hi), 1e-18);
    }
    const double sub = drain_current(d, d.vth - step, 0.5, d.w_min);
    const double sup = drain_current(d, d.vth + step, 0.5, d.w_min);
    ok = ok && std::abs(sup - sub) <= 1e-3 * std::max(std::abs(sup), 1e-18);
  }
  report(12, "legality checkers, determinism, identities, and model properties hold", ok);
}

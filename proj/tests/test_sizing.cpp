#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "m3dfpga/sizing.hpp"

using namespace m3d;

namespace {
const TechnologyLibrary& lib() {
  static TechnologyLibrary l =
      load_technology_library(std::string(M3D_DATA_DIR) + "/tech_7nm.lib");
  return l;
}

TileNetlist full_tile(Variant v, double scb, const SizingVector& s = {}) {
  TileSpec sp;
  sp.style.variant = v;
  sp.style.v_sram_scb = scb;
  return build_full_tile(lib(), sp, s);
}
}  // namespace

TEST_CASE("single-class toy picks the area-delay argmin") {
  // (1x: A=1,D=4) (2x: A=2,D=1.5) (4x: A=4,D=1) -> 2x wins with AD=3.
  auto obj = [](const std::vector<double>& p) {
    if (p[0] == 1.0) return 1.0 * 4.0;
    if (p[0] == 2.0) return 2.0 * 1.5;
    return 4.0 * 1.0;
  };
  DescentResult r = coordinate_descent({1.0}, {1.0, 2.0, 4.0}, obj);
  CHECK(r.point[0] == 2.0);
  CHECK(r.objective == doctest::Approx(3.0));
  CHECK(r.converged);
}

TEST_CASE("two-class descent equals the exhaustive grid oracle") {
  const std::vector<double> grid(kWidthGrid.begin(), kWidthGrid.end());
  // Separable area-delay surface: per-class AD terms with unique interior
  // optima, so cyclic descent must land on the global grid optimum.
  auto obj = [](const std::vector<double>& p) {
    return (1.0 + 2.0 * p[0]) * (0.5 + 3.0 / p[0]) + (1.0 + 0.7 * p[1]) * (0.5 + 5.0 / p[1]);
  };
  double best = 1e300;
  std::vector<double> best_p;
  for (double a : grid)
    for (double b : grid) {
      const double o = obj({a, b});
      if (o < best) {
        best = o;
        best_p = {a, b};
      }
    }
  DescentResult r = coordinate_descent({1.0, 1.0}, grid, obj);
  CHECK(r.objective == doctest::Approx(best));
  CHECK(r.point[0] == best_p[0]);
  CHECK(r.point[1] == best_p[1]);
}

TEST_CASE("descent trace is monotone and order-invariant on a unique optimum") {
  const std::vector<double> grid(kWidthGrid.begin(), kWidthGrid.end());
  auto obj = [](const std::vector<double>& p) {
    return (1.0 + p[0] + 2.0 * p[1] + 0.3 * p[2]) * (1.0 + 4.0 / p[0] + 1.0 / p[1] + 6.0 / p[2]);
  };
  DescentResult fwd = coordinate_descent({1.0, 1.0, 1.0}, grid, obj, 20, {0, 1, 2});
  DescentResult rev = coordinate_descent({1.0, 1.0, 1.0}, grid, obj, 20, {2, 1, 0});
  for (size_t i = 1; i < fwd.trace.size(); ++i) CHECK(fwd.trace[i] <= fwd.trace[i - 1]);
  CHECK(fwd.objective == doctest::Approx(rev.objective));
  for (int c = 0; c < 3; ++c) CHECK(fwd.point[static_cast<size_t>(c)] == rev.point[static_cast<size_t>(c)]);
}

TEST_CASE("non-converging descent reports its best point") {
  // Stateful objective that always finds something lower: never settles.
  int calls = 0;
  auto obj = [&calls](const std::vector<double>&) { return 1.0 / ++calls; };
  try {
    coordinate_descent({1.0}, {1.0, 2.0}, obj, 3);
    FAIL("expected SizingDivergence");
  } catch (const SizingDivergence& e) {
    CHECK(!e.best.trace.empty());
    CHECK(!e.best.converged);
    CHECK(e.best.objective == e.best.trace.back());
  }
}

TEST_CASE("descent validates its inputs") {
  auto obj = [](const std::vector<double>& p) { return p[0]; };
  CHECK_THROWS_AS(coordinate_descent({}, {1.0}, obj), std::invalid_argument);
  CHECK_THROWS_AS(coordinate_descent({1.0}, {}, obj), std::invalid_argument);
  CHECK_THROWS_AS(coordinate_descent({1.0, 1.0}, {1.0}, obj, 20, {0}), std::invalid_argument);
}

TEST_CASE("tile sizing improves the area-delay product and widens oxide pass gates") {
  TileSpec sp;
  sp.style.variant = Variant::M3D_FULL;
  sp.style.v_sram_scb = 1.2;
  SizingOutcome out = optimize_sizing(lib(), sp);
  for (size_t i = 1; i < out.trace.size(); ++i) CHECK(out.trace[i] <= out.trace[i - 1]);
  CHECK(out.trace.back() <= out.trace.front());
  CHECK(out.report.footprint > 0.0);
  CHECK(out.report.cpd > 0.0);

  // Oxide pass gates end up at least as wide as the silicon pass gates they
  // replace, compensating the lower drive current.
  TileNetlist sized = build_full_tile(lib(), sp, out.sizing);
  const Subcircuit* sb = nullptr;
  const Subcircuit* lut = nullptr;
  for (const auto& s : sized.subcircuits) {
    if (s.block == BlockKind::SB_MUX) sb = &s;
    if (s.block == BlockKind::LUT) lut = &s;
  }
  REQUIRE(sb != nullptr);
  REQUIRE(lut != nullptr);
  CHECK(sb->devices.front().width >= lut->devices.front().width);
}

TEST_CASE("arch model export round-trips byte-identically") {
  for (Variant v : {Variant::CMOS_2D, Variant::M3D_FULL}) {
    TileNetlist tile = full_tile(v, v == Variant::CMOS_2D ? 0.8 : 1.2);
    ArchModel m = export_arch(lib(), tile);
    const std::string text = arch_to_text(m);
    ArchModel parsed = arch_from_text(text);
    CHECK(arch_to_text(parsed) == text);
  }
}

TEST_CASE("variant exports differ only in measured values, not topology") {
  ArchModel a = export_arch(lib(), full_tile(Variant::CMOS_2D, 0.8));
  ArchModel b = export_arch(lib(), full_tile(Variant::M3D_FULL, 1.2));
  CHECK(a.k == b.k);
  CHECK(a.n == b.n);
  CHECK(a.i == b.i);
  CHECK(a.w == b.w);
  CHECK(a.l == b.l);
  CHECK(a.fs == b.fs);
  CHECK(a.fc_in == b.fc_in);
  CHECK(a.fc_out == b.fc_out);
  CHECK(a.blocks.size() == b.blocks.size());
  for (const auto& [name, blk] : a.blocks) {
    CHECK(b.blocks.count(name) == 1);
    (void)blk;
  }
  CHECK(a.variant != b.variant);
  CHECK(a.tile_footprint_um2 != b.tile_footprint_um2);
}

TEST_CASE("exported switch delay recomputes from the canonical path stages") {
  TileNetlist tile = full_tile(Variant::M3D_FULL, 1.2);
  ArchModel m = export_arch(lib(), tile);
  const std::vector<double> st = representative_stage_delays(lib(), tile);
  CHECK(std::abs(m.switch_t_del - st[5]) <= 1e-15);
  CHECK(std::abs(m.blocks.at("lut").delay - (st[2] + st[3])) <= 1e-15);
}

TEST_CASE("every exported field is positive and finite") {
  ArchModel m = export_arch(lib(), full_tile(Variant::M3D_SRAM_ONLY, 0.8));
  CHECK_NOTHROW(m.validate());
  for (const auto& [name, b] : m.blocks) {
    CHECK(b.area > 0.0);
    CHECK(b.delay > 0.0);
    CHECK(std::isfinite(b.delay));
    (void)name;
  }
  CHECK(m.seg_r_per_tile > 0.0);
  CHECK(m.seg_c_per_tile > 0.0);
}

TEST_CASE("arch parser rejects malformed input with line diagnostics") {
  ArchModel m = export_arch(lib(), full_tile(Variant::CMOS_2D, 0.8));
  std::string text = arch_to_text(m);
  CHECK_THROWS_AS(arch_from_text("[topology]\nk = 6\n"), std::runtime_error);  // no version
  CHECK_THROWS_AS(arch_from_text("format_version = 2\n"), std::runtime_error);
  std::string bad = text;
  bad.replace(bad.find("v_dd = "), 7, "v_dd = x");
  CHECK_THROWS_AS(arch_from_text(bad), std::runtime_error);
  try {
    arch_from_text("format_version = 1\n[style]\nv_dd == 0.7\n");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

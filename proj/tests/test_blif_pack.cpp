#include <doctest.h>

#include <random>
#include <set>
#include <string>

#include "m3dfpga/pack.hpp"

using namespace m3d;

namespace {

// Random LUT DAG with `n_luts` nodes over `n_pi` primary inputs.
LogicNetlist random_netlist(int n_pi, int n_luts, int k, unsigned seed) {
  std::mt19937 rng(seed);
  LogicNetlist nl;
  nl.model = "rand";
  std::vector<std::string> nets;
  for (int i = 0; i < n_pi; ++i) {
    nl.inputs.push_back("pi" + std::to_string(i));
    nets.push_back(nl.inputs.back());
  }
  for (int i = 0; i < n_luts; ++i) {
    LutNode l;
    l.output = "n" + std::to_string(i);
    std::uniform_int_distribution<int> arity(1, k);
    const int fanin = arity(rng);
    std::set<std::string> chosen;
    std::uniform_int_distribution<int> pick(0, static_cast<int>(nets.size()) - 1);
    while (static_cast<int>(chosen.size()) < fanin)
      chosen.insert(nets[static_cast<size_t>(pick(rng))]);
    l.inputs.assign(chosen.begin(), chosen.end());
    std::string pat(l.inputs.size(), '1');
    l.cover.push_back(pat + " 1");
    nets.push_back(l.output);
    nl.luts.push_back(std::move(l));
  }
  nl.outputs.push_back(nl.luts.back().output);
  return nl;
}

bool isomorphic(const LogicNetlist& a, const LogicNetlist& b) {
  if (a.inputs != b.inputs || a.outputs != b.outputs) return false;
  if (a.luts.size() != b.luts.size() || a.latches.size() != b.latches.size()) return false;
  auto key = [](const LogicNetlist& nl) {
    std::set<std::string> k;
    for (const auto& l : nl.luts) {
      std::string s = l.output + "<-";
      for (const auto& in : l.inputs) s += in + ",";
      for (const auto& r : l.cover) s += ";" + r;
      k.insert(s);
    }
    for (const auto& l : nl.latches) k.insert("L:" + l.input + ">" + l.output);
    return k;
  };
  return key(a) == key(b);
}

}  // namespace

TEST_CASE("empty model parses to zero LUTs") {
  LogicNetlist nl = parse_blif(".model empty\n.inputs a\n.outputs a\n.end\n");
  CHECK(nl.model == "empty");
  CHECK(nl.luts.empty());
  CHECK(nl.latches.empty());
}

TEST_CASE("two-input AND gives one LUT with the 11->1 row") {
  LogicNetlist nl =
      parse_blif(".model and2\n.inputs a b\n.outputs y\n.names a b y\n11 1\n.end\n");
  REQUIRE(nl.luts.size() == 1);
  CHECK(nl.luts[0].output == "y");
  CHECK(nl.luts[0].inputs == std::vector<std::string>{"a", "b"});
  REQUIRE(nl.luts[0].cover.size() == 1);
  CHECK(nl.luts[0].cover[0] == "11 1");
}

TEST_CASE("parse-emit-parse yields isomorphic netlists on a 50-net circuit") {
  LogicNetlist a = random_netlist(8, 42, 4, 99);  // 8 PIs + 42 LUTs = 50 nets
  LogicNetlist b = parse_blif(emit_blif(a));
  CHECK(isomorphic(a, b));
  CHECK(emit_blif(b) == emit_blif(parse_blif(emit_blif(b))));
}

TEST_CASE("parser rejects malformed input with line numbers") {
  CHECK_THROWS_WITH_AS(parse_blif(".model a\n.model b\n.end\n"),
                       doctest::Contains("line 2"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_blif(".model a\n.subckt foo\n.end\n"),
                       doctest::Contains("unsupported directive"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_blif(".model a\n.inputs x\n.outputs y\n.end\n"),
                       doctest::Contains("undeclared signal 'y'"), std::runtime_error);
  CHECK_THROWS_WITH_AS(
      parse_blif(".model a\n.inputs x\n.outputs y\n.names x y\n1 1\n.names x y\n0 1\n.end\n"),
      doctest::Contains("multiple drivers"), std::runtime_error);
  CHECK_THROWS_AS(parse_blif(".model a\n.inputs x\n"), std::runtime_error);
  CHECK_THROWS_AS(parse_blif("\n\n"), std::runtime_error);
}

TEST_CASE("parser rejects combinational cycles naming the loop") {
  const std::string text =
      ".model cyc\n.inputs x\n.outputs a\n.names b x a\n11 1\n.names a b\n1 1\n.end\n";
  CHECK_THROWS_WITH_AS(parse_blif(text), doctest::Contains("cycle"), std::runtime_error);
}

TEST_CASE("latch outputs legally break feedback loops") {
  const std::string text =
      ".model acc\n.inputs x\n.outputs q\n.names q x d\n11 1\n.latch d q re clk 0\n.end\n";
  LogicNetlist nl = parse_blif(text);
  CHECK(nl.latches.size() == 1);
  CHECK(nl.luts.size() == 1);
}

TEST_CASE("25 LUTs with n=10 need at least three clusters") {
  LogicNetlist nl = random_netlist(6, 25, 4, 5);
  TileSpec sp;
  PackedNetlist p = pack_netlist(nl, sp);
  CHECK(p.clusters.size() >= 3);
  check_packing(p, sp);
}

TEST_CASE("packing output passes the independent legality checker") {
  TileSpec sp;
  for (unsigned seed : {1u, 2u, 3u, 4u}) {
    LogicNetlist nl = random_netlist(10, 60, 6, seed);
    PackedNetlist p = pack_netlist(nl, sp);
    CHECK_NOTHROW(check_packing(p, sp));
    size_t total = 0;
    for (const auto& c : p.clusters) total += c.bles.size();
    CHECK(total == nl.luts.size());
  }
}

TEST_CASE("a dependent chain of n LUTs sharing inputs packs into one cluster") {
  TileSpec sp;
  LogicNetlist nl;
  nl.model = "chain";
  nl.inputs = {"a"};
  std::string prev = "a";
  for (int i = 0; i < sp.n; ++i) {
    LutNode l;
    l.output = "c" + std::to_string(i);
    l.inputs = {prev};
    l.cover = {"1 1"};
    prev = l.output;
    nl.luts.push_back(std::move(l));
  }
  nl.outputs = {prev};
  PackedNetlist p = pack_netlist(nl, sp);
  CHECK(p.clusters.size() == 1);
  CHECK(p.clusters[0].external_inputs == std::set<std::string>{"a"});
}

TEST_CASE("over-arity LUTs are reported as unmappable by name") {
  TileSpec sp;
  sp.k = 2;
  LogicNetlist nl = parse_blif(
      ".model big\n.inputs a b c\n.outputs y\n.names a b c y\n111 1\n.end\n");
  CHECK_THROWS_WITH_AS(pack_netlist(nl, sp), doctest::Contains("unmappable LUT 'y'"),
                       std::runtime_error);
}

TEST_CASE("packing is deterministic") {
  TileSpec sp;
  LogicNetlist nl = random_netlist(12, 80, 6, 77);
  PackedNetlist p1 = pack_netlist(nl, sp);
  PackedNetlist p2 = pack_netlist(nl, sp);
  REQUIRE(p1.clusters.size() == p2.clusters.size());
  for (size_t i = 0; i < p1.clusters.size(); ++i) {
    REQUIRE(p1.clusters[i].bles.size() == p2.clusters[i].bles.size());
    for (size_t j = 0; j < p1.clusters[i].bles.size(); ++j)
      CHECK(p1.clusters[i].bles[j].output == p2.clusters[i].bles[j].output);
  }
}

TEST_CASE("latches fuse into the BLE of their driving LUT") {
  LogicNetlist nl = parse_blif(
      ".model r\n.inputs a\n.outputs q\n.names a d\n1 1\n.latch d q re clk 0\n.end\n");
  std::vector<Ble> bles = form_bles(nl);
  REQUIRE(bles.size() == 1);
  CHECK(bles[0].lut == 0);
  CHECK(bles[0].latch == 0);
  CHECK(bles[0].output == "q");
}

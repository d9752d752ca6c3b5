#pragma once

// BLIF subset reader/writer: .model/.inputs/.outputs/.names/.latch/.end.

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace m3d {

struct LutNode {
  std::string output;
  std::vector<std::string> inputs;
  std::vector<std::string> cover;  // "<pattern> <value>" rows, input order as given
};

struct LatchNode {
  std::string input;   // D
  std::string output;  // Q
  std::string clock;   // may be empty
};

struct LogicNetlist {
  std::string model;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::vector<LutNode> luts;
  std::vector<LatchNode> latches;

  // Every signal that may drive a LUT input or primary output.
  std::set<std::string> driven_signals() const {
    std::set<std::string> s(inputs.begin(), inputs.end());
    for (const auto& l : luts) s.insert(l.output);
    for (const auto& l : latches) s.insert(l.output);
    return s;
  }
};

namespace detail {

inline std::vector<std::string> blif_tokens(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  std::string t;
  while (is >> t) out.push_back(t);
  return out;
}

}  // namespace detail

inline LogicNetlist parse_blif(const std::string& text) {
  LogicNetlist nl;
  std::istringstream is(text);
  std::string raw;
  int lineno = 0;
  bool in_model = false, ended = false;
  LutNode* open_lut = nullptr;
  auto fail = [&](const std::string& why) {
    throw std::runtime_error("blif line " + std::to_string(lineno) + ": " + why);
  };

  std::string pending;
  while (std::getline(is, raw)) {
    ++lineno;
    const size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.resize(hash);
    if (!raw.empty() && raw.back() == '\\') {  // continuation
      pending += raw.substr(0, raw.size() - 1) + " ";
      continue;
    }
    std::string line = pending + raw;
    pending.clear();
    std::vector<std::string> tok = detail::blif_tokens(line);
    if (tok.empty()) continue;

    if (tok[0][0] == '.') {
      open_lut = nullptr;
      if (tok[0] == ".model") {
        if (in_model || ended) fail("multiple .model blocks are not supported");
        if (tok.size() != 2) fail(".model needs exactly one name");
        nl.model = tok[1];
        in_model = true;
      } else if (tok[0] == ".end") {
        if (!in_model) fail(".end without .model");
        in_model = false;
        ended = true;
      } else if (!in_model) {
        fail("directive before .model");
      } else if (tok[0] == ".inputs") {
        nl.inputs.insert(nl.inputs.end(), tok.begin() + 1, tok.end());
      } else if (tok[0] == ".outputs") {
        nl.outputs.insert(nl.outputs.end(), tok.begin() + 1, tok.end());
      } else if (tok[0] == ".names") {
        if (tok.size() < 2) fail(".names needs at least an output");
        LutNode lut;
        lut.output = tok.back();
        lut.inputs.assign(tok.begin() + 1, tok.end() - 1);
        nl.luts.push_back(std::move(lut));
        open_lut = &nl.luts.back();
      } else if (tok[0] == ".latch") {
        if (tok.size() < 3) fail(".latch needs input and output");
        LatchNode l;
        l.input = tok[1];
        l.output = tok[2];
        if (tok.size() >= 5) l.clock = tok[4];  // .latch in out [type clock [init]]
        nl.latches.push_back(l);
      } else {
        fail("unsupported directive " + tok[0]);
      }
      continue;
    }
    // Cover row.
    if (!open_lut) fail("cover row outside a .names block");
    if (open_lut->inputs.empty()) {
      if (tok.size() != 1 || (tok[0] != "0" && tok[0] != "1"))
        fail("constant .names row must be a single 0/1");
      open_lut->cover.push_back(tok[0]);
    } else {
      if (tok.size() != 2) fail("cover row must be '<pattern> <value>'");
      if (tok[0].size() != open_lut->inputs.size()) fail("cover pattern width mismatch");
      for (char c : tok[0])
        if (c != '0' && c != '1' && c != '-') fail("cover pattern may only use 0/1/-");
      if (tok[1] != "0" && tok[1] != "1") fail("cover value must be 0 or 1");
      open_lut->cover.push_back(tok[0] + " " + tok[1]);
    }
  }
  if (in_model) throw std::runtime_error("blif: missing .end");
  if (!ended) throw std::runtime_error("blif: no .model block");

  // Single-driver and declaration checks.
  std::set<std::string> drivers(nl.inputs.begin(), nl.inputs.end());
  auto add_driver = [&](const std::string& sig) {
    if (!drivers.insert(sig).second)
      throw std::runtime_error("blif: signal '" + sig + "' has multiple drivers");
  };
  for (const auto& l : nl.luts) add_driver(l.output);
  for (const auto& l : nl.latches) add_driver(l.output);
  for (const auto& l : nl.luts)
    for (const auto& in : l.inputs)
      if (!drivers.count(in))
        throw std::runtime_error("blif: undeclared signal '" + in + "'");
  for (const auto& l : nl.latches)
    if (!drivers.count(l.input))
      throw std::runtime_error("blif: undeclared signal '" + l.input + "'");
  for (const auto& o : nl.outputs)
    if (!drivers.count(o))
      throw std::runtime_error("blif: undeclared signal '" + o + "'");

  // Combinational cycle check (latch outputs break cycles).
  std::map<std::string, const LutNode*> producer;
  for (const auto& l : nl.luts) producer[l.output] = &l;
  std::map<std::string, int> state;  // 0 new, 1 open, 2 done
  std::vector<const LutNode*> stack;
  std::function<void(const LutNode*)> visit = [&](const LutNode* l) {
    int& st = state[l->output];
    if (st == 2) return;
    if (st == 1) {
      std::string cyc;
      for (const auto* s : stack) cyc += s->output + " -> ";
      throw std::runtime_error("blif: combinational cycle: " + cyc + l->output);
    }
    st = 1;
    stack.push_back(l);
    for (const auto& in : l->inputs) {
      auto it = producer.find(in);
      if (it != producer.end()) visit(it->second);
    }
    stack.pop_back();
    st = 2;
  };
  for (const auto& l : nl.luts) visit(&l);
  return nl;
}

inline std::string emit_blif(const LogicNetlist& nl) {
  std::ostringstream os;
  os << ".model " << nl.model << "\n.inputs";
  for (const auto& s : nl.inputs) os << " " << s;
  os << "\n.outputs";
  for (const auto& s : nl.outputs) os << " " << s;
  os << "\n";
  for (const auto& l : nl.latches)
    os << ".latch " << l.input << " " << l.output << " re "
       << (l.clock.empty() ? "clk" : l.clock) << " 0\n";
  for (const auto& l : nl.luts) {
    os << ".names";
    for (const auto& in : l.inputs) os << " " << in;
    os << " " << l.output << "\n";
    for (const auto& row : l.cover) os << row << "\n";
  }
  os << ".end\n";
  return os.str();
}

}  // namespace m3d

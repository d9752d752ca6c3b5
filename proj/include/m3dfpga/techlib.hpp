#pragma once

// Technology library: device parameter records, wire/MIV parasitics and area
// rules, loaded from a line-oriented sectioned key=value text file.

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "m3dfpga/device.hpp"

namespace m3d {

struct MetalLayer {
  double r_per_um = 0.0;  // ohm/um
  double c_per_um = 0.0;  // F/um
};

struct MivParasitics {
  double r = 0.0;  // ohm
  double c = 0.0;  // F
};

struct AreaRules {
  double min_width_transistor_area = 0.0;  // um^2
  double width_area_slope = 0.5;           // um^2 fraction per w_min multiple
  double feol_whitespace = 1.4;            // inter-block whitespace factor
  double beol_congestion_w0 = 200.0;       // channel width where BEOL congestion sets in
  double ff_leakage_w = 0.0;               // fixed static power per flip-flop, W
};

struct TechnologyLibrary {
  double v_dd = 0.7;
  std::map<std::string, DeviceParams> devices;
  std::vector<MetalLayer> metal_layers;  // index 0 = M1
  MivParasitics miv;
  AreaRules area_rules;

  const DeviceParams& device(const std::string& name) const {
    auto it = devices.find(name);
    if (it == devices.end())
      throw std::runtime_error("technology library: no device named '" + name + "'");
    return it->second;
  }

  bool has_device(const std::string& name) const { return devices.count(name) > 0; }

  const MetalLayer& metal(int layer) const {
    if (layer < 1 || layer > static_cast<int>(metal_layers.size()))
      throw std::runtime_error("technology library: no metal layer " + std::to_string(layer));
    return metal_layers[static_cast<size_t>(layer - 1)];
  }

  void validate() const {
    bool has_n_feol = false, has_p_feol = false;
    for (const auto& [name, d] : devices) {
      d.validate();
      if (d.tier_class == TierClass::FEOL) {
        if (d.polarity == Polarity::N) has_n_feol = true;
        if (d.polarity == Polarity::P) has_p_feol = true;
      }
    }
    if (!has_n_feol || !has_p_feol)
      throw std::runtime_error("technology library: needs n-type and p-type FEOL devices");
    for (const auto& m : metal_layers)
      if (m.r_per_um < 0.0 || m.c_per_um < 0.0)
        throw std::runtime_error("technology library: negative metal parasitics");
    if (miv.r < 0.0 || miv.c < 0.0)
      throw std::runtime_error("technology library: negative MIV parasitics");
    if (area_rules.min_width_transistor_area <= 0.0)
      throw std::runtime_error("technology library: min_width_transistor_area must be > 0");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& v, int line_no) {
  try {
    size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw std::runtime_error("tech file line " + std::to_string(line_no) +
                             ": bad numeric value '" + v + "'");
  }
}

}  // namespace detail

inline TechnologyLibrary parse_technology_library(std::istream& in) {
  TechnologyLibrary lib;
  std::string section, arg;
  DeviceParams* cur_dev = nullptr;
  MetalLayer* cur_metal = nullptr;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::runtime_error("tech file line " + std::to_string(line_no) +
                                 ": malformed section header");
      std::istringstream hs(line.substr(1, line.size() - 2));
      hs >> section;
      arg.clear();
      hs >> arg;
      cur_dev = nullptr;
      cur_metal = nullptr;
      if (section == "device") {
        if (arg.empty())
          throw std::runtime_error("tech file line " + std::to_string(line_no) +
                                   ": [device] needs a name");
        cur_dev = &lib.devices[arg];
        cur_dev->name = arg;
      } else if (section == "metal") {
        const int idx = static_cast<int>(detail::parse_double(arg, line_no));
        if (idx != static_cast<int>(lib.metal_layers.size()) + 1)
          throw std::runtime_error("tech file line " + std::to_string(line_no) +
                                   ": metal layers must be declared in order from 1");
        lib.metal_layers.emplace_back();
        cur_metal = &lib.metal_layers.back();
      } else if (section != "supply" && section != "miv" && section != "area_rules") {
        throw std::runtime_error("tech file line " + std::to_string(line_no) +
                                 ": unknown section '" + section + "'");
      }
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("tech file line " + std::to_string(line_no) +
                               ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    auto num = [&] { return detail::parse_double(val, line_no); };

    if (section == "supply") {
      if (key == "v_dd") lib.v_dd = num();
      else throw std::runtime_error("tech file line " + std::to_string(line_no) +
                                    ": unknown supply key '" + key + "'");
    } else if (section == "device") {
      DeviceParams& d = *cur_dev;
      if (key == "polarity") {
        if (val == "n") d.polarity = Polarity::N;
        else if (val == "p") d.polarity = Polarity::P;
        else throw std::runtime_error("tech file line " + std::to_string(line_no) +
                                      ": polarity must be n or p");
      } else if (key == "tier_class") {
        if (val == "FEOL") d.tier_class = TierClass::FEOL;
        else if (val == "BEOL") d.tier_class = TierClass::BEOL;
        else throw std::runtime_error("tech file line " + std::to_string(line_no) +
                                      ": tier_class must be FEOL or BEOL");
      } else if (key == "vth") d.vth = num();
      else if (key == "alpha") d.alpha = num();
      else if (key == "i_on_ref") d.i_on_ref = num();
      else if (key == "v_ref") d.v_ref = num();
      else if (key == "ss") d.ss = num();
      else if (key == "i_off_ref") d.i_off_ref = num();
      else if (key == "c_gate") d.c_gate = num();
      else if (key == "c_parasitic") d.c_parasitic = num();
      else if (key == "w_min") d.w_min = num();
      else throw std::runtime_error("tech file line " + std::to_string(line_no) +
                                    ": unknown device key '" + key + "'");
    } else if (section == "metal") {
      if (key == "r_per_um") cur_metal->r_per_um = num();
      else if (key == "c_per_um") cur_metal->c_per_um = num();
      else throw std::runtime_error("tech file line " + std::to_string(line_no) +
                                    ": unknown metal key '" + key + "'");
    } else if (section == "miv") {
      if (key == "r") lib.miv.r = num();
      else if (key == "c") lib.miv.c = num();
      else throw std::runtime_error("tech file line " + std::to_string(line_no) +
                                    ": unknown miv key '" + key + "'");
    } else if (section == "area_rules") {
      if (key == "min_width_transistor_area") lib.area_rules.min_width_transistor_area = num();
      else if (key == "width_area_slope") lib.area_rules.width_area_slope = num();
      else if (key == "feol_whitespace") lib.area_rules.feol_whitespace = num();
      else if (key == "beol_congestion_w0") lib.area_rules.beol_congestion_w0 = num();
      else if (key == "ff_leakage_w") lib.area_rules.ff_leakage_w = num();
      else throw std::runtime_error("tech file line " + std::to_string(line_no) +
                                    ": unknown area_rules key '" + key + "'");
    } else {
      throw std::runtime_error("tech file line " + std::to_string(line_no) +
                               ": key outside any section");
    }
  }
  lib.validate();
  return lib;
}

inline TechnologyLibrary load_technology_library(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open technology library: " + path);
  return parse_technology_library(in);
}

}  // namespace m3d

#pragma once

// Six-transistor configuration SRAM bit-cell analysis: hold-state static
// power, voltage transfer curves, butterfly hold SNM, write timing and the
// two-tier BEOL cell footprint.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "m3dfpga/device.hpp"
#include "m3dfpga/techlib.hpp"

namespace m3d {

enum class SramLayout { FEOL_planar, BEOL_two_tier };

struct SramCellSpec {
  DeviceParams pu_dev, pd_dev, pg_dev;
  double w_pu = 0.0, w_pd = 0.0, w_pg = 0.0;  // um
  SramLayout layout_style = SramLayout::FEOL_planar;
  int miv_pairs = 0;

  void validate() const {
    if (w_pu < pu_dev.w_min || w_pd < pd_dev.w_min || w_pg < pg_dev.w_min)
      throw std::invalid_argument("sram cell: device width below w_min");
    if (layout_style == SramLayout::BEOL_two_tier &&
        (pu_dev.tier_class != TierClass::BEOL || pd_dev.tier_class != TierClass::BEOL ||
         pg_dev.tier_class != TierClass::BEOL))
      throw std::invalid_argument("sram cell: two-tier layout needs all-BEOL devices");
  }
};

struct VtcCurve {
  std::vector<std::pair<double, double>> samples;  // (v_in, v_out), v_in increasing
};

// Hold state: one bit stored, word line low, both bitlines precharged high.
// Three devices are off with the full rail across them: the pull-up on the
// low storage node, the pull-down on the high node, and the access device on
// the low node.  Symmetric in the stored bit for a symmetric cell.
inline double sram_static_power(const SramCellSpec& cell, double v_sram) {
  if (v_sram <= 0.0) throw std::invalid_argument("sram_static_power: v_sram must be > 0");
  cell.validate();
  return leakage_power(cell.pu_dev, cell.w_pu, v_sram) +
         leakage_power(cell.pd_dev, cell.w_pd, v_sram) +
         leakage_power(cell.pg_dev, cell.w_pg, v_sram);
}

inline VtcCurve inverter_vtc(const DeviceParams& pu_dev, double w_pu,
                             const DeviceParams& pd_dev, double w_pd, double v_dd,
                             int n_points) {
  if (n_points < 64) throw std::invalid_argument("inverter_vtc: n_points must be >= 64");
  VtcCurve curve;
  curve.samples.reserve(static_cast<size_t>(n_points));
  for (int i = 0; i < n_points; ++i) {
    const double v_in = v_dd * i / (n_points - 1);
    auto residual = [&](double v_out) {
      return drain_current(pu_dev, v_dd - v_in, v_dd - v_out, w_pu) -
             drain_current(pd_dev, v_in, v_out, w_pd);
    };
    double lo = 0.0, hi = v_dd;
    if (residual(lo) < 0.0 || residual(hi) > 0.0)
      throw std::runtime_error("inverter_vtc: no current crossing at v_in = " +
                               std::to_string(v_in));
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      (residual(mid) >= 0.0 ? lo : hi) = mid;
    }
    curve.samples.emplace_back(v_in, 0.5 * (lo + hi));
  }
  return curve;
}

namespace detail {

// Piecewise-linear evaluation of a monotone-decreasing VTC.
inline double vtc_at(const VtcCurve& c, double x) {
  const auto& s = c.samples;
  if (x <= s.front().first) return s.front().second;
  if (x >= s.back().first) return s.back().second;
  auto it = std::lower_bound(s.begin(), s.end(), x,
                             [](const auto& p, double v) { return p.first < v; });
  const auto [x1, y1] = *it;
  const auto [x0, y0] = *(it - 1);
  return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
}

// Inverse of a monotone-decreasing VTC evaluated at y.
inline double vtc_inv_at(const VtcCurve& c, double y) {
  const auto& s = c.samples;
  if (y >= s.front().second) return s.front().first;
  if (y <= s.back().second) return s.back().first;
  auto it = std::lower_bound(s.begin(), s.end(), y, [](const auto& p, double v) {
    return p.second > v;  // v_out decreasing in v_in
  });
  const auto [x1, y1] = *it;
  const auto [x0, y0] = *(it - 1);
  if (y1 == y0) return x0;
  return x0 + (x1 - x0) * (y - y0) / (y1 - y0);
}

// Side of the largest square fitting between upper(x) and lower(x) (both
// monotone decreasing) with lower-left corner on the lower curve, over
// x in [x_lo, x_hi].
template <typename F, typename G>
double largest_square(F&& upper, G&& lower, double x_lo, double x_hi, double span) {
  if (x_hi <= x_lo) return 0.0;
  const int n = 2001;
  double best = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = x_lo + (x_hi - x_lo) * i / (n - 1);
    const double y0 = lower(x);
    auto fits = [&](double s) { return upper(x + s) - y0 - s >= 0.0; };
    if (!fits(0.0)) continue;
    double lo = 0.0, hi = span;
    if (fits(hi)) { best = std::max(best, hi); continue; }
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (fits(mid) ? lo : hi) = mid;
    }
    best = std::max(best, lo);
  }
  return best;
}

}  // namespace detail

// Hold SNM: side length of the largest square inscribed in each butterfly
// lobe (access devices off), min over the two lobes.
inline double hold_snm(const SramCellSpec& cell, double v_sram) {
  cell.validate();
  const int n = 1025;
  const VtcCurve a = inverter_vtc(cell.pu_dev, cell.w_pu, cell.pd_dev, cell.w_pd, v_sram, n);
  const VtcCurve b = inverter_vtc(cell.pu_dev, cell.w_pu, cell.pd_dev, cell.w_pd, v_sram, n);
  auto fa = [&](double x) { return detail::vtc_at(a, x); };
  auto fb_inv = [&](double x) { return detail::vtc_inv_at(b, x); };
  // Metastable point: with matched inverters the curves cross where
  // fa(x) == x, which splits the two lobes.  fa is monotone decreasing, so
  // fa(x) - x has a unique root.
  double lo = 0.0, hi = v_sram;
  if (fa(lo) < lo || fa(hi) > hi)
    throw std::runtime_error("hold_snm: degenerate butterfly");
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (fa(mid) - mid >= 0.0 ? lo : hi) = mid;
  }
  const double x_meta = 0.5 * (lo + hi);
  const double lobe1 = detail::largest_square(fa, fb_inv, 0.0, x_meta, v_sram);
  // Lower-right lobe: boundaries swap roles.
  const double lobe2 = detail::largest_square(fb_inv, fa, x_meta, v_sram, v_sram);
  if (lobe1 <= 0.0 || lobe2 <= 0.0)
    throw std::runtime_error("hold_snm: butterfly lobe collapsed");
  return std::min(lobe1, lobe2);
}

// Switching threshold of the cell inverter (solution of f(x) = x).
inline double inverter_switching_threshold(const SramCellSpec& cell, double v_dd) {
  const VtcCurve c = inverter_vtc(cell.pu_dev, cell.w_pu, cell.pd_dev, cell.w_pd, v_dd, 513);
  double lo = 0.0, hi = v_dd;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (detail::vtc_at(c, mid) - mid >= 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Regenerative-assist factor applied to the single-pole RC write estimate.
inline constexpr double kWriteFeedbackFactor = 1.5;

// Single-pole RC estimate of the time for the storage node, charged through
// the access device, to cross the opposing inverter threshold.
inline double write_delay(const SramCellSpec& cell, double v_wl, double v_bl) {
  if (v_wl > 1.5 || v_bl > 1.5)
    throw std::invalid_argument("write_delay: pulse above 1.5 V model validity limit");
  cell.validate();
  const double v_cross = inverter_switching_threshold(cell, std::max(v_bl, v_wl));
  const double v_reach = pass_high_level(cell.pg_dev, v_wl, v_bl);
  if (v_reach <= v_cross)
    throw std::runtime_error("write_delay: unwritable, access device limits the node to " +
                             std::to_string(v_reach) + " V below the " +
                             std::to_string(v_cross) + " V threshold");
  const double r = effective_resistance(cell.pg_dev, v_wl, cell.w_pg);
  const double c_node = device_caps(cell.pg_dev, cell.w_pg).c_parasitic +
                        device_caps(cell.pu_dev, cell.w_pu).c_parasitic +
                        device_caps(cell.pd_dev, cell.w_pd).c_parasitic +
                        device_caps(cell.pu_dev, cell.w_pu).c_gate +
                        device_caps(cell.pd_dev, cell.w_pd).c_gate;
  return kWriteFeedbackFactor * r * c_node * std::log(v_bl / (v_bl - v_cross));
}

struct BitcellArea {
  std::vector<double> per_tier;  // um^2
  double footprint = 0.0;        // um^2
};

inline constexpr double kMivKeepoutFraction = 0.5;  // of one min-width transistor area

inline double transistor_area(const DeviceParams& dev, double width, const AreaRules& rules) {
  if (width < dev.w_min) throw std::invalid_argument(dev.name + ": width below w_min");
  return rules.min_width_transistor_area *
         (1.0 + rules.width_area_slope * (width / dev.w_min - 1.0));
}

inline BitcellArea bitcell_area(const SramCellSpec& cell, const AreaRules& rules) {
  cell.validate();
  const double a_pu = transistor_area(cell.pu_dev, cell.w_pu, rules);
  const double a_pd = transistor_area(cell.pd_dev, cell.w_pd, rules);
  const double a_pg = transistor_area(cell.pg_dev, cell.w_pg, rules);
  BitcellArea out;
  if (cell.layout_style == SramLayout::FEOL_planar) {
    out.per_tier = {2.0 * a_pu + 2.0 * a_pd + 2.0 * a_pg};
  } else {
    const double keepout =
        kMivKeepoutFraction * rules.min_width_transistor_area * cell.miv_pairs;
    out.per_tier = {2.0 * a_pd + 2.0 * a_pg + keepout,  // NMOS tier
                    2.0 * a_pu + keepout};              // PMOS tier
  }
  out.footprint = *std::max_element(out.per_tier.begin(), out.per_tier.end());
  return out;
}

// Shipped cell definitions.
inline SramCellSpec aos_sram_cell(const TechnologyLibrary& lib) {
  SramCellSpec c;
  c.pu_dev = lib.device("aos_sno_p");
  c.pd_dev = lib.device("aos_iwo_n");
  c.pg_dev = lib.device("aos_iwo_n");
  c.w_pu = 4.0 * c.pu_dev.w_min;  // 4:2:1 PU:PD:PG, minimum-width access device
  c.w_pd = 2.0 * c.pd_dev.w_min;
  c.w_pg = c.pg_dev.w_min;
  c.layout_style = SramLayout::BEOL_two_tier;
  c.miv_pairs = 5;  // two pairs for inverter/feedback plus the storage-node via
  return c;
}

inline SramCellSpec si_sram_cell(const TechnologyLibrary& lib) {
  SramCellSpec c;
  c.pu_dev = lib.device("si_p");
  c.pd_dev = lib.device("si_n");
  c.pg_dev = lib.device("si_n");
  c.w_pu = c.pu_dev.w_min;  // minimum-sized 1:1:1 fin counts
  c.w_pd = c.pd_dev.w_min;
  c.w_pg = c.pg_dev.w_min;
  c.layout_style = SramLayout::FEOL_planar;
  return c;
}

inline SramCellSpec sram_cell_by_name(const TechnologyLibrary& lib, const std::string& name) {
  if (name == "aos") return aos_sram_cell(lib);
  if (name == "si") return si_sram_cell(lib);
  throw std::runtime_error("unknown SRAM cell '" + name + "' (expected aos or si)");
}

}  // namespace m3d

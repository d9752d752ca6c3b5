#pragma once

// Analytic transistor model: alpha-power-law saturation blended with an
// exponential subthreshold region.  All voltages are conduction-direction
// magnitudes (|Vgs|, |Vds|); widths in micrometers; currents in amperes.

#include <cmath>
#include <stdexcept>
#include <string>

namespace m3d {

enum class Polarity { N, P };
enum class TierClass { FEOL, BEOL };

struct DeviceParams {
  std::string name;
  Polarity polarity = Polarity::N;
  double vth = 0.0;          // V, signed; p-type conduction threshold is -vth
  double alpha = 2.0;        // velocity-saturation exponent, in [1, 2]
  double i_on_ref = 0.0;     // A/um at vgs = vds = v_ref
  double v_ref = 0.7;        // V
  double ss = 80.0;          // subthreshold swing, mV/decade
  double i_off_ref = 0.0;    // A/um at vgs = 0, vds = v_ref
  double c_gate = 0.0;       // F/um of width
  double c_parasitic = 0.0;  // F/um of width, source/drain + overlap
  double w_min = 0.05;       // um
  TierClass tier_class = TierClass::FEOL;

  // Threshold seen by the conduction-magnitude model.
  double vth_cond() const { return polarity == Polarity::N ? vth : -vth; }

  void validate() const {
    if (i_on_ref <= 0.0) throw std::invalid_argument(name + ": i_on_ref must be > 0");
    if (i_off_ref < 0.0) throw std::invalid_argument(name + ": i_off_ref must be >= 0");
    if (tier_class == TierClass::FEOL && ss < 60.0)
      throw std::invalid_argument(name + ": FEOL subthreshold swing below 60 mV/dec");
    if (ss <= 0.0) throw std::invalid_argument(name + ": ss must be > 0");
    if (w_min <= 0.0) throw std::invalid_argument(name + ": w_min must be > 0");
    if (alpha < 1.0 || alpha > 2.0)
      throw std::invalid_argument(name + ": alpha outside [1, 2]");
    if (v_ref <= vth_cond())
      throw std::invalid_argument(name + ": v_ref must exceed the conduction threshold");
  }
};

namespace model {

// DIBL-like barrier lowering applied to the subthreshold exponent only.
inline constexpr double kDibl = 0.15;          // V/V
// Linear-region turn-on scale for the subthreshold vds factor.
inline constexpr double kSubLinV = 0.05;       // V
// Switching-resistance constant: average of start/end switching current.
inline constexpr double kResistanceFactor = 2.0;

// Soft clamp of the subthreshold exponent (in decades) at 0; exact ss slope
// asymptotically below threshold, saturates above it.
inline double soft_decades(double d) {
  if (d > 30.0) return 0.0;
  if (d < -30.0) return d;
  return -std::log10(1.0 + std::pow(10.0, -d));
}

inline double sub_vds_factor(double vds) { return 1.0 - std::exp(-vds / kSubLinV); }

// Subthreshold component at unit width, normalized so that the total current
// at (vgs=0, vds=v_ref) equals i_off_ref when vth_cond >= 0.
inline double weak_current(const DeviceParams& d, double vgs, double vds) {
  if (d.i_off_ref <= 0.0) return 0.0;
  const double ss_v = d.ss * 1e-3;  // V/decade
  const double dec = (vgs - d.vth_cond() + kDibl * (vds - d.v_ref)) / ss_v;
  const double dec0 = (-d.vth_cond()) / ss_v;
  const double norm = std::pow(10.0, soft_decades(dec0)) * sub_vds_factor(d.v_ref);
  return d.i_off_ref / norm * std::pow(10.0, soft_decades(dec)) * sub_vds_factor(vds);
}

inline double strong_current(const DeviceParams& d, double vgs, double vds) {
  const double vov = vgs - d.vth_cond();
  if (vov <= 0.0) return 0.0;
  const double vov_ref = d.v_ref - d.vth_cond();
  const double v_knee = std::max(0.06, 0.2 * vov_ref);
  const double f = std::tanh(vds / v_knee) / std::tanh(d.v_ref / v_knee);
  return d.i_on_ref * std::pow(vov / vov_ref, d.alpha) * f;
}

}  // namespace model

inline double drain_current(const DeviceParams& dev, double vgs, double vds, double width) {
  if (width < 0.0) throw std::domain_error(dev.name + ": negative device width");
  if (width == 0.0 || vds <= 0.0) return 0.0;
  return width * (model::strong_current(dev, vgs, vds) + model::weak_current(dev, vgs, vds));
}

inline double effective_resistance(const DeviceParams& dev, double v_sw, double width) {
  if (width <= 0.0) throw std::domain_error(dev.name + ": width must be > 0");
  if (v_sw <= 0.0) throw std::domain_error(dev.name + ": v_sw must be > 0");
  const double i = drain_current(dev, v_sw, v_sw, width);
  if (i <= 0.0)
    throw std::runtime_error(dev.name + ": zero on-current, infinite resistance");
  return v_sw / (model::kResistanceFactor * i);
}

struct DeviceCaps {
  double c_gate = 0.0;       // F
  double c_parasitic = 0.0;  // F
};

inline DeviceCaps device_caps(const DeviceParams& dev, double width) {
  if (width < 0.0) throw std::domain_error(dev.name + ": negative device width");
  return {dev.c_gate * width, dev.c_parasitic * width};
}

inline double leakage_power(const DeviceParams& dev, double width, double v_dd) {
  if (width < 0.0) throw std::domain_error(dev.name + ": negative device width");
  if (v_dd < 0.0) throw std::domain_error(dev.name + ": negative v_dd");
  return v_dd * drain_current(dev, 0.0, v_dd, width);
}

// High level reachable through an n pass device: min(v_dd, v_gate - vth).
inline double pass_high_level(const DeviceParams& pass_dev, double v_gate, double v_dd) {
  return std::min(v_dd, v_gate - pass_dev.vth_cond());
}

}  // namespace m3d

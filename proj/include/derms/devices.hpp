#pragma once

#include <string>
#include <utility>

namespace derms {

/// Curtailable PV: quadratic curtailment cost, box-and-disk feasible set.
/// Cost weights follow the 0.2/INV and 0.002/INV rule with the rating taken
/// in kilowatts, so the P-gradient is the scale-free 0.4*(P-Pav)/INV.
struct PvParams {
  double inv_w = 0.0;  // inverter rating, watts

  static PvParams rated(double inv_w);

  double cost_p_per_kw2() const { return 0.2 / (inv_w / 1e3); }
  double cost_q_per_kvar2() const { return 0.002 / (inv_w / 1e3); }
};

/// Battery: quadratic penalty on the post-decision SOC deviation from a
/// preferred level; active power only.
struct BatteryParams {
  double cap_wh = 0.0;
  double soc_pref_pct = 60.0;
  double cost_weight = 0.01;      // per squared SOC fraction
  double p_charge_max_w = 0.0;    // magnitude of the largest charging draw
  double p_discharge_max_w = 0.0;
  double soc_min_pct = 10.0;
  double soc_max_pct = 90.0;
  double dt_h = 0.0;  // hours between control decisions
};

struct DeviceState {
  double p_w = 0.0;
  double q_var = 0.0;
  double soc_pct = 0.0;  // batteries only
};

// PV operations. p_av_w is the available generation at the current time.

/// Gradient of the curtailment cost, per kW of (P, Q).
std::pair<double, double> pv_cost_gradient(const PvParams& pv, double p_w, double q_var,
                                           double p_av_w);

/// Euclidean projection onto {0 <= P <= Pav} ∩ {P^2+Q^2 <= INV^2}, exact.
/// Throws std::invalid_argument for p_av_w < 0.
std::pair<double, double> project_pv(double p_w, double q_var, const PvParams& pv,
                                     double p_av_w);

// Battery operations.

/// Gradient of the SOC-deviation cost w.r.t. P (per kW); dF/dQ is always 0.
std::pair<double, double> battery_cost_gradient(const BatteryParams& bat, double p_w,
                                                double soc_pct);

/// Feasible active-power window at the current SOC: discharge is capped by
/// the rate limit and by the energy above the SOC floor over one dt, and
/// symmetrically for charging.
std::pair<double, double> battery_power_limits(const BatteryParams& bat, double soc_pct);

double project_battery(double p_w, const BatteryParams& bat, double soc_pct);

/// SOC after implementing P for one dt (positive P discharges).
double step_soc(double soc_pct, const BatteryParams& bat, double p_implemented_w);

/// A controllable DER: either a PV inverter or a battery, attached to a bus.
struct DerDevice {
  enum class Kind { pv, battery };

  std::string id;
  int bus = -1;
  Kind kind = Kind::pv;
  PvParams pv;
  BatteryParams battery;

  bool has_q() const { return kind == Kind::pv; }
};

}  // namespace derms

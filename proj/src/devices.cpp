#include "derms/devices.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace derms {

PvParams PvParams::rated(double inv_w) {
  if (!(inv_w > 0.0)) throw std::invalid_argument("pv: inverter rating must be positive");
  PvParams p;
  p.inv_w = inv_w;
  return p;
}

std::pair<double, double> pv_cost_gradient(const PvParams& pv, double p_w, double q_var,
                                           double p_av_w) {
  const double p_kw = p_w / 1e3, q_kvar = q_var / 1e3, av_kw = p_av_w / 1e3;
  return {2.0 * pv.cost_p_per_kw2() * (p_kw - av_kw), 2.0 * pv.cost_q_per_kvar2() * q_kvar};
}

std::pair<double, double> project_pv(double p_w, double q_var, const PvParams& pv,
                                     double p_av_w) {
  if (p_av_w < 0.0) throw std::invalid_argument("project_pv: negative available power");
  const double inv = pv.inv_w;
  const double p_cap = std::min(p_av_w, inv);  // box upper corner cannot exceed the disk
  const double tol = 1e-12 * std::max(inv, 1.0);

  auto in_disk = [&](double p, double q) { return p * p + q * q <= inv * inv + tol; };

  // Box projection; if it lands in the disk it is the answer.
  const double pb = std::clamp(p_w, 0.0, p_av_w);
  if (in_disk(pb, q_var)) return {pb, q_var};

  // Disk projection; if it lands in the box it is the answer.
  const double norm = std::hypot(p_w, q_var);
  if (norm > 0.0) {
    const double pd = p_w * inv / norm, qd = q_var * inv / norm;
    if (pd >= -tol && pd <= p_av_w + tol) return {std::clamp(pd, 0.0, p_av_w), qd};
  }

  // Otherwise the projection sits on a corner of the intersection.
  const double qs = (q_var >= 0.0) ? 1.0 : -1.0;
  double best_p = 0.0, best_q = qs * inv;
  double best_d = std::hypot(p_w - best_p, q_var - best_q);
  if (p_cap <= inv) {
    const double qc = qs * std::sqrt(std::max(0.0, inv * inv - p_cap * p_cap));
    const double d = std::hypot(p_w - p_cap, q_var - qc);
    if (d < best_d) {
      best_p = p_cap;
      best_q = qc;
      best_d = d;
    }
  }
  return {best_p, best_q};
}

std::pair<double, double> battery_cost_gradient(const BatteryParams& bat, double p_w,
                                                double soc_pct) {
  const double dev = soc_pct / 100.0 - (p_w * bat.dt_h) / bat.cap_wh - bat.soc_pref_pct / 100.0;
  // d(dev)/dP_kW = -dt/CAP_kWh; CAP in kWh keeps the gradient in per-kW units.
  const double ddev_dp_kw = -bat.dt_h / (bat.cap_wh / 1e3);
  return {2.0 * bat.cost_weight * dev * ddev_dp_kw, 0.0};
}

std::pair<double, double> battery_power_limits(const BatteryParams& bat, double soc_pct) {
  const double energy_above_floor_wh = (soc_pct - bat.soc_min_pct) / 100.0 * bat.cap_wh;
  const double energy_below_ceil_wh = (bat.soc_max_pct - soc_pct) / 100.0 * bat.cap_wh;
  const double p_max = std::min(bat.p_discharge_max_w,
                                std::max(0.0, energy_above_floor_wh) / bat.dt_h);
  const double p_min = -std::min(bat.p_charge_max_w,
                                 std::max(0.0, energy_below_ceil_wh) / bat.dt_h);
  return {p_min, p_max};
}

double project_battery(double p_w, const BatteryParams& bat, double soc_pct) {
  auto [lo, hi] = battery_power_limits(bat, soc_pct);
  return std::clamp(p_w, lo, hi);
}

double step_soc(double soc_pct, const BatteryParams& bat, double p_implemented_w) {
  const double next = soc_pct - 100.0 * p_implemented_w * bat.dt_h / bat.cap_wh;
  return std::clamp(next, bat.soc_min_pct, bat.soc_max_pct);
}

}  // namespace derms

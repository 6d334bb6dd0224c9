#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "derms/control.hpp"
#include "derms/devices.hpp"
#include "derms/network.hpp"
#include "derms/services.hpp"

namespace derms {

/// Piecewise-constant time series starting at t=0; holds its last value past
/// the end. Synthetic profiles and CSV-ingested profiles both land here.
struct Profile {
  double granularity_s = 0.0;
  std::vector<double> values;

  static Profile constant(double value);
  double at(double t_s) const;
};

struct TapEvent {
  double t_s = 0.0;
  double tap_ratio = 1.0;
};

struct ScenarioDevice {
  DerDevice device;
  Profile availability_w;  // PV available power; unused for batteries
  double initial_soc_pct = 60.0;
  double gamma_down = 0.95;
};

enum class RunMode { adaptive, manual };

struct Scenario {
  std::string id;
  std::string description;
  double horizon_s = 0.0;
  double tick_s = 2.0;
  NetworkModel network;
  std::vector<TapEvent> tap_events;  // time-ordered; right-continuous effect
  std::vector<ScenarioDevice> devices;
  std::vector<GridService> services;
  std::map<int, Profile> load_p_w;  // per-bus load overrides; others use network loads
  std::map<int, Profile> load_q_var;
  AlgorithmParams params;
  double alpha_init = 0.0;
  RunMode mode = RunMode::adaptive;
  std::uint64_t seed = 0;
  bool rebuild_sensitivities_on_tap = false;

  void validate() const;
};

/// Time-indexed record of one run: one row per tick, t = 0..horizon
/// inclusive. Measurements are the values the coordinator saw at the tick;
/// duals, step sizes, and injections are the post-update values.
struct Trajectory {
  std::vector<std::string> device_ids;
  std::vector<std::string> service_ids;
  std::vector<std::string> measurement_ids;  // concatenated in service order
  std::vector<int> measurement_service;      // owning service per column
  std::vector<MeasurementKind> measurement_kinds;
  double tick_s = 0.0;

  std::vector<double> t_s;
  std::vector<double> tap;
  Eigen::MatrixXd g, g_lower, g_upper;   // ticks x measurements, p.u.
  Eigen::MatrixXd d_lower, d_upper;      // ticks x measurements
  Eigen::MatrixXd beta, s_cos_dual;      // ticks x services
  Eigen::MatrixXd p_w, q_var;            // ticks x devices, SI
  Eigen::MatrixXd alpha, s_cos_primal;   // ticks x devices
  Eigen::MatrixXd soc_pct, p_av_w;       // ticks x devices
  Eigen::MatrixXd hp, hq;                // ticks x (devices*services), col i*K+k

  bool completed = false;
  std::string diagnostic;

  Eigen::Index ticks() const { return g.rows(); }
  /// [first, last) measurement-column range of service k.
  std::pair<int, int> service_columns(int k) const;
  /// Measurement/bound blocks of one service, for violation_metrics.
  Eigen::MatrixXd service_block(const Eigen::MatrixXd& m, int k) const;
};

/// Advance the plant and run one coordinator + local-controller round per
/// tick, applying scheduled tap events, until the horizon. Deterministic for
/// a fixed scenario. A plant divergence aborts with a partial trajectory and
/// a diagnostic.
Trajectory run(const Scenario& scenario);

// --- Built-in desk-scale catalog ------------------------------------------

/// The 12-bus radial fixture used by the built-in scenarios and the test
/// suites: two feeder branches, lossy enough that full PV swings the deep
/// bus voltages by a few hundredths p.u.
NetworkModel desk12_network();

/// The fleet on the fixture: six PV inverters, three of the sites also
/// hosting a battery.
std::vector<ScenarioDevice> desk12_devices(double tick_s);

std::vector<std::string> builtin_scenario_names();

/// Construct a built-in scenario. The seed feeds the synthetic load/PV
/// profiles; `manual` freezes every step size at the calibrated manually
/// tuned value instead of the adaptive defaults.
Scenario builtin_scenario(const std::string& name, RunMode mode, std::uint64_t seed);

/// The single step size used by the manual baseline, found with the doubling
/// procedure on the selftune scenario (see README).
double manual_step_size();

// Synthetic profile builders (seeded, deterministic).
Profile synthetic_load_profile(double base_w, double horizon_s, std::uint64_t seed);
Profile smooth_pv_profile(double peak_w, double horizon_s, std::uint64_t seed);
Profile volatile_pv_profile(double peak_w, double horizon_s, double calm_until_s,
                            std::uint64_t seed);

}  // namespace derms

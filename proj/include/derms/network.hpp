#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace derms {

/// Uncontrollable load drawn from the network at a bus (SI units).
struct BusLoad {
  double p_w = 0.0;
  double q_var = 0.0;
};

/// Series line between two buses (SI ohms). Lines must form a tree rooted
/// at bus 0, the feeder head.
struct Line {
  int from = -1;
  int to = -1;
  double r_ohm = 0.0;
  double x_ohm = 0.0;
};

/// Single-phase-equivalent radial feeder.
///
/// Sign convention used throughout the project: DER injections are positive
/// into the network; feeder-head power is positive into the feeder (import).
struct NetworkModel {
  std::vector<std::string> bus_names;  // index == bus id; bus 0 is the head
  std::vector<BusLoad> loads;          // per bus, SI
  std::vector<Line> lines;
  double source_voltage_v = 0.0;  // slack magnitude before the tap
  double tap_ratio = 1.0;         // LTC multiplier on the source voltage
  double base_power_w = 0.0;
  double base_voltage_v = 0.0;

  int bus_count() const { return static_cast<int>(bus_names.size()); }
  double z_base_ohm() const { return base_voltage_v * base_voltage_v / base_power_w; }
  double slack_voltage_pu() const { return tap_ratio * source_voltage_v / base_voltage_v; }

  /// Throws std::invalid_argument if the line graph is not a tree rooted at
  /// bus 0, or if impedances/base quantities/tap are out of range.
  void validate() const;
};

struct PowerFlowSolution {
  std::vector<std::complex<double>> v_pu;  // per bus
  double head_p_pu = 0.0;  // active power into the feeder at the head
  double head_q_pu = 0.0;
  bool converged = false;
  double residual = 0.0;  // max |dV| of the last sweep, p.u.
  int iterations = 0;
  std::string diagnostic;  // set when converged == false

  double total_loss_p_pu = 0.0;
};

struct PowerFlowOptions {
  double tolerance_pu = 1e-8;
  int max_iterations = 100;
};

/// What a grid-service measurement reads from a solved power flow.
enum class MeasurementKind {
  voltage_mag,           // |V| at `bus`, p.u.
  head_active_power,     // total active power into the feeder head, p.u.
  subtree_active_power,  // active power from the head into the subtree rooted
                         // at `bus` (a child of bus 0), p.u.
};

struct MeasurementSpec {
  std::string id;
  MeasurementKind kind = MeasurementKind::voltage_mag;
  int bus = -1;  // unused for head_active_power
};

/// Backward/forward sweep over the radial tree. `der_injections_pu` holds the
/// controllable injection at each bus (positive into the network, p.u.);
/// loads come from the model. Divergence is reported via converged=false and
/// a diagnostic, never silently.
PowerFlowSolution solve_power_flow(const NetworkModel& net,
                                   std::span<const std::complex<double>> der_injections_pu,
                                   const PowerFlowOptions& opts = {});

/// Evaluate measurements on a converged solution. Throws if the solution did
/// not converge or a spec references an unknown bus.
std::vector<double> measure(const NetworkModel& net, const PowerFlowSolution& sol,
                            std::span<const MeasurementSpec> specs);

/// First-order model of the measurements as a function of DER injections,
/// built once and handed to the coordinator as its approximate gradients.
struct SensitivityModel {
  std::vector<MeasurementSpec> specs;  // rows
  std::vector<int> der_buses;          // columns
  Eigen::MatrixXd dg_dp;               // d(measurement)/d(P at der bus), p.u./p.u.
  Eigen::MatrixXd dg_dq;
  std::vector<std::complex<double>> linearization_point_pu;  // injections used

  /// Rows of dg_dp/dg_dq for a subset of measurement ids, in the given order.
  std::pair<Eigen::MatrixXd, Eigen::MatrixXd> rows_for(std::span<const std::string> ids) const;
};

/// Linearizes the power-flow equations about the operating point with nominal
/// loads and zero DER injection: assembles the nodal admittance matrix,
/// factors the rectangular-coordinate Jacobian there, and back-solves one
/// column per DER bus. Throws on a degenerate (singular) linearization.
SensitivityModel build_sensitivities(const NetworkModel& net,
                                     std::span<const MeasurementSpec> specs,
                                     std::span<const int> der_buses);

}  // namespace derms

#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "derms/network.hpp"

namespace derms {

/// Piecewise-constant, right-continuous bound schedule for one measurement.
/// Entries are time-ordered; entry i applies on [t_i, t_{i+1}).
struct BoundSchedule {
  struct Entry {
    double t_s = 0.0;
    double lower = 0.0;
    double upper = 0.0;
  };
  std::vector<Entry> entries;

  void validate(double horizon_s) const;
  std::pair<double, double> at(double t_s, double horizon_s) const;
};

enum class ServiceKind { voltage, vpp };

/// A grid service: a set of measurements with time-varying bounds the
/// coordinator must keep them between, plus the dual-side tuning knobs.
struct GridService {
  std::string id;
  ServiceKind kind = ServiceKind::voltage;
  std::vector<MeasurementSpec> measurements;
  std::vector<BoundSchedule> bounds;  // one per measurement, internal p.u.
  double beta_init = 0.0;
  double gamma_down = 0.0;  // decrease factor, (0,1); encodes priority

  void validate(double horizon_s) const;
  std::pair<Eigen::VectorXd, Eigen::VectorXd> bounds_at(double t_s, double horizon_s) const;
};

/// Dual variables for one service: current values plus the previous step,
/// kept for the direction-similarity computation.
struct DualState {
  Eigen::VectorXd lower, upper;
  Eigen::VectorXd prev_lower, prev_upper;
  int ticks = 0;  // committed updates so far

  explicit DualState(int n_measurements = 0)
      : lower(Eigen::VectorXd::Zero(n_measurements)),
        upper(Eigen::VectorXd::Zero(n_measurements)),
        prev_lower(Eigen::VectorXd::Zero(n_measurements)),
        prev_upper(Eigen::VectorXd::Zero(n_measurements)) {}
};

struct ViolationMetrics {
  double max_violation = 0.0;
  double integral_violation = 0.0;  // measurement-unit * seconds
  long oscillation_count = 0;       // bound crossings
};

/// Exceedance statistics of a measured time series against its bounds.
/// Rows are ticks (spaced tick_s apart), columns are the service's
/// measurements. A discrete jump from below the lower bound to above the
/// upper counts as two crossings.
ViolationMetrics violation_metrics(const Eigen::MatrixXd& g, const Eigen::MatrixXd& lower,
                                   const Eigen::MatrixXd& upper, double tick_s);

}  // namespace derms

#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "derms/devices.hpp"
#include "derms/services.hpp"

namespace derms {

/// Tuning parameters shared by the coordinator and every local controller.
struct AlgorithmParams {
  double nu = 1e-3;   // primal regularization
  double eps = 1e-4;  // dual regularization
  double s_lower = 0.0;
  double s_upper = 0.9;
  double gamma_up = 1.005;
  // Safety clamp on each step size relative to its initial value. Keeps the
  // positivity invariant under floating point; wide enough to never matter
  // in a healthy run.
  double clamp_lo_factor = 1e-6;
  double clamp_hi_factor = 1e6;
  bool manual_mode = false;  // freeze every step size at its initial value

  void validate() const;
};

/// Normalized inner product of two equal-length vectors, in [-1, 1].
/// Defined as 0 when either norm is below 1e-12, which makes a quiescent
/// system a fixed point of the tuner. Throws on a length mismatch.
double cosine_similarity(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2);

/// One application of the multiplicative step-size rule: grow above the
/// upper threshold, shrink below the lower one, hold in the dead band
/// (boundaries included in the dead band).
double adapt_step_size(double s_old, double s_cos, const AlgorithmParams& params,
                       double gamma_down);

/// Projected dual ascent step for one service, at a given step size: the
/// lower dual drifts up while the measurement sits under its lower bound,
/// the upper dual while it sits above its upper bound.
struct DualPair {
  Eigen::VectorXd lower, upper;
};
DualPair estimate_dual_update(const Eigen::VectorXd& d_lower, const Eigen::VectorXd& d_upper,
                              const Eigen::VectorXd& g, const Eigen::VectorXd& g_lower,
                              const Eigen::VectorXd& g_upper, double beta, double eps);

/// Coordinator-side state for one grid service.
struct CoordinatorState {
  DualState duals;
  double beta = 0.0;
  double beta_init = 0.0;
  double last_s_cos = 0.0;

  CoordinatorState() = default;
  CoordinatorState(int n_measurements, double beta0)
      : duals(n_measurements), beta(beta0), beta_init(beta0) {}
};

/// Per-DER direction signals for one service.
struct DirectionSignals {
  Eigen::VectorXd hp, hq;  // one entry per DER
};

/// Rows of the linear measurement model for one service: d(G_j)/d(P_i) and
/// d(G_j)/d(Q_i), measurements x DERs.
struct SensitivityRows {
  Eigen::MatrixXd dp, dq;
};

/// One coordinator tick for one service: estimate the dual move at the old
/// step size, score its direction against the previous move, retune beta,
/// commit the dual update at the new beta, and emit the per-DER signals.
/// The update is atomic: validation happens before any state changes.
DirectionSignals coordinator_step(CoordinatorState& cs, const Eigen::VectorXd& g,
                                  const Eigen::VectorXd& g_lower, const Eigen::VectorXd& g_upper,
                                  const SensitivityRows& sens, const AlgorithmParams& params,
                                  double gamma_down);

/// Local-controller state for one DER. Injections are in per-unit.
struct ControllerState {
  double alpha = 0.0;
  double alpha_init = 0.0;
  double p_pu = 0.0, q_pu = 0.0;
  double prev_p_pu = 0.0, prev_q_pu = 0.0;
  int ticks = 0;
  double last_s_cos = 0.0;
};

/// Everything the local controller needs about its DER at this tick.
struct LocalContext {
  const DerDevice* device = nullptr;
  double p_av_w = 0.0;    // PV availability now
  double soc_pct = 0.0;   // battery SOC now
  double s_base_w = 0.0;  // per-unit base
};

/// One local-controller tick: estimate the injection move at the old alpha,
/// score it against the previous move, retune alpha, and commit at the new
/// alpha with a feasible-set projection. hp/hq hold one signal per service.
void local_controller_step(ControllerState& st, const LocalContext& ctx,
                           std::span<const double> hp, std::span<const double> hq,
                           const AlgorithmParams& params, double gamma_down);

}  // namespace derms

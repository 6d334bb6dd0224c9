#pragma once

#include <vector>

#include <Eigen/Dense>

#include "derms/devices.hpp"

namespace derms {

/// A frozen, desk-sized instance of the centralized DER dispatch problem:
/// minimize total DER cost subject to feasible injections and bounds on a
/// linear model of the measurements. Used only for verification.
struct CentralInstance {
  std::vector<DerDevice> devices;  // at most 3
  std::vector<double> p_av_w;      // per device; PV availability (0 for batteries)
  std::vector<double> soc_pct;     // per device; battery SOC (frozen during the solve)
  Eigen::VectorXd g0_pu;           // measurement offsets at zero injection
  Eigen::MatrixXd dg_dp, dg_dq;    // measurements x devices, p.u./p.u.
  Eigen::VectorXd lower_pu, upper_pu;
  double nu = 1e-3;
  double eps = 1e-4;
  double s_base_w = 0.0;

  void validate() const;
  Eigen::Index n_devices() const { return static_cast<Eigen::Index>(devices.size()); }
  Eigen::Index n_measurements() const { return g0_pu.size(); }

  /// G(x) = g0 + dGdP p + dGdQ q.
  Eigen::VectorXd measurements(const Eigen::VectorXd& p_pu, const Eigen::VectorXd& q_pu) const;

  /// DER cost plus the nu-regularizer (the primal part of the saddle).
  double primal_cost(const Eigen::VectorXd& p_pu, const Eigen::VectorXd& q_pu) const;

  /// Value of the regularized problem with the duals maximized out in closed
  /// form; convex in x. The independent route used by grid-search checks.
  double regularized_primal_value(const Eigen::VectorXd& p_pu,
                                  const Eigen::VectorXd& q_pu) const;
};

struct CentralSolution {
  Eigen::VectorXd p_pu, q_pu;
  Eigen::VectorXd d_lower, d_upper;
  double objective = 0.0;  // primal_cost at the solution
  double kkt_residual = 0.0;
  long iterations = 0;
};

struct CentralSolveOptions {
  double kkt_tolerance = 1e-8;
  long max_iterations = 1'000'000;
};

/// Projected-gradient primal-dual iteration on the regularized Lagrangian,
/// diagonally preconditioned, with gently diminishing steps, run until the
/// KKT residual clears the tolerance. Throws on non-convergence.
CentralSolution solve_central(const CentralInstance& inst, const CentralSolveOptions& opts = {});

/// Analytic first-order optimality residual of a primal-dual pair: tangent-
/// cone projection of the primal gradient plus complementarity defects of
/// the duals. Zero exactly at the regularized saddle point.
double kkt_residual(const CentralInstance& inst, const Eigen::VectorXd& p_pu,
                    const Eigen::VectorXd& q_pu, const Eigen::VectorXd& d_lower,
                    const Eigen::VectorXd& d_upper);

}  // namespace derms

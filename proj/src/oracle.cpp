#include "derms/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace derms {

namespace {

constexpr double kActiveTol = 1e-10;

struct DeviceCost {
  // Quadratic pieces of one device's cost in per-unit variables:
  // f(p,q) = ap*(p - p0)^2 + aq*q^2 (+ constant), so f' = 2ap(p-p0), 2aq q.
  double ap = 0.0, p0 = 0.0, aq = 0.0;
};

DeviceCost device_cost_pu(const CentralInstance& inst, Eigen::Index i) {
  const DerDevice& dev = inst.devices[i];
  const double kw_per_pu = inst.s_base_w / 1e3;
  DeviceCost c;
  if (dev.kind == DerDevice::Kind::pv) {
    c.ap = dev.pv.cost_p_per_kw2() * kw_per_pu * kw_per_pu;
    c.aq = dev.pv.cost_q_per_kvar2() * kw_per_pu * kw_per_pu;
    c.p0 = inst.p_av_w[i] / inst.s_base_w;
  } else {
    const BatteryParams& b = dev.battery;
    const double slope = b.dt_h / (b.cap_wh / 1e3);  // d(dev)/dP_kW magnitude
    c.ap = b.cost_weight * slope * slope * kw_per_pu * kw_per_pu;
    // Cost minimum where the post-step SOC hits the preference:
    // dev(p_kw) = dev0 - slope * p_kw, zero at p_kw = dev0 / slope.
    const double dev0 = inst.soc_pct[i] / 100.0 - b.soc_pref_pct / 100.0;
    c.p0 = (dev0 / slope) * 1e3 / inst.s_base_w;
    c.aq = 0.0;
  }
  return c;
}

}  // namespace

void CentralInstance::validate() const {
  const auto nd = n_devices();
  if (nd < 1 || nd > 3) throw std::invalid_argument("oracle: instance must have 1..3 devices");
  const auto nm = n_measurements();
  if (nm < 1 || nm > 4) {
    throw std::invalid_argument("oracle: instance must have 1..4 measurements");
  }
  if (static_cast<Eigen::Index>(p_av_w.size()) != nd ||
      static_cast<Eigen::Index>(soc_pct.size()) != nd) {
    throw std::invalid_argument("oracle: per-device vectors sized wrong");
  }
  if (dg_dp.rows() != nm || dg_dp.cols() != nd || dg_dq.rows() != nm || dg_dq.cols() != nd) {
    throw std::invalid_argument("oracle: sensitivity shape mismatch");
  }
  if (lower_pu.size() != nm || upper_pu.size() != nm) {
    throw std::invalid_argument("oracle: bound vectors sized wrong");
  }
  if (!(nu > 0.0) || !(eps > 0.0) || !(s_base_w > 0.0)) {
    throw std::invalid_argument("oracle: nu, eps, s_base must be positive");
  }
}

Eigen::VectorXd CentralInstance::measurements(const Eigen::VectorXd& p_pu,
                                              const Eigen::VectorXd& q_pu) const {
  return g0_pu + dg_dp * p_pu + dg_dq * q_pu;
}

double CentralInstance::primal_cost(const Eigen::VectorXd& p_pu,
                                    const Eigen::VectorXd& q_pu) const {
  double f = 0.0;
  for (Eigen::Index i = 0; i < n_devices(); ++i) {
    const DeviceCost c = device_cost_pu(*this, i);
    const double dp = p_pu(i) - c.p0;
    f += c.ap * dp * dp + c.aq * q_pu(i) * q_pu(i);
  }
  f += 0.5 * nu * (p_pu.squaredNorm() + q_pu.squaredNorm());
  return f;
}

double CentralInstance::regularized_primal_value(const Eigen::VectorXd& p_pu,
                                                 const Eigen::VectorXd& q_pu) const {
  const Eigen::VectorXd g = measurements(p_pu, q_pu);
  double pen = 0.0;
  for (Eigen::Index j = 0; j < n_measurements(); ++j) {
    const double lo_gap = std::max(0.0, lower_pu(j) - g(j));
    const double hi_gap = std::max(0.0, g(j) - upper_pu(j));
    pen += (lo_gap * lo_gap + hi_gap * hi_gap) / (2.0 * eps);
  }
  return primal_cost(p_pu, q_pu) + pen;
}

namespace {

std::pair<double, double> project_device(const CentralInstance& inst, Eigen::Index i, double p_pu,
                                         double q_pu) {
  const DerDevice& dev = inst.devices[i];
  const double sb = inst.s_base_w;
  if (dev.kind == DerDevice::Kind::pv) {
    auto [p, q] = project_pv(p_pu * sb, q_pu * sb, dev.pv, inst.p_av_w[i]);
    return {p / sb, q / sb};
  }
  return {project_battery(p_pu * sb, dev.battery, inst.soc_pct[i]) / sb, 0.0};
}

// Norm of the tangent-cone projection of v = -grad at a feasible point of one
// device's injection set. Zero iff the point is first-order optimal.
double device_stationarity(const CentralInstance& inst, Eigen::Index i, double p_pu, double q_pu,
                           double gp, double gq) {
  const DerDevice& dev = inst.devices[i];
  const double sb = inst.s_base_w;
  if (dev.kind == DerDevice::Kind::battery) {
    auto [lo_w, hi_w] = battery_power_limits(dev.battery, inst.soc_pct[i]);
    const double lo = lo_w / sb, hi = hi_w / sb;
    const double tol = kActiveTol * std::max(1.0, std::abs(hi) + std::abs(lo));
    const double v = -gp;
    const bool at_lo = p_pu <= lo + tol, at_hi = p_pu >= hi - tol;
    if (at_lo && at_hi) return 0.0;  // pinched interval
    if (at_lo) return std::max(v, 0.0);
    if (at_hi) return std::max(-v, 0.0);
    return std::abs(v);
  }

  // PV: constraints -P <= 0, P - Pav <= 0, P^2+Q^2 - INV^2 <= 0.
  const double inv = dev.pv.inv_w / sb;
  const double pav = inst.p_av_w[i] / sb;
  const double tol = kActiveTol * std::max(1.0, inv);

  std::vector<Eigen::Vector2d> normals;  // outward unit normals of active constraints
  if (p_pu <= tol) normals.push_back({-1.0, 0.0});
  if (p_pu >= pav - tol) normals.push_back({1.0, 0.0});
  const double rad = std::hypot(p_pu, q_pu);
  if (rad >= inv - tol && rad > 0.0) normals.push_back({p_pu / rad, q_pu / rad});

  const Eigen::Vector2d v(-gp, -gq);
  auto in_cone = [&](const Eigen::Vector2d& d) {
    for (const auto& nrm : normals) {
      if (nrm.dot(d) > tol * (1.0 + d.norm())) return false;
    }
    return true;
  };
  if (in_cone(v)) return v.norm();

  // Projection onto the tangent cone: nearest feasible point among the cone
  // vertex, the single-constraint faces, and the edge rays.
  Eigen::Vector2d best = Eigen::Vector2d::Zero();
  double best_dist = v.norm();
  auto consider = [&](const Eigen::Vector2d& cand) {
    if (!in_cone(cand)) return;
    const double d = (v - cand).norm();
    if (d < best_dist) {
      best_dist = d;
      best = cand;
    }
  };
  for (const auto& nrm : normals) {
    consider(v - nrm.dot(v) * nrm);  // face of this constraint
    const Eigen::Vector2d e1(-nrm.y(), nrm.x());
    consider(std::max(0.0, v.dot(e1)) * e1);  // edge rays along the face
    consider(std::max(0.0, v.dot(-e1)) * (-e1));
  }
  return best.norm();
}

}  // namespace

double kkt_residual(const CentralInstance& inst, const Eigen::VectorXd& p_pu,
                    const Eigen::VectorXd& q_pu, const Eigen::VectorXd& d_lower,
                    const Eigen::VectorXd& d_upper) {
  const Eigen::VectorXd g = inst.measurements(p_pu, q_pu);
  const Eigen::VectorXd w = d_lower - d_upper;
  double res = 0.0;
  for (Eigen::Index i = 0; i < inst.n_devices(); ++i) {
    const DeviceCost c = device_cost_pu(inst, i);
    const double gp = 2.0 * c.ap * (p_pu(i) - c.p0) + inst.nu * p_pu(i) - inst.dg_dp.col(i).dot(w);
    const double gq = 2.0 * c.aq * q_pu(i) + inst.nu * q_pu(i) - inst.dg_dq.col(i).dot(w);
    res = std::max(res, device_stationarity(inst, i, p_pu(i), q_pu(i), gp, gq));
  }
  for (Eigen::Index j = 0; j < inst.n_measurements(); ++j) {
    const double grad_lo = inst.lower_pu(j) - g(j) - inst.eps * d_lower(j);
    const double grad_hi = g(j) - inst.upper_pu(j) - inst.eps * d_upper(j);
    res = std::max(res, d_lower(j) > 0.0 ? std::abs(grad_lo) : std::max(0.0, grad_lo));
    res = std::max(res, d_upper(j) > 0.0 ? std::abs(grad_hi) : std::max(0.0, grad_hi));
  }
  return res;
}

CentralSolution solve_central(const CentralInstance& inst, const CentralSolveOptions& opts) {
  inst.validate();
  const Eigen::Index nd = inst.n_devices();
  const Eigen::Index nm = inst.n_measurements();

  // Preconditioning: one scalar step per device (its projection couples P and
  // Q, and a projected-gradient fixed point is only stationary when the step
  // is isotropic within a projection block), sized against the worst curvature
  // plus the column mass of the coupling; per-measurement dual steps against
  // eps plus the row mass.
  Eigen::VectorXd sp(nd), sd(nm);
  for (Eigen::Index i = 0; i < nd; ++i) {
    const DeviceCost c = device_cost_pu(inst, i);
    const double col = inst.dg_dp.col(i).cwiseAbs().sum() + inst.dg_dq.col(i).cwiseAbs().sum();
    sp(i) = 1.0 / (2.0 * std::max(c.ap, c.aq) + inst.nu + col);
  }
  for (Eigen::Index j = 0; j < nm; ++j) {
    const double row = inst.dg_dp.row(j).cwiseAbs().sum() + inst.dg_dq.row(j).cwiseAbs().sum();
    sd(j) = 1.0 / (inst.eps + row);
  }
  constexpr double kSafety = 0.45;
  constexpr double kDiminishTau = 1e6;

  CentralSolution sol;
  sol.p_pu = Eigen::VectorXd::Zero(nd);
  sol.q_pu = Eigen::VectorXd::Zero(nd);
  for (Eigen::Index i = 0; i < nd; ++i) {
    auto [p, q] = project_device(inst, i, 0.0, 0.0);
    sol.p_pu(i) = p;
    sol.q_pu(i) = q;
  }
  sol.d_lower = Eigen::VectorXd::Zero(nm);
  sol.d_upper = Eigen::VectorXd::Zero(nm);

  for (long it = 0; it < opts.max_iterations; ++it) {
    const double damp = kSafety / (1.0 + static_cast<double>(it) / kDiminishTau);
    const Eigen::VectorXd g = inst.measurements(sol.p_pu, sol.q_pu);
    const Eigen::VectorXd w = sol.d_lower - sol.d_upper;

    Eigen::VectorXd p_next(nd), q_next(nd);
    for (Eigen::Index i = 0; i < nd; ++i) {
      const DeviceCost c = device_cost_pu(inst, i);
      const double gp =
          2.0 * c.ap * (sol.p_pu(i) - c.p0) + inst.nu * sol.p_pu(i) - inst.dg_dp.col(i).dot(w);
      const double gq =
          2.0 * c.aq * sol.q_pu(i) + inst.nu * sol.q_pu(i) - inst.dg_dq.col(i).dot(w);
      auto [p, q] = project_device(inst, i, sol.p_pu(i) - damp * sp(i) * gp,
                                   sol.q_pu(i) - damp * sp(i) * gq);
      p_next(i) = p;
      q_next(i) = q;
    }
    Eigen::VectorXd dl_next(nm), du_next(nm);
    for (Eigen::Index j = 0; j < nm; ++j) {
      dl_next(j) = std::max(
          0.0, sol.d_lower(j) +
                   damp * sd(j) * (inst.lower_pu(j) - g(j) - inst.eps * sol.d_lower(j)));
      du_next(j) = std::max(
          0.0, sol.d_upper(j) +
                   damp * sd(j) * (g(j) - inst.upper_pu(j) - inst.eps * sol.d_upper(j)));
    }
    sol.p_pu = p_next;
    sol.q_pu = q_next;
    sol.d_lower = dl_next;
    sol.d_upper = du_next;
    sol.iterations = it + 1;

    if (it % 16 == 0 || it == opts.max_iterations - 1) {
      sol.kkt_residual = kkt_residual(inst, sol.p_pu, sol.q_pu, sol.d_lower, sol.d_upper);
      if (sol.kkt_residual < opts.kkt_tolerance) {
        sol.objective = inst.primal_cost(sol.p_pu, sol.q_pu);
        return sol;
      }
    }
  }
  throw std::runtime_error("solve_central: no convergence within the iteration cap (residual " +
                           std::to_string(sol.kkt_residual) + ")");
}

}  // namespace derms

#include "derms/control.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace derms {

void AlgorithmParams::validate() const {
  // Zero regularization is admitted for fixtures; the defaults are positive.
  if (!(nu >= 0.0)) throw std::invalid_argument("params: nu must be nonnegative");
  if (!(eps >= 0.0)) throw std::invalid_argument("params: eps must be nonnegative");
  if (!(gamma_up > 1.0)) throw std::invalid_argument("params: gamma_up must exceed 1");
  if (!(s_lower >= -1.0 && s_lower < s_upper && s_upper <= 1.0)) {
    throw std::invalid_argument("params: need -1 <= S_lower < S_upper <= 1");
  }
  if (!(clamp_lo_factor > 0.0 && clamp_lo_factor < 1.0 && clamp_hi_factor > 1.0)) {
    throw std::invalid_argument("params: step clamp factors out of range");
  }
}

double cosine_similarity(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2) {
  if (x1.size() != x2.size()) {
    throw std::invalid_argument("cosine_similarity: length mismatch");
  }
  const double n1 = x1.norm(), n2 = x2.norm();
  if (n1 < 1e-12 || n2 < 1e-12) return 0.0;
  return std::clamp(x1.dot(x2) / (n1 * n2), -1.0, 1.0);
}

double adapt_step_size(double s_old, double s_cos, const AlgorithmParams& params,
                       double gamma_down) {
  if (s_cos > params.s_upper) return s_old * params.gamma_up;
  if (s_cos < params.s_lower) return s_old * gamma_down;
  return s_old;
}

DualPair estimate_dual_update(const Eigen::VectorXd& d_lower, const Eigen::VectorXd& d_upper,
                              const Eigen::VectorXd& g, const Eigen::VectorXd& g_lower,
                              const Eigen::VectorXd& g_upper, double beta, double eps) {
  DualPair out;
  out.lower = (d_lower + beta * (g_lower - g - eps * d_lower)).cwiseMax(0.0);
  out.upper = (d_upper + beta * (g - g_upper - eps * d_upper)).cwiseMax(0.0);
  return out;
}

namespace {

double clamped(double s, double s_init, const AlgorithmParams& params) {
  return std::clamp(s, params.clamp_lo_factor * s_init, params.clamp_hi_factor * s_init);
}

Eigen::VectorXd stack(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  Eigen::VectorXd v(a.size() + b.size());
  v << a, b;
  return v;
}

}  // namespace

DirectionSignals coordinator_step(CoordinatorState& cs, const Eigen::VectorXd& g,
                                  const Eigen::VectorXd& g_lower, const Eigen::VectorXd& g_upper,
                                  const SensitivityRows& sens, const AlgorithmParams& params,
                                  double gamma_down) {
  const Eigen::Index m = cs.duals.lower.size();
  if (g.size() != m || g_lower.size() != m || g_upper.size() != m) {
    throw std::invalid_argument("coordinator_step: measurement count mismatch");
  }
  if (sens.dp.rows() != m || sens.dq.rows() != m || sens.dp.cols() != sens.dq.cols()) {
    throw std::invalid_argument("coordinator_step: sensitivity shape mismatch");
  }

  // Score the direction of the estimated move (old beta) against the last
  // committed move, then retune. Needs two past states; frozen before that
  // and in manual mode.
  cs.last_s_cos = 0.0;
  if (!params.manual_mode && cs.duals.ticks >= 2) {
    const DualPair est = estimate_dual_update(cs.duals.lower, cs.duals.upper, g, g_lower,
                                              g_upper, cs.beta, params.eps);
    const Eigen::VectorXd next_move =
        stack(est.lower - cs.duals.lower, est.upper - cs.duals.upper);
    const Eigen::VectorXd last_move = stack(cs.duals.lower - cs.duals.prev_lower,
                                            cs.duals.upper - cs.duals.prev_upper);
    cs.last_s_cos = cosine_similarity(next_move, last_move);
    cs.beta = clamped(adapt_step_size(cs.beta, cs.last_s_cos, params, gamma_down),
                      cs.beta_init, params);
  }

  // Committed update at the new beta.
  const DualPair committed = estimate_dual_update(cs.duals.lower, cs.duals.upper, g, g_lower,
                                                  g_upper, cs.beta, params.eps);
  cs.duals.prev_lower = cs.duals.lower;
  cs.duals.prev_upper = cs.duals.upper;
  cs.duals.lower = committed.lower;
  cs.duals.upper = committed.upper;
  cs.duals.ticks += 1;

  DirectionSignals sig;
  const Eigen::VectorXd weight = cs.duals.lower - cs.duals.upper;
  sig.hp = sens.dp.transpose() * weight;
  sig.hq = sens.dq.transpose() * weight;
  return sig;
}

namespace {

// Gradient of the DER cost in per-unit variables. Device costs are evaluated
// per kW, so the chain factor to d/dP_pu is S_base expressed in kW.
std::pair<double, double> cost_gradient_pu(const LocalContext& ctx, double p_pu, double q_pu) {
  const double sb = ctx.s_base_w;
  const double kw_per_pu = sb / 1e3;
  const DerDevice& dev = *ctx.device;
  if (dev.kind == DerDevice::Kind::pv) {
    auto [gp, gq] = pv_cost_gradient(dev.pv, p_pu * sb, q_pu * sb, ctx.p_av_w);
    return {gp * kw_per_pu, gq * kw_per_pu};
  }
  auto [gp, gq] = battery_cost_gradient(dev.battery, p_pu * sb, ctx.soc_pct);
  return {gp * kw_per_pu, gq * kw_per_pu};
}

std::pair<double, double> project_pu(const LocalContext& ctx, double p_pu, double q_pu) {
  const double sb = ctx.s_base_w;
  const DerDevice& dev = *ctx.device;
  if (dev.kind == DerDevice::Kind::pv) {
    auto [p, q] = project_pv(p_pu * sb, q_pu * sb, dev.pv, ctx.p_av_w);
    return {p / sb, q / sb};
  }
  return {project_battery(p_pu * sb, dev.battery, ctx.soc_pct) / sb, 0.0};
}

}  // namespace

void local_controller_step(ControllerState& st, const LocalContext& ctx,
                           std::span<const double> hp, std::span<const double> hq,
                           const AlgorithmParams& params, double gamma_down) {
  if (ctx.device == nullptr || !(ctx.s_base_w > 0.0)) {
    throw std::invalid_argument("local_controller_step: missing device context");
  }
  if (hp.size() != hq.size()) {
    throw std::invalid_argument("local_controller_step: signal count mismatch");
  }
  const bool has_q = ctx.device->has_q();

  double h_p = 0.0, h_q = 0.0;
  for (size_t k = 0; k < hp.size(); ++k) {
    h_p += hp[k];
    h_q += hq[k];
  }

  auto [grad_p, grad_q] = cost_gradient_pu(ctx, st.p_pu, st.q_pu);
  const double dir_p = grad_p - h_p + params.nu * st.p_pu;
  const double dir_q = grad_q - h_q + params.nu * st.q_pu;

  auto step_at = [&](double alpha) {
    return project_pu(ctx, st.p_pu - alpha * dir_p, has_q ? st.q_pu - alpha * dir_q : 0.0);
  };

  st.last_s_cos = 0.0;
  if (!params.manual_mode && st.ticks >= 2) {
    auto [ep, eq] = step_at(st.alpha);
    Eigen::VectorXd next_move, last_move;
    if (has_q) {
      next_move = Eigen::Vector2d(ep - st.p_pu, eq - st.q_pu);
      last_move = Eigen::Vector2d(st.p_pu - st.prev_p_pu, st.q_pu - st.prev_q_pu);
    } else {
      // Q-incapable device: the update and its similarity are 1-D on P.
      next_move = Eigen::VectorXd::Constant(1, ep - st.p_pu);
      last_move = Eigen::VectorXd::Constant(1, st.p_pu - st.prev_p_pu);
    }
    st.last_s_cos = cosine_similarity(next_move, last_move);
    st.alpha = clamped(adapt_step_size(st.alpha, st.last_s_cos, params, gamma_down),
                       st.alpha_init, params);
  }

  auto [p_new, q_new] = step_at(st.alpha);
  st.prev_p_pu = st.p_pu;
  st.prev_q_pu = st.q_pu;
  st.p_pu = p_new;
  st.q_pu = has_q ? q_new : 0.0;
  st.ticks += 1;
}

}  // namespace derms

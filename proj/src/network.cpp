#include "derms/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace derms {

namespace {

struct Tree {
  std::vector<int> parent;        // parent bus, -1 for the head
  std::vector<int> parent_line;   // index into net.lines, -1 for the head
  std::vector<int> order;         // BFS order from the head
  std::vector<std::vector<int>> children;
};

Tree build_tree(const NetworkModel& net) {
  const int n = net.bus_count();
  std::vector<std::vector<std::pair<int, int>>> adj(n);  // (neighbor, line idx)
  for (int li = 0; li < static_cast<int>(net.lines.size()); ++li) {
    const Line& l = net.lines[li];
    adj[l.from].push_back({l.to, li});
    adj[l.to].push_back({l.from, li});
  }

  Tree t;
  t.parent.assign(n, -2);
  t.parent_line.assign(n, -1);
  t.children.resize(n);
  t.parent[0] = -1;
  t.order.push_back(0);
  for (size_t head = 0; head < t.order.size(); ++head) {
    const int u = t.order[head];
    for (auto [v, li] : adj[u]) {
      if (t.parent[v] != -2) {
        if (v != t.parent[u]) {
          throw std::invalid_argument("network: line graph contains a cycle");
        }
        continue;
      }
      t.parent[v] = u;
      t.parent_line[v] = li;
      t.children[u].push_back(v);
      t.order.push_back(v);
    }
  }
  if (static_cast<int>(t.order.size()) != n) {
    throw std::invalid_argument("network: line graph is not connected");
  }
  return t;
}

}  // namespace

void NetworkModel::validate() const {
  const int n = bus_count();
  if (n < 1) throw std::invalid_argument("network: no buses");
  if (static_cast<int>(loads.size()) != n) {
    throw std::invalid_argument("network: loads/bus count mismatch");
  }
  if (static_cast<int>(lines.size()) != n - 1) {
    throw std::invalid_argument("network: a tree of N buses needs exactly N-1 lines");
  }
  for (const Line& l : lines) {
    if (l.from < 0 || l.from >= n || l.to < 0 || l.to >= n || l.from == l.to) {
      throw std::invalid_argument("network: line references an unknown bus");
    }
    if (l.r_ohm < 0.0 || !std::isfinite(l.r_ohm) || !std::isfinite(l.x_ohm)) {
      throw std::invalid_argument("network: line impedance out of range");
    }
  }
  if (!(base_power_w > 0.0) || !(base_voltage_v > 0.0) || !(source_voltage_v > 0.0)) {
    throw std::invalid_argument("network: base quantities must be positive");
  }
  if (tap_ratio < 0.9 || tap_ratio > 1.1) {
    throw std::invalid_argument("network: tap_ratio outside [0.9, 1.1]");
  }
  build_tree(*this);  // connectivity / acyclicity
}

PowerFlowSolution solve_power_flow(const NetworkModel& net,
                                   std::span<const std::complex<double>> der_injections_pu,
                                   const PowerFlowOptions& opts) {
  net.validate();
  const int n = net.bus_count();
  if (!der_injections_pu.empty() && static_cast<int>(der_injections_pu.size()) != n) {
    throw std::invalid_argument("solve_power_flow: injection vector size mismatch");
  }
  const Tree tree = build_tree(net);
  const double zb = net.z_base_ohm();
  const double sb = net.base_power_w;

  // Net power injected into the network at each bus, p.u.
  std::vector<std::complex<double>> s_inj(n);
  for (int b = 0; b < n; ++b) {
    std::complex<double> der = der_injections_pu.empty() ? 0.0 : der_injections_pu[b];
    s_inj[b] = der - std::complex<double>(net.loads[b].p_w / sb, net.loads[b].q_var / sb);
  }

  std::vector<std::complex<double>> z(net.lines.size());
  for (size_t li = 0; li < net.lines.size(); ++li) {
    z[li] = std::complex<double>(net.lines[li].r_ohm / zb, net.lines[li].x_ohm / zb);
  }

  const std::complex<double> v0(net.slack_voltage_pu(), 0.0);
  std::vector<std::complex<double>> v(n, v0);
  std::vector<std::complex<double>> branch_i(net.lines.size(), 0.0);

  PowerFlowSolution sol;
  sol.residual = std::numeric_limits<double>::infinity();
  double prev_residual = std::numeric_limits<double>::infinity();
  int growth_streak = 0;

  for (int it = 1; it <= opts.max_iterations; ++it) {
    // Backward: accumulate branch currents from the leaves.
    for (int oi = n - 1; oi >= 1; --oi) {
      const int b = tree.order[oi];
      // Current absorbed at b (demand positive), plus everything downstream.
      std::complex<double> i_acc = std::conj(-s_inj[b] / v[b]);
      for (int c : tree.children[b]) i_acc += branch_i[tree.parent_line[c]];
      branch_i[tree.parent_line[b]] = i_acc;
    }
    // Forward: propagate voltage drops from the head.
    double max_dv = 0.0;
    for (int oi = 1; oi < n; ++oi) {
      const int b = tree.order[oi];
      const int li = tree.parent_line[b];
      const std::complex<double> v_new = v[tree.parent[b]] - z[li] * branch_i[li];
      max_dv = std::max(max_dv, std::abs(v_new - v[b]));
      v[b] = v_new;
      if (!std::isfinite(v_new.real()) || !std::isfinite(v_new.imag())) {
        sol.v_pu = v;
        sol.iterations = it;
        sol.residual = std::numeric_limits<double>::infinity();
        sol.diagnostic = "power flow diverged: non-finite voltage";
        return sol;
      }
    }
    sol.iterations = it;
    sol.residual = max_dv;
    if (max_dv < opts.tolerance_pu) {
      sol.converged = true;
      break;
    }
    growth_streak = (max_dv > prev_residual) ? growth_streak + 1 : 0;
    prev_residual = max_dv;
    if (growth_streak >= 10) {
      sol.diagnostic = "power flow diverged: residual grew for 10 consecutive sweeps";
      break;
    }
  }
  if (!sol.converged && sol.diagnostic.empty()) {
    sol.diagnostic = "power flow did not converge within the iteration cap";
  }

  sol.v_pu = v;

  // Head import: flow into the lines leaving bus 0 plus local net demand there.
  std::complex<double> s_head = -s_inj[0] * 1.0;  // local demand minus local DER
  for (int c : tree.children[0]) {
    const int li = tree.parent_line[c];
    s_head += v[0] * std::conj(branch_i[li]);
  }
  sol.head_p_pu = s_head.real();
  sol.head_q_pu = s_head.imag();

  double loss = 0.0;
  for (size_t li = 0; li < net.lines.size(); ++li) {
    loss += z[li].real() * std::norm(branch_i[li]);
  }
  sol.total_loss_p_pu = loss;
  return sol;
}

namespace {

int find_subtree_line(const NetworkModel& net, const Tree& tree, int subtree_root) {
  if (subtree_root <= 0 || subtree_root >= net.bus_count() || tree.parent[subtree_root] != 0) {
    throw std::invalid_argument("measurement: subtree root must be a child of the feeder head");
  }
  return tree.parent_line[subtree_root];
}

}  // namespace

std::vector<double> measure(const NetworkModel& net, const PowerFlowSolution& sol,
                            std::span<const MeasurementSpec> specs) {
  if (!sol.converged) {
    throw std::runtime_error("measure: power flow solution did not converge");
  }
  const Tree tree = build_tree(net);
  const double zb = net.z_base_ohm();

  std::vector<double> out;
  out.reserve(specs.size());
  for (const MeasurementSpec& m : specs) {
    switch (m.kind) {
      case MeasurementKind::voltage_mag: {
        if (m.bus < 0 || m.bus >= net.bus_count()) {
          throw std::invalid_argument("measurement '" + m.id + "': unknown bus");
        }
        out.push_back(std::abs(sol.v_pu[m.bus]));
        break;
      }
      case MeasurementKind::head_active_power:
        out.push_back(sol.head_p_pu);
        break;
      case MeasurementKind::subtree_active_power: {
        const int li = find_subtree_line(net, tree, m.bus);
        const std::complex<double> z(net.lines[li].r_ohm / zb, net.lines[li].x_ohm / zb);
        // Branch current recovered from the voltage drop across the head line.
        std::complex<double> i = (std::abs(z) > 0.0)
                                     ? (sol.v_pu[0] - sol.v_pu[m.bus]) / z
                                     : std::complex<double>(0.0, 0.0);
        if (std::abs(z) == 0.0) {
          throw std::invalid_argument("measurement '" + m.id +
                                      "': subtree power needs a nonzero head line impedance");
        }
        out.push_back((sol.v_pu[0] * std::conj(i)).real());
        break;
      }
    }
  }
  return out;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> SensitivityModel::rows_for(
    std::span<const std::string> ids) const {
  Eigen::MatrixXd p(ids.size(), dg_dp.cols()), q(ids.size(), dg_dq.cols());
  for (size_t r = 0; r < ids.size(); ++r) {
    auto it = std::find_if(specs.begin(), specs.end(),
                           [&](const MeasurementSpec& s) { return s.id == ids[r]; });
    if (it == specs.end()) {
      throw std::invalid_argument("sensitivity model has no row for measurement '" +
                                  std::string(ids[r]) + "'");
    }
    const auto idx = std::distance(specs.begin(), it);
    p.row(static_cast<Eigen::Index>(r)) = dg_dp.row(idx);
    q.row(static_cast<Eigen::Index>(r)) = dg_dq.row(idx);
  }
  return {p, q};
}

SensitivityModel build_sensitivities(const NetworkModel& net,
                                     std::span<const MeasurementSpec> specs,
                                     std::span<const int> der_buses) {
  net.validate();
  if (specs.empty() || der_buses.empty()) {
    throw std::invalid_argument("build_sensitivities: empty measurement or DER list");
  }
  const int n = net.bus_count();
  for (int b : der_buses) {
    if (b < 0 || b >= n) throw std::invalid_argument("build_sensitivities: unknown DER bus");
  }
  const Tree tree = build_tree(net);

  // Operating point: nominal loads, zero DER injection.
  std::vector<std::complex<double>> zero(n, 0.0);
  const PowerFlowSolution op = solve_power_flow(net, zero);
  if (!op.converged) {
    throw std::runtime_error("build_sensitivities: base power flow did not converge: " +
                             op.diagnostic);
  }

  // Nodal admittance matrix, p.u.
  const double zb = net.z_base_ohm();
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
  for (const Line& l : net.lines) {
    const std::complex<double> zline(l.r_ohm / zb, l.x_ohm / zb);
    if (std::abs(zline) == 0.0) {
      throw std::runtime_error("build_sensitivities: zero-impedance line makes the "
                               "linearization degenerate");
    }
    const std::complex<double> adm = 1.0 / zline;
    y(l.from, l.from) += adm;
    y(l.to, l.to) += adm;
    y(l.from, l.to) -= adm;
    y(l.to, l.from) -= adm;
  }

  const int m = n - 1;  // non-slack buses; unknowns are (e, f) for buses 1..n-1
  Eigen::VectorXcd vop(n), iop(n);
  for (int b = 0; b < n; ++b) vop(b) = op.v_pu[b];
  iop = y * vop;

  // Jacobian of the bus power equations S_i = V_i conj((Y V)_i) in rectangular
  // coordinates: rows [P_1..P_m, Q_1..Q_m], columns [e_1..e_m, f_1..f_m].
  Eigen::MatrixXd jac(2 * m, 2 * m);
  for (int i = 1; i < n; ++i) {
    for (int k = 1; k < n; ++k) {
      std::complex<double> ds_de = vop(i) * std::conj(y(i, k));
      std::complex<double> ds_df = -std::complex<double>(0, 1) * vop(i) * std::conj(y(i, k));
      if (i == k) {
        ds_de += std::conj(iop(i));
        ds_df += std::complex<double>(0, 1) * std::conj(iop(i));
      }
      jac(i - 1, k - 1) = ds_de.real();
      jac(i - 1, m + k - 1) = ds_df.real();
      jac(m + i - 1, k - 1) = ds_de.imag();
      jac(m + i - 1, m + k - 1) = ds_df.imag();
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
  if (!lu.isInvertible()) {
    throw std::runtime_error("build_sensitivities: singular power-flow Jacobian "
                             "(degenerate network)");
  }

  // dV (rectangular, non-slack) per unit injection at each DER bus.
  const int nd = static_cast<int>(der_buses.size());
  Eigen::MatrixXd dv_dp = Eigen::MatrixXd::Zero(2 * m, nd);
  Eigen::MatrixXd dv_dq = Eigen::MatrixXd::Zero(2 * m, nd);
  for (int d = 0; d < nd; ++d) {
    const int b = der_buses[d];
    if (b == 0) continue;  // injection at the slack does not move any voltage
    Eigen::VectorXd rhs_p = Eigen::VectorXd::Zero(2 * m);
    Eigen::VectorXd rhs_q = Eigen::VectorXd::Zero(2 * m);
    rhs_p(b - 1) = 1.0;
    rhs_q(m + b - 1) = 1.0;
    dv_dp.col(d) = lu.solve(rhs_p);
    dv_dq.col(d) = lu.solve(rhs_q);
  }

  auto d_measure = [&](const MeasurementSpec& spec) -> Eigen::RowVectorXd {
    // Gradient of the measurement w.r.t. the stacked (e, f) unknowns, plus a
    // direct term for injections at the measured quantity itself.
    Eigen::RowVectorXd g = Eigen::RowVectorXd::Zero(2 * m);
    switch (spec.kind) {
      case MeasurementKind::voltage_mag: {
        if (spec.bus < 0 || spec.bus >= n) {
          throw std::invalid_argument("measurement '" + spec.id + "': unknown bus");
        }
        if (spec.bus == 0) return g;  // slack magnitude is fixed
        const double mag = std::abs(vop(spec.bus));
        g(spec.bus - 1) = vop(spec.bus).real() / mag;
        g(m + spec.bus - 1) = vop(spec.bus).imag() / mag;
        return g;
      }
      case MeasurementKind::head_active_power: {
        // P_head = Re(V_0 conj(sum_k Y_0k V_k)) + local net demand at bus 0.
        for (int k = 1; k < n; ++k) {
          const std::complex<double> c = vop(0) * std::conj(y(0, k));
          g(k - 1) = c.real();
          g(m + k - 1) = (c * std::complex<double>(0, -1)).real();
        }
        return g;
      }
      case MeasurementKind::subtree_active_power: {
        const int li = find_subtree_line(net, tree, spec.bus);
        const std::complex<double> zline(net.lines[li].r_ohm / zb, net.lines[li].x_ohm / zb);
        const std::complex<double> adm = 1.0 / zline;
        // P_sub = Re(V_0 conj(y_0c (V_0 - V_c))); only V_c is free.
        const std::complex<double> c = -vop(0) * std::conj(adm);
        g(spec.bus - 1) = c.real();
        g(m + spec.bus - 1) = (c * std::complex<double>(0, -1)).real();
        return g;
      }
    }
    return g;
  };

  SensitivityModel model;
  model.specs.assign(specs.begin(), specs.end());
  model.der_buses.assign(der_buses.begin(), der_buses.end());
  model.linearization_point_pu = zero;
  model.dg_dp.resize(static_cast<Eigen::Index>(specs.size()), nd);
  model.dg_dq.resize(static_cast<Eigen::Index>(specs.size()), nd);

  for (size_t r = 0; r < specs.size(); ++r) {
    const Eigen::RowVectorXd g = d_measure(specs[r]);
    for (int d = 0; d < nd; ++d) {
      double direct_p = 0.0, direct_q = 0.0;
      if (specs[r].kind == MeasurementKind::head_active_power && der_buses[d] == 0) {
        direct_p = -1.0;  // injection at the head offsets the import one-for-one
      }
      model.dg_dp(static_cast<Eigen::Index>(r), d) = g.dot(dv_dp.col(d)) + direct_p;
      model.dg_dq(static_cast<Eigen::Index>(r), d) = g.dot(dv_dq.col(d)) + direct_q;
    }
  }
  return model;
}

}  // namespace derms

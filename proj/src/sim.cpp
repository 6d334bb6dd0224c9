#include "derms/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace derms {

namespace {

// splitmix64: tiny, seedable, and stable across platforms, which keeps
// synthetic profiles reproducible byte-for-byte.
struct Rng {
  std::uint64_t state;
  explicit Rng(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
};

}  // namespace

Profile Profile::constant(double value) {
  Profile p;
  p.granularity_s = 1.0;
  p.values = {value};
  return p;
}

double Profile::at(double t_s) const {
  if (values.empty()) throw std::logic_error("profile: empty");
  if (t_s <= 0.0) return values.front();
  const auto idx = static_cast<size_t>(t_s / granularity_s);
  return values[std::min(idx, values.size() - 1)];
}

void Scenario::validate() const {
  if (id.empty()) throw std::invalid_argument("scenario: empty id");
  if (!(tick_s > 0.0)) throw std::invalid_argument("scenario: tick must be positive");
  if (!(horizon_s > 0.0)) throw std::invalid_argument("scenario: horizon must be positive");
  const double n = horizon_s / tick_s;
  if (std::abs(n - std::round(n)) > 1e-9) {
    throw std::invalid_argument("scenario: horizon must be a multiple of the tick");
  }
  network.validate();
  double prev_t = -1.0;
  for (const TapEvent& e : tap_events) {
    if (e.t_s < prev_t) throw std::invalid_argument("scenario: tap events not time-ordered");
    if (e.tap_ratio < 0.9 || e.tap_ratio > 1.1) {
      throw std::invalid_argument("scenario: tap event outside [0.9, 1.1]");
    }
    prev_t = e.t_s;
  }
  if (devices.empty()) throw std::invalid_argument("scenario: no devices");
  for (const ScenarioDevice& d : devices) {
    if (d.device.bus < 0 || d.device.bus >= network.bus_count()) {
      throw std::invalid_argument("scenario: device '" + d.device.id + "' on unknown bus");
    }
    if (!(d.gamma_down > 0.0 && d.gamma_down < 1.0)) {
      throw std::invalid_argument("scenario: device gamma_down must lie in (0,1)");
    }
    if (d.device.kind == DerDevice::Kind::battery) {
      const BatteryParams& b = d.device.battery;
      if (!(b.cap_wh > 0.0)) throw std::invalid_argument("scenario: battery capacity");
      if (!(b.soc_min_pct >= 0.0 && b.soc_min_pct < b.soc_max_pct && b.soc_max_pct <= 100.0)) {
        throw std::invalid_argument("scenario: battery SOC limits");
      }
      if (std::abs(b.dt_h * 3600.0 - tick_s) > 1e-9) {
        throw std::invalid_argument("scenario: battery dt must equal the scenario tick");
      }
    }
  }
  if (services.empty()) throw std::invalid_argument("scenario: no services");
  for (const GridService& s : services) s.validate(horizon_s);
  params.validate();
  if (!(alpha_init > 0.0)) throw std::invalid_argument("scenario: alpha_init must be positive");
  for (const auto& [bus, prof] : load_p_w) {
    if (bus < 0 || bus >= network.bus_count() || prof.values.empty()) {
      throw std::invalid_argument("scenario: bad load profile");
    }
  }
}

std::pair<int, int> Trajectory::service_columns(int k) const {
  int first = 0;
  for (int j = 0; j < static_cast<int>(measurement_service.size()); ++j) {
    if (measurement_service[j] == k) {
      first = j;
      int last = j;
      while (last < static_cast<int>(measurement_service.size()) &&
             measurement_service[last] == k) {
        ++last;
      }
      return {first, last};
    }
  }
  throw std::out_of_range("trajectory: unknown service index");
}

Eigen::MatrixXd Trajectory::service_block(const Eigen::MatrixXd& m, int k) const {
  auto [first, last] = service_columns(k);
  return m.middleCols(first, last - first);
}

Trajectory run(const Scenario& sc) {
  sc.validate();
  const int n_ticks = static_cast<int>(std::round(sc.horizon_s / sc.tick_s)) + 1;
  const int nd = static_cast<int>(sc.devices.size());
  const int nk = static_cast<int>(sc.services.size());
  const double sb = sc.network.base_power_w;

  NetworkModel net = sc.network;

  // Concatenated measurement layout.
  std::vector<MeasurementSpec> specs;
  std::vector<int> meas_service;
  std::vector<int> svc_offset(nk + 1, 0);
  for (int k = 0; k < nk; ++k) {
    svc_offset[k] = static_cast<int>(specs.size());
    for (const MeasurementSpec& m : sc.services[k].measurements) {
      specs.push_back(m);
      meas_service.push_back(k);
    }
  }
  svc_offset[nk] = static_cast<int>(specs.size());
  const int nm = static_cast<int>(specs.size());

  std::vector<int> der_buses(nd);
  for (int i = 0; i < nd; ++i) der_buses[i] = sc.devices[i].device.bus;

  // Loads at t=0 define the linearization operating point.
  auto apply_loads = [&](double t) {
    for (const auto& [bus, prof] : sc.load_p_w) net.loads[bus].p_w = prof.at(t);
    for (const auto& [bus, prof] : sc.load_q_var) net.loads[bus].q_var = prof.at(t);
  };
  apply_loads(0.0);

  size_t next_event = 0;
  auto apply_events = [&](double t) {
    bool changed = false;
    while (next_event < sc.tap_events.size() && sc.tap_events[next_event].t_s <= t) {
      net.tap_ratio = sc.tap_events[next_event].tap_ratio;
      ++next_event;
      changed = true;
    }
    return changed;
  };
  apply_events(0.0);  // events at t<=0 take effect before the first solve

  // The controller's model of the network, built once up front. Tap events
  // are deliberately not folded back in unless the scenario says so: the
  // resulting model mismatch is part of what the scenarios exercise.
  SensitivityModel sens = build_sensitivities(net, specs, der_buses);
  std::vector<SensitivityRows> svc_sens(nk);
  auto slice_sens = [&]() {
    for (int k = 0; k < nk; ++k) {
      const int m0 = svc_offset[k], m1 = svc_offset[k + 1];
      svc_sens[k].dp = sens.dg_dp.middleRows(m0, m1 - m0);
      svc_sens[k].dq = sens.dg_dq.middleRows(m0, m1 - m0);
    }
  };
  slice_sens();

  // Controller and coordinator state.
  std::vector<ControllerState> ctl(nd);
  std::vector<double> soc(nd, 0.0);
  for (int i = 0; i < nd; ++i) {
    const ScenarioDevice& d = sc.devices[i];
    ctl[i].alpha = ctl[i].alpha_init = sc.alpha_init;
    soc[i] = d.initial_soc_pct;
    if (d.device.kind == DerDevice::Kind::pv) {
      auto [p, q] = project_pv(d.availability_w.at(0.0), 0.0, d.device.pv,
                               d.availability_w.at(0.0));
      ctl[i].p_pu = p / sb;
      ctl[i].q_pu = q / sb;
    }
    ctl[i].prev_p_pu = ctl[i].p_pu;
    ctl[i].prev_q_pu = ctl[i].q_pu;
  }
  std::vector<CoordinatorState> coord;
  coord.reserve(nk);
  for (int k = 0; k < nk; ++k) {
    coord.emplace_back(svc_offset[k + 1] - svc_offset[k], sc.services[k].beta_init);
  }

  Trajectory tr;
  tr.tick_s = sc.tick_s;
  for (const ScenarioDevice& d : sc.devices) tr.device_ids.push_back(d.device.id);
  for (const GridService& s : sc.services) tr.service_ids.push_back(s.id);
  for (const MeasurementSpec& m : specs) {
    tr.measurement_ids.push_back(m.id);
    tr.measurement_kinds.push_back(m.kind);
  }
  tr.measurement_service = meas_service;
  tr.t_s.resize(n_ticks);
  tr.tap.resize(n_ticks);
  tr.g.resize(n_ticks, nm);
  tr.g_lower.resize(n_ticks, nm);
  tr.g_upper.resize(n_ticks, nm);
  tr.d_lower.resize(n_ticks, nm);
  tr.d_upper.resize(n_ticks, nm);
  tr.beta.resize(n_ticks, nk);
  tr.s_cos_dual.resize(n_ticks, nk);
  tr.p_w.resize(n_ticks, nd);
  tr.q_var.resize(n_ticks, nd);
  tr.alpha.resize(n_ticks, nd);
  tr.s_cos_primal.resize(n_ticks, nd);
  tr.soc_pct.resize(n_ticks, nd);
  tr.p_av_w.resize(n_ticks, nd);
  tr.hp.resize(n_ticks, nd * nk);
  tr.hq.resize(n_ticks, nd * nk);

  auto truncate_to = [&](int rows) {
    tr.t_s.resize(rows);
    tr.tap.resize(rows);
    tr.g.conservativeResize(rows, Eigen::NoChange);
    tr.g_lower.conservativeResize(rows, Eigen::NoChange);
    tr.g_upper.conservativeResize(rows, Eigen::NoChange);
    tr.d_lower.conservativeResize(rows, Eigen::NoChange);
    tr.d_upper.conservativeResize(rows, Eigen::NoChange);
    tr.beta.conservativeResize(rows, Eigen::NoChange);
    tr.s_cos_dual.conservativeResize(rows, Eigen::NoChange);
    tr.p_w.conservativeResize(rows, Eigen::NoChange);
    tr.q_var.conservativeResize(rows, Eigen::NoChange);
    tr.alpha.conservativeResize(rows, Eigen::NoChange);
    tr.s_cos_primal.conservativeResize(rows, Eigen::NoChange);
    tr.soc_pct.conservativeResize(rows, Eigen::NoChange);
    tr.p_av_w.conservativeResize(rows, Eigen::NoChange);
    tr.hp.conservativeResize(rows, Eigen::NoChange);
    tr.hq.conservativeResize(rows, Eigen::NoChange);
  };

  std::vector<std::complex<double>> inj(net.bus_count());

  for (int tk = 0; tk < n_ticks; ++tk) {
    const double t = tk * sc.tick_s;
    if (apply_events(t) && sc.rebuild_sensitivities_on_tap) {
      sens = build_sensitivities(net, specs, der_buses);
      slice_sens();
    }
    apply_loads(t);

    std::fill(inj.begin(), inj.end(), std::complex<double>(0.0, 0.0));
    for (int i = 0; i < nd; ++i) {
      inj[sc.devices[i].device.bus] += std::complex<double>(ctl[i].p_pu, ctl[i].q_pu);
    }
    const PowerFlowSolution sol = solve_power_flow(net, inj);
    if (!sol.converged) {
      truncate_to(tk);
      tr.completed = false;
      tr.diagnostic = "tick " + std::to_string(tk) + " (t=" + std::to_string(t) +
                      " s): " + sol.diagnostic;
      return tr;
    }
    const std::vector<double> g_all = measure(net, sol, specs);

    // Coordinator round, one service at a time.
    Eigen::MatrixXd hp_ik(nd, nk), hq_ik(nd, nk);
    for (int k = 0; k < nk; ++k) {
      const int m0 = svc_offset[k], mk = svc_offset[k + 1] - svc_offset[k];
      Eigen::VectorXd g(mk);
      for (int j = 0; j < mk; ++j) g(j) = g_all[m0 + j];
      auto [lo, hi] = sc.services[k].bounds_at(t, sc.horizon_s);
      const DirectionSignals sig = coordinator_step(coord[k], g, lo, hi, svc_sens[k], sc.params,
                                                    sc.services[k].gamma_down);
      hp_ik.col(k) = sig.hp;
      hq_ik.col(k) = sig.hq;

      tr.g.block(tk, m0, 1, mk) = g.transpose();
      tr.g_lower.block(tk, m0, 1, mk) = lo.transpose();
      tr.g_upper.block(tk, m0, 1, mk) = hi.transpose();
      tr.d_lower.block(tk, m0, 1, mk) = coord[k].duals.lower.transpose();
      tr.d_upper.block(tk, m0, 1, mk) = coord[k].duals.upper.transpose();
      tr.beta(tk, k) = coord[k].beta;
      tr.s_cos_dual(tk, k) = coord[k].last_s_cos;
    }

    // Local controller round.
    for (int i = 0; i < nd; ++i) {
      const ScenarioDevice& d = sc.devices[i];
      LocalContext ctx;
      ctx.device = &d.device;
      ctx.p_av_w = d.device.kind == DerDevice::Kind::pv ? d.availability_w.at(t) : 0.0;
      ctx.soc_pct = soc[i];
      ctx.s_base_w = sb;
      std::vector<double> hp_i(nk), hq_i(nk);
      for (int k = 0; k < nk; ++k) {
        hp_i[k] = hp_ik(i, k);
        hq_i[k] = hq_ik(i, k);
      }
      local_controller_step(ctl[i], ctx, hp_i, hq_i, sc.params, d.gamma_down);
      if (d.device.kind == DerDevice::Kind::battery) {
        soc[i] = step_soc(soc[i], d.device.battery, ctl[i].p_pu * sb);
      }
      tr.p_w(tk, i) = ctl[i].p_pu * sb;
      tr.q_var(tk, i) = ctl[i].q_pu * sb;
      tr.alpha(tk, i) = ctl[i].alpha;
      tr.s_cos_primal(tk, i) = ctl[i].last_s_cos;
      tr.soc_pct(tk, i) = soc[i];
      tr.p_av_w(tk, i) = ctx.p_av_w;
      for (int k = 0; k < nk; ++k) {
        tr.hp(tk, i * nk + k) = hp_ik(i, k);
        tr.hq(tk, i * nk + k) = hq_ik(i, k);
      }
    }

    tr.t_s[tk] = t;
    tr.tap[tk] = net.tap_ratio;
  }
  tr.completed = true;
  return tr;
}

// --- Desk-scale fixture -----------------------------------------------------

namespace {

constexpr double kBasePowerW = 1e6;
constexpr double kBaseVoltageV = 4160.0;

// Manual baseline, found by the doubling-then-decrement procedure on the
// selftune scenario (see README "Manual baseline calibration").
constexpr double kManualStep = 0.2;

// Adaptive initial step sizes, near the values long runs settle at.
constexpr double kAlphaInit = 2e-4;
constexpr double kBetaVoltInit = 20.0;
constexpr double kBetaVppInit = 2.0;

struct SegmentSpec {
  int from, to;
  double r_pu, x_pu;
};

}  // namespace

NetworkModel desk12_network() {
  NetworkModel net;
  const double zb = kBaseVoltageV * kBaseVoltageV / kBasePowerW;
  const SegmentSpec segs[] = {
      {0, 1, 0.040, 0.080}, {1, 2, 0.048, 0.072}, {2, 3, 0.060, 0.060},
      {3, 4, 0.072, 0.058}, {4, 5, 0.080, 0.055}, {2, 6, 0.090, 0.062},
      {0, 7, 0.040, 0.080}, {7, 8, 0.055, 0.075}, {8, 9, 0.065, 0.060},
      {9, 10, 0.085, 0.055}, {9, 11, 0.095, 0.060},
  };
  for (int b = 0; b < 12; ++b) net.bus_names.push_back("bus" + std::to_string(b));
  net.loads.assign(12, BusLoad{});
  for (int b = 1; b < 12; ++b) {
    net.loads[b] = BusLoad{22e3, 7e3};
  }
  for (const SegmentSpec& s : segs) {
    net.lines.push_back(Line{s.from, s.to, s.r_pu * zb, s.x_pu * zb});
  }
  net.source_voltage_v = kBaseVoltageV;
  net.tap_ratio = 1.0;
  net.base_power_w = kBasePowerW;
  net.base_voltage_v = kBaseVoltageV;
  return net;
}

std::vector<ScenarioDevice> desk12_devices(double tick_s) {
  const int pv_buses[] = {3, 4, 5, 6, 10, 11};
  const int bat_buses[] = {5, 6, 10};
  std::vector<ScenarioDevice> out;
  for (int b : pv_buses) {
    ScenarioDevice d;
    d.device.id = "pv" + std::to_string(b);
    d.device.bus = b;
    d.device.kind = DerDevice::Kind::pv;
    d.device.pv = PvParams::rated(60e3);
    d.availability_w = Profile::constant(48e3);
    out.push_back(std::move(d));
  }
  for (int b : bat_buses) {
    ScenarioDevice d;
    d.device.id = "bat" + std::to_string(b);
    d.device.bus = b;
    d.device.kind = DerDevice::Kind::battery;
    BatteryParams bp;
    bp.cap_wh = 40e3;
    bp.p_charge_max_w = 30e3;
    bp.p_discharge_max_w = 30e3;
    bp.dt_h = tick_s / 3600.0;
    d.device.battery = bp;
    d.initial_soc_pct = 60.0;
    out.push_back(std::move(d));
  }
  return out;
}

Profile synthetic_load_profile(double base_w, double horizon_s, std::uint64_t seed) {
  Profile p;
  p.granularity_s = 900.0;  // 15-minute blocks
  Rng rng(seed);
  const int blocks = static_cast<int>(horizon_s / p.granularity_s) + 1;
  for (int b = 0; b < blocks; ++b) {
    p.values.push_back(base_w * rng.uniform(0.85, 1.15));
  }
  return p;
}

Profile smooth_pv_profile(double peak_w, double horizon_s, std::uint64_t seed) {
  Profile p;
  p.granularity_s = 60.0;  // 1-minute granularity
  Rng rng(seed);
  const int blocks = static_cast<int>(horizon_s / p.granularity_s) + 1;
  for (int b = 0; b < blocks; ++b) {
    // Gentle late-morning arc with small minute-scale irradiance noise.
    const double frac = static_cast<double>(b) / std::max(1, blocks - 1);
    const double arc = 0.92 + 0.08 * std::sin(frac * 3.14159265358979);
    p.values.push_back(peak_w * arc * rng.uniform(0.97, 1.0));
  }
  return p;
}

Profile volatile_pv_profile(double peak_w, double horizon_s, double calm_until_s,
                            std::uint64_t seed) {
  Profile base = smooth_pv_profile(peak_w, horizon_s, seed);
  Rng rng(seed ^ 0xc10dULL);
  // Cloud transients: square dips of 30-70% depth lasting 30-120 s.
  double t = calm_until_s;
  while (t < horizon_s) {
    t += rng.uniform(60.0, 240.0);  // gap to the next cloud
    const double depth = rng.uniform(0.3, 0.7);
    const double dur = rng.uniform(30.0, 120.0);
    const int first = static_cast<int>(t / base.granularity_s);
    const int last = static_cast<int>((t + dur) / base.granularity_s);
    for (int b = first; b <= last && b < static_cast<int>(base.values.size()); ++b) {
      base.values[b] *= (1.0 - depth);
    }
    t += dur;
  }
  return base;
}

namespace {

BoundSchedule constant_bounds(double lo, double hi) {
  BoundSchedule b;
  b.entries.push_back({0.0, lo, hi});
  return b;
}

GridService voltage_service(const std::vector<ScenarioDevice>& devices) {
  GridService s;
  s.id = "volt";
  s.kind = ServiceKind::voltage;
  std::vector<int> seen;
  for (const ScenarioDevice& d : devices) {
    if (std::find(seen.begin(), seen.end(), d.device.bus) != seen.end()) continue;
    seen.push_back(d.device.bus);
    MeasurementSpec m;
    m.id = "v@" + std::to_string(d.device.bus);
    m.kind = MeasurementKind::voltage_mag;
    m.bus = d.device.bus;
    s.measurements.push_back(m);
    s.bounds.push_back(constant_bounds(0.95, 1.03));
  }
  s.beta_init = kBetaVoltInit;
  s.gamma_down = 0.995;
  return s;
}

GridService vpp_head_service(double setpoint_w, double band_w) {
  GridService s;
  s.id = "vpp";
  s.kind = ServiceKind::vpp;
  MeasurementSpec m;
  m.id = "phead";
  m.kind = MeasurementKind::head_active_power;
  s.measurements.push_back(m);
  s.bounds.push_back(constant_bounds((setpoint_w - band_w) / kBasePowerW,
                                     (setpoint_w + band_w) / kBasePowerW));
  s.beta_init = kBetaVppInit;
  s.gamma_down = 0.5;
  return s;
}

// VPP over the two feeder branches, with step changes in the set points.
GridService vpp_subtree_service(double horizon_s) {
  GridService s;
  s.id = "vpp";
  s.kind = ServiceKind::vpp;
  const double band = 10e3 / kBasePowerW;

  MeasurementSpec ma;
  ma.id = "psub@1";
  ma.kind = MeasurementKind::subtree_active_power;
  ma.bus = 1;
  s.measurements.push_back(ma);
  MeasurementSpec mb;
  mb.id = "psub@7";
  mb.kind = MeasurementKind::subtree_active_power;
  mb.bus = 7;
  s.measurements.push_back(mb);

  // Set points sized to the branch head flows at the initial dispatch; the
  // steps mirror an operator raising one branch while lowering the other,
  // then partially reverting.
  const double sa0 = -35e3 / kBasePowerW, sb0 = -55e3 / kBasePowerW;
  const double step1 = 50e3 / kBasePowerW, step2 = 25e3 / kBasePowerW;
  BoundSchedule ba;
  ba.entries.push_back({0.0, sa0 - band, sa0 + band});
  ba.entries.push_back({1800.0, sa0 + step1 - band, sa0 + step1 + band});
  ba.entries.push_back({4500.0, sa0 + step1 - step2 - band, sa0 + step1 - step2 + band});
  (void)horizon_s;
  BoundSchedule bb;
  bb.entries.push_back({0.0, sb0 - band, sb0 + band});
  bb.entries.push_back({1800.0, sb0 - step1 - band, sb0 - step1 + band});
  bb.entries.push_back({4500.0, sb0 - step1 + step2 - band, sb0 - step1 + step2 + band});
  s.bounds = {ba, bb};
  s.beta_init = kBetaVppInit;
  s.gamma_down = 0.5;
  return s;
}

Scenario base_scenario(const std::string& id, double horizon_s, std::uint64_t seed) {
  Scenario sc;
  sc.id = id;
  sc.horizon_s = horizon_s;
  sc.tick_s = 2.0;
  sc.network = desk12_network();
  sc.devices = desk12_devices(sc.tick_s);
  sc.seed = seed;
  sc.alpha_init = kAlphaInit;
  Rng mix(seed);
  for (int b = 1; b < 12; ++b) {
    sc.load_p_w[b] = synthetic_load_profile(sc.network.loads[b].p_w, horizon_s, mix.next());
    sc.load_q_var[b] = synthetic_load_profile(sc.network.loads[b].q_var, horizon_s, mix.next());
  }
  for (ScenarioDevice& d : sc.devices) {
    if (d.device.kind == DerDevice::Kind::pv) {
      d.availability_w = smooth_pv_profile(48e3, horizon_s, mix.next());
    }
  }
  return sc;
}

}  // namespace

double manual_step_size() { return kManualStep; }

std::vector<std::string> builtin_scenario_names() {
  return {"selftune-base", "selftune-low", "selftune-high", "vpp-step",
          "pv-fluct",      "tap-change",   "priority-conflict"};
}

Scenario builtin_scenario(const std::string& name, RunMode mode, std::uint64_t seed) {
  Scenario sc;
  if (name == "selftune-base" || name == "selftune-low" || name == "selftune-high") {
    sc = base_scenario(name, 7200.0, seed);
    sc.description = "steady conditions; step sizes must find their level";
    sc.network.tap_ratio = 1.02;
    sc.services = {voltage_service(sc.devices), vpp_head_service(-30e3, 10e3)};
    if (name == "selftune-low") {
      sc.alpha_init /= 100.0;
      for (GridService& s : sc.services) s.beta_init /= 100.0;
    } else if (name == "selftune-high") {
      sc.alpha_init *= 100.0;
      for (GridService& s : sc.services) s.beta_init *= 100.0;
    }
  } else if (name == "vpp-step") {
    sc = base_scenario(name, 7200.0, seed);
    sc.description = "per-branch VPP set points step up and back";
    sc.network.tap_ratio = 1.02;
    sc.services = {voltage_service(sc.devices), vpp_subtree_service(sc.horizon_s)};
  } else if (name == "pv-fluct") {
    sc = base_scenario(name, 7200.0, seed);
    sc.description = "cloud transients from t=30 min; VPP priority raised";
    sc.network.tap_ratio = 1.02;
    sc.services = {voltage_service(sc.devices), vpp_head_service(-30e3, 10e3)};
    Rng mix(seed ^ 0x50f7ULL);
    for (ScenarioDevice& d : sc.devices) {
      if (d.device.kind == DerDevice::Kind::pv) {
        d.availability_w = volatile_pv_profile(48e3, sc.horizon_s, 1800.0, mix.next());
      }
      d.gamma_down = 0.8;
    }
    for (GridService& s : sc.services) {
      if (s.kind == ServiceKind::vpp) s.gamma_down = 0.995;
    }
  } else if (name == "tap-change") {
    sc = base_scenario(name, 7200.0, seed);
    sc.description = "LTC overshoots down then up; voltage priority lowered";
    sc.network.tap_ratio = 1.0;
    sc.services = {voltage_service(sc.devices), vpp_head_service(-30e3, 10e3)};
    sc.tap_events = {{1800.0, 0.96}, {3600.0, 1.05}};
    for (GridService& s : sc.services) {
      if (s.kind == ServiceKind::voltage) s.gamma_down = 0.25;
    }
  } else if (name == "priority-conflict") {
    sc = base_scenario(name, 3600.0, seed);
    sc.description = "voltage and VPP bounds jointly unsatisfiable";
    sc.network.tap_ratio = 0.97;
    sc.services = {voltage_service(sc.devices), vpp_head_service(60e3, 10e3)};
    for (GridService& s : sc.services) s.gamma_down = 0.9;
  } else {
    throw std::invalid_argument("unknown built-in scenario '" + name + "'");
  }

  sc.mode = mode;
  if (mode == RunMode::manual) {
    sc.params.manual_mode = true;
    sc.alpha_init = kManualStep;
    for (GridService& s : sc.services) s.beta_init = kManualStep;
  }
  return sc;
}

}  // namespace derms

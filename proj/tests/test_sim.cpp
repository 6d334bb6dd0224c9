#include <doctest.h>

#include <cmath>

#include "derms/sim.hpp"

using namespace derms;

namespace {

// A tiny static scenario built for exact reasoning: one PV on a 2-bus line,
// constant load, one voltage service with wide bounds.
Scenario tiny_scenario(double horizon_s = 60.0) {
  Scenario sc;
  sc.id = "tiny";
  sc.horizon_s = horizon_s;
  sc.tick_s = 2.0;

  NetworkModel net;
  net.bus_names = {"head", "end"};
  net.base_power_w = 1e6;
  net.base_voltage_v = 4160.0;
  net.source_voltage_v = 4160.0;
  const double zb = net.z_base_ohm();
  net.loads = {BusLoad{}, BusLoad{20e3, 5e3}};
  net.lines = {Line{0, 1, 0.02 * zb, 0.02 * zb}};
  sc.network = net;

  ScenarioDevice d;
  d.device.id = "pv1";
  d.device.bus = 1;
  d.device.kind = DerDevice::Kind::pv;
  d.device.pv = PvParams::rated(60e3);
  d.availability_w = Profile::constant(48e3);
  sc.devices.push_back(d);

  GridService volt;
  volt.id = "volt";
  volt.kind = ServiceKind::voltage;
  volt.measurements.push_back({"v@1", MeasurementKind::voltage_mag, 1});
  BoundSchedule b;
  b.entries.push_back({0.0, 0.90, 1.10});
  volt.bounds.push_back(b);
  volt.beta_init = 1.0;
  volt.gamma_down = 0.995;
  sc.services.push_back(volt);

  sc.alpha_init = 1e-4;
  return sc;
}

bool trajectories_identical(const Trajectory& a, const Trajectory& b, Eigen::Index rows) {
  if (a.g.rows() < rows || b.g.rows() < rows) return false;
  auto eq = [&](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    return x.topRows(rows) == y.topRows(rows);
  };
  return eq(a.g, b.g) && eq(a.d_lower, b.d_lower) && eq(a.d_upper, b.d_upper) &&
         eq(a.beta, b.beta) && eq(a.p_w, b.p_w) && eq(a.q_var, b.q_var) &&
         eq(a.alpha, b.alpha) && eq(a.soc_pct, b.soc_pct) && eq(a.hp, b.hp) && eq(a.hq, b.hq);
}

}  // namespace

TEST_SUITE("sim") {

TEST_CASE("quiescent scenario is constant after the first tick") {
  Scenario sc = tiny_scenario();
  sc.params.nu = 0.0;  // the fixed-point statement needs the bare cost
  const Trajectory tr = run(sc);
  REQUIRE(tr.completed);
  REQUIRE(tr.ticks() == 31);  // horizon/tick + 1
  for (Eigen::Index t = 1; t < tr.ticks(); ++t) {
    CHECK(tr.p_w(t, 0) == tr.p_w(0, 0));
    CHECK(tr.q_var(t, 0) == tr.q_var(0, 0));
    CHECK(tr.alpha(t, 0) == tr.alpha(0, 0));
    CHECK(tr.beta(t, 0) == tr.beta(0, 0));
    CHECK(tr.d_lower(t, 0) == 0.0);
    CHECK(tr.d_upper(t, 0) == 0.0);
  }
}

TEST_CASE("two runs of the same scenario are bitwise identical") {
  const Scenario sc = builtin_scenario("selftune-base", RunMode::adaptive, 7);
  Scenario shorter = sc;
  shorter.horizon_s = 120.0;
  const Trajectory a = run(shorter);
  const Trajectory b = run(shorter);
  REQUIRE(a.completed);
  CHECK(trajectories_identical(a, b, a.ticks()));
}

TEST_CASE("changing the seed changes the profiles") {
  Scenario a = builtin_scenario("selftune-base", RunMode::adaptive, 1);
  Scenario b = builtin_scenario("selftune-base", RunMode::adaptive, 2);
  a.horizon_s = b.horizon_s = 120.0;
  const Trajectory ta = run(a);
  const Trajectory tb = run(b);
  CHECK_FALSE(trajectories_identical(ta, tb, ta.ticks()));
}

TEST_CASE("signals are causal: the future does not reach back") {
  Scenario base = builtin_scenario("selftune-base", RunMode::adaptive, 5);
  base.horizon_s = 240.0;
  Scenario perturbed = base;
  // Rewrite every PV profile value after t=120 s.
  for (ScenarioDevice& d : perturbed.devices) {
    if (d.device.kind != DerDevice::Kind::pv) continue;
    Profile& p = d.availability_w;
    for (size_t i = 0; i < p.values.size(); ++i) {
      if (static_cast<double>(i) * p.granularity_s > 120.0) p.values[i] *= 0.25;
    }
  }
  const Trajectory a = run(base);
  const Trajectory b = run(perturbed);
  const auto prefix_rows = static_cast<Eigen::Index>(120.0 / base.tick_s) + 1;
  CHECK(trajectories_identical(a, b, prefix_rows));
  CHECK_FALSE(trajectories_identical(a, b, a.ticks()));
}

TEST_CASE("tap events take effect exactly at their tick") {
  Scenario sc = tiny_scenario(40.0);
  sc.tap_events = {{20.0, 1.05}};
  const Trajectory tr = run(sc);
  REQUIRE(tr.completed);
  const auto idx = static_cast<Eigen::Index>(20.0 / sc.tick_s);
  CHECK(tr.tap[idx - 1] == 1.0);
  CHECK(tr.tap[idx] == 1.05);
  // The measured voltage jumps with the tap at the same tick, not one later.
  CHECK(tr.g(idx, 0) > tr.g(idx - 1, 0) + 0.03);
}

TEST_CASE("horizon must be a multiple of the tick") {
  Scenario sc = tiny_scenario();
  sc.horizon_s = 61.0;
  CHECK_THROWS_AS(run(sc), std::invalid_argument);
}

TEST_CASE("plant divergence aborts with a partial trajectory") {
  Scenario sc = tiny_scenario(600.0);
  // A mid-run load far beyond maximum transfer collapses the plant solve.
  Profile p;
  p.granularity_s = 60.0;
  p.values = {20e3, 20e3, 20e3, 20e3, 20e3, 4e8};
  sc.load_p_w[1] = p;
  const Trajectory tr = run(sc);
  CHECK_FALSE(tr.completed);
  CHECK_FALSE(tr.diagnostic.empty());
  CHECK(tr.ticks() < 301);
  CHECK(tr.ticks() > 0);
}

TEST_CASE("builtin catalog matches its contract") {
  const auto names = builtin_scenario_names();
  CHECK(names.size() >= 4);
  for (const std::string& name : names) {
    for (RunMode mode : {RunMode::adaptive, RunMode::manual}) {
      const Scenario sc = builtin_scenario(name, mode, 3);
      CHECK_NOTHROW(sc.validate());
      if (mode == RunMode::manual) {
        CHECK(sc.params.manual_mode);
        CHECK(sc.alpha_init == manual_step_size());
      }
    }
  }

  SUBCASE("tap scenario steps down then up") {
    const Scenario sc = builtin_scenario("tap-change", RunMode::adaptive, 3);
    REQUIRE(sc.tap_events.size() == 2);
    const double before = sc.network.tap_ratio;
    CHECK(sc.tap_events[0].tap_ratio < before);
    CHECK(sc.tap_events[1].tap_ratio > sc.tap_events[0].tap_ratio);
    CHECK(sc.tap_events[1].tap_ratio > before);
  }
  SUBCASE("pv-fluct raises VPP priority and loosens the DER factor") {
    const Scenario sc = builtin_scenario("pv-fluct", RunMode::adaptive, 3);
    for (const GridService& s : sc.services) {
      if (s.kind == ServiceKind::vpp) CHECK(s.gamma_down == 0.995);
    }
    for (const ScenarioDevice& d : sc.devices) CHECK(d.gamma_down == 0.8);
  }
  SUBCASE("volatile PV profiles actually dip") {
    const Scenario sc = builtin_scenario("pv-fluct", RunMode::adaptive, 3);
    bool found_dip = false;
    for (const ScenarioDevice& d : sc.devices) {
      if (d.device.kind != DerDevice::Kind::pv) continue;
      for (double t = 1800.0; t < sc.horizon_s; t += 30.0) {
        if (d.availability_w.at(t) < 0.75 * d.availability_w.at(0.0)) found_dip = true;
      }
    }
    CHECK(found_dip);
  }
}

TEST_CASE("trajectory layout helpers") {
  Scenario sc = builtin_scenario("selftune-base", RunMode::adaptive, 7);
  sc.horizon_s = 20.0;
  const Trajectory tr = run(sc);
  REQUIRE(tr.completed);
  auto [v0, v1] = tr.service_columns(0);
  auto [p0, p1] = tr.service_columns(1);
  CHECK(v0 == 0);
  CHECK(v1 == p0);
  CHECK(p1 == static_cast<int>(tr.measurement_ids.size()));
  CHECK(tr.service_block(tr.g, 1).cols() == p1 - p0);
}

}  // TEST_SUITE

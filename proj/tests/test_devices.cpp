#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "derms/devices.hpp"

using namespace derms;

namespace {

struct Rng {
  std::uint64_t state;
  explicit Rng(std::uint64_t s) : state(s) {}
  double u01() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return static_cast<double>((z ^ (z >> 31)) >> 11) * 0x1.0p-53;
  }
  double range(double lo, double hi) { return lo + (hi - lo) * u01(); }
};

// Independent oracle: scan a dense grid over the feasible set (grid columns
// in P, step-spaced Q samples plus the exact column boundary) for the point
// nearest to (p, q). Column-wise minimization over Q is exact because for
// fixed P the distance is monotone in |Q - q|, so the scan is equivalent to
// enumerating the whole 2-D grid at a fraction of the cost.
std::pair<double, double> grid_project_pv(double p, double q, const PvParams& pv, double p_av,
                                          double step) {
  const double inv = pv.inv_w;
  const double p_hi = std::min(p_av, inv);
  double best_p = 0.0, best_q = 0.0, best_d = std::numeric_limits<double>::infinity();
  const long np = static_cast<long>(std::ceil(p_hi / step));
  for (long ip = 0; ip <= np; ++ip) {
    const double pc = std::min(p_hi, ip * step);
    const double q_max = std::sqrt(std::max(0.0, inv * inv - pc * pc));
    double qc;
    if (std::abs(q) >= q_max) {
      qc = std::copysign(q_max, q);
    } else {
      qc = std::round(q / step) * step;
      if (std::abs(qc) > q_max) qc = std::copysign(q_max, q);
    }
    const double d = std::hypot(p - pc, q - qc);
    if (d < best_d) {
      best_d = d;
      best_p = pc;
      best_q = qc;
    }
  }
  return {best_p, best_q};
}

}  // namespace

TEST_SUITE("devices") {

TEST_CASE("pv cost gradient at the available power is zero") {
  const PvParams pv = PvParams::rated(10'000.0);
  auto [gp, gq] = pv_cost_gradient(pv, 8'000.0, 0.0, 8'000.0);
  CHECK(gp == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(gq == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("pv cost gradient matches the stated formula") {
  const PvParams pv = PvParams::rated(10'000.0);
  auto [gp, gq] = pv_cost_gradient(pv, 6'000.0, 0.0, 8'000.0);
  CHECK(gp == doctest::Approx(2.0 * (0.2 / 10'000.0) * (-2'000.0)).epsilon(1e-12));
  CHECK(gp == doctest::Approx(-0.08).epsilon(1e-12));
  CHECK(gq == 0.0);
}

TEST_CASE("battery at its preferred SOC and idle has zero gradient") {
  BatteryParams bat;
  bat.cap_wh = 20'000.0;
  bat.dt_h = 2.0 / 3600.0;
  auto [gp, gq] = battery_cost_gradient(bat, 0.0, 60.0);
  CHECK(gp == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(gq == 0.0);
}

TEST_CASE("feasible points project to themselves") {
  const PvParams pv = PvParams::rated(10'000.0);
  auto [p, q] = project_pv(4'000.0, 3'000.0, pv, 8'000.0);
  CHECK(p == 4'000.0);
  CHECK(q == 3'000.0);
}

TEST_CASE("axis overshoot projects radially onto the disk") {
  const PvParams pv = PvParams::rated(10'000.0);
  auto [p, q] = project_pv(20'000.0, 0.0, pv, 12'000.0);
  CHECK(p == doctest::Approx(10'000.0).epsilon(1e-12));
  CHECK(q == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("negative available power is a parameter error") {
  const PvParams pv = PvParams::rated(10'000.0);
  CHECK_THROWS_AS(project_pv(0.0, 0.0, pv, -1.0), std::invalid_argument);
}

TEST_CASE("spec corner case agrees with the grid oracle") {
  const PvParams pv = PvParams::rated(10'000.0);
  const double p_av = 0.6 * pv.inv_w;
  const double x = 1.5 * p_av, y = 1.5 * p_av;
  auto [p, q] = project_pv(x, y, pv, p_av);
  auto [gp, gq] = grid_project_pv(x, y, pv, p_av, 1e-3 * pv.inv_w);
  CHECK(std::hypot(p - gp, q - gq) <= 2e-3 * pv.inv_w);
  CHECK(std::hypot(x - p, y - q) <= std::hypot(x - gp, y - gq) + 1e-9 * pv.inv_w);
}

TEST_CASE("random projections match the grid oracle") {
  Rng rng(7);
  for (int param = 0; param < 5; ++param) {
    const PvParams pv = PvParams::rated(rng.range(2'000.0, 40'000.0));
    const double p_av = rng.range(0.0, 1.4) * pv.inv_w;
    for (int trial = 0; trial < 40; ++trial) {
      const double x = rng.range(-2.0, 2.5) * pv.inv_w;
      const double y = rng.range(-2.5, 2.5) * pv.inv_w;
      auto [p, q] = project_pv(x, y, pv, p_av);
      // Returned point is feasible...
      CHECK(p >= -1e-9 * pv.inv_w);
      CHECK(p <= p_av + 1e-9 * pv.inv_w);
      CHECK(p * p + q * q <= pv.inv_w * pv.inv_w * (1.0 + 1e-9));
      // ...and no farther from the query than the best grid point, with the
      // grid distance within its discretization bound of ours. (Positions may
      // drift along the disk arc, where the distance is second-order flat.)
      auto [gp, gq] = grid_project_pv(x, y, pv, p_av, 1e-3 * pv.inv_w);
      const double d_mine = std::hypot(x - p, y - q);
      const double d_grid = std::hypot(x - gp, y - gq);
      CHECK(d_mine <= d_grid + 1e-9 * pv.inv_w);
      CHECK(d_grid - d_mine <= 2e-3 * pv.inv_w);
    }
  }
}

TEST_CASE("projection is idempotent and nonexpansive") {
  Rng rng(11);
  const PvParams pv = PvParams::rated(10'000.0);
  BatteryParams bat;
  bat.cap_wh = 20'000.0;
  bat.p_charge_max_w = 5'000.0;
  bat.p_discharge_max_w = 5'000.0;
  bat.dt_h = 2.0 / 3600.0;
  for (int trial = 0; trial < 200; ++trial) {
    const double p_av = rng.range(0.0, 1.2) * pv.inv_w;
    const double x1 = rng.range(-2.0, 2.0) * pv.inv_w, y1 = rng.range(-2.0, 2.0) * pv.inv_w;
    const double x2 = rng.range(-2.0, 2.0) * pv.inv_w, y2 = rng.range(-2.0, 2.0) * pv.inv_w;
    auto [p1, q1] = project_pv(x1, y1, pv, p_av);
    auto [p2, q2] = project_pv(x2, y2, pv, p_av);
    auto [pp1, qq1] = project_pv(p1, q1, pv, p_av);
    CHECK(std::hypot(pp1 - p1, qq1 - q1) <= 1e-9 * pv.inv_w);
    CHECK(std::hypot(p1 - p2, q1 - q2) <= std::hypot(x1 - x2, y1 - y2) + 1e-9 * pv.inv_w);

    const double soc = rng.range(10.0, 90.0);
    const double b1 = rng.range(-2.0, 2.0) * bat.p_discharge_max_w;
    const double b2 = rng.range(-2.0, 2.0) * bat.p_discharge_max_w;
    const double pb1 = project_battery(b1, bat, soc);
    const double pb2 = project_battery(b2, bat, soc);
    CHECK(project_battery(pb1, bat, soc) == pb1);
    CHECK(std::abs(pb1 - pb2) <= std::abs(b1 - b2) + 1e-12);
  }
}

TEST_CASE("battery limits follow the SOC window") {
  BatteryParams bat;
  bat.cap_wh = 20'000.0;
  bat.soc_min_pct = 10.0;
  bat.soc_max_pct = 90.0;
  bat.p_charge_max_w = 5'000.0;
  bat.p_discharge_max_w = 5'000.0;
  bat.dt_h = 2.0 / 3600.0;

  SUBCASE("inside the window both rate limits apply") {
    auto [lo, hi] = battery_power_limits(bat, 50.0);
    CHECK(hi == doctest::Approx(std::min(5'000.0, 0.40 * 20'000.0 * 3600.0 / 2.0)));
    CHECK(hi == doctest::Approx(5'000.0));
    CHECK(lo == doctest::Approx(-5'000.0));
    CHECK(project_battery(1'234.0, bat, 50.0) == 1'234.0);
  }
  SUBCASE("at the floor no further discharge is allowed") {
    auto [lo, hi] = battery_power_limits(bat, 10.0);
    CHECK(hi == 0.0);
    CHECK(lo < 0.0);
    CHECK(project_battery(3'000.0, bat, 10.0) == 0.0);
  }
  SUBCASE("near the ceiling charging is energy-limited") {
    auto [lo, hi] = battery_power_limits(bat, 89.999);
    const double headroom_w = (90.0 - 89.999) / 100.0 * 20'000.0 / bat.dt_h;
    CHECK(lo == doctest::Approx(-headroom_w));
    CHECK(hi > 0.0);
  }
}

TEST_CASE("soc steps by the implemented energy and round-trips") {
  BatteryParams bat;
  bat.cap_wh = 7'200.0;
  bat.dt_h = 1.0;
  bat.soc_min_pct = 0.0;
  bat.soc_max_pct = 100.0;
  CHECK(step_soc(60.0, bat, 0.0) == 60.0);
  CHECK(step_soc(60.0, bat, 3'600.0) == doctest::Approx(10.0).epsilon(1e-12));

  // Discharge then charge the same energy: back where it started.
  const double mid = step_soc(60.0, bat, 1'000.0);
  CHECK(step_soc(mid, bat, -1'000.0) == doctest::Approx(60.0).epsilon(1e-12));

  // The projection window is what keeps step_soc away from its clamp.
  BatteryParams strict = bat;
  strict.soc_max_pct = 90.0;
  strict.p_charge_max_w = 1e9;  // rate limit out of the way
  strict.p_discharge_max_w = 1e9;
  const double p_charge = project_battery(-3'600.0, strict, 60.0);
  const double next = 60.0 - 100.0 * p_charge * strict.dt_h / strict.cap_wh;
  CHECK(next <= strict.soc_max_pct + 1e-9);
}

}  // TEST_SUITE

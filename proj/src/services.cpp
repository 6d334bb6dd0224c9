#include "derms/services.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace derms {

void BoundSchedule::validate(double horizon_s) const {
  if (entries.empty()) throw std::invalid_argument("bound schedule: no entries");
  if (entries.front().t_s > 0.0) {
    throw std::invalid_argument("bound schedule: first entry must start at t=0");
  }
  double prev = -1.0;
  for (const Entry& e : entries) {
    if (e.t_s <= prev) throw std::invalid_argument("bound schedule: entries not time-ordered");
    if (e.t_s > horizon_s) throw std::invalid_argument("bound schedule: entry beyond horizon");
    if (!(e.lower <= e.upper)) {
      throw std::invalid_argument("bound schedule: lower bound exceeds upper bound");
    }
    prev = e.t_s;
  }
}

std::pair<double, double> BoundSchedule::at(double t_s, double horizon_s) const {
  if (t_s < 0.0 || t_s > horizon_s) {
    throw std::out_of_range("bounds_at: time outside the scenario horizon");
  }
  const Entry* active = &entries.front();
  for (const Entry& e : entries) {
    if (e.t_s <= t_s) active = &e;
    else break;
  }
  return {active->lower, active->upper};
}

void GridService::validate(double horizon_s) const {
  if (id.empty()) throw std::invalid_argument("service: empty id");
  if (measurements.empty()) throw std::invalid_argument("service '" + id + "': no measurements");
  if (bounds.size() != measurements.size()) {
    throw std::invalid_argument("service '" + id + "': bounds/measurements size mismatch");
  }
  for (const BoundSchedule& b : bounds) b.validate(horizon_s);
  if (!(beta_init > 0.0)) throw std::invalid_argument("service '" + id + "': beta_init must be positive");
  if (!(gamma_down > 0.0 && gamma_down < 1.0)) {
    throw std::invalid_argument("service '" + id + "': gamma_down must lie in (0,1)");
  }
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> GridService::bounds_at(double t_s,
                                                                   double horizon_s) const {
  Eigen::VectorXd lo(bounds.size()), hi(bounds.size());
  for (size_t j = 0; j < bounds.size(); ++j) {
    auto [l, u] = bounds[j].at(t_s, horizon_s);
    lo(static_cast<Eigen::Index>(j)) = l;
    hi(static_cast<Eigen::Index>(j)) = u;
  }
  return {lo, hi};
}

ViolationMetrics violation_metrics(const Eigen::MatrixXd& g, const Eigen::MatrixXd& lower,
                                   const Eigen::MatrixXd& upper, double tick_s) {
  if (g.rows() != lower.rows() || g.rows() != upper.rows() || g.cols() != lower.cols() ||
      g.cols() != upper.cols()) {
    throw std::invalid_argument("violation_metrics: shape mismatch");
  }
  ViolationMetrics vm;
  for (Eigen::Index j = 0; j < g.cols(); ++j) {
    int prev_region = 0;  // -1 below, 0 inside, +1 above
    for (Eigen::Index t = 0; t < g.rows(); ++t) {
      const double over = g(t, j) - upper(t, j);
      const double under = lower(t, j) - g(t, j);
      const double exceed = std::max({over, under, 0.0});
      vm.max_violation = std::max(vm.max_violation, exceed);
      vm.integral_violation += exceed * tick_s;
      const int region = over > 0.0 ? 1 : (under > 0.0 ? -1 : 0);
      if (t > 0) vm.oscillation_count += std::abs(region - prev_region);
      prev_region = region;
    }
  }
  return vm;
}

}  // namespace derms

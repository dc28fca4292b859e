#include "banditmac/traffic.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "banditmac/errors.hpp"

namespace banditmac {

std::vector<bool> slotted_busy_sample(const OccupancyVector& occ, Rng& rng) {
  std::vector<bool> busy(occ.p.size());
  for (std::size_t k = 0; k < occ.p.size(); ++k) {
    busy[k] = rng.bernoulli(occ.p[k]);
  }
  return busy;
}

std::vector<double> poisson_arrivals(double rate, double t0, double t1, Rng& rng) {
  if (rate < 0.0) throw std::invalid_argument("poisson_arrivals: negative rate");
  if (t1 < t0) throw std::invalid_argument("poisson_arrivals: window ends before it starts");
  std::vector<double> arrivals;
  if (rate == 0.0) return arrivals;
  double t = t0;
  for (;;) {
    t += rng.exponential(rate);
    if (t >= t1) break;
    arrivals.push_back(t);
  }
  return arrivals;
}

double occupancy_from_rate(double rate, double packet_duration) {
  if (rate < 0.0) throw std::invalid_argument("occupancy_from_rate: negative rate");
  if (!(packet_duration > 0.0)) {
    throw std::invalid_argument("occupancy_from_rate: packet_duration must be positive");
  }
  return 1.0 - std::exp(-rate * packet_duration);
}

double calibrate_rate(double target_occupancy, double packet_duration) {
  if (!(packet_duration > 0.0)) {
    throw std::invalid_argument("calibrate_rate: packet_duration must be positive");
  }
  if (!(target_occupancy >= 0.0) || target_occupancy >= 1.0) {
    std::ostringstream msg;
    msg << "calibrate_rate: occupancy " << target_occupancy
        << " is infeasible; achievable range is [0, 1)";
    throw CalibrationError(msg.str());
  }
  return -std::log1p(-target_occupancy) / packet_duration;
}

double uniform_success_at_scale(const PoissonTrafficConfig& traffic, const MacTiming& timing,
                                double scale) {
  if (traffic.lambda.empty()) {
    throw std::invalid_argument("uniform_success_at_scale: no channels");
  }
  const double window = timing.uplink_duration + timing.ack_duration;
  double sum = 0.0;
  for (double lam : traffic.lambda) {
    sum += std::exp(-2.0 * scale * lam * window);
  }
  return sum / static_cast<double>(traffic.lambda.size());
}

double calibrate_scenario(const PoissonTrafficConfig& traffic, const MacTiming& timing,
                          double target_uniform_success) {
  if (traffic.lambda.empty()) {
    throw std::invalid_argument("calibrate_scenario: no channels");
  }
  // Channels with zero rate stay at success 1 no matter the scale, so the
  // curve floors at (#zero-rate channels) / K as scale grows.
  std::size_t zero_rate = 0;
  for (double lam : traffic.lambda) {
    if (lam == 0.0) ++zero_rate;
  }
  const double floor = static_cast<double>(zero_rate) / static_cast<double>(traffic.lambda.size());
  if (!(target_uniform_success > floor) || !(target_uniform_success < 1.0)) {
    std::ostringstream msg;
    msg << "calibrate_scenario: target uniform success " << target_uniform_success
        << " is infeasible; achievable range is (" << floor << ", 1)";
    throw CalibrationError(msg.str());
  }

  double lo = 0.0;
  double hi = 1.0;
  while (uniform_success_at_scale(traffic, timing, hi) > target_uniform_success) {
    hi *= 2.0;
    if (hi > 1e300) throw CalibrationError("calibrate_scenario: scale search diverged");
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (uniform_success_at_scale(traffic, timing, mid) > target_uniform_success) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace banditmac

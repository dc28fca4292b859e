#pragma once

#include <cstddef>
#include <vector>

#include "banditmac/rng.hpp"
#include "banditmac/timing.hpp"

namespace banditmac {

// Per-channel busy probability for the slotted model, each in [0, 1].
struct OccupancyVector {
  std::vector<double> p;
};

// Homogeneous Poisson interferers per channel; every interferer packet has
// the same duration.
struct PoissonTrafficConfig {
  std::vector<double> lambda;   // arrivals per second, one per channel
  double packet_duration = 0.5;
};

// One background packet on the air.
struct BusyInterval {
  std::size_t channel = 0;
  double start = 0.0;
  double end = 0.0;
};

// Draws one busy indicator per channel, in channel order, from a single
// stream.
std::vector<bool> slotted_busy_sample(const OccupancyVector& occ, Rng& rng);

// Sorted arrival times in [t0, t1). rate == 0 yields no arrivals.
std::vector<double> poisson_arrivals(double rate, double t0, double t1, Rng& rng);

// Stationary busy probability of an M/G/inf channel: 1 - exp(-rate * duration).
double occupancy_from_rate(double rate, double packet_duration);

// Inverse of occupancy_from_rate. Throws CalibrationError when the target
// occupancy is not in [0, 1).
double calibrate_rate(double target_occupancy, double packet_duration);

// Analytic success probability of a device transmitting uniformly at random
// when every channel rate is multiplied by `scale`:
//   mean_k exp(-2 * scale * lambda_k * (uplink_duration + ack_duration)).
double uniform_success_at_scale(const PoissonTrafficConfig& traffic, const MacTiming& timing,
                                double scale);

// Finds the rate scale at which the analytic uniform success equals
// target_uniform_success (within 1e-9). Throws CalibrationError when the
// target lies outside the achievable range.
double calibrate_scenario(const PoissonTrafficConfig& traffic, const MacTiming& timing,
                          double target_uniform_success);

}  // namespace banditmac

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "banditmac/policy.hpp"
#include "banditmac/timing.hpp"
#include "banditmac/traffic.hpp"

namespace banditmac {

enum class CollisionMode { SlottedBernoulli, PureAloha };

const char* to_string(CollisionMode mode);
CollisionMode collision_mode_from_string(const std::string& name);

struct DeviceSpec {
  PolicyKind policy = PolicyKind::Uniform;
  double ucb_alpha = 0.5;
  // Constellation ordinal used for over-the-air addressing; defaults to the
  // device's roster position. Must be distinct across devices.
  std::size_t phy_index = 0;
};

struct CalibrationSpec {
  double target_uniform_success = 0.0;
};

struct ScenarioConfig {
  std::string name;
  std::size_t channels = 0;
  CollisionMode collision_mode = CollisionMode::SlottedBernoulli;
  // Exactly one of the two traffic blocks: occupancies for SlottedBernoulli,
  // poisson for PureAloha.
  std::optional<OccupancyVector> occupancies;
  std::optional<PoissonTrafficConfig> poisson;
  MacTiming timing;
  std::vector<DeviceSpec> devices;
  std::uint64_t horizon = 0;
  std::uint64_t repetitions = 1;
  std::uint64_t master_seed = 0;
  std::optional<CalibrationSpec> calibration;
  // false: every device runs alone against identical background realizations
  // (same-conditions policy comparison). true: one shared medium where device
  // uplinks can collide with each other and with ACKs.
  bool shared_medium = false;
  std::size_t rolling_window = 100;
};

// All violations found, in field order; empty means the scenario is valid.
std::vector<std::string> validate_scenario(const ScenarioConfig& sc);

// Throws ConfigError listing every violation.
void require_valid(const ScenarioConfig& sc);

}  // namespace banditmac

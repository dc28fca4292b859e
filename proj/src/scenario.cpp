#include "banditmac/scenario.hpp"

#include <set>
#include <sstream>

#include "banditmac/errors.hpp"
#include "banditmac/phy_frame.hpp"

namespace banditmac {

const char* to_string(CollisionMode mode) {
  switch (mode) {
    case CollisionMode::SlottedBernoulli: return "slotted_bernoulli";
    case CollisionMode::PureAloha: return "pure_aloha";
  }
  throw std::invalid_argument("unknown collision mode");
}

CollisionMode collision_mode_from_string(const std::string& name) {
  if (name == "slotted_bernoulli") return CollisionMode::SlottedBernoulli;
  if (name == "pure_aloha") return CollisionMode::PureAloha;
  throw std::invalid_argument("unknown collision mode: " + name);
}

std::vector<std::string> validate_scenario(const ScenarioConfig& sc) {
  std::vector<std::string> out;
  auto fail = [&out](const std::string& path, const std::string& what) {
    out.push_back(path + ": " + what);
  };

  if (sc.name.empty()) fail("name", "must be a non-empty string");
  if (sc.channels == 0) fail("channels", "must be at least 1");
  if (sc.horizon == 0) fail("horizon", "must be at least 1");
  if (sc.repetitions == 0) fail("repetitions", "must be at least 1");
  if (sc.rolling_window == 0) fail("rolling_window", "must be at least 1");

  const bool has_occ = sc.occupancies.has_value();
  const bool has_poisson = sc.poisson.has_value();
  if (has_occ == has_poisson) {
    fail("occupancies/poisson", "exactly one traffic block is required");
  }
  if (sc.collision_mode == CollisionMode::SlottedBernoulli && has_poisson) {
    fail("poisson", "slotted_bernoulli scenarios take an occupancies block");
  }
  if (sc.collision_mode == CollisionMode::PureAloha && has_occ) {
    fail("occupancies", "pure_aloha scenarios take a poisson block");
  }

  if (has_occ) {
    const auto& p = sc.occupancies->p;
    if (sc.channels != 0 && p.size() != sc.channels) {
      std::ostringstream msg;
      msg << "expected " << sc.channels << " entries, got " << p.size();
      fail("occupancies", msg.str());
    }
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (!(p[k] >= 0.0 && p[k] <= 1.0)) {
        std::ostringstream path;
        path << "occupancies[" << k << "]";
        fail(path.str(), "must lie in [0, 1]");
      }
    }
  }

  if (has_poisson) {
    const auto& lam = sc.poisson->lambda;
    if (sc.channels != 0 && lam.size() != sc.channels) {
      std::ostringstream msg;
      msg << "expected " << sc.channels << " entries, got " << lam.size();
      fail("poisson.lambda", msg.str());
    }
    for (std::size_t k = 0; k < lam.size(); ++k) {
      if (!(lam[k] >= 0.0)) {
        std::ostringstream path;
        path << "poisson.lambda[" << k << "]";
        fail(path.str(), "must be non-negative");
      }
    }
    if (!(sc.poisson->packet_duration > 0.0)) {
      fail("poisson.packet_duration", "must be positive");
    }
  }

  if (!(sc.timing.uplink_duration > 0.0)) fail("timing.uplink_duration", "must be positive");
  if (!(sc.timing.ack_delay > 0.0)) fail("timing.ack_delay", "must be positive");
  if (!(sc.timing.ack_duration > 0.0)) fail("timing.ack_duration", "must be positive");
  if (!(sc.timing.inter_message_period > 0.0)) {
    fail("timing.inter_message_period", "must be positive");
  } else if (!(sc.timing.ack_delay + sc.timing.ack_duration < sc.timing.inter_message_period)) {
    fail("timing", "ack_delay + ack_duration must be less than inter_message_period");
  }

  if (sc.devices.empty()) fail("devices", "need at least one device");
  if (sc.devices.size() > kConstellationSize) {
    std::ostringstream msg;
    msg << "at most " << kConstellationSize << " devices are supported, got " << sc.devices.size();
    fail("devices", msg.str());
  }
  std::set<std::size_t> phy_seen;
  for (std::size_t d = 0; d < sc.devices.size(); ++d) {
    std::ostringstream path;
    path << "devices[" << d << "]";
    if (!(sc.devices[d].ucb_alpha > 0.0)) fail(path.str() + ".ucb_alpha", "must be positive");
    if (sc.devices[d].phy_index >= kConstellationSize) {
      fail(path.str() + ".phy_index", "must lie in [0, 4)");
    } else if (!phy_seen.insert(sc.devices[d].phy_index).second) {
      fail(path.str() + ".phy_index", "duplicates another device's index");
    }
  }

  if (sc.calibration) {
    const double t = sc.calibration->target_uniform_success;
    if (!(t > 0.0 && t < 1.0)) {
      fail("calibration.target_uniform_success", "must lie in (0, 1)");
    }
    if (!has_poisson) {
      fail("calibration", "requires a poisson traffic block");
    }
  }

  return out;
}

void require_valid(const ScenarioConfig& sc) {
  auto violations = validate_scenario(sc);
  if (!violations.empty()) throw ConfigError(std::move(violations));
}

}  // namespace banditmac

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "banditmac/rng.hpp"

namespace banditmac {

enum class PolicyKind { Ucb1, ThompsonSampling, Uniform };

const char* to_string(PolicyKind kind);
PolicyKind policy_kind_from_string(const std::string& name);  // throws std::invalid_argument

// Per-channel statistics. alpha_param/beta_param mirror pulls/successes as a
// Beta posterior: alpha = 1 + successes, beta = 1 + failures, always.
struct ArmState {
  std::uint64_t pulls = 0;
  std::uint64_t successes = 0;
  double alpha_param = 1.0;
  double beta_param = 1.0;
};

struct ChannelChoice {
  std::size_t channel = 0;
  // Per-arm values behind the pick (UCB indexes or posterior samples).
  // Empty for the uniform policy.
  std::vector<double> decision_indices;
};

// Empirical mean of an arm; throws std::domain_error when pulls == 0.
double empirical_mean(const ArmState& arm);

// UCB1 index: mean + sqrt(ucb_alpha * ln(total_pulls) / pulls).
// Returns +infinity for an unpulled arm so it is explored first.
double ucb_index(const ArmState& arm, std::uint64_t total_pulls, double ucb_alpha);

// First index attaining the maximum. values must be non-empty.
std::size_t argmax_lowest_index(std::span<const double> values);

class PolicyState {
 public:
  PolicyState(PolicyKind kind, std::size_t num_channels, std::uint64_t rng_seed,
              double ucb_alpha = 0.5);

  // Picks a channel. UCB1 is deterministic and leaves the rng untouched;
  // Thompson sampling and uniform advance it.
  ChannelChoice choose();

  // Records a binary reward for a channel. Throws std::out_of_range for a bad
  // channel and std::invalid_argument for a reward outside {0, 1}.
  void update(std::size_t channel, int reward);

  PolicyKind kind() const { return kind_; }
  std::size_t num_channels() const { return arms_.size(); }
  std::uint64_t total_pulls() const { return total_pulls_; }
  double ucb_alpha() const { return ucb_alpha_; }
  const ArmState& arm(std::size_t channel) const;
  const std::vector<ArmState>& arms() const { return arms_; }

 private:
  PolicyKind kind_;
  std::vector<ArmState> arms_;
  std::uint64_t total_pulls_ = 0;
  double ucb_alpha_;
  Rng rng_;
};

}  // namespace banditmac

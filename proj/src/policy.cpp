#include "banditmac/policy.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace banditmac {

const char* to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::Ucb1: return "ucb1";
    case PolicyKind::ThompsonSampling: return "thompson_sampling";
    case PolicyKind::Uniform: return "uniform";
  }
  throw std::invalid_argument("unknown policy kind");
}

PolicyKind policy_kind_from_string(const std::string& name) {
  if (name == "ucb1") return PolicyKind::Ucb1;
  if (name == "thompson_sampling") return PolicyKind::ThompsonSampling;
  if (name == "uniform") return PolicyKind::Uniform;
  throw std::invalid_argument("unknown policy kind: " + name);
}

double empirical_mean(const ArmState& arm) {
  if (arm.pulls == 0) throw std::domain_error("empirical_mean: arm has no pulls");
  return static_cast<double>(arm.successes) / static_cast<double>(arm.pulls);
}

double ucb_index(const ArmState& arm, std::uint64_t total_pulls, double ucb_alpha) {
  if (arm.pulls == 0) return std::numeric_limits<double>::infinity();
  const double mean = static_cast<double>(arm.successes) / static_cast<double>(arm.pulls);
  const double bonus = std::sqrt(ucb_alpha * std::log(static_cast<double>(total_pulls)) /
                                 static_cast<double>(arm.pulls));
  return mean + bonus;
}

std::size_t argmax_lowest_index(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("argmax_lowest_index: empty input");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

PolicyState::PolicyState(PolicyKind kind, std::size_t num_channels, std::uint64_t rng_seed,
                         double ucb_alpha)
    : kind_(kind), arms_(num_channels), ucb_alpha_(ucb_alpha), rng_(rng_seed) {
  if (num_channels == 0) throw std::invalid_argument("PolicyState: need at least one channel");
  if (!(ucb_alpha > 0.0)) throw std::invalid_argument("PolicyState: ucb_alpha must be positive");
}

ChannelChoice PolicyState::choose() {
  ChannelChoice choice;
  switch (kind_) {
    case PolicyKind::Ucb1: {
      choice.decision_indices.resize(arms_.size());
      for (std::size_t k = 0; k < arms_.size(); ++k) {
        choice.decision_indices[k] = ucb_index(arms_[k], total_pulls_, ucb_alpha_);
      }
      choice.channel = argmax_lowest_index(choice.decision_indices);
      break;
    }
    case PolicyKind::ThompsonSampling: {
      choice.decision_indices.resize(arms_.size());
      for (std::size_t k = 0; k < arms_.size(); ++k) {
        choice.decision_indices[k] = rng_.beta(arms_[k].alpha_param, arms_[k].beta_param);
      }
      choice.channel = argmax_lowest_index(choice.decision_indices);
      break;
    }
    case PolicyKind::Uniform: {
      choice.channel = rng_.uniform_below(arms_.size());
      break;
    }
  }
  return choice;
}

void PolicyState::update(std::size_t channel, int reward) {
  if (channel >= arms_.size()) throw std::out_of_range("PolicyState::update: channel out of range");
  if (reward != 0 && reward != 1) {
    throw std::invalid_argument("PolicyState::update: reward must be 0 or 1");
  }
  ArmState& arm = arms_[channel];
  arm.pulls += 1;
  if (reward == 1) {
    arm.successes += 1;
    arm.alpha_param += 1.0;
  } else {
    arm.beta_param += 1.0;
  }
  total_pulls_ += 1;
}

const ArmState& PolicyState::arm(std::size_t channel) const {
  if (channel >= arms_.size()) throw std::out_of_range("PolicyState::arm: channel out of range");
  return arms_[channel];
}

}  // namespace banditmac

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "banditmac/mac_sim.hpp"
#include "banditmac/scenario.hpp"

namespace banditmac {

// One CSV line of the per-message metrics stream.
struct MetricsRow {
  std::uint64_t repetition = 0;  // 0-based
  std::size_t device = 0;
  PolicyKind policy = PolicyKind::Uniform;
  std::uint64_t seq = 0;  // 1-based
  std::size_t channel = 0;
  int reward = 0;
  double rolling_rate = 0.0;  // trailing-window success rate at this message

  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

// Mean curves over repetitions (and over the devices running the policy),
// indexed by message number - 1.
struct PolicyCurves {
  std::vector<double> cumulative_success;
  std::vector<double> rolling_success;
  std::vector<double> cumulative_regret;
};

struct ChannelPolicyStats {
  double transmissions = 0.0;  // mean per device per repetition
  double successes = 0.0;      // mean per device per repetition
  double success_rate = 0.0;   // pooled successes / pooled transmissions
  double ucb_index_at_horizon = 0.0;  // mean; +inf when an arm stayed unpulled
};

struct PolicyFinal {
  std::vector<std::size_t> devices;  // roster ids running this policy
  double final_success_mean = 0.0;   // cumulative success at horizon, mean over reps
  double final_success_std = 0.0;    // sample std over reps
  double final_regret_mean = 0.0;
};

struct RunSummary {
  ScenarioConfig config;  // as loaded (pre-calibration rates)
  double calibration_scale = 1.0;
  double achieved_uniform_success = 0.0;  // analytic, only meaningful when calibrated
  bool calibrated = false;
  std::vector<double> mu;  // per-channel success probability at the effective rates
  std::string mu_source;   // "analytic" or "monte_carlo"
  std::size_t best_channel = 0;
  std::map<PolicyKind, PolicyFinal> finals;
  std::map<PolicyKind, PolicyCurves> curves;
  std::vector<std::map<PolicyKind, ChannelPolicyStats>> channel_stats;  // [channel][policy]
};

struct ExperimentResult {
  RunSummary summary;
  std::vector<MetricsRow> rows;  // ordered by (repetition, device, seq)
};

// Strict JSON config loading: unknown fields, type mismatches, and semantic
// violations are all collected and reported together in a ConfigError.
ScenarioConfig load_config(const std::filesystem::path& path);
ScenarioConfig parse_config(const std::string& text, const std::string& origin);
nlohmann::json config_to_json(const ScenarioConfig& sc);

// Runs every repetition (in parallel; assembly order is deterministic),
// applying the calibration block to the traffic rates first when present.
ExperimentResult run_experiment(const ScenarioConfig& sc);

// regret(T) = T * max_k mu_k - sum of the first T rewards.
std::vector<double> compute_regret(std::span<const int> rewards, std::span<const double> mu);
std::vector<double> compute_regret(const EventTrace& trace, std::size_t device,
                                   std::span<const double> mu);

// UTF-8, LF line endings, header row, floats with 6 decimals.
void emit_csv(std::span<const MetricsRow> rows, const std::filesystem::path& path);
void emit_summary_json(const RunSummary& summary, const std::filesystem::path& path);
// Wide per-policy curve columns for direct gnuplot consumption.
void emit_curves_csv(const RunSummary& summary, const std::filesystem::path& path);
nlohmann::json summary_to_json(const RunSummary& summary);

}  // namespace banditmac

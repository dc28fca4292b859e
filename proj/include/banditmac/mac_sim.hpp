#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "banditmac/policy.hpp"
#include "banditmac/scenario.hpp"
#include "banditmac/timing.hpp"
#include "banditmac/traffic.hpp"

namespace banditmac {

// Half-open [start, end).
struct TimeInterval {
  double start = 0.0;
  double end = 0.0;
};

// Strict overlap: touching endpoints do not collide.
bool intervals_overlap(const TimeInterval& a, const TimeInterval& b);

enum class SimEventKind { UplinkStart, UplinkEnd, AckStart, AckEnd, SlotBoundary };

struct SimEvent {
  double time = 0.0;
  SimEventKind kind = SimEventKind::UplinkStart;
  std::size_t device = 0;
};

// Deterministic processing order: time, then kind in declaration order, then
// device id.
bool event_before(const SimEvent& a, const SimEvent& b);

struct TransmissionRecord {
  std::size_t device = 0;
  std::uint64_t seq = 0;  // 1-based message number within the device
  std::size_t channel = 0;
  bool uplink_ok = false;
  bool ack_ok = false;
  int reward = 0;  // 1 iff uplink_ok and ack_ok
  double time = 0.0;  // uplink start

  friend bool operator==(const TransmissionRecord&, const TransmissionRecord&) = default;
};

struct EventTrace {
  std::vector<TransmissionRecord> records;  // ordered by (time, device)
};

// A transmission survives iff nothing in `background` or `concurrent` has a
// nonzero overlap with it. The same rule covers uplinks and ACKs.
bool resolve_uplink(const TimeInterval& uplink, std::span<const TimeInterval> background,
                    std::span<const TimeInterval> concurrent);
bool resolve_ack(const TimeInterval& ack, std::span<const TimeInterval> background,
                 std::span<const TimeInterval> concurrent);

// Slotted shortcuts: a slot is lost when its channel is busy or (uplink only)
// another device picked the same channel in the same round.
bool resolve_uplink_slotted(bool channel_busy, bool concurrent_same_channel);
bool resolve_ack_slotted(bool channel_busy);

// Supplies one busy mask per slot, in slot order. The slotted engine consumes
// two slots per round (uplink slot, then ACK slot).
class SlotMaskSource {
 public:
  virtual ~SlotMaskSource() = default;
  virtual void next_slot(std::vector<bool>& busy) = 0;
};

// Independent Bernoulli draws, one stream per channel so the background a
// channel produces does not depend on device behavior.
class BernoulliMaskSource final : public SlotMaskSource {
 public:
  BernoulliMaskSource(OccupancyVector occ, std::span<const std::uint64_t> channel_seeds);
  void next_slot(std::vector<bool>& busy) override;

 private:
  OccupancyVector occ_;
  std::vector<Rng> streams_;
};

// Scripted masks for exhaustive tests.
class TableMaskSource final : public SlotMaskSource {
 public:
  explicit TableMaskSource(const std::vector<std::vector<bool>>& table) : table_(&table) {}
  void next_slot(std::vector<bool>& busy) override;
  void reset() { cursor_ = 0; }

 private:
  const std::vector<std::vector<bool>>* table_;
  std::size_t cursor_ = 0;
};

// What the engines drive: a channel pick before each message, a binary reward
// after it.
class ChannelSelector {
 public:
  virtual ~ChannelSelector() = default;
  virtual std::size_t choose() = 0;
  virtual void update(std::size_t channel, int reward) = 0;
};

class PolicySelector final : public ChannelSelector {
 public:
  explicit PolicySelector(PolicyState state) : state_(std::move(state)) {}
  std::size_t choose() override { return state_.choose().channel; }
  void update(std::size_t channel, int reward) override { state_.update(channel, reward); }
  const PolicyState& state() const { return state_; }

 private:
  PolicyState state_;
};

class FixedChannelSelector final : public ChannelSelector {
 public:
  explicit FixedChannelSelector(std::size_t channel) : channel_(channel) {}
  std::size_t choose() override { return channel_; }
  void update(std::size_t, int) override {}

 private:
  std::size_t channel_;
};

class ScriptedSelector final : public ChannelSelector {
 public:
  explicit ScriptedSelector(std::vector<std::size_t> sequence)
      : sequence_(std::move(sequence)) {}
  std::size_t choose() override;
  void update(std::size_t, int) override {}
  void reset() { cursor_ = 0; }

 private:
  std::vector<std::size_t> sequence_;
  std::size_t cursor_ = 0;
};

// Synchronized-rounds engine. Every round consumes an uplink slot mask and an
// ACK slot mask; all devices transmit in every round. Record timestamps are
// round * record_period. Device ids in the trace are positions in `devices`.
EventTrace run_slotted(std::size_t channels, std::uint64_t horizon, double record_period,
                       SlotMaskSource& masks, std::span<ChannelSelector* const> devices);

// Unslotted engine. background[k] holds channel k's interferer packets sorted
// by start time. Device i sends its first uplink at phases[i] and then every
// inter_message_period. A reward is 1 iff the uplink survived and its ACK
// both survived and finished by the next message time. ACKs never destroy
// uplinks; uplinks and background destroy ACKs; the gateway serializes ACKs
// per channel and drops one whose queue slip exceeds ack_delay.
EventTrace run_pure_aloha(std::size_t channels, std::uint64_t horizon, const MacTiming& timing,
                          const std::vector<std::vector<TimeInterval>>& background,
                          std::span<ChannelSelector* const> devices,
                          std::span<const double> phases);

// Seed derivation (fixed contract, see docs/schema.md).
std::uint64_t run_seed_for_repetition(std::uint64_t master_seed, std::uint64_t repetition);
std::uint64_t channel_stream_seed(std::uint64_t run_seed, std::size_t channel);
std::uint64_t device_policy_seed(std::uint64_t run_seed, std::size_t device);
std::uint64_t device_phase_seed(std::uint64_t run_seed, std::size_t device);

struct SimOutput {
  EventTrace trace;
  // Final policy state per device, in roster order.
  std::vector<PolicyState> policies;
};

// One repetition of a validated scenario. Bit-identical traces for identical
// (scenario, run_seed). With shared_medium=false every device runs alone
// against identical background realizations; with true they share the medium.
EventTrace run_simulation(const ScenarioConfig& sc, std::uint64_t run_seed);
SimOutput run_simulation_detailed(const ScenarioConfig& sc, std::uint64_t run_seed);

// Analytic lone-device success probability of one channel:
// slotted (1 - p_k)^2, pure ALOHA exp(-2 lambda_k (d_up + d_ack)). Errors on
// shared-medium multi-device scenarios, where no analytic form exists.
double per_channel_success_prob(const ScenarioConfig& sc, std::size_t channel);

// Empirical success rate of an extra probe device pinned to `channel`,
// appended to the configured roster for `transmissions` messages.
double probe_channel_success(const ScenarioConfig& sc, std::size_t channel,
                             std::uint64_t transmissions, std::uint64_t probe_seed);

// Replays every successful transmission through the frame layer under
// synthetic phase rotations: uplink decodes to the sender's index, the ACK
// addresses exactly that sender and no other roster member.
bool integration_check_addressing(const EventTrace& trace, std::span<const DeviceSpec> devices);

}  // namespace banditmac

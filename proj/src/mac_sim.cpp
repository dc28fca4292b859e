#include "banditmac/mac_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <queue>
#include <stdexcept>

#include "banditmac/errors.hpp"
#include "banditmac/phy_frame.hpp"

namespace banditmac {

bool intervals_overlap(const TimeInterval& a, const TimeInterval& b) {
  return a.start < b.end && b.start < a.end;
}

bool event_before(const SimEvent& a, const SimEvent& b) {
  if (a.time != b.time) return a.time < b.time;
  if (a.kind != b.kind) return static_cast<int>(a.kind) < static_cast<int>(b.kind);
  return a.device < b.device;
}

bool resolve_uplink(const TimeInterval& uplink, std::span<const TimeInterval> background,
                    std::span<const TimeInterval> concurrent) {
  for (const auto& b : background) {
    if (intervals_overlap(uplink, b)) return false;
  }
  for (const auto& c : concurrent) {
    if (intervals_overlap(uplink, c)) return false;
  }
  return true;
}

bool resolve_ack(const TimeInterval& ack, std::span<const TimeInterval> background,
                 std::span<const TimeInterval> concurrent) {
  return resolve_uplink(ack, background, concurrent);
}

bool resolve_uplink_slotted(bool channel_busy, bool concurrent_same_channel) {
  return !channel_busy && !concurrent_same_channel;
}

bool resolve_ack_slotted(bool channel_busy) { return !channel_busy; }

BernoulliMaskSource::BernoulliMaskSource(OccupancyVector occ,
                                         std::span<const std::uint64_t> channel_seeds)
    : occ_(std::move(occ)) {
  if (channel_seeds.size() != occ_.p.size()) {
    throw std::invalid_argument("BernoulliMaskSource: one seed per channel required");
  }
  streams_.reserve(channel_seeds.size());
  for (std::uint64_t s : channel_seeds) streams_.emplace_back(s);
}

void BernoulliMaskSource::next_slot(std::vector<bool>& busy) {
  busy.resize(occ_.p.size());
  for (std::size_t k = 0; k < occ_.p.size(); ++k) {
    busy[k] = streams_[k].bernoulli(occ_.p[k]);
  }
}

void TableMaskSource::next_slot(std::vector<bool>& busy) {
  if (cursor_ >= table_->size()) throw std::out_of_range("TableMaskSource: table exhausted");
  busy = (*table_)[cursor_++];
}

std::size_t ScriptedSelector::choose() {
  if (cursor_ >= sequence_.size()) throw std::out_of_range("ScriptedSelector: script exhausted");
  return sequence_[cursor_++];
}

EventTrace run_slotted(std::size_t channels, std::uint64_t horizon, double record_period,
                       SlotMaskSource& masks, std::span<ChannelSelector* const> devices) {
  if (channels == 0) throw std::invalid_argument("run_slotted: need at least one channel");
  if (devices.empty()) throw std::invalid_argument("run_slotted: need at least one device");

  EventTrace trace;
  trace.records.reserve(horizon * devices.size());
  std::vector<bool> up_busy, ack_busy;
  std::vector<std::size_t> choice(devices.size());
  std::vector<std::uint32_t> picks(channels);

  for (std::uint64_t round = 0; round < horizon; ++round) {
    masks.next_slot(up_busy);
    std::fill(picks.begin(), picks.end(), 0);
    for (std::size_t i = 0; i < devices.size(); ++i) {
      choice[i] = devices[i]->choose();
      if (choice[i] >= channels) throw std::out_of_range("run_slotted: channel out of range");
      ++picks[choice[i]];
    }
    masks.next_slot(ack_busy);
    for (std::size_t i = 0; i < devices.size(); ++i) {
      const std::size_t ch = choice[i];
      const bool up_ok = resolve_uplink_slotted(up_busy[ch], picks[ch] > 1);
      const bool ack_ok = up_ok && resolve_ack_slotted(ack_busy[ch]);
      const int reward = ack_ok ? 1 : 0;
      devices[i]->update(ch, reward);
      trace.records.push_back({i, round + 1, ch, up_ok, ack_ok, reward,
                               static_cast<double>(round) * record_period});
    }
  }
  return trace;
}

namespace {

// Uplink in flight or awaiting its reward decision.
struct PendingMsg {
  std::uint64_t seq = 0;
  std::size_t channel = 0;
  double up_start = 0.0;
  double up_end = 0.0;
  double deadline = 0.0;  // next message time; the ACK must finish by then
  bool uplink_ok = false;
  bool has_ack = false;  // gateway scheduled the ACK (not dropped)
  double ack_start = 0.0;
  double ack_end = 0.0;
};

struct EventAfter {
  bool operator()(const SimEvent& a, const SimEvent& b) const { return event_before(b, a); }
};

// Sorted-by-start intervals of one channel plus the longest duration seen,
// for O(log n) overlap probes.
struct IntervalIndex {
  std::vector<TimeInterval> items;
  double max_duration = 0.0;

  void rebuild_duration() {
    max_duration = 0.0;
    for (const auto& iv : items) max_duration = std::max(max_duration, iv.end - iv.start);
  }

  // All intervals overlapping q, in start order.
  void collect_overlaps(const TimeInterval& q, std::vector<TimeInterval>& out) const {
    out.clear();
    auto it = std::lower_bound(items.begin(), items.end(), q.start - max_duration,
                               [](const TimeInterval& iv, double t) { return iv.start < t; });
    for (; it != items.end() && it->start < q.end; ++it) {
      if (intervals_overlap(*it, q)) out.push_back(*it);
    }
  }
};

// Device uplinks on one channel, appended in start order.
struct UplinkLog {
  std::vector<std::pair<double, std::size_t>> starts;  // (start, device)

  void collect_overlaps(const TimeInterval& q, double uplink_duration, std::size_t self,
                        std::vector<TimeInterval>& out) const {
    out.clear();
    auto it = std::lower_bound(starts.begin(), starts.end(), q.start - uplink_duration,
                               [](const std::pair<double, std::size_t>& e, double t) {
                                 return e.first < t;
                               });
    for (; it != starts.end() && it->first < q.end; ++it) {
      if (it->second == self) continue;
      const TimeInterval iv{it->first, it->first + uplink_duration};
      if (intervals_overlap(iv, q)) out.push_back(iv);
    }
  }
};

}  // namespace

EventTrace run_pure_aloha(std::size_t channels, std::uint64_t horizon, const MacTiming& timing,
                          const std::vector<std::vector<TimeInterval>>& background,
                          std::span<ChannelSelector* const> devices,
                          std::span<const double> phases) {
  if (channels == 0) throw std::invalid_argument("run_pure_aloha: need at least one channel");
  if (devices.empty()) throw std::invalid_argument("run_pure_aloha: need at least one device");
  if (background.size() != channels) {
    throw std::invalid_argument("run_pure_aloha: one background list per channel required");
  }
  if (phases.size() != devices.size()) {
    throw std::invalid_argument("run_pure_aloha: one phase per device required");
  }

  const double d_up = timing.uplink_duration;
  const double d_ack = timing.ack_duration;
  const double delay = timing.ack_delay;
  const double period = timing.inter_message_period;

  std::vector<IntervalIndex> bg(channels);
  for (std::size_t k = 0; k < channels; ++k) {
    bg[k].items = background[k];
    if (!std::is_sorted(bg[k].items.begin(), bg[k].items.end(),
                        [](const TimeInterval& a, const TimeInterval& b) {
                          return a.start < b.start;
                        })) {
      throw std::invalid_argument("run_pure_aloha: background intervals must be sorted by start");
    }
    bg[k].rebuild_duration();
  }

  std::vector<UplinkLog> uplinks(channels);
  std::vector<double> gw_busy_until(channels, std::numeric_limits<double>::lowest());
  std::vector<std::optional<PendingMsg>> pending(devices.size());
  std::vector<std::uint64_t> sent(devices.size(), 0);

  EventTrace trace;
  trace.records.reserve(horizon * devices.size());

  std::vector<TimeInterval> scratch_bg, scratch_up;

  auto finalize = [&](std::size_t i) {
    if (!pending[i]) return;
    const PendingMsg& m = *pending[i];
    bool ack_ok = false;
    if (m.uplink_ok && m.has_ack && m.ack_end <= m.deadline) {
      const TimeInterval ack{m.ack_start, m.ack_end};
      bg[m.channel].collect_overlaps(ack, scratch_bg);
      uplinks[m.channel].collect_overlaps(ack, d_up, i, scratch_up);
      ack_ok = resolve_ack(ack, scratch_bg, scratch_up);
    }
    const int reward = (m.uplink_ok && ack_ok) ? 1 : 0;
    devices[i]->update(m.channel, reward);
    trace.records.push_back({i, m.seq, m.channel, m.uplink_ok, ack_ok, reward, m.up_start});
    pending[i].reset();
  };

  std::priority_queue<SimEvent, std::vector<SimEvent>, EventAfter> queue;
  for (std::size_t i = 0; i < devices.size(); ++i) {
    queue.push({phases[i], SimEventKind::UplinkStart, i});
  }

  while (!queue.empty()) {
    const SimEvent e = queue.top();
    queue.pop();
    const std::size_t i = e.device;
    switch (e.kind) {
      case SimEventKind::UplinkStart: {
        // The previous message's deadline is exactly this event's time, and
        // everything overlapping its ACK window has already started.
        finalize(i);
        if (sent[i] == horizon) break;
        const std::size_t ch = devices[i]->choose();
        if (ch >= channels) throw std::out_of_range("run_pure_aloha: channel out of range");
        PendingMsg m;
        m.seq = ++sent[i];
        m.channel = ch;
        m.up_start = e.time;
        m.up_end = e.time + d_up;
        m.deadline = e.time + period;
        pending[i] = m;
        uplinks[ch].starts.emplace_back(e.time, i);
        queue.push({m.up_end, SimEventKind::UplinkEnd, i});
        queue.push({m.deadline, SimEventKind::UplinkStart, i});
        break;
      }
      case SimEventKind::UplinkEnd: {
        PendingMsg& m = *pending[i];
        const TimeInterval up{m.up_start, m.up_end};
        bg[m.channel].collect_overlaps(up, scratch_bg);
        uplinks[m.channel].collect_overlaps(up, d_up, i, scratch_up);
        m.uplink_ok = resolve_uplink(up, scratch_bg, scratch_up);
        if (m.uplink_ok) {
          // Gateway is half-duplex per channel: ACKs queue FIFO behind the
          // one in flight and are dropped once the slip exceeds ack_delay.
          const double nominal = m.up_end + delay;
          const double actual = std::max(nominal, gw_busy_until[m.channel]);
          if (actual - nominal <= delay) {
            m.has_ack = true;
            m.ack_start = actual;
            m.ack_end = actual + d_ack;
            gw_busy_until[m.channel] = m.ack_end;
          }
        }
        break;
      }
      default:
        break;
    }
  }

  std::sort(trace.records.begin(), trace.records.end(),
            [](const TransmissionRecord& a, const TransmissionRecord& b) {
              if (a.time != b.time) return a.time < b.time;
              return a.device < b.device;
            });
  return trace;
}

std::uint64_t run_seed_for_repetition(std::uint64_t master_seed, std::uint64_t repetition) {
  return mix_seed(master_seed, repetition);
}

std::uint64_t channel_stream_seed(std::uint64_t run_seed, std::size_t channel) {
  return mix_seed(run_seed, 0x100 + channel);
}

std::uint64_t device_policy_seed(std::uint64_t run_seed, std::size_t device) {
  return mix_seed(run_seed, 0x200 + device);
}

std::uint64_t device_phase_seed(std::uint64_t run_seed, std::size_t device) {
  return mix_seed(run_seed, 0x300 + device);
}

namespace {

std::vector<std::uint64_t> channel_seeds(const ScenarioConfig& sc, std::uint64_t run_seed) {
  std::vector<std::uint64_t> seeds(sc.channels);
  for (std::size_t k = 0; k < sc.channels; ++k) seeds[k] = channel_stream_seed(run_seed, k);
  return seeds;
}

std::vector<std::vector<TimeInterval>> draw_background(const ScenarioConfig& sc,
                                                       std::uint64_t run_seed, double t_end) {
  const auto& traffic = *sc.poisson;
  std::vector<std::vector<TimeInterval>> bg(sc.channels);
  for (std::size_t k = 0; k < sc.channels; ++k) {
    Rng rng(channel_stream_seed(run_seed, k));
    // Window opens one packet early so transmissions near t=0 see the
    // stationary process.
    const auto arrivals =
        poisson_arrivals(traffic.lambda[k], -traffic.packet_duration, t_end, rng);
    bg[k].reserve(arrivals.size());
    for (double a : arrivals) bg[k].push_back({a, a + traffic.packet_duration});
  }
  return bg;
}

std::vector<double> draw_phases(const ScenarioConfig& sc, std::uint64_t run_seed,
                                std::size_t count) {
  std::vector<double> phases(count);
  for (std::size_t d = 0; d < count; ++d) {
    Rng rng(device_phase_seed(run_seed, d));
    phases[d] = rng.uniform() * sc.timing.inter_message_period;
  }
  return phases;
}

// Appends records of `from`, rewriting device ids to `device_id`.
void absorb_solo_trace(EventTrace& into, EventTrace&& from, std::size_t device_id) {
  for (auto& r : from.records) {
    r.device = device_id;
    into.records.push_back(r);
  }
}

SimOutput run_with_selectors(const ScenarioConfig& sc, std::uint64_t run_seed,
                             std::vector<std::unique_ptr<ChannelSelector>>& owners,
                             std::span<ChannelSelector* const> selectors) {
  SimOutput out;
  const std::size_t n = selectors.size();
  if (sc.collision_mode == CollisionMode::SlottedBernoulli) {
    if (sc.shared_medium || n == 1) {
      BernoulliMaskSource masks(*sc.occupancies, channel_seeds(sc, run_seed));
      out.trace = run_slotted(sc.channels, sc.horizon, sc.timing.inter_message_period, masks,
                              selectors);
    } else {
      // Matched-but-separate: identical mask streams for every device.
      for (std::size_t d = 0; d < n; ++d) {
        BernoulliMaskSource masks(*sc.occupancies, channel_seeds(sc, run_seed));
        ChannelSelector* solo[] = {selectors[d]};
        absorb_solo_trace(out.trace,
                          run_slotted(sc.channels, sc.horizon, sc.timing.inter_message_period,
                                      masks, solo),
                          d);
      }
    }
  } else {
    const auto phases = draw_phases(sc, run_seed, n);
    double max_phase = 0.0;
    for (double p : phases) max_phase = std::max(max_phase, p);
    const double t_end = max_phase + static_cast<double>(sc.horizon) * sc.timing.inter_message_period +
                         sc.timing.uplink_duration +
                         2.0 * (sc.timing.ack_delay + sc.timing.ack_duration);
    const auto bg = draw_background(sc, run_seed, t_end);
    if (sc.shared_medium || n == 1) {
      out.trace = run_pure_aloha(sc.channels, sc.horizon, sc.timing, bg, selectors, phases);
    } else {
      for (std::size_t d = 0; d < n; ++d) {
        ChannelSelector* solo[] = {selectors[d]};
        const double phase[] = {phases[d]};
        absorb_solo_trace(out.trace,
                          run_pure_aloha(sc.channels, sc.horizon, sc.timing, bg, solo, phase), d);
      }
    }
  }

  std::sort(out.trace.records.begin(), out.trace.records.end(),
            [](const TransmissionRecord& a, const TransmissionRecord& b) {
              if (a.time != b.time) return a.time < b.time;
              if (a.device != b.device) return a.device < b.device;
              return a.seq < b.seq;
            });

  for (auto& owner : owners) {
    if (auto* ps = dynamic_cast<PolicySelector*>(owner.get())) {
      out.policies.push_back(ps->state());
    }
  }
  return out;
}

}  // namespace

SimOutput run_simulation_detailed(const ScenarioConfig& sc, std::uint64_t run_seed) {
  require_valid(sc);
  std::vector<std::unique_ptr<ChannelSelector>> owners;
  std::vector<ChannelSelector*> selectors;
  for (std::size_t d = 0; d < sc.devices.size(); ++d) {
    const auto& spec = sc.devices[d];
    owners.push_back(std::make_unique<PolicySelector>(PolicyState(
        spec.policy, sc.channels, device_policy_seed(run_seed, d), spec.ucb_alpha)));
    selectors.push_back(owners.back().get());
  }
  return run_with_selectors(sc, run_seed, owners, selectors);
}

EventTrace run_simulation(const ScenarioConfig& sc, std::uint64_t run_seed) {
  return run_simulation_detailed(sc, run_seed).trace;
}

double per_channel_success_prob(const ScenarioConfig& sc, std::size_t channel) {
  if (channel >= sc.channels) {
    throw std::out_of_range("per_channel_success_prob: channel out of range");
  }
  if (sc.shared_medium && sc.devices.size() > 1) {
    throw std::invalid_argument(
        "per_channel_success_prob: no analytic form for a shared medium with multiple devices");
  }
  if (sc.collision_mode == CollisionMode::SlottedBernoulli) {
    const double p = sc.occupancies->p[channel];
    return (1.0 - p) * (1.0 - p);
  }
  const double lam = sc.poisson->lambda[channel];
  const double window = sc.timing.uplink_duration + sc.timing.ack_duration;
  return std::exp(-2.0 * lam * window);
}

double probe_channel_success(const ScenarioConfig& sc, std::size_t channel,
                             std::uint64_t transmissions, std::uint64_t probe_seed) {
  require_valid(sc);
  if (channel >= sc.channels) {
    throw std::out_of_range("probe_channel_success: channel out of range");
  }
  if (transmissions == 0) {
    throw std::invalid_argument("probe_channel_success: need at least one transmission");
  }
  ScenarioConfig probe_sc = sc;
  probe_sc.horizon = transmissions;

  std::vector<std::unique_ptr<ChannelSelector>> owners;
  std::vector<ChannelSelector*> selectors;
  for (std::size_t d = 0; d < probe_sc.devices.size(); ++d) {
    const auto& spec = probe_sc.devices[d];
    owners.push_back(std::make_unique<PolicySelector>(PolicyState(
        spec.policy, probe_sc.channels, device_policy_seed(probe_seed, d), spec.ucb_alpha)));
    selectors.push_back(owners.back().get());
  }
  const std::size_t probe_id = selectors.size();
  owners.push_back(std::make_unique<FixedChannelSelector>(channel));
  selectors.push_back(owners.back().get());

  // The probe shares the medium with the roster only when the scenario does.
  SimOutput out;
  if (probe_sc.shared_medium) {
    out = run_with_selectors(probe_sc, probe_seed, owners, selectors);
  } else {
    std::vector<std::unique_ptr<ChannelSelector>> solo_owner;
    solo_owner.push_back(std::make_unique<FixedChannelSelector>(channel));
    std::vector<ChannelSelector*> solo{solo_owner.back().get()};
    ScenarioConfig lone = probe_sc;
    out = run_with_selectors(lone, probe_seed, solo_owner, solo);
    std::uint64_t hits = 0;
    for (const auto& r : out.trace.records) hits += r.reward;
    return static_cast<double>(hits) / static_cast<double>(transmissions);
  }

  std::uint64_t hits = 0;
  for (const auto& r : out.trace.records) {
    if (r.device == probe_id) hits += r.reward;
  }
  return static_cast<double>(hits) / static_cast<double>(transmissions);
}

bool integration_check_addressing(const EventTrace& trace, std::span<const DeviceSpec> devices) {
  std::vector<DeviceIndex> roster;
  roster.reserve(devices.size());
  for (const auto& d : devices) roster.push_back(DeviceIndex::from_ordinal(d.phy_index));

  for (const auto& r : trace.records) {
    if (!r.uplink_ok) continue;
    if (r.device >= roster.size()) return false;
    const DeviceIndex sender = roster[r.device];

    // Synthetic but deterministic channel rotations per transmission.
    const double up_phase =
        static_cast<double>(mix_seed(r.device, r.seq) >> 11) * 0x1.0p-53 * 6.283185307179586;
    const double ack_phase =
        static_cast<double>(mix_seed(r.seq, r.device) >> 11) * 0x1.0p-53 * 6.283185307179586;

    const Frame uplink = apply_phase_offset(encode_uplink(sender), up_phase);
    const DeviceIndex at_gateway = decode_frame(uplink);
    if (!(at_gateway == sender)) return false;

    const Frame ack = apply_phase_offset(encode_ack(at_gateway), ack_phase);
    const DeviceIndex decoded_ack = decode_frame(ack);
    if (!is_ack_for(decoded_ack, sender)) return false;
    for (std::size_t other = 0; other < roster.size(); ++other) {
      if (other == r.device) continue;
      if (is_ack_for(decoded_ack, roster[other])) return false;
    }
  }
  return true;
}

}  // namespace banditmac

#include "banditmac/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "banditmac/errors.hpp"

namespace banditmac {

namespace {

using nlohmann::json;

constexpr std::uint64_t kMonteCarloTag = 0x4D43;  // probe seed branch
constexpr std::uint64_t kProbeTransmissionsTotal = 100000;

const PolicyKind kKindOrder[] = {PolicyKind::Ucb1, PolicyKind::ThompsonSampling,
                                 PolicyKind::Uniform};

// Tracks which keys were consumed and reports strays with full paths.
struct ObjectReader {
  const json& obj;
  std::string path;
  std::vector<std::string>& errs;
  std::set<std::string> known;

  std::string at(const std::string& key) const {
    return path.empty() ? key : path + "." + key;
  }

  const json* field(const std::string& key, bool required) {
    known.insert(key);
    auto it = obj.find(key);
    if (it == obj.end()) {
      if (required) errs.push_back(at(key) + ": required field is missing");
      return nullptr;
    }
    return &*it;
  }

  bool read_string(const std::string& key, std::string& out, bool required) {
    const json* f = field(key, required);
    if (!f) return false;
    if (!f->is_string()) {
      errs.push_back(at(key) + ": must be a string");
      return false;
    }
    out = f->get<std::string>();
    return true;
  }

  bool read_double(const std::string& key, double& out, bool required) {
    const json* f = field(key, required);
    if (!f) return false;
    if (!f->is_number()) {
      errs.push_back(at(key) + ": must be a number");
      return false;
    }
    out = f->get<double>();
    return true;
  }

  bool read_u64(const std::string& key, std::uint64_t& out, bool required) {
    const json* f = field(key, required);
    if (!f) return false;
    if (!f->is_number_unsigned() &&
        !(f->is_number_integer() && f->get<std::int64_t>() >= 0)) {
      errs.push_back(at(key) + ": must be a non-negative integer");
      return false;
    }
    out = f->get<std::uint64_t>();
    return true;
  }

  bool read_bool(const std::string& key, bool& out, bool required) {
    const json* f = field(key, required);
    if (!f) return false;
    if (!f->is_boolean()) {
      errs.push_back(at(key) + ": must be a boolean");
      return false;
    }
    out = f->get<bool>();
    return true;
  }

  bool read_double_array(const std::string& key, std::vector<double>& out, bool required) {
    const json* f = field(key, required);
    if (!f) return false;
    if (!f->is_array()) {
      errs.push_back(at(key) + ": must be an array of numbers");
      return false;
    }
    out.clear();
    bool ok = true;
    for (std::size_t i = 0; i < f->size(); ++i) {
      if (!(*f)[i].is_number()) {
        std::ostringstream p;
        p << at(key) << "[" << i << "]";
        errs.push_back(p.str() + ": must be a number");
        ok = false;
        continue;
      }
      out.push_back((*f)[i].get<double>());
    }
    return ok;
  }

  void finish() {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (!known.count(it.key())) errs.push_back(at(it.key()) + ": unknown field");
    }
  }
};

}  // namespace

ScenarioConfig parse_config(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError({origin + ": " + e.what()});
  }
  if (!j.is_object()) throw ConfigError({origin + ": top level must be an object"});

  std::vector<std::string> errs;
  ScenarioConfig sc;
  ObjectReader root{j, "", errs, {}};

  root.read_string("name", sc.name, true);

  std::uint64_t channels = 0;
  if (root.read_u64("channels", channels, true)) sc.channels = channels;

  std::string mode;
  if (root.read_string("collision_mode", mode, true)) {
    try {
      sc.collision_mode = collision_mode_from_string(mode);
    } catch (const std::invalid_argument&) {
      errs.push_back("collision_mode: must be \"slotted_bernoulli\" or \"pure_aloha\"");
    }
  }

  if (const json* occ = root.field("occupancies", false)) {
    if (!occ->is_array()) {
      errs.push_back("occupancies: must be an array of numbers");
    } else {
      OccupancyVector v;
      for (std::size_t i = 0; i < occ->size(); ++i) {
        if (!(*occ)[i].is_number()) {
          std::ostringstream p;
          p << "occupancies[" << i << "]";
          errs.push_back(p.str() + ": must be a number");
          continue;
        }
        v.p.push_back((*occ)[i].get<double>());
      }
      sc.occupancies = std::move(v);
    }
  }

  bool packet_duration_given = false;
  if (const json* poi = root.field("poisson", false)) {
    if (!poi->is_object()) {
      errs.push_back("poisson: must be an object");
    } else {
      PoissonTrafficConfig cfg;
      ObjectReader rd{*poi, "poisson", errs, {}};
      rd.read_double_array("lambda", cfg.lambda, true);
      packet_duration_given = rd.read_double("packet_duration", cfg.packet_duration, false);
      rd.finish();
      sc.poisson = std::move(cfg);
    }
  }

  if (const json* tim = root.field("timing", false)) {
    if (!tim->is_object()) {
      errs.push_back("timing: must be an object");
    } else {
      ObjectReader rd{*tim, "timing", errs, {}};
      rd.read_double("uplink_duration", sc.timing.uplink_duration, false);
      rd.read_double("ack_delay", sc.timing.ack_delay, false);
      rd.read_double("ack_duration", sc.timing.ack_duration, false);
      rd.read_double("inter_message_period", sc.timing.inter_message_period, false);
      rd.finish();
    }
  }

  if (const json* devs = root.field("devices", true)) {
    if (!devs->is_array()) {
      errs.push_back("devices: must be an array of objects");
    } else {
      for (std::size_t d = 0; d < devs->size(); ++d) {
        std::ostringstream p;
        p << "devices[" << d << "]";
        DeviceSpec spec;
        spec.phy_index = d;
        if (!(*devs)[d].is_object()) {
          errs.push_back(p.str() + ": must be an object");
          sc.devices.push_back(spec);
          continue;
        }
        ObjectReader rd{(*devs)[d], p.str(), errs, {}};
        std::string policy;
        if (rd.read_string("policy", policy, true)) {
          try {
            spec.policy = policy_kind_from_string(policy);
          } catch (const std::invalid_argument&) {
            errs.push_back(p.str() +
                           ".policy: must be \"ucb1\", \"thompson_sampling\" or \"uniform\"");
          }
        }
        rd.read_double("ucb_alpha", spec.ucb_alpha, false);
        std::uint64_t phy = 0;
        if (rd.read_u64("phy_index", phy, false)) {
          spec.phy_index = static_cast<std::size_t>(phy);
        }
        rd.finish();
        sc.devices.push_back(spec);
      }
    }
  }

  std::uint64_t horizon = 0;
  if (root.read_u64("horizon", horizon, true)) sc.horizon = horizon;
  root.read_u64("repetitions", sc.repetitions, false);
  root.read_u64("master_seed", sc.master_seed, false);
  root.read_bool("shared_medium", sc.shared_medium, false);
  std::uint64_t window = sc.rolling_window;
  if (root.read_u64("rolling_window", window, false)) {
    sc.rolling_window = static_cast<std::size_t>(window);
  }

  if (const json* cal = root.field("calibration", false)) {
    if (!cal->is_object()) {
      errs.push_back("calibration: must be an object");
    } else {
      CalibrationSpec spec;
      ObjectReader rd{*cal, "calibration", errs, {}};
      rd.read_double("target_uniform_success", spec.target_uniform_success, true);
      rd.finish();
      sc.calibration = spec;
    }
  }

  root.finish();

  if (sc.poisson && !packet_duration_given) {
    sc.poisson->packet_duration = sc.timing.uplink_duration;
  }

  for (const auto& v : validate_scenario(sc)) errs.push_back(v);
  if (!errs.empty()) throw ConfigError(std::move(errs));
  return sc;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError({path.string() + ": cannot open file"});
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_config(buf.str(), path.string());
}

json config_to_json(const ScenarioConfig& sc) {
  json j;
  j["name"] = sc.name;
  j["channels"] = sc.channels;
  j["collision_mode"] = to_string(sc.collision_mode);
  if (sc.occupancies) j["occupancies"] = sc.occupancies->p;
  if (sc.poisson) {
    j["poisson"] = {{"lambda", sc.poisson->lambda},
                    {"packet_duration", sc.poisson->packet_duration}};
  }
  j["timing"] = {{"uplink_duration", sc.timing.uplink_duration},
                 {"ack_delay", sc.timing.ack_delay},
                 {"ack_duration", sc.timing.ack_duration},
                 {"inter_message_period", sc.timing.inter_message_period}};
  json devs = json::array();
  for (const auto& d : sc.devices) {
    devs.push_back({{"policy", to_string(d.policy)},
                    {"ucb_alpha", d.ucb_alpha},
                    {"phy_index", d.phy_index}});
  }
  j["devices"] = devs;
  j["horizon"] = sc.horizon;
  j["repetitions"] = sc.repetitions;
  j["master_seed"] = sc.master_seed;
  j["shared_medium"] = sc.shared_medium;
  j["rolling_window"] = sc.rolling_window;
  if (sc.calibration) {
    j["calibration"] = {{"target_uniform_success", sc.calibration->target_uniform_success}};
  }
  return j;
}

std::vector<double> compute_regret(std::span<const int> rewards, std::span<const double> mu) {
  if (mu.empty()) throw std::invalid_argument("compute_regret: mu is empty");
  double best = mu[0];
  for (double m : mu) best = std::max(best, m);
  std::vector<double> out(rewards.size());
  double cum = 0.0;
  for (std::size_t t = 0; t < rewards.size(); ++t) {
    cum += rewards[t];
    out[t] = static_cast<double>(t + 1) * best - cum;
  }
  return out;
}

std::vector<double> compute_regret(const EventTrace& trace, std::size_t device,
                                   std::span<const double> mu) {
  std::vector<std::pair<std::uint64_t, int>> seq_rewards;
  for (const auto& r : trace.records) {
    if (r.device == device) seq_rewards.emplace_back(r.seq, r.reward);
  }
  std::sort(seq_rewards.begin(), seq_rewards.end());
  std::vector<int> rewards;
  rewards.reserve(seq_rewards.size());
  for (const auto& [seq, rew] : seq_rewards) rewards.push_back(rew);
  return compute_regret(rewards, mu);
}

namespace {

struct SeriesAccum {
  std::vector<double> cumulative;
  std::vector<double> rolling;
  std::vector<double> regret;
  std::uint64_t series = 0;  // contributing (repetition, device) pairs

  void ensure(std::size_t h) {
    if (cumulative.empty()) {
      cumulative.assign(h, 0.0);
      rolling.assign(h, 0.0);
      regret.assign(h, 0.0);
    }
  }
};

struct FinalAccum {
  std::vector<std::size_t> devices;
  std::vector<double> per_rep_sum;  // indexed by repetition, summed over devices
  std::uint64_t devices_per_rep = 0;
};

struct ChannelAccum {
  std::uint64_t transmissions = 0;
  std::uint64_t successes = 0;
  double ucb_index_sum = 0.0;
};

}  // namespace

ExperimentResult run_experiment(const ScenarioConfig& input) {
  require_valid(input);

  ExperimentResult result;
  RunSummary& summary = result.summary;
  summary.config = input;

  ScenarioConfig effective = input;
  if (input.calibration) {
    const double scale = calibrate_scenario(*input.poisson, input.timing,
                                            input.calibration->target_uniform_success);
    summary.calibrated = true;
    summary.calibration_scale = scale;
    for (auto& lam : effective.poisson->lambda) lam *= scale;
    summary.achieved_uniform_success =
        uniform_success_at_scale(*effective.poisson, effective.timing, 1.0);
  }

  const std::size_t K = effective.channels;
  const std::size_t n_dev = effective.devices.size();
  const std::uint64_t H = effective.horizon;
  const std::uint64_t R = effective.repetitions;
  const std::size_t W = effective.rolling_window;

  summary.mu.resize(K);
  if (effective.shared_medium && n_dev > 1) {
    summary.mu_source = "monte_carlo";
    const std::uint64_t per_channel = (kProbeTransmissionsTotal + K - 1) / K;
    const std::uint64_t base = mix_seed(effective.master_seed, kMonteCarloTag);
    for (std::size_t k = 0; k < K; ++k) {
      summary.mu[k] = probe_channel_success(effective, k, per_channel, mix_seed(base, k));
    }
  } else {
    summary.mu_source = "analytic";
    for (std::size_t k = 0; k < K; ++k) {
      summary.mu[k] = per_channel_success_prob(effective, k);
    }
  }
  summary.best_channel = argmax_lowest_index(summary.mu);
  const double mu_best = summary.mu[summary.best_channel];

  // Repetitions run in parallel; results land in repetition order.
  std::vector<SimOutput> outs(R);
  std::vector<std::exception_ptr> failures(R);
  {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const std::uint64_t workers = std::min<std::uint64_t>(hw, R);
    std::atomic<std::uint64_t> cursor{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::uint64_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const std::uint64_t r = cursor.fetch_add(1);
          if (r >= R) return;
          try {
            outs[r] = run_simulation_detailed(
                effective, run_seed_for_repetition(effective.master_seed, r));
          } catch (...) {
            failures[r] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  std::map<PolicyKind, SeriesAccum> series;
  std::map<PolicyKind, FinalAccum> finals;
  std::vector<std::map<PolicyKind, ChannelAccum>> channel_acc(K);

  for (std::size_t d = 0; d < n_dev; ++d) {
    const PolicyKind kind = effective.devices[d].policy;
    auto& fin = finals[kind];
    fin.devices.push_back(d);
    fin.devices_per_rep += 1;
    if (fin.per_rep_sum.empty()) fin.per_rep_sum.assign(R, 0.0);
    series[kind].ensure(H);
  }

  result.rows.reserve(R * n_dev * H);
  std::vector<std::vector<const TransmissionRecord*>> dev_records(n_dev);

  for (std::uint64_t r = 0; r < R; ++r) {
    const EventTrace& trace = outs[r].trace;
    for (auto& v : dev_records) v.assign(H, nullptr);
    for (const auto& rec : trace.records) {
      if (rec.device >= n_dev || rec.seq == 0 || rec.seq > H || dev_records[rec.device][rec.seq - 1]) {
        throw std::logic_error("run_experiment: malformed trace");
      }
      dev_records[rec.device][rec.seq - 1] = &rec;
    }

    for (std::size_t d = 0; d < n_dev; ++d) {
      const PolicyKind kind = effective.devices[d].policy;
      SeriesAccum& acc = series[kind];
      acc.series += 1;

      std::vector<std::uint64_t> pulls(K, 0), wins(K, 0);
      double cum = 0.0;
      double roll = 0.0;
      for (std::uint64_t t = 1; t <= H; ++t) {
        const TransmissionRecord* rec = dev_records[d][t - 1];
        if (!rec) throw std::logic_error("run_experiment: missing record");
        cum += rec->reward;
        roll += rec->reward;
        if (t > W) roll -= dev_records[d][t - 1 - W]->reward;
        const double window_len = static_cast<double>(std::min<std::uint64_t>(t, W));
        const double rolling_rate = roll / window_len;

        acc.cumulative[t - 1] += cum / static_cast<double>(t);
        acc.rolling[t - 1] += rolling_rate;
        acc.regret[t - 1] += static_cast<double>(t) * mu_best - cum;

        pulls[rec->channel] += 1;
        wins[rec->channel] += rec->reward;
        result.rows.push_back(
            {r, d, kind, t, rec->channel, rec->reward, rolling_rate});
      }

      // Engine bookkeeping must agree with the trace exactly.
      const PolicyState& ps = outs[r].policies.at(d);
      if (ps.total_pulls() != H) throw std::logic_error("run_experiment: pull count mismatch");
      for (std::size_t k = 0; k < K; ++k) {
        if (ps.arm(k).pulls != pulls[k] || ps.arm(k).successes != wins[k]) {
          throw std::logic_error("run_experiment: policy state diverged from trace");
        }
      }

      finals[kind].per_rep_sum[r] += cum / static_cast<double>(H);
      for (std::size_t k = 0; k < K; ++k) {
        ChannelAccum& ca = channel_acc[k][kind];
        ca.transmissions += pulls[k];
        ca.successes += wins[k];
        ca.ucb_index_sum +=
            ucb_index(ArmState{pulls[k], wins[k], 1.0 + static_cast<double>(wins[k]),
                               1.0 + static_cast<double>(pulls[k] - wins[k])},
                      H, effective.devices[d].ucb_alpha);
      }
    }
  }

  for (auto& [kind, acc] : series) {
    PolicyCurves curves;
    curves.cumulative_success.resize(H);
    curves.rolling_success.resize(H);
    curves.cumulative_regret.resize(H);
    const double n = static_cast<double>(acc.series);
    for (std::uint64_t t = 0; t < H; ++t) {
      curves.cumulative_success[t] = acc.cumulative[t] / n;
      curves.rolling_success[t] = acc.rolling[t] / n;
      curves.cumulative_regret[t] = acc.regret[t] / n;
    }
    summary.curves[kind] = std::move(curves);
  }

  for (auto& [kind, fin] : finals) {
    PolicyFinal pf;
    pf.devices = fin.devices;
    const double nd = static_cast<double>(fin.devices_per_rep);
    double mean = 0.0;
    for (double v : fin.per_rep_sum) mean += v / nd;
    mean /= static_cast<double>(R);
    double var = 0.0;
    for (double v : fin.per_rep_sum) {
      const double x = v / nd - mean;
      var += x * x;
    }
    pf.final_success_mean = mean;
    pf.final_success_std = R > 1 ? std::sqrt(var / static_cast<double>(R - 1)) : 0.0;
    pf.final_regret_mean = summary.curves[kind].cumulative_regret.back();
    summary.finals[kind] = std::move(pf);
  }

  summary.channel_stats.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    for (const auto& [kind, ca] : channel_acc[k]) {
      ChannelPolicyStats st;
      const double n = static_cast<double>(R * finals[kind].devices_per_rep);
      st.transmissions = static_cast<double>(ca.transmissions) / n;
      st.successes = static_cast<double>(ca.successes) / n;
      st.success_rate = ca.transmissions == 0
                            ? 0.0
                            : static_cast<double>(ca.successes) /
                                  static_cast<double>(ca.transmissions);
      st.ucb_index_at_horizon = ca.ucb_index_sum / n;
      summary.channel_stats[k][kind] = st;
    }
  }

  return result;
}

void emit_csv(std::span<const MetricsRow> rows, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("emit_csv: cannot open " + path.string());
  f << "repetition,device,policy,seq,channel,reward,rolling_rate\n";
  char buf[160];
  for (const auto& row : rows) {
    const int len = std::snprintf(buf, sizeof(buf), "%llu,%llu,%s,%llu,%llu,%d,%.6f\n",
                                  static_cast<unsigned long long>(row.repetition),
                                  static_cast<unsigned long long>(row.device),
                                  to_string(row.policy),
                                  static_cast<unsigned long long>(row.seq),
                                  static_cast<unsigned long long>(row.channel), row.reward,
                                  row.rolling_rate);
    f.write(buf, len);
  }
  if (!f) throw std::runtime_error("emit_csv: write failed for " + path.string());
}

json summary_to_json(const RunSummary& s) {
  json j;
  j["config"] = config_to_json(s.config);

  json pols = json::array();
  for (PolicyKind kind : kKindOrder) {
    auto it = s.finals.find(kind);
    if (it == s.finals.end()) continue;
    pols.push_back({{"policy", to_string(kind)},
                    {"devices", it->second.devices},
                    {"final_success_rate", it->second.final_success_mean},
                    {"final_success_std", it->second.final_success_std},
                    {"final_regret", it->second.final_regret_mean}});
  }
  j["policies"] = pols;

  json channels;
  channels["mu_source"] = s.mu_source;
  channels["best_channel"] = s.best_channel;
  if (s.calibrated) {
    channels["calibration"] = {{"applied_scale", s.calibration_scale},
                               {"achieved_uniform_success", s.achieved_uniform_success}};
  }
  json per_channel = json::array();
  for (std::size_t k = 0; k < s.mu.size(); ++k) {
    json entry;
    entry["channel"] = k;
    entry["mu"] = s.mu[k];
    if (s.config.occupancies) entry["occupancy"] = s.config.occupancies->p[k];
    if (s.config.poisson) {
      entry["lambda"] = s.config.poisson->lambda[k] * s.calibration_scale;
    }
    json per_policy;
    if (k < s.channel_stats.size()) {
      for (PolicyKind kind : kKindOrder) {
        auto it = s.channel_stats[k].find(kind);
        if (it == s.channel_stats[k].end()) continue;
        const auto& st = it->second;
        json stats = {{"transmissions", st.transmissions},
                      {"successes", st.successes},
                      {"success_rate", st.success_rate}};
        stats["ucb_index_at_horizon"] =
            std::isfinite(st.ucb_index_at_horizon) ? json(st.ucb_index_at_horizon) : json();
        per_policy[to_string(kind)] = stats;
      }
    }
    entry["per_policy"] = per_policy;
    per_channel.push_back(entry);
  }
  channels["per_channel"] = per_channel;
  j["channels"] = channels;

  json curves;
  for (PolicyKind kind : kKindOrder) {
    auto it = s.curves.find(kind);
    if (it == s.curves.end()) continue;
    curves[to_string(kind)] = {{"cumulative_success", it->second.cumulative_success},
                               {"rolling_success", it->second.rolling_success},
                               {"cumulative_regret", it->second.cumulative_regret}};
  }
  j["curves"] = curves;
  return j;
}

void emit_summary_json(const RunSummary& summary, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("emit_summary_json: cannot open " + path.string());
  f << summary_to_json(summary).dump(2) << "\n";
  if (!f) throw std::runtime_error("emit_summary_json: write failed for " + path.string());
}

void emit_curves_csv(const RunSummary& summary, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("emit_curves_csv: cannot open " + path.string());
  std::vector<PolicyKind> present;
  for (PolicyKind kind : kKindOrder) {
    if (summary.curves.count(kind)) present.push_back(kind);
  }
  f << "seq";
  for (PolicyKind kind : present) {
    f << "," << to_string(kind) << "_cumulative_success"
      << "," << to_string(kind) << "_rolling_success"
      << "," << to_string(kind) << "_cumulative_regret";
  }
  f << "\n";
  const std::size_t H = present.empty() ? 0 : summary.curves.at(present[0]).cumulative_success.size();
  char buf[64];
  for (std::size_t t = 0; t < H; ++t) {
    f << (t + 1);
    for (PolicyKind kind : present) {
      const auto& c = summary.curves.at(kind);
      std::snprintf(buf, sizeof(buf), ",%.6f,%.6f,%.6f", c.cumulative_success[t],
                    c.rolling_success[t], c.cumulative_regret[t]);
      f << buf;
    }
    f << "\n";
  }
  if (!f) throw std::runtime_error("emit_curves_csv: write failed for " + path.string());
}

}  // namespace banditmac

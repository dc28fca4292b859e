#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "banditmac/errors.hpp"
#include "banditmac/experiment.hpp"

using namespace banditmac;
namespace fs = std::filesystem;

namespace {

const char* kMinimalConfig = R"({
  "name": "mini",
  "channels": 2,
  "collision_mode": "slotted_bernoulli",
  "occupancies": [0.3, 0.1],
  "devices": [
    {"policy": "ucb1"},
    {"policy": "uniform", "phy_index": 1}
  ],
  "horizon": 50,
  "repetitions": 2,
  "master_seed": 9
})";

fs::path write_temp(const std::string& text, const std::string& stem) {
  const fs::path p = fs::temp_directory_path() / (stem + ".json");
  std::ofstream out(p);
  out << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("minimal config parses with defaults applied") {
  const ScenarioConfig sc = parse_config(kMinimalConfig, "mini");
  CHECK(sc.name == "mini");
  CHECK(sc.channels == 2);
  CHECK(sc.collision_mode == CollisionMode::SlottedBernoulli);
  REQUIRE(sc.occupancies.has_value());
  CHECK(sc.occupancies->p == std::vector<double>{0.3, 0.1});
  REQUIRE(sc.devices.size() == 2);
  CHECK(sc.devices[0].policy == PolicyKind::Ucb1);
  CHECK(sc.devices[0].ucb_alpha == doctest::Approx(0.5));
  CHECK(sc.devices[0].phy_index == 0);
  CHECK(sc.devices[1].phy_index == 1);
  CHECK(sc.horizon == 50);
  CHECK(sc.repetitions == 2);
  CHECK(sc.master_seed == 9);
  CHECK_FALSE(sc.shared_medium);
  CHECK(sc.rolling_window == 100);
  CHECK(sc.timing.inter_message_period == doctest::Approx(5.0));
}

TEST_CASE("load_config round trips through config_to_json") {
  const fs::path p = write_temp(kMinimalConfig, "banditmac_roundtrip");
  const ScenarioConfig sc = load_config(p);
  const auto j1 = config_to_json(sc);
  const ScenarioConfig sc2 = parse_config(j1.dump(), "rt");
  CHECK(config_to_json(sc2) == j1);
  fs::remove(p);
}

TEST_CASE("config errors are collected with field paths") {
  SUBCASE("occupancy length mismatch") {
    std::string text = kMinimalConfig;
    text.replace(text.find("[0.3, 0.1]"), 10, "[0.3]");
    CHECK_THROWS_WITH_AS(parse_config(text, "t"), doctest::Contains("occupancies"),
                         ConfigError);
  }
  SUBCASE("unknown field is rejected") {
    std::string text = kMinimalConfig;
    text.replace(text.find("\"name\""), 6, "\"horizn\": 3, \"name\"");
    CHECK_THROWS_WITH_AS(parse_config(text, "t"), doctest::Contains("horizn"), ConfigError);
  }
  SUBCASE("multiple violations reported together") {
    const char* broken = R"({
      "name": "b",
      "channels": 2,
      "collision_mode": "slotted_bernoulli",
      "occupancies": [0.3, 1.1],
      "devices": [],
      "horizon": 0
    })";
    try {
      parse_config(broken, "t");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("occupancies[1]") != std::string::npos);
      CHECK(msg.find("devices") != std::string::npos);
      CHECK(msg.find("horizon") != std::string::npos);
    }
  }
  SUBCASE("malformed json names the origin") {
    CHECK_THROWS_WITH_AS(parse_config("{not json", "broken.json"),
                         doctest::Contains("broken.json"), ConfigError);
  }
  SUBCASE("traffic block must match the collision mode") {
    std::string text = kMinimalConfig;
    text.replace(text.find("slotted_bernoulli"), 17, "pure_aloha");
    CHECK_THROWS_AS(parse_config(text, "t"), ConfigError);
  }
}

TEST_CASE("shipped configs load cleanly") {
  const fs::path dir = BANDITMAC_CONFIG_DIR;
  for (const char* name :
       {"fig4.json", "fig4_pure_aloha.json", "fig4_slotted_analog.json", "video_3ts.json"}) {
    CAPTURE(name);
    const ScenarioConfig sc = load_config(dir / name);
    CHECK_FALSE(sc.name.empty());
    CHECK(sc.channels == 4);
  }
}

TEST_CASE("a one-repetition experiment reproduces the bare simulation") {
  const ScenarioConfig sc = parse_config(kMinimalConfig, "mini");
  ScenarioConfig one = sc;
  one.repetitions = 1;
  const ExperimentResult res = run_experiment(one);
  const EventTrace trace = run_simulation(one, run_seed_for_repetition(one.master_seed, 0));
  REQUIRE(res.rows.size() == trace.records.size());
  // rows are (repetition, device, seq); rebuild that order from the trace
  std::vector<TransmissionRecord> recs = trace.records;
  std::sort(recs.begin(), recs.end(), [](const auto& a, const auto& b) {
    return a.device != b.device ? a.device < b.device : a.seq < b.seq;
  });
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(res.rows[i].repetition == 0);
    CHECK(res.rows[i].device == recs[i].device);
    CHECK(res.rows[i].seq == recs[i].seq);
    CHECK(res.rows[i].channel == recs[i].channel);
    CHECK(res.rows[i].reward == recs[i].reward);
  }
}

TEST_CASE("experiments are reproducible and prefix-stable in the repetition count") {
  const ScenarioConfig sc = parse_config(kMinimalConfig, "mini");
  const ExperimentResult a = run_experiment(sc);
  const ExperimentResult b = run_experiment(sc);
  CHECK(a.rows == b.rows);
  CHECK(summary_to_json(a.summary) == summary_to_json(b.summary));

  ScenarioConfig more = sc;
  more.repetitions = 4;
  const ExperimentResult c = run_experiment(more);
  REQUIRE(c.rows.size() == 2 * a.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) CHECK(c.rows[i] == a.rows[i]);
}

TEST_CASE("rolling rate is the trailing-window mean") {
  ScenarioConfig sc = parse_config(kMinimalConfig, "mini");
  sc.repetitions = 1;
  sc.rolling_window = 4;
  const ExperimentResult res = run_experiment(sc);
  // recompute per device from the reward column
  std::vector<int> window;
  std::size_t device = SIZE_MAX;
  std::vector<int> rewards;
  for (const auto& row : res.rows) {
    if (row.device != device) {
      device = row.device;
      rewards.clear();
    }
    rewards.push_back(row.reward);
    const std::size_t n = std::min<std::size_t>(rewards.size(), 4);
    double sum = 0.0;
    for (std::size_t i = rewards.size() - n; i < rewards.size(); ++i) sum += rewards[i];
    CHECK(row.rolling_rate == doctest::Approx(sum / static_cast<double>(n)).epsilon(1e-12));
  }
}

TEST_CASE("regret is computed against the best channel") {
  const std::vector<double> mu = {0.2, 0.8};
  const std::vector<int> always_win = {1, 1, 1};
  const auto r = compute_regret(always_win, mu);
  REQUIRE(r.size() == 3);
  CHECK(r[0] == doctest::Approx(-0.2));
  CHECK(r[1] == doctest::Approx(-0.4));
  CHECK(r[2] == doctest::Approx(-0.6));

  const std::vector<int> always_lose = {0, 0, 0, 0};
  const auto r2 = compute_regret(always_lose, mu);
  CHECK(r2[3] == doctest::Approx(3.2));

  EventTrace trace;
  trace.records.push_back({0, 1, 1, true, true, 1, 0.0});
  trace.records.push_back({0, 2, 0, false, false, 0, 5.0});
  const auto r3 = compute_regret(trace, 0, mu);
  REQUIRE(r3.size() == 2);
  CHECK(r3[0] == doctest::Approx(-0.2));
  CHECK(r3[1] == doctest::Approx(0.6));
}

TEST_CASE("metrics csv has the exact header and one line per row") {
  ScenarioConfig sc = parse_config(kMinimalConfig, "mini");
  sc.repetitions = 1;
  const ExperimentResult res = run_experiment(sc);
  const fs::path p = fs::temp_directory_path() / "banditmac_metrics_test.csv";
  emit_csv(res.rows, p);
  const std::string text = slurp(p);
  fs::remove(p);

  std::istringstream in(text);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "repetition,device,policy,seq,channel,reward,rolling_rate");
  std::size_t count = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++count;
    if (count == 1) {
      std::uint64_t rep, seq;
      std::size_t dev, ch;
      int reward;
      double rolling;
      char policy[32];
      REQUIRE(std::sscanf(line.c_str(), "%lu,%zu,%31[^,],%lu,%zu,%d,%lf", &rep, &dev, policy,
                          &seq, &ch, &reward, &rolling) == 7);
      CHECK(rep == res.rows[0].repetition);
      CHECK(dev == res.rows[0].device);
      CHECK(std::string(policy) == to_string(res.rows[0].policy));
      CHECK(seq == res.rows[0].seq);
      CHECK(ch == res.rows[0].channel);
      CHECK(reward == res.rows[0].reward);
      CHECK(rolling == doctest::Approx(res.rows[0].rolling_rate).epsilon(1e-6));
    }
  }
  CHECK(count == res.rows.size());
  CHECK(text.find("\r") == std::string::npos);
}

TEST_CASE("summary json exposes config, policies, channels, and curves") {
  const ScenarioConfig sc = parse_config(kMinimalConfig, "mini");
  const ExperimentResult res = run_experiment(sc);
  const nlohmann::json j = summary_to_json(res.summary);

  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  std::sort(keys.begin(), keys.end());
  CHECK(keys == std::vector<std::string>{"channels", "config", "curves", "policies"});

  CHECK(j["config"]["name"] == "mini");
  CHECK(j["config"]["master_seed"] == 9);
  REQUIRE(j["policies"].is_array());
  REQUIRE(j["policies"].size() == 2);
  CHECK(j["policies"][0]["policy"] == "ucb1");
  CHECK(j["policies"][0]["devices"] == nlohmann::json::array({0}));
  CHECK(j["policies"][1]["policy"] == "uniform");
  CHECK(j["policies"][0].contains("final_success_rate"));
  CHECK(j["policies"][0].contains("final_regret"));

  CHECK(j["channels"]["mu_source"] == "analytic");
  REQUIRE(j["channels"]["per_channel"].size() == 2);
  CHECK(j["channels"]["per_channel"][0]["mu"] == doctest::Approx(0.49));
  CHECK(j["channels"]["per_channel"][1]["mu"] == doctest::Approx(0.81));
  CHECK(j["channels"]["best_channel"] == 1);

  for (const char* pol : {"ucb1", "uniform"}) {
    for (const char* curve : {"cumulative_success", "rolling_success", "cumulative_regret"}) {
      CHECK(j["curves"][pol][curve].size() == 50);
    }
  }
}

TEST_CASE("emitted summary and curves files are well-formed") {
  const ScenarioConfig sc = parse_config(kMinimalConfig, "mini");
  const ExperimentResult res = run_experiment(sc);
  const fs::path jp = fs::temp_directory_path() / "banditmac_summary_test.json";
  const fs::path cp = fs::temp_directory_path() / "banditmac_curves_test.csv";
  emit_summary_json(res.summary, jp);
  emit_curves_csv(res.summary, cp);

  const nlohmann::json parsed = nlohmann::json::parse(slurp(jp));
  CHECK(parsed == summary_to_json(res.summary));

  std::istringstream in(slurp(cp));
  std::string header;
  REQUIRE(std::getline(in, header));
  CHECK(header.rfind("seq,", 0) == 0);
  CHECK(header.find("ucb1_cumulative_success") != std::string::npos);
  CHECK(header.find("uniform_cumulative_regret") != std::string::npos);
  std::size_t lines = 0;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) ++lines;
  }
  CHECK(lines == 50);
  fs::remove(jp);
  fs::remove(cp);
}

TEST_CASE("calibration rescales the poisson rates before running") {
  const char* text = R"({
    "name": "cal",
    "channels": 1,
    "collision_mode": "pure_aloha",
    "poisson": {"lambda": [0.5], "packet_duration": 0.5},
    "devices": [{"policy": "uniform"}],
    "horizon": 20,
    "repetitions": 1,
    "master_seed": 3,
    "calibration": {"target_uniform_success": 0.5}
  })";
  const ScenarioConfig sc = parse_config(text, "cal");
  const ExperimentResult res = run_experiment(sc);
  CHECK(res.summary.calibrated);
  // exp(-2 s 0.5 (0.5+0.5)) = 0.5  =>  s = ln 2
  CHECK(res.summary.calibration_scale == doctest::Approx(std::log(2.0)).epsilon(1e-9));
  CHECK(res.summary.achieved_uniform_success == doctest::Approx(0.5).epsilon(1e-9));
  REQUIRE(res.summary.mu.size() == 1);
  CHECK(res.summary.mu[0] == doctest::Approx(0.5).epsilon(1e-9));
  // the summary echoes the pre-calibration rate
  CHECK(res.summary.config.poisson->lambda[0] == doctest::Approx(0.5));
  const nlohmann::json j = summary_to_json(res.summary);
  CHECK(j["channels"]["calibration"]["applied_scale"] ==
        doctest::Approx(std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("shared multi-device runs fall back to monte carlo channel estimates") {
  const char* text = R"({
    "name": "shared",
    "channels": 2,
    "collision_mode": "slotted_bernoulli",
    "occupancies": [0.2, 0.4],
    "devices": [
      {"policy": "thompson_sampling"},
      {"policy": "thompson_sampling", "phy_index": 1}
    ],
    "horizon": 30,
    "repetitions": 1,
    "master_seed": 5,
    "shared_medium": true
  })";
  const ScenarioConfig sc = parse_config(text, "shared");
  const ExperimentResult res = run_experiment(sc);
  CHECK(res.summary.mu_source == "monte_carlo");
  REQUIRE(res.summary.mu.size() == 2);
  // contention keeps both channels below the lone-device values
  CHECK(res.summary.mu[0] < 0.66);
  CHECK(res.summary.mu[0] > 0.30);
  CHECK(res.summary.mu[1] < 0.38);
  CHECK(res.summary.mu[1] > 0.10);
  CHECK(summary_to_json(res.summary)["channels"]["mu_source"] == "monte_carlo");
}

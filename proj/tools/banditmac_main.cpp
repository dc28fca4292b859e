#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "banditmac/errors.hpp"
#include "banditmac/experiment.hpp"
#include "banditmac/traffic.hpp"

namespace fs = std::filesystem;
using banditmac::CalibrationError;
using banditmac::ConfigError;

namespace {

std::string default_out_dir() {
  if (const char* env = std::getenv("BANDITMAC_OUT_DIR")) return env;
  return "results";
}

void print_summary(const banditmac::RunSummary& s) {
  if (s.calibrated) {
    std::cout << "calibration: scale " << s.calibration_scale << ", analytic uniform success "
              << s.achieved_uniform_success << "\n";
  }
  std::cout << "best channel: " << s.best_channel << " (mu " << s.mu[s.best_channel] << ", "
            << s.mu_source << ")\n";
  for (const auto& [kind, fin] : s.finals) {
    char line[160];
    std::snprintf(line, sizeof(line),
                  "%-18s final success %.4f (std %.4f), final regret %.1f\n",
                  banditmac::to_string(kind), fin.final_success_mean, fin.final_success_std,
                  fin.final_regret_mean);
    std::cout << line;
  }
}

// Writes the three outputs for one experiment; returns the metrics path.
void write_outputs(const banditmac::ExperimentResult& result, const fs::path& out_dir,
                   const std::string& stem) {
  fs::create_directories(out_dir);
  const fs::path csv = out_dir / (stem + "_metrics.csv");
  const fs::path summary = out_dir / (stem + "_summary.json");
  const fs::path curves = out_dir / (stem + "_curves.csv");
  banditmac::emit_csv(result.rows, csv);
  banditmac::emit_summary_json(result.summary, summary);
  banditmac::emit_curves_csv(result.summary, curves);
  std::cout << "wrote " << csv.string() << "\n";
  std::cout << "wrote " << summary.string() << "\n";
  std::cout << "wrote " << curves.string() << "\n";
}

std::string sanitize_for_filename(std::string s) {
  for (char& c : s) {
    if (c == '.') {
      c = 'p';
    } else if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') {
      c = '_';
    }
  }
  return s;
}

// Sets a dotted path (objects and array indices) inside a raw JSON document.
void patch_json(nlohmann::json& doc, const std::string& dotted, const nlohmann::json& value) {
  nlohmann::json* node = &doc;
  std::stringstream ss(dotted);
  std::string seg;
  std::vector<std::string> segs;
  while (std::getline(ss, seg, '.')) segs.push_back(seg);
  if (segs.empty()) throw std::invalid_argument("--param must name a field");
  for (std::size_t i = 0; i + 1 < segs.size(); ++i) {
    if (node->is_array()) {
      node = &(*node)[std::stoul(segs[i])];
    } else {
      node = &(*node)[segs[i]];
    }
  }
  if (node->is_array()) {
    (*node)[std::stoul(segs.back())] = value;
  } else {
    (*node)[segs.back()] = value;
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError({path.string() + ": cannot open file"});
  std::ostringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-armed-bandit channel selection simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = default_out_dir();
  std::uint64_t seed_override = 0;
  bool seed_given = false;
  std::uint64_t reps_override = 0;
  bool reps_given = false;

  auto* run = app.add_subcommand("run", "Run an experiment and write metrics, curves, summary");
  run->add_option("config", config_path, "Scenario JSON file")->required();
  run->add_option("--out", out_dir, "Output directory (default $BANDITMAC_OUT_DIR or ./results)");
  run->add_option("--seed", seed_override, "Override master_seed")->each([&](const std::string&) {
    seed_given = true;
  });
  run->add_option("--reps", reps_override, "Override repetitions")->each([&](const std::string&) {
    reps_given = true;
  });

  auto* validate = app.add_subcommand("validate", "Check a scenario file and exit");
  validate->add_option("config", config_path, "Scenario JSON file")->required();

  double target = 0.0;
  auto* calibrate =
      app.add_subcommand("calibrate", "Find the traffic scale hitting a uniform success target");
  calibrate->add_option("config", config_path, "Scenario JSON file")->required();
  calibrate->add_option("--target", target, "Target analytic uniform success in (0,1)")
      ->required();

  std::string param;
  std::vector<std::string> values;
  auto* sweep = app.add_subcommand("sweep", "Run the scenario once per value of one field");
  sweep->add_option("config", config_path, "Scenario JSON file")->required();
  sweep->add_option("--param", param, "Dotted config path, e.g. timing.inter_message_period")
      ->required();
  sweep->add_option("--values", values, "Comma-separated values")->required()->delimiter(',');
  sweep->add_option("--out", out_dir, "Output directory (default $BANDITMAC_OUT_DIR or ./results)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    std::cerr << app.help() << "\n";
    return 1;
  }

  try {
    if (run->parsed()) {
      banditmac::ScenarioConfig sc = banditmac::load_config(config_path);
      if (seed_given) sc.master_seed = seed_override;
      if (reps_given) sc.repetitions = reps_override;
      banditmac::require_valid(sc);
      const auto result = banditmac::run_experiment(sc);
      print_summary(result.summary);
      write_outputs(result, out_dir, sc.name);
    } else if (validate->parsed()) {
      const auto sc = banditmac::load_config(config_path);
      std::cout << "OK: " << sc.name << "\n";
    } else if (calibrate->parsed()) {
      const auto sc = banditmac::load_config(config_path);
      if (!sc.poisson) {
        throw ConfigError({"calibrate: scenario has no poisson traffic block"});
      }
      const double scale = banditmac::calibrate_scenario(*sc.poisson, sc.timing, target);
      const double achieved = banditmac::uniform_success_at_scale(*sc.poisson, sc.timing, scale);
      std::cout << "scale: " << std::setprecision(12) << scale << "\n";
      std::cout << "analytic uniform success: " << achieved << "\n";
    } else if (sweep->parsed()) {
      const std::string raw = read_file(config_path);
      nlohmann::json doc;
      try {
        doc = nlohmann::json::parse(raw);
      } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError({config_path + ": " + e.what()});
      }
      for (const std::string& v : values) {
        nlohmann::json patched = doc;
        nlohmann::json value;
        try {
          value = nlohmann::json::parse(v);
        } catch (const nlohmann::json::parse_error&) {
          value = v;  // bare strings are fine
        }
        patch_json(patched, param, value);
        banditmac::ScenarioConfig sc =
            banditmac::parse_config(patched.dump(), config_path + " [" + param + "=" + v + "]");
        const std::string leaf = param.substr(param.find_last_of('.') + 1);
        sc.name += "_" + sanitize_for_filename(leaf) + "_" + sanitize_for_filename(v);
        std::cout << "=== " << param << " = " << v << "\n";
        const auto result = banditmac::run_experiment(sc);
        print_summary(result.summary);
        write_outputs(result, out_dir, sc.name);
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const CalibrationError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

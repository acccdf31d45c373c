#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lbsc.h"

namespace fs = std::filesystem;

namespace {

int log_level() {
  const char* value = std::getenv("LBSC_LOG_LEVEL");
  if (value == nullptr) return 0;
  const std::string level = value;
  if (level == "debug") return 2;
  if (level == "info") return 1;
  return 0;
}

int fail(const char* context) {
  std::fprintf(stderr, "error: %s: %s\n", context, lbsc_last_error());
  return 1;
}

std::string get_value(const lbsc_scenario_t* scenario, const char* key) {
  char buf[512];
  if (lbsc_scenario_get(scenario, key, buf, sizeof buf) != LBSC_OK) return "";
  return buf;
}

std::vector<double> parse_numbers(const std::string& text) {
  std::vector<double> out;
  std::istringstream stream(text);
  double value = 0.0;
  while (stream >> value) out.push_back(value);
  return out;
}

struct RunArgs {
  std::string scenario;
  std::string controller;
  std::string out_dir = ".";
  std::string format = "csv";
  long seed = -1;
  bool seed_given = false;
  std::vector<std::string> overrides;
};

int run_command(const RunArgs& args) {
  lbsc_scenario_t* scenario = nullptr;
  lbsc_status status = args.scenario.empty()
                           ? lbsc_scenario_default(&scenario)
                           : lbsc_scenario_load(args.scenario.c_str(), &scenario);
  if (status != LBSC_OK) return fail("loading scenario");

  if (!args.controller.empty() &&
      lbsc_scenario_set(scenario, "controller", args.controller.c_str()) != LBSC_OK) {
    lbsc_scenario_free(scenario);
    return fail("setting controller");
  }
  if (args.seed_given &&
      lbsc_scenario_set(scenario, "seed", std::to_string(args.seed).c_str()) != LBSC_OK) {
    lbsc_scenario_free(scenario);
    return fail("setting seed");
  }
  for (const std::string& kv : args.overrides) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", kv.c_str());
      lbsc_scenario_free(scenario);
      return 1;
    }
    if (lbsc_scenario_set(scenario, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()) !=
        LBSC_OK) {
      lbsc_scenario_free(scenario);
      return fail("applying override");
    }
  }

  if (log_level() >= 2) {
    char hash[17] = "";
    lbsc_scenario_hash(scenario, hash, sizeof hash);
    std::fprintf(stderr, "scenario %s controller=%s seed=%s\n", hash,
                 get_value(scenario, "controller").c_str(), get_value(scenario, "seed").c_str());
  }

  lbsc_log_t* log = nullptr;
  const lbsc_status run_status = lbsc_run_episode(scenario, &log);
  if (run_status != LBSC_OK && log == nullptr) {
    lbsc_scenario_free(scenario);
    return fail("running episode");
  }

  std::error_code ec;
  fs::create_directories(args.out_dir, ec);
  const std::string name = get_value(scenario, "controller") + "." + args.format;
  const std::string path = (fs::path(args.out_dir) / name).string();
  if (lbsc_log_export(log, path.c_str(), args.format.c_str()) != LBSC_OK) {
    lbsc_log_free(log);
    lbsc_scenario_free(scenario);
    return fail("exporting log");
  }
  std::printf("wrote %s (%zu rows)\n", path.c_str(), lbsc_log_rows(log));

  if (run_status != LBSC_OK) {
    std::fprintf(stderr, "fault: %s (partial log written)\n", lbsc_log_fault(log));
    lbsc_log_free(log);
    lbsc_scenario_free(scenario);
    return 1;
  }

  const double b_st = std::atof(get_value(scenario, "b_st_m").c_str());
  const double b_go = std::atof(get_value(scenario, "b_go_m").c_str());
  double min_gap = 0.0, max_gap = 0.0, first_t = -1.0;
  int violations = 0;
  lbsc_log_headway(log, b_st, b_go, &min_gap, &max_gap, &violations, &first_t);

  if (log_level() >= 1) {
    double mean_step = 0.0, max_step = 0.0, mean_solve = 0.0, max_solve = 0.0;
    lbsc_log_timing(log, &mean_step, &max_step, &mean_solve, &max_solve);
    std::fprintf(stderr, "gap [%.3f, %.3f] m, %d violation rows\n", min_gap, max_gap, violations);
    std::fprintf(stderr, "timing: step %.3f ms mean / %.3f ms max, solve %.3f ms mean / %.3f ms max\n",
                 mean_step, max_step, mean_solve, max_solve);
    const std::vector<double> bounds = parse_numbers(get_value(scenario, "phase_boundaries_s"));
    const double v_des = std::atof(get_value(scenario, "v_des_mps").c_str());
    for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
      double value = 0.0;
      if (lbsc_log_mae(log, bounds[i], bounds[i + 1], v_des, &value) == LBSC_OK)
        std::fprintf(stderr, "mae [%g, %g) s: %.4f m/s\n", bounds[i], bounds[i + 1], value);
    }
  }

  int rc = 0;
  if (violations > 0) {
    std::fprintf(stderr, "safety violation: gap left [%g, %g] m at t=%.3f s (%d rows)\n", b_st,
                 b_go, first_t, violations);
    rc = 2;
  }
  lbsc_log_free(log);
  lbsc_scenario_free(scenario);
  return rc;
}

struct CompareArgs {
  std::string logs_dir;
  double b_st = 25.0;
  double b_go = 100.0;
  double v_des = 20.0;
  std::vector<double> phases{0.0, 20.0, 70.0, 100.0};
};

int compare_command(const CompareArgs& args) {
  std::vector<fs::path> files;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(args.logs_dir, ec))
    if (entry.path().extension() == ".csv") files.push_back(entry.path());
  if (ec) {
    std::fprintf(stderr, "error: cannot read directory '%s'\n", args.logs_dir.c_str());
    return 1;
  }
  if (files.empty()) {
    std::fprintf(stderr, "error: no .csv logs in '%s'\n", args.logs_dir.c_str());
    return 1;
  }
  std::sort(files.begin(), files.end());

  std::printf("%-14s", "log");
  for (std::size_t i = 0; i + 1 < args.phases.size(); ++i)
    std::printf("  mae[%g,%g)", args.phases[i], args.phases[i + 1]);
  std::printf("  %9s  %9s  %10s\n", "min_gap", "max_gap", "violations");

  for (const fs::path& file : files) {
    lbsc_log_t* log = nullptr;
    if (lbsc_log_load_csv(file.string().c_str(), &log) != LBSC_OK)
      return fail(file.string().c_str());
    std::printf("%-14s", file.stem().string().c_str());
    for (std::size_t i = 0; i + 1 < args.phases.size(); ++i) {
      double value = 0.0;
      if (lbsc_log_mae(log, args.phases[i], args.phases[i + 1], args.v_des, &value) == LBSC_OK)
        std::printf("  %10.4f", value);
      else
        std::printf("  %10s", "-");
    }
    double min_gap = 0.0, max_gap = 0.0;
    int violations = 0;
    lbsc_log_headway(log, args.b_st, args.b_go, &min_gap, &max_gap, &violations, nullptr);
    std::printf("  %9.3f  %9.3f  %10d\n", min_gap, max_gap, violations);
    lbsc_log_free(log);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Five-car platoon simulator with learning-based safe cruise control"};
  app.require_subcommand(1);

  RunArgs run_args;
  CLI::App* run = app.add_subcommand("run", "Run one episode and export its log");
  run->add_option("--scenario", run_args.scenario, "Scenario file (stock scenario if omitted)");
  run->add_option("--controller", run_args.controller, "Controller variant")
      ->check(CLI::IsMember({"lbsc", "lbsc-n", "cbf-clf-qp"}));
  run->add_option("--out", run_args.out_dir, "Output directory");
  run->add_option("--seed", run_args.seed, "Noise seed")
      ->each([&run_args](const std::string&) { run_args.seed_given = true; });
  run->add_option("--format", run_args.format, "Log format")
      ->check(CLI::IsMember({"csv", "json"}));
  run->add_option("--set", run_args.overrides, "Scenario override key=value (repeatable)");

  CompareArgs compare_args;
  CLI::App* compare = app.add_subcommand("compare", "Tabulate metrics for a directory of logs");
  compare->add_option("--logs", compare_args.logs_dir, "Directory of .csv episode logs")
      ->required();
  compare->add_option("--b-st", compare_args.b_st, "Lower gap bound, m");
  compare->add_option("--b-go", compare_args.b_go, "Upper gap bound, m");
  compare->add_option("--v-des", compare_args.v_des, "Desired speed, m/s");
  compare->add_option("--phases", compare_args.phases, "Phase boundaries, s")->expected(-1);

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return run_command(run_args);
  return compare_command(compare_args);
}

#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "lbsc/controllers.hpp"
#include "lbsc/scenario.hpp"

namespace lbsc {

inline constexpr const char* kLibraryVersion = "0.1.0";

// One control period: the fleet state at the period start, the wheel forces
// held over it, the controller's slacks and diagnostics, and the learned
// moments its rows were built with. Column naming is one-based front to
// back, so the controlled car is channel 4 and its predecessor channel 3.
struct LogRow {
  double t = 0.0;
  std::array<double, kFleetSize> p{};
  std::array<double, kFleetSize> v{};
  std::array<double, kFleetSize> a{};
  std::array<double, kFleetSize> u{};
  double eps = 0.0;
  double eta = 0.0;
  double mu_c3 = 0.0;
  double sigma_c3 = 0.0;
  double mu_c4 = 0.0;
  double sigma_c4 = 0.0;
  double h1 = 0.0;
  double h2 = 0.0;
  double V = 0.0;
  double solve_ms = 0.0;
};

inline constexpr int kLogColumns = 31;

// Column names in export order.
extern const std::array<const char*, kLogColumns> kColumnNames;

std::array<double, kLogColumns> row_values(const LogRow& row);

struct EpisodeMetadata {
  std::string library_version = kLibraryVersion;
  std::string controller;
  unsigned long seed = 0;
  std::string config_hash;
  std::string fault;  // nonempty when the episode stopped early
  bool wall_time_logged = false;
  // Always measured, exported only when wall_time_logged.
  double mean_step_ms = 0.0;
  double max_step_ms = 0.0;
  double mean_solve_ms = 0.0;
  double max_solve_ms = 0.0;
};

struct EpisodeLog {
  EpisodeMetadata meta;
  std::vector<LogRow> rows;
};

// Invoked once per step with the assembled problem and its solution.
using StepObserver = std::function<void(int step, const QProblem&, const QPSolution&)>;

// Runs one closed-loop episode: per step, updates the per-channel error
// models from the previous transition, predicts the moments at the current
// state, solves for the controlled car's force, computes the human drivers'
// forces from the true gains, and advances the plant. The baseline
// controller skips learning entirely and logs zero moments. A plant fault
// or non-finite control stops the loop; the rows completed so far are
// returned with meta.fault describing the abort.
EpisodeLog run_episode(const ScenarioConfig& config, const StepObserver& observer = {});

void export_csv(const EpisodeLog& log, const std::string& path);
void export_json(const EpisodeLog& log, const std::string& path);
EpisodeLog load_csv(const std::string& path);

// Mean |v4 - v_des| over rows with t0 <= t < t1.
double mae(const EpisodeLog& log, double t0, double t1, double v_des);

struct HeadwayStats {
  double min_gap = 0.0;
  double max_gap = 0.0;
  int violations = 0;            // rows with gap outside [b_st, b_go]
  double first_violation_t = -1.0;
};

// Gap statistics between the controlled car and its predecessor.
HeadwayStats headway_stats(const EpisodeLog& log, double b_st, double b_go);

struct CoverageStats {
  int total = 0;
  int inside = 0;
  double fraction = 1.0;
};

// Fraction of one-step-ahead residuals that landed inside the confidence
// interval the controller used one step earlier. Residuals are recomputed
// from the logged states and forces with the config's nominal models;
// channel is 3 (predecessor) or 4 (controlled car).
CoverageStats residual_coverage(const EpisodeLog& log, const ScenarioConfig& config, int channel);

}  // namespace lbsc

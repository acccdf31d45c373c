#pragma once

#include <array>
#include <string>
#include <vector>

#include "lbsc/controllers.hpp"
#include "lbsc/plant.hpp"

namespace lbsc {

// Full description of one episode: plant truth, controller models, learning
// settings, and logging options. Serialized as flat `key = value` text with
// units spelled in the key names; see scenario_text() for the canonical
// listing of every key.
struct ScenarioConfig {
  std::string controller = "lbsc";  // lbsc | lbsc-n | cbf-clf-qp
  double episode_length_s = 100.0;
  double control_rate_hz = 50.0;
  unsigned long seed = 1;

  // Online learning. Each channel regresses the acceleration residual on the
  // car's velocity and, when enabled, on time, so the window can track
  // disturbances that drift at fixed speed.
  int gp_window = 30;
  int gp_refit_period_steps = 50;  // hyperparameter search cadence; 0 = off
  double gp_signal_variance = 1.0;
  double gp_length_scale_v = 5.0;  // m/s
  double gp_length_scale_t = 0.2;  // s
  double gp_noise_variance = 1e-2;
  bool gp_time_feature = true;
  double obs_noise_std = 0.0;  // m/s^2, seeded synthetic measurement noise

  ControllerConfig control;
  PlantConfig plant;
  std::array<double, kFleetSize> init_p{240.0, 180.0, 120.0, 60.0, 0.0};
  std::array<double, kFleetSize> init_v{18.0, 18.0, 18.0, 18.0, 18.0};

  std::vector<double> phase_boundaries{0.0, 20.0, 70.0, 100.0};
  bool log_wall_time = false;  // off keeps exports byte-stable across runs

  ControllerVariant variant() const;
  int total_steps() const;
  double dt() const { return 1.0 / control_rate_hz; }
};

// Parses one file; unknown keys and malformed values raise Error(parse).
ScenarioConfig load_scenario(const std::string& path);

// Applies one `key = value` override in place (same keys as the file format).
void apply_override(ScenarioConfig& config, const std::string& key, const std::string& value);

// Current value of one key, formatted as the file format would print it.
std::string scenario_value(const ScenarioConfig& config, const std::string& key);

// Canonical serialization: every key, fixed order. Feeding it back through
// the parser reproduces the config; its FNV-1a hash identifies the run.
std::string scenario_text(const ScenarioConfig& config);

std::string scenario_hash(const ScenarioConfig& config);

void save_scenario(const ScenarioConfig& config, const std::string& path);

}  // namespace lbsc

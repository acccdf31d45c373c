#pragma once

#include <array>
#include <vector>

#include "lbsc/dynamics.hpp"

namespace lbsc {

inline constexpr int kFleetSize = 5;

// Cars are indexed front to back: car 0 leads, car 3 is the controlled car,
// car 4 trails. Accelerations are derived quantities, refreshed from the
// applied forces at each step start.
struct FleetState {
  double t = 0.0;
  std::array<double, kFleetSize> p{};
  std::array<double, kFleetSize> v{};
  std::array<double, kFleetSize> a{};
};

// Velocity-tracking driver: u = k_b (V(B) - v) + k_p (v_front - v), with the
// range policy V ramping linearly from standstill at gap b_st to free flow
// at gap b_go.
struct DriverParams {
  double k_b = 30.0;    // N s/m
  double k_p = 2000.0;  // N s/m
  double b_st = 25.0;   // m
  double b_go = 100.0;  // m
  double v_free = 40.0; // m/s
  double car_length = 0.0;
};

double range_policy(double gap, const DriverParams& driver);

// Clamped wheel force of one human-driven car.
double human_driver_control(double gap, double v, double v_front, const DriverParams& driver,
                            const CarParams& car);

// Piecewise-constant rolling coefficient plus a sinusoidal grade term that
// switches on at grade_start.
struct DisturbanceSchedule {
  std::vector<double> friction_times{0.0, 10.0, 70.0};
  std::vector<double> friction_values{0.015, 0.03, 0.015};
  double grade_amp = 2.5;    // m/s^2
  double grade_freq = 0.5;   // rad/s
  double grade_start = 70.0; // s

  double friction_at(double t, double fallback) const;
  double grade_accel(double t) const;
};

// Velocity reference for the lead car: a startup ramp to cruise, a
// surge-and-brake excursion, then a sinusoidal weave; or just the startup
// ramp when mode is ramp_hold.
struct LeadProfile {
  enum class Mode { phased, ramp_hold };
  Mode mode = Mode::phased;
  double v_start = 18.0;
  double v_cruise = 20.0;
  double accel1 = 0.4;       // m/s^2
  double v_peak = 30.0;
  double accel2 = 2.0;       // m/s^2
  double brake_rate = 2.5;   // m/s^2, magnitude
  double t_accel2 = 20.0;    // s
  double t_brake = 40.0;     // s
  double t_sine = 70.0;      // s
  double sine_amp = 1.5;     // m/s
  double sine_freq = 0.5;    // rad/s
};

double lead_velocity_profile(double t, const LeadProfile& profile);

struct PlantConfig {
  CarParams car;       // shared true parameters; rolling coefficient may be
                       // overridden in time by the schedule
  DriverParams driver; // true human gains
  DisturbanceSchedule schedule;
  LeadProfile lead;
  double lead_gain = 2.0;  // 1/s, proportional velocity tracking of car 0
  int substeps = 4;        // integrator substeps per control period
};

struct StepResult {
  FleetState next;
  std::array<double, kFleetSize> applied_force{};  // after the box clamp
  std::array<double, kFleetSize> accel{};          // v_dot at the step start
};

// Advances one control period with zero-order-held wheel forces, integrating
// the true dynamics with classical RK4 over `substeps` substeps. The lead
// car's force is computed internally (profile tracking with resistance and
// grade feedforward); the remaining entries of `controls` are clamped to the
// force box and applied. Throws Error(simulation_fault) if the state leaves
// the finite range.
StepResult plant_step(const FleetState& state, const std::array<double, kFleetSize>& controls,
                      double dt, const PlantConfig& config);

}  // namespace lbsc

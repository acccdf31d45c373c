#include "lbsc/plant.hpp"

#include <cmath>
#include <string>

#include "lbsc/error.hpp"

namespace lbsc {

double range_policy(double gap, const DriverParams& driver) {
  if (gap <= driver.b_st) return 0.0;
  if (gap >= driver.b_go) return driver.v_free;
  return driver.v_free / (driver.b_go - driver.b_st) * (gap - driver.b_st);
}

double human_driver_control(double gap, double v, double v_front, const DriverParams& driver,
                            const CarParams& car) {
  const double u = driver.k_b * (range_policy(gap, driver) - v) + driver.k_p * (v_front - v);
  return std::clamp(u, car.u_min(), car.u_max());
}

double DisturbanceSchedule::friction_at(double t, double fallback) const {
  double f = fallback;
  for (std::size_t i = 0; i < friction_times.size() && i < friction_values.size(); ++i) {
    if (t >= friction_times[i]) f = friction_values[i];
  }
  return f;
}

double DisturbanceSchedule::grade_accel(double t) const {
  if (t < grade_start) return 0.0;
  return grade_amp * std::sin(grade_freq * t);
}

double lead_velocity_profile(double t, const LeadProfile& pr) {
  const double ramp1_end = (pr.v_cruise - pr.v_start) / pr.accel1;
  if (t < 0.0) return pr.v_start;
  if (t < ramp1_end) return pr.v_start + pr.accel1 * t;
  if (pr.mode == LeadProfile::Mode::ramp_hold) return pr.v_cruise;

  const double ramp2_end = pr.t_accel2 + (pr.v_peak - pr.v_cruise) / pr.accel2;
  const double brake_end = pr.t_brake + (pr.v_peak - pr.v_cruise) / pr.brake_rate;
  if (t < pr.t_accel2) return pr.v_cruise;
  if (t < ramp2_end) return pr.v_cruise + pr.accel2 * (t - pr.t_accel2);
  if (t < pr.t_brake) return pr.v_peak;
  if (t < brake_end) return pr.v_peak - pr.brake_rate * (t - pr.t_brake);
  if (t < pr.t_sine) return pr.v_cruise;
  return pr.v_cruise + pr.sine_amp * std::sin(pr.sine_freq * (t - pr.t_sine));
}

namespace {

struct Deriv {
  std::array<double, kFleetSize> dp;
  std::array<double, kFleetSize> dv;
};

Deriv dynamics_at(const std::array<double, kFleetSize>& /*p*/,
                  const std::array<double, kFleetSize>& v,
                  const std::array<double, kFleetSize>& u, double tau,
                  const PlantConfig& cfg) {
  CarParams car = cfg.car;
  car.rolling_coeff = cfg.schedule.friction_at(tau, cfg.car.rolling_coeff);
  const double g_acc = cfg.schedule.grade_accel(tau);
  Deriv d;
  for (int i = 0; i < kFleetSize; ++i) {
    d.dp[i] = v[i];
    d.dv[i] = longitudinal_accel(v[i], u[i], car, g_acc);
  }
  return d;
}

}  // namespace

StepResult plant_step(const FleetState& state, const std::array<double, kFleetSize>& controls,
                      double dt, const PlantConfig& cfg) {
  if (!(dt > 0.0) || cfg.substeps < 1) {
    throw Error(Error::Kind::invalid_argument, "plant_step: dt must be > 0 and substeps >= 1");
  }

  StepResult out;

  // Lead car: proportional velocity tracking with resistance and grade
  // feedforward, subject to the same force box as everyone else.
  CarParams car_now = cfg.car;
  car_now.rolling_coeff = cfg.schedule.friction_at(state.t, cfg.car.rolling_coeff);
  const double v_ref = lead_velocity_profile(state.t, cfg.lead);
  const double u_lead = cfg.lead_gain * cfg.car.mass_kg * (v_ref - state.v[0]) +
                        car_now.drag_force(state.v[0]) + car_now.rolling_force() -
                        cfg.car.mass_kg * cfg.schedule.grade_accel(state.t);

  out.applied_force[0] = std::clamp(u_lead, cfg.car.u_min(), cfg.car.u_max());
  for (int i = 1; i < kFleetSize; ++i) {
    out.applied_force[i] = std::clamp(controls[i], cfg.car.u_min(), cfg.car.u_max());
  }

  const double g_acc0 = cfg.schedule.grade_accel(state.t);
  for (int i = 0; i < kFleetSize; ++i) {
    out.accel[i] = longitudinal_accel(state.v[i], out.applied_force[i], car_now, g_acc0);
  }

  // Classical RK4 on the 10-state ODE, forces held for the whole period.
  std::array<double, kFleetSize> p = state.p;
  std::array<double, kFleetSize> v = state.v;
  const double h = dt / cfg.substeps;
  for (int s = 0; s < cfg.substeps; ++s) {
    const double tau = state.t + s * h;
    const Deriv k1 = dynamics_at(p, v, out.applied_force, tau, cfg);
    std::array<double, kFleetSize> p2, v2;
    for (int i = 0; i < kFleetSize; ++i) {
      p2[i] = p[i] + 0.5 * h * k1.dp[i];
      v2[i] = v[i] + 0.5 * h * k1.dv[i];
    }
    const Deriv k2 = dynamics_at(p2, v2, out.applied_force, tau + 0.5 * h, cfg);
    std::array<double, kFleetSize> p3, v3;
    for (int i = 0; i < kFleetSize; ++i) {
      p3[i] = p[i] + 0.5 * h * k2.dp[i];
      v3[i] = v[i] + 0.5 * h * k2.dv[i];
    }
    const Deriv k3 = dynamics_at(p3, v3, out.applied_force, tau + 0.5 * h, cfg);
    std::array<double, kFleetSize> p4, v4;
    for (int i = 0; i < kFleetSize; ++i) {
      p4[i] = p[i] + h * k3.dp[i];
      v4[i] = v[i] + h * k3.dv[i];
    }
    const Deriv k4 = dynamics_at(p4, v4, out.applied_force, tau + h, cfg);
    for (int i = 0; i < kFleetSize; ++i) {
      p[i] += h / 6.0 * (k1.dp[i] + 2.0 * k2.dp[i] + 2.0 * k3.dp[i] + k4.dp[i]);
      v[i] += h / 6.0 * (k1.dv[i] + 2.0 * k2.dv[i] + 2.0 * k3.dv[i] + k4.dv[i]);
    }
  }

  out.next.t = state.t + dt;
  out.next.p = p;
  out.next.v = v;
  out.next.a = out.accel;
  for (int i = 0; i < kFleetSize; ++i) {
    if (!std::isfinite(p[i]) || !std::isfinite(v[i])) {
      throw Error(Error::Kind::simulation_fault,
                  "plant_step: non-finite state at t = " + std::to_string(out.next.t));
    }
  }
  return out;
}

}  // namespace lbsc

#include "doctest.h"

#include <array>
#include <cmath>
#include <numbers>

#include "lbsc/error.hpp"
#include "lbsc/plant.hpp"

using lbsc::CarParams;
using lbsc::DisturbanceSchedule;
using lbsc::DriverParams;
using lbsc::Error;
using lbsc::FleetState;
using lbsc::LeadProfile;
using lbsc::PlantConfig;
using lbsc::StepResult;
using lbsc::kFleetSize;

namespace {

FleetState fleet_at(double v) {
  FleetState s;
  s.p = {160.0, 120.0, 80.0, 40.0, 0.0};
  for (int i = 0; i < kFleetSize; ++i) s.v[i] = v;
  return s;
}

PlantConfig quiet_config() {
  PlantConfig cfg;
  cfg.lead.mode = LeadProfile::Mode::ramp_hold;
  cfg.lead.v_start = 18.0;
  cfg.lead.v_cruise = 18.0;
  cfg.schedule.friction_times = {0.0};
  cfg.schedule.friction_values = {cfg.car.rolling_coeff};
  cfg.schedule.grade_amp = 0.0;
  return cfg;
}

double resistance_force(double v, const CarParams& car) {
  return car.drag_force(v) + car.rolling_force();
}

double max_v_diff(const FleetState& a, const FleetState& b) {
  double m = 0.0;
  for (int i = 0; i < kFleetSize; ++i) m = std::max(m, std::abs(a.v[i] - b.v[i]));
  return m;
}

}  // namespace

TEST_CASE("forces canceling the resistance hold every car at constant speed") {
  const PlantConfig cfg = quiet_config();
  const FleetState s0 = fleet_at(18.0);
  const double u_hold = resistance_force(18.0, cfg.car);
  CHECK(u_hold == doctest::Approx(413.8975).epsilon(1e-14));

  std::array<double, kFleetSize> controls{};
  controls.fill(u_hold);
  const StepResult step = lbsc::plant_step(s0, controls, 0.02, cfg);

  CHECK(step.applied_force[0] == doctest::Approx(u_hold).epsilon(1e-13));
  for (int i = 0; i < kFleetSize; ++i) {
    CHECK(step.next.v[i] == doctest::Approx(18.0).epsilon(1e-14));
    CHECK(step.next.p[i] == doctest::Approx(s0.p[i] + 18.0 * 0.02).epsilon(1e-13));
    CHECK(step.accel[i] == doctest::Approx(0.0));
  }
  CHECK(step.next.t == doctest::Approx(0.02));
}

TEST_CASE("halving the substep size shrinks the integration error fourth-order") {
  PlantConfig cfg = quiet_config();
  const FleetState s0 = fleet_at(30.0);
  std::array<double, kFleetSize> controls{};
  controls.fill(-4000.0);
  const double dt = 5.0;

  PlantConfig ref_cfg = cfg;
  ref_cfg.substeps = 512;
  const FleetState ref = lbsc::plant_step(s0, controls, dt, ref_cfg).next;

  cfg.substeps = 1;
  const double err1 = max_v_diff(lbsc::plant_step(s0, controls, dt, cfg).next, ref);
  cfg.substeps = 2;
  const double err2 = max_v_diff(lbsc::plant_step(s0, controls, dt, cfg).next, ref);

  REQUIRE(err1 > 1e-12);
  CHECK(err1 / err2 >= 8.0);
}

TEST_CASE("the default substep count already integrates the control period tightly") {
  PlantConfig cfg;
  const FleetState s0 = fleet_at(22.0);
  std::array<double, kFleetSize> controls{500.0, 500.0, -300.0, 200.0, 0.0};
  const FleetState a = lbsc::plant_step(s0, controls, 0.02, cfg).next;
  cfg.substeps = 256;
  const FleetState b = lbsc::plant_step(s0, controls, 0.02, cfg).next;
  CHECK(max_v_diff(a, b) <= 1e-9);
}

TEST_CASE("wheel forces are clamped to the actuation box") {
  const PlantConfig cfg;
  CHECK(cfg.car.u_max() == doctest::Approx(4855.95).epsilon(1e-14));
  CHECK(cfg.car.u_min() == doctest::Approx(-4855.95).epsilon(1e-14));

  const FleetState s0 = fleet_at(20.0);
  std::array<double, kFleetSize> controls{0.0, 1e6, -1e6, 1e6, -1e6};
  const StepResult step = lbsc::plant_step(s0, controls, 0.02, cfg);
  CHECK(step.applied_force[1] == cfg.car.u_max());
  CHECK(step.applied_force[2] == cfg.car.u_min());
  CHECK(step.applied_force[3] == cfg.car.u_max());
  CHECK(step.applied_force[4] == cfg.car.u_min());

  // A lead far below its reference saturates its own internal force too.
  FleetState slow = fleet_at(20.0);
  slow.v[0] = 10.0;
  const StepResult lead_step = lbsc::plant_step(slow, controls, 0.02, cfg);
  CHECK(lead_step.applied_force[0] == cfg.car.u_max());
}

TEST_CASE("lead velocity reference hits the phase landmarks") {
  const LeadProfile pr;
  CHECK(lbsc::lead_velocity_profile(-1.0, pr) == 18.0);
  CHECK(lbsc::lead_velocity_profile(0.0, pr) == 18.0);
  CHECK(lbsc::lead_velocity_profile(2.5, pr) == doctest::Approx(19.0).epsilon(1e-14));
  CHECK(lbsc::lead_velocity_profile(5.0, pr) == doctest::Approx(20.0).epsilon(1e-14));
  CHECK(lbsc::lead_velocity_profile(15.0, pr) == doctest::Approx(20.0));
  CHECK(lbsc::lead_velocity_profile(22.5, pr) == doctest::Approx(25.0).epsilon(1e-14));
  CHECK(lbsc::lead_velocity_profile(25.0, pr) == doctest::Approx(30.0).epsilon(1e-14));
  CHECK(lbsc::lead_velocity_profile(40.0, pr) == doctest::Approx(30.0).epsilon(1e-14));
  CHECK(lbsc::lead_velocity_profile(42.0, pr) == doctest::Approx(25.0).epsilon(1e-14));
  CHECK(lbsc::lead_velocity_profile(44.0, pr) == doctest::Approx(20.0).epsilon(1e-14));
  CHECK(lbsc::lead_velocity_profile(70.0, pr) == doctest::Approx(20.0).epsilon(1e-14));
  const double quarter = 70.0 + std::numbers::pi;
  CHECK(lbsc::lead_velocity_profile(quarter, pr) == doctest::Approx(21.5).epsilon(1e-12));

  for (double b : {5.0, 20.0, 25.0, 40.0, 44.0, 70.0}) {
    const double lo = lbsc::lead_velocity_profile(b - 1e-9, pr);
    const double hi = lbsc::lead_velocity_profile(b + 1e-9, pr);
    CHECK(std::abs(hi - lo) <= 1e-6);
  }

  LeadProfile hold;
  hold.mode = LeadProfile::Mode::ramp_hold;
  CHECK(lbsc::lead_velocity_profile(2.5, hold) == doctest::Approx(19.0).epsilon(1e-14));
  CHECK(lbsc::lead_velocity_profile(500.0, hold) == doctest::Approx(20.0));
}

TEST_CASE("range policy ramps linearly between the stop and go gaps") {
  const DriverParams driver;
  CHECK(lbsc::range_policy(20.0, driver) == 0.0);
  CHECK(lbsc::range_policy(25.0, driver) == 0.0);
  CHECK(lbsc::range_policy(60.0, driver) == doctest::Approx(18.666666666666668).epsilon(1e-14));
  CHECK(lbsc::range_policy(62.5, driver) == doctest::Approx(20.0).epsilon(1e-14));
  CHECK(lbsc::range_policy(100.0, driver) == doctest::Approx(40.0));
  CHECK(lbsc::range_policy(150.0, driver) == doctest::Approx(40.0));

  double prev = -1.0;
  for (double gap = 0.0; gap <= 160.0; gap += 0.5) {
    const double v = lbsc::range_policy(gap, driver);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("human driver force matches the gain arithmetic and respects the box") {
  const DriverParams driver;
  const CarParams car;
  CHECK(lbsc::human_driver_control(60.0, 18.0, 18.0, driver, car) ==
        doctest::Approx(20.0).epsilon(1e-12));
  CHECK(lbsc::human_driver_control(10.0, 30.0, 0.0, driver, car) == car.u_min());
  CHECK(lbsc::human_driver_control(200.0, 10.0, 40.0, driver, car) == car.u_max());
}

TEST_CASE("rolling friction follows the switch schedule") {
  const DisturbanceSchedule sched;
  CHECK(sched.friction_at(0.0, 0.5) == 0.015);
  CHECK(sched.friction_at(5.0, 0.5) == 0.015);
  CHECK(sched.friction_at(10.0, 0.5) == 0.03);
  CHECK(sched.friction_at(69.999, 0.5) == 0.03);
  CHECK(sched.friction_at(70.0, 0.5) == 0.015);
  CHECK(sched.friction_at(200.0, 0.5) == 0.015);

  DisturbanceSchedule empty;
  empty.friction_times.clear();
  empty.friction_values.clear();
  CHECK(empty.friction_at(12.0, 0.42) == 0.42);
}

TEST_CASE("grade acceleration stays off until its start time") {
  const DisturbanceSchedule sched;
  CHECK(sched.grade_accel(0.0) == 0.0);
  CHECK(sched.grade_accel(69.999) == 0.0);
  CHECK(sched.grade_accel(70.0) == doctest::Approx(-1.0704566737403776).epsilon(1e-14));
  CHECK(sched.grade_accel(80.0) == doctest::Approx(1.862782901198372).epsilon(1e-14));
}

TEST_CASE("identical inputs step to identical states") {
  const PlantConfig cfg;
  FleetState s0 = fleet_at(19.0);
  s0.t = 33.7;
  std::array<double, kFleetSize> controls{0.0, 120.0, -80.0, 310.0, 40.0};
  const StepResult a = lbsc::plant_step(s0, controls, 0.02, cfg);
  const StepResult b = lbsc::plant_step(s0, controls, 0.02, cfg);
  for (int i = 0; i < kFleetSize; ++i) {
    CHECK(a.next.p[i] == b.next.p[i]);
    CHECK(a.next.v[i] == b.next.v[i]);
    CHECK(a.applied_force[i] == b.applied_force[i]);
  }
}

TEST_CASE("bad step arguments and runaway states raise errors") {
  const PlantConfig cfg;
  const FleetState s0 = fleet_at(20.0);
  std::array<double, kFleetSize> controls{};
  CHECK_THROWS_AS(lbsc::plant_step(s0, controls, 0.0, cfg), Error);
  CHECK_THROWS_AS(lbsc::plant_step(s0, controls, -0.02, cfg), Error);
  {
    PlantConfig bad = cfg;
    bad.substeps = 0;
    CHECK_THROWS_AS(lbsc::plant_step(s0, controls, 0.02, bad), Error);
  }

  FleetState runaway = s0;
  runaway.v[3] = 1e200;
  try {
    lbsc::plant_step(runaway, controls, 0.02, cfg);
    FAIL("expected a simulation fault");
  } catch (const Error& e) {
    CHECK(e.kind() == Error::Kind::simulation_fault);
  }
}

#include "lbsc/controllers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace lbsc {

CccSetup ccc_setup(const FleetState& state, const ChannelMoments& moments,
                   const ControllerConfig& config) {
  CccSetup s;

  const double p2 = state.p[1];
  const double v2 = state.v[1];
  const CarParams self = config.nominal_self;
  const CarParams human = config.nominal_human;
  const DriverParams driver = config.nominal_driver;

  s.x = Eigen::VectorXd(4);
  s.x << state.p[2], state.v[2], state.p[3], state.v[3];

  s.model.state_dim = 4;
  s.model.input_dim = 1;
  // Kinematics are exact; the two accelerations come from the mismatched
  // models, with car 3's force estimated through the softened driver law.
  s.model.drift = [p2, v2, human, driver, self](const Eigen::VectorXd& x) {
    const double u3_nom = human_driver_control(p2 - x[0], x[1], v2, driver, human);
    Eigen::VectorXd f(4);
    f << x[1], longitudinal_accel(x[1], u3_nom, human), x[3], longitudinal_accel(x[3], 0.0, self);
    return f;
  };
  s.model.input_map = [mass = self.mass_kg](const Eigen::VectorXd&) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(4, 1);
    g(3, 0) = 1.0 / mass;
    return g;
  };

  s.mu = Eigen::VectorXd::Zero(4);
  s.sigma = Eigen::VectorXd::Zero(4);
  s.mu[1] = moments.c3.mean;
  s.mu[3] = moments.c4.mean;
  s.sigma[1] = std::sqrt(std::max(0.0, moments.c3.variance));
  s.sigma[3] = std::sqrt(std::max(0.0, moments.c4.variance));

  const double b_st = config.b_st;
  const double b_go = config.b_go;
  const double lam = config.lambda;

  s.front_gap.lambda = lam;
  s.front_gap.k_alpha = config.k_alpha;
  s.front_gap.h.value = [b_st](const Eigen::VectorXd& x) { return x[0] - x[2] - b_st; };
  s.front_gap.h.gradient = [](const Eigen::VectorXd&) {
    Eigen::VectorXd g(4);
    g << 1.0, 0.0, -1.0, 0.0;
    return g;
  };
  // h_ext = h_dot + lambda h; h_dot = v3 - v4 exactly, since positions
  // integrate velocities regardless of model error.
  s.front_gap.h_ext.value = [b_st, lam](const Eigen::VectorXd& x) {
    return (x[1] - x[3]) + lam * (x[0] - x[2] - b_st);
  };
  s.front_gap.h_ext.gradient = [lam](const Eigen::VectorXd&) {
    Eigen::VectorXd g(4);
    g << lam, 1.0, -lam, -1.0;
    return g;
  };

  s.max_gap.lambda = lam;
  s.max_gap.k_alpha = config.k_alpha;
  s.max_gap.h.value = [b_go](const Eigen::VectorXd& x) { return b_go - (x[0] - x[2]); };
  s.max_gap.h.gradient = [](const Eigen::VectorXd&) {
    Eigen::VectorXd g(4);
    g << -1.0, 0.0, 1.0, 0.0;
    return g;
  };
  s.max_gap.h_ext.value = [b_go, lam](const Eigen::VectorXd& x) {
    return (x[3] - x[1]) + lam * (b_go - (x[0] - x[2]));
  };
  s.max_gap.h_ext.gradient = [lam](const Eigen::VectorXd&) {
    Eigen::VectorXd g(4);
    g << -lam, -1.0, lam, 1.0;
    return g;
  };

  const double v_des = config.v_des;
  s.tracking.rate_c = config.clf_rate;
  s.tracking.V.value = [v_des](const Eigen::VectorXd& x) {
    return 0.5 * (x[3] - v_des) * (x[3] - v_des);
  };
  s.tracking.V.gradient = [v_des](const Eigen::VectorXd& x) {
    Eigen::VectorXd g(4);
    g << 0.0, 0.0, 0.0, x[3] - v_des;
    return g;
  };
  return s;
}

namespace {

ControlDiag assemble_and_solve(const FleetState& state, const ChannelMoments& moments,
                               const ControllerConfig& config, double k_eps, double k_eta) {
  const CccSetup s = ccc_setup(state, moments, config);
  const double mass = config.nominal_self.mass_kg;

  ControlDiag diag;
  diag.used = moments;
  diag.problem.H = Eigen::MatrixXd::Constant(1, 1, 1.0 / (mass * mass));
  diag.problem.k_eps = k_eps;
  diag.problem.k_eta = k_eta;
  diag.problem.u_min = Eigen::VectorXd::Constant(1, config.nominal_self.u_min());
  diag.problem.u_max = Eigen::VectorXd::Constant(1, config.nominal_self.u_max());
  diag.problem.rows = {
      safety_row(s.front_gap, s.model, s.x, s.mu, s.sigma, config.c_delta),
      safety_row(s.max_gap, s.model, s.x, s.mu, s.sigma, config.c_delta),
      stability_row(s.tracking, s.model, s.x, s.mu, s.sigma, config.c_delta),
  };

  SolveOptions opts;
  opts.max_iterations = config.qp_max_iterations;
  const auto t0 = std::chrono::steady_clock::now();
  diag.solution = solve(diag.problem, opts);
  diag.solve_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  diag.u = diag.solution.u_star[0];
  diag.eps = diag.solution.eps;
  diag.eta = diag.solution.eta;
  diag.h1 = s.front_gap.h.value(s.x);
  diag.h2 = s.max_gap.h.value(s.x);
  diag.V = s.tracking.V.value(s.x);
  return diag;
}

}  // namespace

ControlDiag lbsc_control(const FleetState& state, const ChannelMoments& moments,
                         const ControllerConfig& config) {
  return assemble_and_solve(state, moments, config, config.k_eps, config.k_eta);
}

ControlDiag lbsc_n_control(const FleetState& state, const ChannelMoments& moments,
                           const ControllerConfig& config) {
  return assemble_and_solve(state, moments, config, config.k_eps, config.k_eps);
}

ControlDiag cbf_clf_qp_control(const FleetState& state, const ControllerConfig& config) {
  return assemble_and_solve(state, ChannelMoments{}, config, config.k_eps, config.k_eta);
}

}  // namespace lbsc

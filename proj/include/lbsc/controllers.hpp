#pragma once

#include "lbsc/constraints.hpp"
#include "lbsc/gp.hpp"
#include "lbsc/plant.hpp"
#include "lbsc/qp.hpp"

namespace lbsc {

enum class ControllerVariant { lbsc, lbsc_n, cbf_clf_qp };

struct ControllerConfig {
  ControllerVariant variant = ControllerVariant::lbsc;
  double v_des = 20.0;    // m/s
  double c_delta = 3.0;   // confidence multiplier on sigma
  double k_eps = 1e30;    // safety slack weight
  double k_eta = 1e20;    // tracking slack weight
  double clf_rate = 0.6;  // 1/s
  double k_alpha = 5.0;   // 1/s, barrier decay gain
  double lambda = 0.2;    // 1/s, barrier extension rate
  double b_st = 25.0;     // m, minimum gap to the preceding car
  double b_go = 100.0;    // m, maximum tracking gap
  int qp_max_iterations = 100;

  // Controller-side (mismatched) models: drag-free, inflated rolling
  // resistance, softened human gains.
  CarParams nominal_self = mismatched_car();
  CarParams nominal_human = mismatched_car();
  DriverParams nominal_driver = softened_driver();

  static CarParams mismatched_car() {
    CarParams c;
    c.f0 = 0.0;
    c.f1 = 0.0;
    c.f2 = 0.0;
    c.rolling_coeff = 0.2;
    return c;
  }
  static DriverParams softened_driver() {
    DriverParams d;
    d.k_b = 20.0;
    d.k_p = 1000.0;
    return d;
  }
};

// Learned-error moments for the two acceleration channels: the preceding
// car (c3) and the controlled car (c4).
struct ChannelMoments {
  PosteriorMoment c3;
  PosteriorMoment c4;
};

// The controller's model slice x = (p3, v3, p4, v4) around the controlled
// car, with the rest of the fleet frozen as exogenous measurements. The
// learned error enters on the two velocity derivatives.
struct CccSetup {
  AffineModel model;
  Eigen::VectorXd x;
  Eigen::VectorXd mu;
  Eigen::VectorXd sigma;
  BarrierSpec front_gap;  // h1 = p3 - p4 - b_st
  BarrierSpec max_gap;    // h2 = b_go - (p3 - p4)
  LyapunovSpec tracking;  // V = 1/2 (v4 - v_des)^2
};

CccSetup ccc_setup(const FleetState& state, const ChannelMoments& moments,
                   const ControllerConfig& config);

struct ControlDiag {
  double u = 0.0;  // N, solved wheel force for the controlled car
  double eps = 0.0;
  double eta = 0.0;
  double solve_ms = 0.0;  // wall-clock time spent in the QP solve
  double h1 = 0.0;
  double h2 = 0.0;
  double V = 0.0;
  ChannelMoments used;  // moments the rows were built with
  QProblem problem;
  QPSolution solution;
};

// Uncertainty-robust controller: rows tightened by c_delta * sigma around
// the learned mean, safety slack dominating the tracking slack.
ControlDiag lbsc_control(const FleetState& state, const ChannelMoments& moments,
                         const ControllerConfig& config);

// Ablation with equal slack weights: safety loses its priority and trades
// off against tracking under conflict.
ControlDiag lbsc_n_control(const FleetState& state, const ChannelMoments& moments,
                           const ControllerConfig& config);

// Baseline on the mismatched model alone (mu = sigma = 0).
ControlDiag cbf_clf_qp_control(const FleetState& state, const ControllerConfig& config);

}  // namespace lbsc

#pragma once

#include <Eigen/Dense>
#include <functional>

namespace lbsc {

// Longitudinal car model
//
//   p_dot = v
//   v_dot = (-F_r(v) - F_f)/M + g_acc + u/M
//
// with aerodynamic drag F_r(v) = f0 + f1*v + f2*v^2, rolling resistance
// F_f = f_f*M*g, road-grade acceleration g_acc, and wheel force u.
// A mismatched parameter set (zero drag, inflated rolling coefficient)
// serves as the controller-side model whose error gets learned online.
struct CarParams {
  double mass_kg = 1650.0;
  double gravity = 9.81;        // m/s^2
  double f0 = 0.1;              // N
  double f1 = 5.0;              // N s/m
  double f2 = 0.25;             // N s^2/m^2
  double rolling_coeff = 0.015; // f_f, dimensionless
  double accel_frac = 0.3;      // c_a: u_max = c_a*M*g
  double decel_frac = 0.3;      // c_d: u_min = -c_d*M*g
  double v_max = 40.0;          // m/s, free-flow speed of the range policy

  double drag_force(double v) const { return f0 + f1 * v + f2 * v * v; }
  double rolling_force() const { return rolling_coeff * mass_kg * gravity; }
  double u_max() const { return accel_frac * mass_kg * gravity; }
  double u_min() const { return -decel_frac * mass_kg * gravity; }
};

// v_dot at velocity v under wheel force u and grade acceleration g_acc.
double longitudinal_accel(double v, double u, const CarParams& params, double g_acc = 0.0);

// Backward-difference acceleration over one sample minus the model's
// prediction at the sample start: the training target for one GP channel.
// Throws Error on dt <= 0 or non-finite inputs.
double residual_observation(double v_prev, double v_now, double dt, double u,
                            const CarParams& nominal, double g_acc = 0.0);

// Control-affine model x_dot = f(x) + g(x) u used by the constraint rows.
struct AffineModel {
  int state_dim = 0;
  int input_dim = 0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> drift;      // f(x)
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> input_map;  // g(x), state_dim x input_dim
};

// Scalar function of the state with an analytic gradient.
struct ScalarField {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
};

// Lie derivatives of a field along the model, plus the first-order effect of
// an additive state-space disturbance with mean mu and per-dimension
// deviation sigma (both full state dimension, zero off the learned channels).
//
//   L_f h = grad h . f(x)        L_g h = g(x)^T grad h
//   L_mu h = grad h . mu         |L_sigma h| = sum_j |dh/dx_j| sigma_j
struct LieDerivatives {
  double L_f = 0.0;
  Eigen::VectorXd L_g;
  double L_mu = 0.0;
  double L_sigma_abs = 0.0;
};

LieDerivatives lie_derivatives(const AffineModel& model, const ScalarField& field,
                               const Eigen::VectorXd& x, const Eigen::VectorXd& mu,
                               const Eigen::VectorXd& sigma);

}  // namespace lbsc

#pragma once

#include <Eigen/Dense>

#include "lbsc/dynamics.hpp"

namespace lbsc {

enum class SlackChannel { safety, stability, none };

// One scalar inequality on the control:  coeff_u . u + rhs_const <= slack,
// where the slack variable is shared per channel (none = hard constraint).
struct ConstraintRow {
  Eigen::VectorXd coeff_u;
  double rhs_const = 0.0;
  SlackChannel slack = SlackChannel::none;
};

// Barrier with linear class-K rate alpha(h) = k_alpha * h. `h` is the
// position-level function defining the safe set; `h_ext` is its first-order
// extension h_ext = h_dot + lambda * h, which restores input dependence when
// the barrier itself has L_g h = 0. Rows are always built on h_ext.
struct BarrierSpec {
  ScalarField h;
  ScalarField h_ext;
  double lambda = 1.0;   // 1/s
  double k_alpha = 5.0;  // 1/s
};

// Lyapunov candidate with exponential decay target V_dot <= -rate_c * V.
struct LyapunovSpec {
  ScalarField V;
  double rate_c = 0.6;  // 1/s
};

// Robustified barrier row. The disturbance interval [mu - c_delta*sigma,
// mu + c_delta*sigma] enters through the mean shift L_mu and the worst-case
// tightening c_delta * |L_sigma|:
//
//   -L_g h_ext . u  - L_f h_ext - L_mu h_ext + c_delta |L_sigma h_ext|
//                                      - k_alpha h_ext(x)   <= slack(safety)
ConstraintRow safety_row(const BarrierSpec& spec, const AffineModel& model,
                         const Eigen::VectorXd& x, const Eigen::VectorXd& mu,
                         const Eigen::VectorXd& sigma, double c_delta);

// Robustified stabilization row, worst-cased in the opposite direction:
//
//   L_g V . u + L_f V + L_mu V + c_delta |L_sigma V| + rate_c V(x) <= slack(stability)
ConstraintRow stability_row(const LyapunovSpec& spec, const AffineModel& model,
                            const Eigen::VectorXd& x, const Eigen::VectorXd& mu,
                            const Eigen::VectorXd& sigma, double c_delta);

struct ZcbfCheck {
  bool ok = false;
  double margin = 0.0;  // d/dt h_ext (x, u, d) + k_alpha * h_ext(x)
};

// Evaluates the extended-barrier condition at a concrete disturbance
// realization d (full state dimension): membership oracle for property tests.
ZcbfCheck satisfies_zcbf(const BarrierSpec& spec, const AffineModel& model,
                         const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                         const Eigen::VectorXd& d);

}  // namespace lbsc

#include "lbsc/dynamics.hpp"

#include <cmath>

#include "lbsc/error.hpp"

namespace lbsc {

double longitudinal_accel(double v, double u, const CarParams& params, double g_acc) {
  return (-params.drag_force(v) - params.rolling_force()) / params.mass_kg + g_acc +
         u / params.mass_kg;
}

double residual_observation(double v_prev, double v_now, double dt, double u,
                            const CarParams& nominal, double g_acc) {
  if (!(dt > 0.0)) {
    throw Error(Error::Kind::invalid_argument, "residual_observation: dt must be > 0");
  }
  if (!std::isfinite(v_prev) || !std::isfinite(v_now) || !std::isfinite(u)) {
    throw Error(Error::Kind::data_quality, "residual_observation: non-finite sample");
  }
  const double measured = (v_now - v_prev) / dt;
  return measured - longitudinal_accel(v_prev, u, nominal, g_acc);
}

LieDerivatives lie_derivatives(const AffineModel& model, const ScalarField& field,
                               const Eigen::VectorXd& x, const Eigen::VectorXd& mu,
                               const Eigen::VectorXd& sigma) {
  if (x.size() != model.state_dim || mu.size() != model.state_dim ||
      sigma.size() != model.state_dim) {
    throw Error(Error::Kind::invalid_argument, "lie_derivatives: dimension mismatch");
  }
  const Eigen::VectorXd grad = field.gradient(x);
  if (grad.size() != model.state_dim) {
    throw Error(Error::Kind::invalid_argument, "lie_derivatives: gradient dimension mismatch");
  }

  LieDerivatives out;
  out.L_f = grad.dot(model.drift(x));
  out.L_g = model.input_map(x).transpose() * grad;
  out.L_mu = grad.dot(mu);
  out.L_sigma_abs = grad.cwiseAbs().dot(sigma);
  return out;
}

}  // namespace lbsc

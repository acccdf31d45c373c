#include "lbsc/constraints.hpp"

#include "lbsc/error.hpp"

namespace lbsc {

ConstraintRow safety_row(const BarrierSpec& spec, const AffineModel& model,
                         const Eigen::VectorXd& x, const Eigen::VectorXd& mu,
                         const Eigen::VectorXd& sigma, double c_delta) {
  if (!(c_delta >= 0.0)) {
    throw Error(Error::Kind::invalid_argument, "safety_row: c_delta must be >= 0");
  }
  const LieDerivatives ld = lie_derivatives(model, spec.h_ext, x, mu, sigma);
  ConstraintRow row;
  row.coeff_u = -ld.L_g;
  row.rhs_const = -ld.L_f - ld.L_mu + c_delta * ld.L_sigma_abs - spec.k_alpha * spec.h_ext.value(x);
  row.slack = SlackChannel::safety;
  return row;
}

ConstraintRow stability_row(const LyapunovSpec& spec, const AffineModel& model,
                            const Eigen::VectorXd& x, const Eigen::VectorXd& mu,
                            const Eigen::VectorXd& sigma, double c_delta) {
  if (!(c_delta >= 0.0)) {
    throw Error(Error::Kind::invalid_argument, "stability_row: c_delta must be >= 0");
  }
  const LieDerivatives ld = lie_derivatives(model, spec.V, x, mu, sigma);
  ConstraintRow row;
  row.coeff_u = ld.L_g;
  row.rhs_const = ld.L_f + ld.L_mu + c_delta * ld.L_sigma_abs + spec.rate_c * spec.V.value(x);
  row.slack = SlackChannel::stability;
  return row;
}

ZcbfCheck satisfies_zcbf(const BarrierSpec& spec, const AffineModel& model,
                         const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                         const Eigen::VectorXd& d) {
  const Eigen::VectorXd grad = spec.h_ext.gradient(x);
  const Eigen::VectorXd xdot = model.drift(x) + model.input_map(x) * u + d;
  ZcbfCheck out;
  out.margin = grad.dot(xdot) + spec.k_alpha * spec.h_ext.value(x);
  out.ok = out.margin >= 0.0;
  return out;
}

}  // namespace lbsc

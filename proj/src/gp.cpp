#include "lbsc/gp.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "lbsc/error.hpp"

namespace lbsc {

double KernelHyper::eval(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
  double q = 0.0;
  for (int j = 0; j < a.size(); ++j) {
    const double r = (a[j] - b[j]) / length_scales[j];
    q += r * r;
  }
  return signal_variance * std::exp(-0.5 * q);
}

HyperBounds HyperBounds::defaults(int feature_dim) {
  HyperBounds b;
  b.lower = Eigen::VectorXd(1 + feature_dim);
  b.upper = Eigen::VectorXd(1 + feature_dim);
  b.lower[0] = 1e-3;   // signal variance
  b.upper[0] = 25.0;
  for (int j = 0; j < feature_dim; ++j) {
    b.lower[1 + j] = 0.05;
    b.upper[1 + j] = 50.0;
  }
  return b;
}

ObservationWindow::ObservationWindow(int capacity, int feature_dim, double noise_variance)
    : capacity_(capacity), feature_dim_(feature_dim), noise_variance_(noise_variance) {
  if (capacity < 1 || feature_dim < 1) {
    throw Error(Error::Kind::invalid_argument, "ObservationWindow: capacity and feature_dim must be >= 1");
  }
  if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance)) {
    throw Error(Error::Kind::invalid_argument, "ObservationWindow: noise_variance must be finite and >= 0");
  }
}

void ObservationWindow::push(const Eigen::VectorXd& input, double target) {
  if (input.size() != feature_dim_) {
    throw Error(Error::Kind::invalid_argument, "ObservationWindow::push: feature dimension mismatch");
  }
  if (!input.allFinite() || !std::isfinite(target)) {
    throw Error(Error::Kind::data_quality, "ObservationWindow::push: non-finite observation");
  }
  if (size() == capacity_) {
    inputs_.pop_front();
    targets_.pop_front();
  }
  inputs_.push_back(input);
  targets_.push_back(target);
}

Eigen::MatrixXd ObservationWindow::inputs() const {
  Eigen::MatrixXd X(size(), feature_dim_);
  for (int i = 0; i < size(); ++i) X.row(i) = inputs_[i].transpose();
  return X;
}

Eigen::VectorXd ObservationWindow::targets() const {
  Eigen::VectorXd y(size());
  for (int i = 0; i < size(); ++i) y[i] = targets_[i];
  return y;
}

GPModel fit(const ObservationWindow& window, const KernelHyper& hyper) {
  if (hyper.length_scales.size() != window.feature_dim()) {
    throw Error(Error::Kind::invalid_argument, "fit: length-scale count must equal feature_dim");
  }
  if (!(hyper.signal_variance > 0.0) || (hyper.length_scales.array() <= 0.0).any()) {
    throw Error(Error::Kind::invalid_argument, "fit: hyperparameters must be > 0");
  }

  GPModel model;
  model.hyper_ = hyper;
  model.noise_variance_ = window.noise_variance();
  if (window.size() == 0) return model;  // prior-only model

  const int n = window.size();
  model.X_ = window.inputs();
  model.y_ = window.targets();

  Eigen::MatrixXd K(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double k = hyper.eval(model.X_.row(i).transpose(), model.X_.row(j).transpose());
      K(i, j) = k;
      K(j, i) = k;
    }
  }
  K.diagonal().array() += window.noise_variance();

  // Jitter ladder: 0, then 1e-10 escalating tenfold up to 1e-4.
  double jitter = 0.0;
  for (;;) {
    Eigen::MatrixXd Kj = K;
    Kj.diagonal().array() += jitter;
    model.chol_.compute(Kj);
    if (model.chol_.info() == Eigen::Success) {
      model.jitter_used_ = jitter;
      model.weights_ = model.chol_.solve(model.y_);
      return model;
    }
    if (jitter == 0.0) {
      jitter = 1e-10;
    } else if (jitter < 1e-4) {
      jitter *= 10.0;
    } else {
      throw Error(Error::Kind::fit_failure,
                  "fit: Cholesky failed with jitter up to " + std::to_string(jitter));
    }
  }
}

PosteriorMoment GPModel::predict(const Eigen::VectorXd& x) const {
  PosteriorMoment out;
  const double k_star = hyper_.eval(x, x);  // = signal_variance
  if (train_size() == 0) {
    out.mean = 0.0;
    out.variance = k_star;
    return out;
  }
  if (x.size() != X_.cols()) {
    throw Error(Error::Kind::invalid_argument, "predict: query dimension mismatch");
  }
  const int n = train_size();
  Eigen::VectorXd k_n(n);
  for (int i = 0; i < n; ++i) k_n[i] = hyper_.eval(X_.row(i).transpose(), x);

  out.mean = k_n.dot(weights_);
  const Eigen::VectorXd v = chol_.matrixL().solve(k_n);
  out.variance = std::max(0.0, k_star - v.squaredNorm());
  return out;
}

double GPModel::log_marginal_likelihood() const {
  const int n = train_size();
  if (n == 0) return 0.0;
  double log_det_half = 0.0;
  for (int i = 0; i < n; ++i) log_det_half += std::log(chol_.matrixLLT()(i, i));
  return -0.5 * y_.dot(weights_) - log_det_half - 0.5 * n * std::log(2.0 * M_PI);
}

ConfidenceInterval confidence_interval(const PosteriorMoment& moment, double c_delta) {
  if (!(c_delta >= 0.0)) {
    throw Error(Error::Kind::invalid_argument, "confidence_interval: c_delta must be >= 0");
  }
  const double sigma = std::sqrt(std::max(0.0, moment.variance));
  return {moment.mean - c_delta * sigma, moment.mean + c_delta * sigma};
}

namespace {

// theta = [sf2, l_1..l_F] in log space.
KernelHyper hyper_from_log(const Eigen::VectorXd& log_theta) {
  KernelHyper h;
  h.signal_variance = std::exp(log_theta[0]);
  h.length_scales = log_theta.tail(log_theta.size() - 1).array().exp();
  return h;
}

double lml_at(const ObservationWindow& window, const Eigen::VectorXd& log_theta) {
  try {
    return fit(window, hyper_from_log(log_theta)).log_marginal_likelihood();
  } catch (const Error&) {
    return -std::numeric_limits<double>::infinity();
  }
}

}  // namespace

HyperFitResult optimize_hyperparameters(const ObservationWindow& window,
                                        const KernelHyper& defaults,
                                        const HyperBounds& bounds) {
  const int dim = 1 + window.feature_dim();
  if (bounds.lower.size() != dim || bounds.upper.size() != dim ||
      (bounds.lower.array() <= 0.0).any() || (bounds.upper.array() < bounds.lower.array()).any()) {
    throw Error(Error::Kind::invalid_argument, "optimize_hyperparameters: malformed bounds");
  }

  HyperFitResult result;
  result.hyper = defaults;
  if (window.size() < 3) {
    result.converged = true;
    result.log_marginal = window.size() == 0 ? 0.0 : fit(window, defaults).log_marginal_likelihood();
    return result;
  }

  const Eigen::VectorXd lo = bounds.lower.array().log();
  const Eigen::VectorXd hi = bounds.upper.array().log();

  // Clamped defaults are the incumbent: the search can only improve on them.
  Eigen::VectorXd incumbent(dim);
  incumbent[0] = std::log(defaults.signal_variance);
  for (int j = 1; j < dim; ++j) incumbent[j] = std::log(defaults.length_scales[j - 1]);
  incumbent = incumbent.cwiseMax(lo).cwiseMin(hi);

  double best_lml = lml_at(window, incumbent);
  Eigen::VectorXd best = incumbent;

  // Coarse pass: full log-space lattice, 5 knots per parameter.
  const int knots = 5;
  Eigen::VectorXd probe(dim);
  std::vector<int> idx(dim, 0);
  for (;;) {
    for (int j = 0; j < dim; ++j) {
      probe[j] = (knots == 1) ? lo[j] : lo[j] + (hi[j] - lo[j]) * idx[j] / (knots - 1);
    }
    const double lml = lml_at(window, probe);
    if (lml > best_lml) {
      best_lml = lml;
      best = probe;
    }
    int carry = 0;
    while (carry < dim && ++idx[carry] == knots) idx[carry++] = 0;
    if (carry == dim) break;
  }

  if (!std::isfinite(best_lml)) {
    result.converged = false;  // nothing factorized; keep the defaults
    result.log_marginal = best_lml;
    return result;
  }

  // Refinement: golden-section sweeps along each coordinate, accepting only
  // improvements so the incumbent guarantee survives.
  const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
  const double tol = 1e-3;
  for (int sweep = 0; sweep < 2; ++sweep) {
    for (int j = 0; j < dim; ++j) {
      double a = lo[j], b = hi[j];
      Eigen::VectorXd p = best;
      double x1 = b - golden * (b - a);
      double x2 = a + golden * (b - a);
      p[j] = x1;
      double f1 = lml_at(window, p);
      p[j] = x2;
      double f2 = lml_at(window, p);
      while (b - a > tol) {
        if (f1 < f2) {
          a = x1;
          x1 = x2;
          f1 = f2;
          x2 = a + golden * (b - a);
          p[j] = x2;
          f2 = lml_at(window, p);
        } else {
          b = x2;
          x2 = x1;
          f2 = f1;
          x1 = b - golden * (b - a);
          p[j] = x1;
          f1 = lml_at(window, p);
        }
      }
      p[j] = 0.5 * (a + b);
      const double f_mid = lml_at(window, p);
      if (f_mid > best_lml) {
        best_lml = f_mid;
        best = p;
      }
    }
  }

  result.hyper = hyper_from_log(best);
  result.converged = true;
  result.log_marginal = best_lml;
  return result;
}

}  // namespace lbsc

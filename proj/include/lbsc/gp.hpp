#pragma once

#include <Eigen/Dense>
#include <deque>

namespace lbsc {

// Squared-exponential kernel with one length scale per input dimension:
//
//   k(a, b) = sf2 * exp(-1/2 * sum_j ((a_j - b_j)/l_j)^2)
struct KernelHyper {
  double signal_variance = 1.0;                                  // sf2
  Eigen::VectorXd length_scales = Eigen::VectorXd::Constant(1, 5.0);

  double eval(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;
};

// Per-parameter box for hyperparameter search, in the same order as
// KernelHyper: signal variance first, then each length scale.
struct HyperBounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  static HyperBounds defaults(int feature_dim);
};

// FIFO training set for one scalar model-error channel. At capacity the
// oldest pair is evicted, so the regressor follows slow drift in the target.
class ObservationWindow {
 public:
  ObservationWindow(int capacity, int feature_dim, double noise_variance);

  // Appends (input, target), evicting the oldest entry when full.
  // Throws Error(data_quality) on non-finite values, Error(invalid_argument)
  // on a dimension mismatch.
  void push(const Eigen::VectorXd& input, double target);

  int size() const { return static_cast<int>(inputs_.size()); }
  int capacity() const { return capacity_; }
  int feature_dim() const { return feature_dim_; }
  double noise_variance() const { return noise_variance_; }

  Eigen::MatrixXd inputs() const;   // size x feature_dim
  Eigen::VectorXd targets() const;  // size

 private:
  int capacity_;
  int feature_dim_;
  double noise_variance_;
  std::deque<Eigen::VectorXd> inputs_;
  std::deque<double> targets_;
};

struct PosteriorMoment {
  double mean = 0.0;
  double variance = 0.0;  // clamped to >= 0
};

struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 0.0;
};

// Frozen posterior: training data snapshot plus the Cholesky factor of
// K + sn2*I. Cheap to copy, safe to query concurrently.
class GPModel {
 public:
  GPModel() = default;  // empty training set: prior moments

  int train_size() const { return static_cast<int>(y_.size()); }
  const KernelHyper& hyper() const { return hyper_; }
  double jitter_used() const { return jitter_used_; }
  const Eigen::VectorXd& weights() const { return weights_; }  // (K + sn2 I)^-1 y

  // Posterior mean and variance at one query point.
  PosteriorMoment predict(const Eigen::VectorXd& x) const;

  // log p(y | X, hyper) of the training set.
  double log_marginal_likelihood() const;

  friend GPModel fit(const ObservationWindow& window, const KernelHyper& hyper);

 private:
  KernelHyper hyper_;
  double noise_variance_ = 1e-2;
  double jitter_used_ = 0.0;
  Eigen::MatrixXd X_;  // n x feature_dim
  Eigen::VectorXd y_;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  Eigen::VectorXd weights_;
};

// Factorizes K + sn2*I with an escalating jitter ladder (1e-10 growing
// tenfold up to 1e-4) and solves for the weights. Throws Error(fit_failure)
// naming the last jitter tried if every rung fails.
GPModel fit(const ObservationWindow& window, const KernelHyper& hyper);

// [mean - c_delta*sigma, mean + c_delta*sigma]; c_delta must be >= 0.
ConfidenceInterval confidence_interval(const PosteriorMoment& moment, double c_delta);

struct HyperFitResult {
  KernelHyper hyper;
  bool converged = false;
  double log_marginal = 0.0;
};

// Deterministic log-space grid search plus golden-section refinement of the
// log marginal likelihood. The incumbent defaults are always a candidate, so
// the result never scores below them. Windows smaller than 3 return the
// defaults unchanged.
HyperFitResult optimize_hyperparameters(const ObservationWindow& window,
                                        const KernelHyper& defaults,
                                        const HyperBounds& bounds);

}  // namespace lbsc

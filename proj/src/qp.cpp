#include "lbsc/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lbsc/error.hpp"

namespace lbsc {

namespace {

struct Assembled {
  int m = 0;           // inputs
  int n = 0;           // m + 2 decision variables (u, eps, eta)
  Eigen::MatrixXd G;   // stacked constraint normals, one row each
  Eigen::VectorXd h;   // G z <= h
  Eigen::MatrixXd A_ls;  // sqrt-objective rows: ||A_ls z||^2 = objective
  int n_rows = 0;      // problem rows (before box faces)
};

Eigen::VectorXd pack(const Eigen::VectorXd& u, double eps, double eta) {
  Eigen::VectorXd z(u.size() + 2);
  z.head(u.size()) = u;
  z[u.size()] = eps;
  z[u.size() + 1] = eta;
  return z;
}

Assembled assemble(const QProblem& p) {
  const int m = static_cast<int>(p.H.rows());
  if (p.H.cols() != m || m < 1) {
    throw Error(Error::Kind::invalid_argument, "solve: H must be square and non-empty");
  }
  if (!p.H.allFinite()) {
    throw Error(Error::Kind::invalid_argument, "solve: H must be finite");
  }
  if (!(p.k_eps >= p.k_eta) || !(p.k_eta > 0.0)) {
    throw Error(Error::Kind::invalid_argument, "solve: require k_eps >= k_eta > 0");
  }
  if (p.u_min.size() != m || p.u_max.size() != m || !p.u_min.allFinite() ||
      !p.u_max.allFinite() || (p.u_min.array() > p.u_max.array()).any()) {
    throw Error(Error::Kind::invalid_argument, "solve: malformed box");
  }

  Eigen::LLT<Eigen::MatrixXd> llt(p.H);
  if (llt.info() != Eigen::Success) {
    throw Error(Error::Kind::invalid_argument, "solve: H must be positive definite");
  }

  Assembled a;
  a.m = m;
  a.n = m + 2;
  a.n_rows = static_cast<int>(p.rows.size());

  const int total = a.n_rows + 2 * m + 2;
  a.G.setZero(total, a.n);
  a.h.setZero(total);
  for (int i = 0; i < a.n_rows; ++i) {
    const ConstraintRow& row = p.rows[i];
    if (row.coeff_u.size() != m || !row.coeff_u.allFinite() || !std::isfinite(row.rhs_const)) {
      throw Error(Error::Kind::invalid_argument, "solve: malformed constraint row");
    }
    a.G.row(i).head(m) = row.coeff_u.transpose();
    if (row.slack == SlackChannel::safety) a.G(i, m) = -1.0;
    if (row.slack == SlackChannel::stability) a.G(i, m + 1) = -1.0;
    a.h[i] = -row.rhs_const;
  }
  for (int j = 0; j < m; ++j) {
    a.G(a.n_rows + j, j) = 1.0;  // u_j <= u_max_j
    a.h[a.n_rows + j] = p.u_max[j];
    a.G(a.n_rows + m + j, j) = -1.0;  // -u_j <= -u_min_j
    a.h[a.n_rows + m + j] = -p.u_min[j];
  }
  a.G(a.n_rows + 2 * m, m) = -1.0;  // eps >= 0
  a.G(a.n_rows + 2 * m + 1, m + 1) = -1.0;  // eta >= 0

  a.A_ls.setZero(m + 2, a.n);
  a.A_ls.topLeftCorner(m, m) = (1.0 / std::sqrt(2.0)) * Eigen::MatrixXd(llt.matrixU());
  a.A_ls(m, m) = std::sqrt(p.k_eps);
  a.A_ls(m + 1, m + 1) = std::sqrt(p.k_eta);
  return a;
}

// Least squares with rows presorted by magnitude, so that the heavy slack
// rows are reduced first and never swamp the light control rows.
Eigen::VectorXd sorted_least_squares(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  std::vector<int> order(A.rows());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
    return A.row(i).lpNorm<Eigen::Infinity>() > A.row(j).lpNorm<Eigen::Infinity>();
  });
  Eigen::MatrixXd As(A.rows(), A.cols());
  Eigen::VectorXd bs(b.size());
  for (int i = 0; i < A.rows(); ++i) {
    As.row(i) = A.row(order[i]);
    bs[i] = b[order[i]];
  }
  return As.colPivHouseholderQr().solve(bs);
}

// The slacks are separable, so eliminating them is exact: at any optimum each
// slack equals the worst violation of its channel, and the control minimizes
//
//   f(u) = 1/2 u'Hu + k_eps max(0, ms(u))^2 + k_eta max(0, mt(u))^2
//
// over the box and hard rows, where ms/mt are the channel-wise worst row
// values. Working on f avoids slack variables and multipliers whose
// magnitudes the extreme penalties push past double precision.
struct Reduced {
  const QProblem& problem;

  struct Channels {
    double ms = 0.0, mt = 0.0;
    Eigen::VectorXd arg_s, arg_t;
  };

  Channels channels(const Eigen::VectorXd& u) const {
    Channels c;
    c.arg_s = Eigen::VectorXd::Zero(u.size());
    c.arg_t = Eigen::VectorXd::Zero(u.size());
    for (const ConstraintRow& row : problem.rows) {
      const double v = row.coeff_u.dot(u) + row.rhs_const;
      if (row.slack == SlackChannel::safety && v > c.ms) {
        c.ms = v;
        c.arg_s = row.coeff_u;
      }
      if (row.slack == SlackChannel::stability && v > c.mt) {
        c.mt = v;
        c.arg_t = row.coeff_u;
      }
    }
    return c;
  }

  double value(const Eigen::VectorXd& u) const {
    const Channels c = channels(u);
    return 0.5 * u.dot(problem.H * u) + problem.k_eps * c.ms * c.ms +
           problem.k_eta * c.mt * c.mt;
  }

  Eigen::VectorXd restore(Eigen::VectorXd v) const {
    v = v.cwiseMax(problem.u_min).cwiseMin(problem.u_max);
    for (int pass = 0; pass < 100; ++pass) {
      bool moved = false;
      for (const ConstraintRow& row : problem.rows) {
        if (row.slack != SlackChannel::none) continue;
        const double r = row.coeff_u.dot(v) + row.rhs_const;
        if (r > 1e-12 * std::max(1.0, std::abs(row.rhs_const))) {
          v -= row.coeff_u * (r / row.coeff_u.squaredNorm());
          v = v.cwiseMax(problem.u_min).cwiseMin(problem.u_max);
          moved = true;
        }
      }
      if (!moved) break;
    }
    return v;
  }

  // Curvature-scaled descent probe with backtracking: the longest step that
  // does not increase f. On the quadratic piece around an optimum the full
  // step is an exact Newton correction; at a kink the smooth curvature
  // underestimates, so full steps can overshoot and the halvings recover; a
  // representable optimum accepts only a sub-ulp step.
  Eigen::VectorXd probe(const Eigen::VectorXd& u) const {
    const Channels c = channels(u);
    Eigen::VectorXd grad = problem.H * u;
    Eigen::VectorXd curv = problem.H.diagonal();
    if (c.ms > 0.0) {
      grad += 2.0 * problem.k_eps * c.ms * c.arg_s;
      curv += 2.0 * problem.k_eps * c.arg_s.cwiseAbs2();
    }
    if (c.mt > 0.0) {
      grad += 2.0 * problem.k_eta * c.mt * c.arg_t;
      curv += 2.0 * problem.k_eta * c.arg_t.cwiseAbs2();
    }
    const Eigen::VectorXd dir = (grad.array() / curv.cwiseMax(1e-300).array()).matrix();
    const double f0 = value(u);
    for (double scale = 1.0; scale > 1e-30; scale *= 0.5) {
      const Eigen::VectorXd u_try = restore(u - scale * dir);
      if (value(u_try) <= f0) return u_try;
    }
    return u;
  }
};

}  // namespace

double objective(const QProblem& problem, const Eigen::VectorXd& u, double eps, double eta) {
  return 0.5 * u.dot(problem.H * u) + problem.k_eps * eps * eps + problem.k_eta * eta * eta;
}

QPSolution solve(const QProblem& problem, const SolveOptions& options) {
  const Assembled a = assemble(problem);
  const int m = a.m;
  const int n = a.n;
  const int total = static_cast<int>(a.G.rows());

  // Feasible start: clamp the origin into the box, repair hard rows by
  // cyclic projection, then lift the slacks onto the worst violations.
  Eigen::VectorXd u0 = Eigen::VectorXd::Zero(m).cwiseMax(problem.u_min).cwiseMin(problem.u_max);
  bool any_hard = false;
  for (const auto& row : problem.rows) any_hard |= row.slack == SlackChannel::none;
  if (any_hard) {
    for (int pass = 0; pass < 500; ++pass) {
      bool moved = false;
      for (const auto& row : problem.rows) {
        if (row.slack != SlackChannel::none) continue;
        const double v = row.coeff_u.dot(u0) + row.rhs_const;
        if (v > 1e-12) {
          u0 -= row.coeff_u * (v / row.coeff_u.squaredNorm());
          u0 = u0.cwiseMax(problem.u_min).cwiseMin(problem.u_max);
          moved = true;
        }
      }
      if (!moved) break;
    }
    for (const auto& row : problem.rows) {
      if (row.slack != SlackChannel::none) continue;
      const double v = row.coeff_u.dot(u0) + row.rhs_const;
      if (v > 1e-8 * std::max(1.0, std::abs(row.rhs_const))) {
        throw Error(Error::Kind::invalid_argument, "solve: hard rows inconsistent with the box");
      }
    }
  }
  double eps0 = 0.0, eta0 = 0.0;
  for (const auto& row : problem.rows) {
    const double v = row.coeff_u.dot(u0) + row.rhs_const;
    if (row.slack == SlackChannel::safety) eps0 = std::max(eps0, v);
    if (row.slack == SlackChannel::stability) eta0 = std::max(eta0, v);
  }
  Eigen::VectorXd z = pack(u0, eps0, eta0);

  std::vector<int> W;  // working set: indices into G
  QPSolution sol;
  sol.status = SolveStatus::max_iter;

  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    const int k = static_cast<int>(W.size());

    // Equality-constrained step in the null space of the working set.
    Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd GWt(n, k);
    for (int i = 0; i < k; ++i) GWt.col(i) = a.G.row(W[i]).transpose();
    Eigen::MatrixXd Z;
    if (k == 0) {
      Z = Eigen::MatrixXd::Identity(n, n);
    } else if (k < n) {
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(GWt);
      Eigen::MatrixXd Qfull = qr.householderQ();
      Z = Qfull.rightCols(n - k);
    }
    if (k < n) {
      const Eigen::MatrixXd B = a.A_ls * Z;
      const Eigen::VectorXd w = sorted_least_squares(B, -(a.A_ls * z));
      p = Z * w;
    }

    double rel_step = 0.0;
    for (int c = 0; c < n; ++c) {
      rel_step = std::max(rel_step, std::abs(p[c]) / std::max(1.0, std::abs(z[c])));
    }

    if (rel_step <= 1e-12) {
      // Stationary on the current face: check multiplier signs. The system
      // must include every constraint active at z, not only the working set:
      // a slack that lands within rounding of its bound injects a
      // 2k-amplified gradient term whose sign is noise until the bound's own
      // multiplier is there to absorb it.
      if (k == 0) {
        sol.status = SolveStatus::optimal;
        break;
      }
      std::vector<int> active = W;
      for (int i = 0; i < total; ++i) {
        if (std::find(W.begin(), W.end(), i) != W.end()) continue;
        if (std::abs(a.G.row(i).dot(z) - a.h[i]) <= 1e-9 * std::max(1.0, std::abs(a.h[i]))) {
          active.push_back(i);
        }
      }
      Eigen::MatrixXd GAt(n, static_cast<int>(active.size()));
      for (int i = 0; i < static_cast<int>(active.size()); ++i) {
        GAt.col(i) = a.G.row(active[i]).transpose();
      }
      const Eigen::VectorXd Qz = a.A_ls.transpose() * (a.A_ls * z) * 2.0;  // Q z
      const Eigen::VectorXd lambda = GAt.colPivHouseholderQr().solve(-Qz);
      int worst = -1;
      double worst_val = -1e-8 * std::max(1.0, lambda.cwiseAbs().maxCoeff());
      for (int i = 0; i < k; ++i) {
        if (lambda[i] < worst_val) {
          worst_val = lambda[i];
          worst = i;
        }
      }
      if (worst < 0) {
        sol.status = SolveStatus::optimal;
        break;
      }
      W.erase(W.begin() + worst);
      continue;
    }

    // Ratio test against constraints outside the working set.
    double alpha = 1.0;
    int blocking = -1;
    double blocking_viol = -std::numeric_limits<double>::infinity();
    const double p_norm = p.lpNorm<Eigen::Infinity>();
    for (int i = 0; i < total; ++i) {
      if (std::find(W.begin(), W.end(), i) != W.end()) continue;
      const double gp = a.G.row(i).dot(p);
      const double row_scale = a.G.row(i).lpNorm<Eigen::Infinity>();
      if (gp <= 1e-14 * row_scale * std::max(1.0, p_norm)) continue;
      const double gap = a.h[i] - a.G.row(i).dot(z);
      const double alpha_i = std::max(0.0, gap) / gp;
      // Ties go to the face that the full step would violate hardest.
      const double viol = a.G.row(i).dot(z + p) - a.h[i];
      const double tie_tol = 1e-12 * std::max(1.0, alpha);
      if (alpha_i < alpha - tie_tol || (alpha_i <= alpha + tie_tol && viol > blocking_viol)) {
        if (alpha_i < alpha) alpha = alpha_i;
        blocking = i;
        blocking_viol = viol;
      }
    }

    z += alpha * p;
    if (blocking >= 0 && alpha < 1.0) {
      W.push_back(blocking);
    } else if (alpha >= 1.0) {
      // Full step taken; next pass re-evaluates stationarity on this face.
      continue;
    }
  }

  sol.u_star = z.head(m);

  // The null-space steps lose relative precision on rows with tiny control
  // coefficients (orthogonal reflections round absolutely, tilting the face
  // direction), and the penalty weights amplify the loss. Polishing on the
  // reduced objective removes it: each accepted probe is monotone, and near
  // the optimum it is an exact Newton correction on the local quadratic
  // piece.
  const Reduced reduced{problem};
  for (int pass = 0; pass < 8; ++pass) {
    const Eigen::VectorXd next = reduced.probe(sol.u_star);
    double moved = 0.0;
    for (int c = 0; c < m; ++c) {
      moved = std::max(moved,
                       std::abs(next[c] - sol.u_star[c]) / std::max(1.0, std::abs(sol.u_star[c])));
    }
    sol.u_star = next;
    if (moved <= 1e-15) break;
  }
  const Reduced::Channels at_u = reduced.channels(sol.u_star);
  sol.eps = std::max(0.0, at_u.ms);
  sol.eta = std::max(0.0, at_u.mt);
  sol.iterations = iter;
  if (sol.status != SolveStatus::optimal) sol.status = SolveStatus::max_iter;
  sol.kkt_residual = kkt_verify(problem, sol).max_residual();
  return sol;
}

double KktReport::max_residual() const {
  return std::max(stationarity, std::max(primal, complementarity));
}

KktReport kkt_verify(const QProblem& problem, const QPSolution& solution) {
  const Assembled a = assemble(problem);
  const int m = a.m;
  if (solution.u_star.size() != m) {
    throw Error(Error::Kind::invalid_argument, "kkt_verify: solution dimension mismatch");
  }
  const Eigen::VectorXd& u = solution.u_star;
  const Eigen::VectorXd z = pack(u, solution.eps, solution.eta);

  KktReport report;

  for (int i = 0; i < a.G.rows(); ++i) {
    const double viol = a.G.row(i).dot(z) - a.h[i];
    report.primal = std::max(report.primal, viol / std::max(1.0, std::abs(a.h[i])));
  }
  report.primal = std::max(report.primal, 0.0);

  const Reduced reduced{problem};
  const Reduced::Channels c = reduced.channels(u);

  // Complementary slackness in slack units: a slack above its channel's
  // worst violation is pure excess cost.
  report.complementarity =
      std::max(std::abs(solution.eps - c.ms) / std::max(1.0, c.ms),
               std::abs(solution.eta - c.mt) / std::max(1.0, c.mt));

  // Stationarity as the relative displacement the descent probe achieves:
  // zero exactly when no feasible probe step improves the reduced objective.
  const Eigen::VectorXd u_try = reduced.probe(u);
  for (int i = 0; i < m; ++i) {
    report.stationarity = std::max(report.stationarity,
                                   std::abs(u_try[i] - u[i]) / std::max(1.0, std::abs(u[i])));
  }
  return report;
}

}  // namespace lbsc

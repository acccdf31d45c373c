#include "lbsc/episode.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <numbers>

#include "json.hpp"
#include "lbsc/error.hpp"

namespace lbsc {

const std::array<const char*, kLogColumns> kColumnNames = {
    "t",    "p1", "p2",  "p3",    "p4",       "p5",    "v1",       "v2", "v3", "v4", "v5",
    "a1",   "a2", "a3",  "a4",    "a5",       "u1",    "u2",       "u3", "u4", "u5", "eps",
    "eta",  "mu_c3",     "sigma_c3",          "mu_c4", "sigma_c4", "h1", "h2", "V",  "solve_ms"};

std::array<double, kLogColumns> row_values(const LogRow& row) {
  std::array<double, kLogColumns> out{};
  int i = 0;
  out[i++] = row.t;
  for (double x : row.p) out[i++] = x;
  for (double x : row.v) out[i++] = x;
  for (double x : row.a) out[i++] = x;
  for (double x : row.u) out[i++] = x;
  out[i++] = row.eps;
  out[i++] = row.eta;
  out[i++] = row.mu_c3;
  out[i++] = row.sigma_c3;
  out[i++] = row.mu_c4;
  out[i++] = row.sigma_c4;
  out[i++] = row.h1;
  out[i++] = row.h2;
  out[i++] = row.V;
  out[i++] = row.solve_ms;
  return out;
}

namespace {

LogRow row_from_values(const std::array<double, kLogColumns>& values) {
  LogRow row;
  int i = 0;
  row.t = values[i++];
  for (double& x : row.p) x = values[i++];
  for (double& x : row.v) x = values[i++];
  for (double& x : row.a) x = values[i++];
  for (double& x : row.u) x = values[i++];
  row.eps = values[i++];
  row.eta = values[i++];
  row.mu_c3 = values[i++];
  row.sigma_c3 = values[i++];
  row.mu_c4 = values[i++];
  row.sigma_c4 = values[i++];
  row.h1 = values[i++];
  row.h2 = values[i++];
  row.V = values[i++];
  row.solve_ms = values[i++];
  return row;
}

std::string csv_header() {
  std::string out;
  for (int i = 0; i < kLogColumns; ++i) {
    if (i > 0) out += ',';
    out += kColumnNames[i];
  }
  return out;
}

// Deterministic per-draw Gaussian stream: a splitmix64 chain keyed by
// (seed, step, channel) feeding one Box-Muller transform.
double gaussian_draw(unsigned long long seed, int step, int channel) {
  unsigned long long z =
      seed ^ (0x9e3779b97f4a7c15ull *
              (2ull * static_cast<unsigned long long>(step) + static_cast<unsigned>(channel) + 1));
  auto next = [&z] {
    z += 0x9e3779b97f4a7c15ull;
    unsigned long long x = z;
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebull;
    x ^= x >> 31;
    return x;
  };
  const double u1 = ((next() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
  const double u2 = (next() >> 11) * 0x1.0p-53;        // [0, 1)
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Eigen::VectorXd feature_at(double v, double t, bool time_feature) {
  if (time_feature) {
    Eigen::VectorXd f(2);
    f << v, t;
    return f;
  }
  return Eigen::VectorXd::Constant(1, v);
}

double ms_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

// Estimated force on the predecessor through the controller's softened
// driver law, from its own gap and the car in front of it.
double predecessor_force_estimate(const FleetState& state, const ControllerConfig& control) {
  return human_driver_control(state.p[1] - state.p[2], state.v[2], state.v[1],
                              control.nominal_driver, control.nominal_human);
}

}  // namespace

EpisodeLog run_episode(const ScenarioConfig& config, const StepObserver& observer) {
  const ControllerVariant variant = config.variant();
  ControllerConfig control = config.control;
  control.variant = variant;
  const double dt = config.dt();
  const int steps = config.total_steps();
  const bool learn = variant != ControllerVariant::cbf_clf_qp;
  const int feature_dim = config.gp_time_feature ? 2 : 1;

  KernelHyper hyper;
  hyper.signal_variance = config.gp_signal_variance;
  hyper.length_scales = Eigen::VectorXd::Constant(feature_dim, config.gp_length_scale_v);
  if (config.gp_time_feature) hyper.length_scales[1] = config.gp_length_scale_t;

  // Bounds in hyperparameter order: signal variance, velocity length scale,
  // then the time length scale when enabled.
  HyperBounds bounds = HyperBounds::defaults(feature_dim);
  bounds.lower[1] = 0.5;
  if (config.gp_time_feature) bounds.upper[2] = 1.0;

  ObservationWindow window3(config.gp_window, feature_dim, config.gp_noise_variance);
  ObservationWindow window4(config.gp_window, feature_dim, config.gp_noise_variance);
  KernelHyper hyper3 = hyper;
  KernelHyper hyper4 = hyper;
  GPModel gp3 = fit(window3, hyper3);
  GPModel gp4 = fit(window4, hyper4);

  FleetState state;
  state.p = config.init_p;
  state.v = config.init_v;

  FleetState prev;
  std::array<double, kFleetSize> prev_force{};
  bool have_prev = false;

  EpisodeLog log;
  log.meta.controller = config.controller;
  log.meta.seed = config.seed;
  log.meta.config_hash = scenario_hash(config);
  log.meta.wall_time_logged = config.log_wall_time;
  log.rows.reserve(static_cast<std::size_t>(steps));

  double step_ms_sum = 0.0, step_ms_max = 0.0;
  double solve_ms_sum = 0.0, solve_ms_max = 0.0;

  for (int k = 0; k < steps; ++k) {
    state.t = k * dt;
    const auto t_begin = std::chrono::steady_clock::now();

    if (learn && have_prev) {
      double d3 = residual_observation(prev.v[2], state.v[2], dt,
                                       predecessor_force_estimate(prev, control),
                                       control.nominal_human);
      double d4 = residual_observation(prev.v[3], state.v[3], dt, prev_force[3],
                                       control.nominal_self);
      if (config.obs_noise_std > 0.0) {
        d3 += config.obs_noise_std * gaussian_draw(config.seed, k, 0);
        d4 += config.obs_noise_std * gaussian_draw(config.seed, k, 1);
      }
      window3.push(feature_at(prev.v[2], prev.t, config.gp_time_feature), d3);
      window4.push(feature_at(prev.v[3], prev.t, config.gp_time_feature), d4);
      if (config.gp_refit_period_steps > 0 && k % config.gp_refit_period_steps == 0 &&
          window3.size() >= 3) {
        hyper3 = optimize_hyperparameters(window3, hyper3, bounds).hyper;
        hyper4 = optimize_hyperparameters(window4, hyper4, bounds).hyper;
      }
      gp3 = fit(window3, hyper3);
      gp4 = fit(window4, hyper4);
    }

    ChannelMoments moments;
    if (learn) {
      moments.c3 = gp3.predict(feature_at(state.v[2], state.t, config.gp_time_feature));
      moments.c4 = gp4.predict(feature_at(state.v[3], state.t, config.gp_time_feature));
    }

    ControlDiag diag;
    switch (variant) {
      case ControllerVariant::lbsc:
        diag = lbsc_control(state, moments, control);
        break;
      case ControllerVariant::lbsc_n:
        diag = lbsc_n_control(state, moments, control);
        break;
      case ControllerVariant::cbf_clf_qp:
        diag = cbf_clf_qp_control(state, control);
        break;
    }

    std::array<double, kFleetSize> controls{};
    controls[1] = human_driver_control(state.p[0] - state.p[1], state.v[1], state.v[0],
                                       config.plant.driver, config.plant.car);
    controls[2] = human_driver_control(state.p[1] - state.p[2], state.v[2], state.v[1],
                                       config.plant.driver, config.plant.car);
    controls[3] = diag.u;
    controls[4] = human_driver_control(state.p[3] - state.p[4], state.v[4], state.v[3],
                                       config.plant.driver, config.plant.car);

    if (!std::isfinite(diag.u)) {
      log.meta.fault = "non-finite control at t = " + std::to_string(state.t);
      break;
    }

    StepResult result;
    try {
      result = plant_step(state, controls, dt, config.plant);
    } catch (const Error& e) {
      if (e.kind() != Error::Kind::simulation_fault) throw;
      log.meta.fault = e.what();
      break;
    }

    const double step_ms = ms_since(t_begin);
    step_ms_sum += step_ms;
    step_ms_max = std::max(step_ms_max, step_ms);
    solve_ms_sum += diag.solve_ms;
    solve_ms_max = std::max(solve_ms_max, diag.solve_ms);

    if (observer) observer(k, diag.problem, diag.solution);

    LogRow row;
    row.t = state.t;
    row.p = state.p;
    row.v = state.v;
    row.a = result.accel;
    row.u = result.applied_force;
    row.eps = diag.eps;
    row.eta = diag.eta;
    row.mu_c3 = diag.used.c3.mean;
    row.sigma_c3 = std::sqrt(std::max(0.0, diag.used.c3.variance));
    row.mu_c4 = diag.used.c4.mean;
    row.sigma_c4 = std::sqrt(std::max(0.0, diag.used.c4.variance));
    row.h1 = diag.h1;
    row.h2 = diag.h2;
    row.V = diag.V;
    row.solve_ms = config.log_wall_time ? diag.solve_ms : 0.0;
    log.rows.push_back(row);

    prev = state;
    prev_force = result.applied_force;
    have_prev = true;
    state = result.next;
  }

  const int completed = static_cast<int>(log.rows.size());
  if (completed > 0) {
    log.meta.mean_step_ms = step_ms_sum / completed;
    log.meta.max_step_ms = step_ms_max;
    log.meta.mean_solve_ms = solve_ms_sum / completed;
    log.meta.max_solve_ms = solve_ms_max;
  }
  return log;
}

void export_csv(const EpisodeLog& log, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (f == nullptr) throw Error(Error::Kind::io, "cannot write '" + path + "'");
  std::fputs(csv_header().c_str(), f);
  std::fputc('\n', f);
  for (const LogRow& row : log.rows) {
    const auto values = row_values(row);
    for (int i = 0; i < kLogColumns; ++i)
      std::fprintf(f, i == 0 ? "%.9g" : ",%.9g", values[i]);
    std::fputc('\n', f);
  }
  const bool bad = std::ferror(f) != 0;
  std::fclose(f);
  if (bad) throw Error(Error::Kind::io, "write failed for '" + path + "'");
}

void export_json(const EpisodeLog& log, const std::string& path) {
  nlohmann::json j;
  j["meta"] = {{"library_version", log.meta.library_version},
               {"controller", log.meta.controller},
               {"seed", log.meta.seed},
               {"config_hash", log.meta.config_hash}};
  if (!log.meta.fault.empty()) j["meta"]["fault"] = log.meta.fault;
  if (log.meta.wall_time_logged) {
    j["meta"]["timing"] = {{"mean_step_ms", log.meta.mean_step_ms},
                           {"max_step_ms", log.meta.max_step_ms},
                           {"mean_solve_ms", log.meta.mean_solve_ms},
                           {"max_solve_ms", log.meta.max_solve_ms}};
  }
  j["columns"] = kColumnNames;
  nlohmann::json rows = nlohmann::json::array();
  for (const LogRow& row : log.rows) rows.push_back(row_values(row));
  j["rows"] = std::move(rows);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Error::Kind::io, "cannot write '" + path + "'");
  out << j.dump() << '\n';
  if (!out) throw Error(Error::Kind::io, "write failed for '" + path + "'");
}

EpisodeLog load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Error::Kind::io, "cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw Error(Error::Kind::parse, path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != csv_header())
    throw Error(Error::Kind::parse, path + ": unexpected header '" + line + "'");

  EpisodeLog log;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::array<double, kLogColumns> values{};
    const char* cursor = line.c_str();
    for (int i = 0; i < kLogColumns; ++i) {
      char* end = nullptr;
      values[i] = std::strtod(cursor, &end);
      if (end == cursor)
        throw Error(Error::Kind::parse,
                    path + ":" + std::to_string(line_no) + ": expected a number");
      cursor = end;
      const char expected = (i + 1 < kLogColumns) ? ',' : '\0';
      if (*cursor != expected)
        throw Error(Error::Kind::parse,
                    path + ":" + std::to_string(line_no) + ": expected " + std::to_string(kLogColumns) +
                        " comma-separated values");
      if (*cursor == ',') ++cursor;
    }
    log.rows.push_back(row_from_values(values));
  }
  return log;
}

double mae(const EpisodeLog& log, double t0, double t1, double v_des) {
  double sum = 0.0;
  int count = 0;
  for (const LogRow& row : log.rows) {
    if (row.t < t0 || row.t >= t1) continue;
    sum += std::abs(row.v[3] - v_des);
    ++count;
  }
  if (count == 0)
    throw Error(Error::Kind::invalid_argument, "no log rows in the requested time range");
  return sum / count;
}

HeadwayStats headway_stats(const EpisodeLog& log, double b_st, double b_go) {
  HeadwayStats stats;
  bool first = true;
  for (const LogRow& row : log.rows) {
    const double gap = row.p[2] - row.p[3];
    if (first) {
      stats.min_gap = gap;
      stats.max_gap = gap;
      first = false;
    } else {
      stats.min_gap = std::min(stats.min_gap, gap);
      stats.max_gap = std::max(stats.max_gap, gap);
    }
    if (gap < b_st || gap > b_go) {
      ++stats.violations;
      if (stats.first_violation_t < 0.0) stats.first_violation_t = row.t;
    }
  }
  return stats;
}

CoverageStats residual_coverage(const EpisodeLog& log, const ScenarioConfig& config, int channel) {
  if (channel != 3 && channel != 4)
    throw Error(Error::Kind::invalid_argument, "channel must be 3 or 4");
  const double dt = config.dt();
  CoverageStats stats;
  for (std::size_t k = 1; k < log.rows.size(); ++k) {
    const LogRow& prev = log.rows[k - 1];
    const LogRow& now = log.rows[k];
    double residual, mu, sigma;
    if (channel == 4) {
      residual =
          residual_observation(prev.v[3], now.v[3], dt, prev.u[3], config.control.nominal_self);
      mu = prev.mu_c4;
      sigma = prev.sigma_c4;
    } else {
      const double u3 = human_driver_control(prev.p[1] - prev.p[2], prev.v[2], prev.v[1],
                                             config.control.nominal_driver,
                                             config.control.nominal_human);
      residual = residual_observation(prev.v[2], now.v[2], dt, u3, config.control.nominal_human);
      mu = prev.mu_c3;
      sigma = prev.sigma_c3;
    }
    ++stats.total;
    if (std::abs(residual - mu) <= config.control.c_delta * sigma) ++stats.inside;
  }
  stats.fraction = stats.total > 0 ? static_cast<double>(stats.inside) / stats.total : 1.0;
  return stats;
}

}  // namespace lbsc

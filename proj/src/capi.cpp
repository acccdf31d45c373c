#include "lbsc.h"

#include <cstring>
#include <exception>
#include <string>

#include "lbsc/episode.hpp"
#include "lbsc/error.hpp"
#include "lbsc/scenario.hpp"

struct lbsc_scenario {
  lbsc::ScenarioConfig config;
};

struct lbsc_log {
  lbsc::EpisodeLog log;
};

namespace {

thread_local std::string g_last_error;

lbsc_status status_of(lbsc::Error::Kind kind) {
  switch (kind) {
    case lbsc::Error::Kind::invalid_argument:
      return LBSC_ERR_INVALID;
    case lbsc::Error::Kind::data_quality:
    case lbsc::Error::Kind::fit_failure:
      return LBSC_ERR_NUMERIC;
    case lbsc::Error::Kind::io:
      return LBSC_ERR_IO;
    case lbsc::Error::Kind::parse:
      return LBSC_ERR_PARSE;
    case lbsc::Error::Kind::simulation_fault:
      return LBSC_ERR_FAULT;
  }
  return LBSC_ERR_INVALID;
}

template <typename F>
lbsc_status guarded(F&& body) {
  try {
    return body();
  } catch (const lbsc::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return LBSC_ERR_INVALID;
  }
}

lbsc_status null_arg(const char* what) {
  g_last_error = std::string(what) + " must not be NULL";
  return LBSC_ERR_NULL;
}

lbsc_status copy_out(const std::string& text, char* buf, size_t buf_size) {
  if (buf_size < text.size() + 1) {
    g_last_error = "buffer too small: need " + std::to_string(text.size() + 1) + " bytes";
    return LBSC_ERR_INVALID;
  }
  std::memcpy(buf, text.c_str(), text.size() + 1);
  return LBSC_OK;
}

}  // namespace

extern "C" {

const char* lbsc_version(void) { return lbsc::kLibraryVersion; }

const char* lbsc_last_error(void) { return g_last_error.c_str(); }

lbsc_status lbsc_scenario_default(lbsc_scenario_t** out) {
  if (out == nullptr) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    *out = new lbsc_scenario{};
    return LBSC_OK;
  });
}

lbsc_status lbsc_scenario_load(const char* path, lbsc_scenario_t** out) {
  if (path == nullptr) return null_arg("path");
  if (out == nullptr) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    *out = new lbsc_scenario{lbsc::load_scenario(path)};
    return LBSC_OK;
  });
}

lbsc_status lbsc_scenario_set(lbsc_scenario_t* scenario, const char* key, const char* value) {
  if (scenario == nullptr) return null_arg("scenario");
  if (key == nullptr) return null_arg("key");
  if (value == nullptr) return null_arg("value");
  return guarded([&] {
    lbsc::apply_override(scenario->config, key, value);
    return LBSC_OK;
  });
}

lbsc_status lbsc_scenario_get(const lbsc_scenario_t* scenario, const char* key, char* buf,
                              size_t buf_size) {
  if (scenario == nullptr) return null_arg("scenario");
  if (key == nullptr) return null_arg("key");
  if (buf == nullptr) return null_arg("buf");
  return guarded([&] { return copy_out(lbsc::scenario_value(scenario->config, key), buf, buf_size); });
}

lbsc_status lbsc_scenario_save(const lbsc_scenario_t* scenario, const char* path) {
  if (scenario == nullptr) return null_arg("scenario");
  if (path == nullptr) return null_arg("path");
  return guarded([&] {
    lbsc::save_scenario(scenario->config, path);
    return LBSC_OK;
  });
}

lbsc_status lbsc_scenario_hash(const lbsc_scenario_t* scenario, char* buf, size_t buf_size) {
  if (scenario == nullptr) return null_arg("scenario");
  if (buf == nullptr) return null_arg("buf");
  return guarded([&] { return copy_out(lbsc::scenario_hash(scenario->config), buf, buf_size); });
}

void lbsc_scenario_free(lbsc_scenario_t* scenario) { delete scenario; }

lbsc_status lbsc_run_episode(const lbsc_scenario_t* scenario, lbsc_log_t** out) {
  if (scenario == nullptr) return null_arg("scenario");
  if (out == nullptr) return null_arg("out");
  *out = nullptr;
  return guarded([&]() -> lbsc_status {
    *out = new lbsc_log{lbsc::run_episode(scenario->config)};
    if (!(*out)->log.meta.fault.empty()) {
      g_last_error = (*out)->log.meta.fault;
      return LBSC_ERR_FAULT;
    }
    return LBSC_OK;
  });
}

const char* lbsc_log_fault(const lbsc_log_t* log) {
  return log == nullptr ? "" : log->log.meta.fault.c_str();
}

lbsc_status lbsc_log_export(const lbsc_log_t* log, const char* path, const char* format) {
  if (log == nullptr) return null_arg("log");
  if (path == nullptr) return null_arg("path");
  if (format == nullptr) return null_arg("format");
  return guarded([&]() -> lbsc_status {
    const std::string fmt = format;
    if (fmt == "csv") {
      lbsc::export_csv(log->log, path);
    } else if (fmt == "json") {
      lbsc::export_json(log->log, path);
    } else {
      g_last_error = "unknown format '" + fmt + "' (expected csv or json)";
      return LBSC_ERR_INVALID;
    }
    return LBSC_OK;
  });
}

lbsc_status lbsc_log_load_csv(const char* path, lbsc_log_t** out) {
  if (path == nullptr) return null_arg("path");
  if (out == nullptr) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    *out = new lbsc_log{lbsc::load_csv(path)};
    return LBSC_OK;
  });
}

size_t lbsc_log_rows(const lbsc_log_t* log) { return log == nullptr ? 0 : log->log.rows.size(); }

lbsc_status lbsc_log_mae(const lbsc_log_t* log, double t0, double t1, double v_des, double* out) {
  if (log == nullptr) return null_arg("log");
  if (out == nullptr) return null_arg("out");
  return guarded([&] {
    *out = lbsc::mae(log->log, t0, t1, v_des);
    return LBSC_OK;
  });
}

lbsc_status lbsc_log_headway(const lbsc_log_t* log, double b_st, double b_go, double* min_gap,
                             double* max_gap, int* violations, double* first_violation_t) {
  if (log == nullptr) return null_arg("log");
  return guarded([&] {
    const lbsc::HeadwayStats stats = lbsc::headway_stats(log->log, b_st, b_go);
    if (min_gap != nullptr) *min_gap = stats.min_gap;
    if (max_gap != nullptr) *max_gap = stats.max_gap;
    if (violations != nullptr) *violations = stats.violations;
    if (first_violation_t != nullptr) *first_violation_t = stats.first_violation_t;
    return LBSC_OK;
  });
}

lbsc_status lbsc_log_timing(const lbsc_log_t* log, double* mean_step_ms, double* max_step_ms,
                            double* mean_solve_ms, double* max_solve_ms) {
  if (log == nullptr) return null_arg("log");
  if (mean_step_ms != nullptr) *mean_step_ms = log->log.meta.mean_step_ms;
  if (max_step_ms != nullptr) *max_step_ms = log->log.meta.max_step_ms;
  if (mean_solve_ms != nullptr) *mean_solve_ms = log->log.meta.mean_solve_ms;
  if (max_solve_ms != nullptr) *max_solve_ms = log->log.meta.max_solve_ms;
  return LBSC_OK;
}

void lbsc_log_free(lbsc_log_t* log) { delete log; }

}  // extern "C"

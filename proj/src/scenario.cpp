#include "lbsc/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "lbsc/error.hpp"

namespace lbsc {
namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_list(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ' ';
    out += fmt(values[i]);
  }
  return out;
}

template <std::size_t N>
std::string fmt_list(const std::array<double, N>& values) {
  return fmt_list(std::vector<double>(values.begin(), values.end()));
}

double parse_double(const std::string& text) {
  const char* begin = text.c_str();
  char* end = nullptr;
  double value = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw Error(Error::Kind::parse, "expected a number, got '" + text + "'");
  return value;
}

long parse_long(const std::string& text) {
  const char* begin = text.c_str();
  char* end = nullptr;
  long value = std::strtol(begin, &end, 10);
  if (end == begin || *end != '\0')
    throw Error(Error::Kind::parse, "expected an integer, got '" + text + "'");
  return value;
}

bool parse_bool(const std::string& text) {
  if (text == "true" || text == "on" || text == "1") return true;
  if (text == "false" || text == "off" || text == "0") return false;
  throw Error(Error::Kind::parse, "expected a boolean, got '" + text + "'");
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::istringstream stream(text);
  std::string token;
  while (stream >> token) out.push_back(parse_double(token));
  if (out.empty()) throw Error(Error::Kind::parse, "expected a list of numbers");
  return out;
}

template <std::size_t N>
std::array<double, N> parse_fixed_list(const std::string& text) {
  std::vector<double> values = parse_list(text);
  if (values.size() != N)
    throw Error(Error::Kind::parse,
                "expected " + std::to_string(N) + " values, got " + std::to_string(values.size()));
  std::array<double, N> out{};
  std::copy(values.begin(), values.end(), out.begin());
  return out;
}

using Set = void (*)(ScenarioConfig&, const std::string&);
using Get = std::string (*)(const ScenarioConfig&);

struct KeyEntry {
  const char* name;
  Set set;
  Get get;
};

#define SCALAR_KEY(name, field)                                                  \
  {name, [](ScenarioConfig& c, const std::string& v) { c.field = parse_double(v); }, \
   [](const ScenarioConfig& c) { return fmt(c.field); }}

const KeyEntry kKeys[] = {
    {"controller",
     [](ScenarioConfig& c, const std::string& v) {
       if (v != "lbsc" && v != "lbsc-n" && v != "cbf-clf-qp")
         throw Error(Error::Kind::parse, "unknown controller '" + v + "'");
       c.controller = v;
     },
     [](const ScenarioConfig& c) { return c.controller; }},
    SCALAR_KEY("episode_length_s", episode_length_s),
    SCALAR_KEY("control_rate_hz", control_rate_hz),
    {"seed",
     [](ScenarioConfig& c, const std::string& v) {
       c.seed = static_cast<unsigned long>(parse_long(v));
     },
     [](const ScenarioConfig& c) { return std::to_string(c.seed); }},
    {"substeps",
     [](ScenarioConfig& c, const std::string& v) {
       c.plant.substeps = static_cast<int>(parse_long(v));
     },
     [](const ScenarioConfig& c) { return std::to_string(c.plant.substeps); }},
    {"log_wall_time",
     [](ScenarioConfig& c, const std::string& v) { c.log_wall_time = parse_bool(v); },
     [](const ScenarioConfig& c) { return std::string(c.log_wall_time ? "true" : "false"); }},
    {"phase_boundaries_s",
     [](ScenarioConfig& c, const std::string& v) { c.phase_boundaries = parse_list(v); },
     [](const ScenarioConfig& c) { return fmt_list(c.phase_boundaries); }},
    {"init_p_m",
     [](ScenarioConfig& c, const std::string& v) {
       c.init_p = parse_fixed_list<kFleetSize>(v);
     },
     [](const ScenarioConfig& c) { return fmt_list(c.init_p); }},
    {"init_v_mps",
     [](ScenarioConfig& c, const std::string& v) {
       c.init_v = parse_fixed_list<kFleetSize>(v);
     },
     [](const ScenarioConfig& c) { return fmt_list(c.init_v); }},

    SCALAR_KEY("mass_kg", plant.car.mass_kg),
    SCALAR_KEY("gravity_mps2", plant.car.gravity),
    SCALAR_KEY("f0_n", plant.car.f0),
    SCALAR_KEY("f1_ns_per_m", plant.car.f1),
    SCALAR_KEY("f2_ns2_per_m2", plant.car.f2),
    SCALAR_KEY("rolling_coeff", plant.car.rolling_coeff),
    SCALAR_KEY("accel_frac", plant.car.accel_frac),
    SCALAR_KEY("decel_frac", plant.car.decel_frac),
    SCALAR_KEY("v_max_mps", plant.car.v_max),
    SCALAR_KEY("driver_kb_ns_per_m", plant.driver.k_b),
    SCALAR_KEY("driver_kp_ns_per_m", plant.driver.k_p),
    SCALAR_KEY("driver_v_free_mps", plant.driver.v_free),
    {"friction_times_s",
     [](ScenarioConfig& c, const std::string& v) {
       c.plant.schedule.friction_times = parse_list(v);
     },
     [](const ScenarioConfig& c) { return fmt_list(c.plant.schedule.friction_times); }},
    {"friction_values",
     [](ScenarioConfig& c, const std::string& v) {
       c.plant.schedule.friction_values = parse_list(v);
     },
     [](const ScenarioConfig& c) { return fmt_list(c.plant.schedule.friction_values); }},
    SCALAR_KEY("grade_amp_mps2", plant.schedule.grade_amp),
    SCALAR_KEY("grade_freq_rad_per_s", plant.schedule.grade_freq),
    SCALAR_KEY("grade_start_s", plant.schedule.grade_start),
    {"lead_mode",
     [](ScenarioConfig& c, const std::string& v) {
       if (v == "phased")
         c.plant.lead.mode = LeadProfile::Mode::phased;
       else if (v == "ramp-hold")
         c.plant.lead.mode = LeadProfile::Mode::ramp_hold;
       else
         throw Error(Error::Kind::parse, "unknown lead mode '" + v + "'");
     },
     [](const ScenarioConfig& c) {
       return std::string(c.plant.lead.mode == LeadProfile::Mode::phased ? "phased"
                                                                         : "ramp-hold");
     }},
    SCALAR_KEY("lead_v_start_mps", plant.lead.v_start),
    SCALAR_KEY("lead_v_cruise_mps", plant.lead.v_cruise),
    SCALAR_KEY("lead_accel1_mps2", plant.lead.accel1),
    SCALAR_KEY("lead_v_peak_mps", plant.lead.v_peak),
    SCALAR_KEY("lead_accel2_mps2", plant.lead.accel2),
    SCALAR_KEY("lead_brake_rate_mps2", plant.lead.brake_rate),
    SCALAR_KEY("lead_t_accel2_s", plant.lead.t_accel2),
    SCALAR_KEY("lead_t_brake_s", plant.lead.t_brake),
    SCALAR_KEY("lead_t_sine_s", plant.lead.t_sine),
    SCALAR_KEY("lead_sine_amp_mps", plant.lead.sine_amp),
    SCALAR_KEY("lead_sine_freq_rad_per_s", plant.lead.sine_freq),
    SCALAR_KEY("lead_gain", plant.lead_gain),

    SCALAR_KEY("v_des_mps", control.v_des),
    SCALAR_KEY("c_delta", control.c_delta),
    SCALAR_KEY("k_eps", control.k_eps),
    SCALAR_KEY("k_eta", control.k_eta),
    SCALAR_KEY("clf_rate_per_s", control.clf_rate),
    SCALAR_KEY("barrier_alpha_per_s", control.k_alpha),
    SCALAR_KEY("barrier_lambda_per_s", control.lambda),
    {"b_st_m",
     [](ScenarioConfig& c, const std::string& v) {
       double b = parse_double(v);
       c.control.b_st = b;
       c.plant.driver.b_st = b;
     },
     [](const ScenarioConfig& c) { return fmt(c.control.b_st); }},
    {"b_go_m",
     [](ScenarioConfig& c, const std::string& v) {
       double b = parse_double(v);
       c.control.b_go = b;
       c.plant.driver.b_go = b;
     },
     [](const ScenarioConfig& c) { return fmt(c.control.b_go); }},
    {"qp_max_iterations",
     [](ScenarioConfig& c, const std::string& v) {
       c.control.qp_max_iterations = static_cast<int>(parse_long(v));
     },
     [](const ScenarioConfig& c) { return std::to_string(c.control.qp_max_iterations); }},
    SCALAR_KEY("nominal4_mass_kg", control.nominal_self.mass_kg),
    SCALAR_KEY("nominal4_f0_n", control.nominal_self.f0),
    SCALAR_KEY("nominal4_f1_ns_per_m", control.nominal_self.f1),
    SCALAR_KEY("nominal4_f2_ns2_per_m2", control.nominal_self.f2),
    SCALAR_KEY("nominal4_rolling_coeff", control.nominal_self.rolling_coeff),
    SCALAR_KEY("nominal3_mass_kg", control.nominal_human.mass_kg),
    SCALAR_KEY("nominal3_f0_n", control.nominal_human.f0),
    SCALAR_KEY("nominal3_f1_ns_per_m", control.nominal_human.f1),
    SCALAR_KEY("nominal3_f2_ns2_per_m2", control.nominal_human.f2),
    SCALAR_KEY("nominal3_rolling_coeff", control.nominal_human.rolling_coeff),
    SCALAR_KEY("nominal_driver_kb_ns_per_m", control.nominal_driver.k_b),
    SCALAR_KEY("nominal_driver_kp_ns_per_m", control.nominal_driver.k_p),

    {"gp_window",
     [](ScenarioConfig& c, const std::string& v) { c.gp_window = static_cast<int>(parse_long(v)); },
     [](const ScenarioConfig& c) { return std::to_string(c.gp_window); }},
    {"gp_refit_period_steps",
     [](ScenarioConfig& c, const std::string& v) {
       c.gp_refit_period_steps = static_cast<int>(parse_long(v));
     },
     [](const ScenarioConfig& c) { return std::to_string(c.gp_refit_period_steps); }},
    SCALAR_KEY("gp_signal_variance", gp_signal_variance),
    SCALAR_KEY("gp_length_scale_v", gp_length_scale_v),
    SCALAR_KEY("gp_length_scale_t", gp_length_scale_t),
    SCALAR_KEY("gp_noise_variance", gp_noise_variance),
    {"gp_time_feature",
     [](ScenarioConfig& c, const std::string& v) { c.gp_time_feature = parse_bool(v); },
     [](const ScenarioConfig& c) { return std::string(c.gp_time_feature ? "true" : "false"); }},
    SCALAR_KEY("obs_noise_std", obs_noise_std),
};

#undef SCALAR_KEY

const KeyEntry* find_key(const std::string& name) {
  for (const KeyEntry& entry : kKeys)
    if (name == entry.name) return &entry;
  return nullptr;
}

std::string trim(const std::string& text) {
  std::size_t begin = text.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  std::size_t end = text.find_last_not_of(" \t\r\n");
  return text.substr(begin, end - begin + 1);
}

void validate(const ScenarioConfig& config) {
  if (config.episode_length_s <= 0.0)
    throw Error(Error::Kind::parse, "episode_length_s must be positive");
  if (config.control_rate_hz <= 0.0)
    throw Error(Error::Kind::parse, "control_rate_hz must be positive");
  if (config.gp_window < 1) throw Error(Error::Kind::parse, "gp_window must be at least 1");
  if (config.plant.substeps < 1) throw Error(Error::Kind::parse, "substeps must be at least 1");
  if (config.plant.schedule.friction_times.size() != config.plant.schedule.friction_values.size())
    throw Error(Error::Kind::parse, "friction_times_s and friction_values differ in length");
  if (config.phase_boundaries.size() < 2 ||
      !std::is_sorted(config.phase_boundaries.begin(), config.phase_boundaries.end()))
    throw Error(Error::Kind::parse, "phase_boundaries_s must be ascending with at least 2 entries");
}

}  // namespace

ControllerVariant ScenarioConfig::variant() const {
  if (controller == "lbsc") return ControllerVariant::lbsc;
  if (controller == "lbsc-n") return ControllerVariant::lbsc_n;
  if (controller == "cbf-clf-qp") return ControllerVariant::cbf_clf_qp;
  throw Error(Error::Kind::invalid_argument, "unknown controller '" + controller + "'");
}

int ScenarioConfig::total_steps() const {
  return static_cast<int>(std::lround(episode_length_s * control_rate_hz));
}

void apply_override(ScenarioConfig& config, const std::string& key, const std::string& value) {
  const KeyEntry* entry = find_key(key);
  if (entry == nullptr) throw Error(Error::Kind::parse, "unknown scenario key '" + key + "'");
  entry->set(config, value);
}

std::string scenario_value(const ScenarioConfig& config, const std::string& key) {
  const KeyEntry* entry = find_key(key);
  if (entry == nullptr) throw Error(Error::Kind::parse, "unknown scenario key '" + key + "'");
  return entry->get(config);
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Error::Kind::io, "cannot open scenario file '" + path + "'");
  ScenarioConfig config;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(Error::Kind::parse,
                  path + ":" + std::to_string(line_no) + ": expected 'key = value'");
    try {
      apply_override(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const Error& e) {
      throw Error(e.kind(), path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  validate(config);
  return config;
}

std::string scenario_text(const ScenarioConfig& config) {
  std::string out;
  for (const KeyEntry& entry : kKeys) {
    out += entry.name;
    out += " = ";
    out += entry.get(config);
    out += '\n';
  }
  return out;
}

std::string scenario_hash(const ScenarioConfig& config) {
  const std::string text = scenario_text(config);
  unsigned long long h = 14695981039346656037ull;
  for (unsigned char byte : text) {
    h ^= byte;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", h);
  return buf;
}

void save_scenario(const ScenarioConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(Error::Kind::io, "cannot write scenario file '" + path + "'");
  out << scenario_text(config);
  if (!out) throw Error(Error::Kind::io, "write failed for '" + path + "'");
}

}  // namespace lbsc

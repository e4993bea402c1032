#pragma once

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bnls/dynamics.hpp"
#include "bnls/ground_state.hpp"
#include "bnls/model.hpp"

namespace bnls {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Mode { Simulate, GroundState, Classify, LinearDecay, Sweep };
enum class InitialKind { Gaussian, GroundStateScaled, FromCheckpoint };

struct InitialData {
  InitialKind kind = InitialKind::Gaussian;
  double amplitude = 1.0, width = 1.0;  // gaussian: amplitude * exp(-r^2 / (2 width^2))
  double c = 1.0;                       // ground_state_scaled: c * Q
  std::string path;                     // from_checkpoint
};

struct SweepSpec {
  std::string parameter;  // c, amplitude, alpha or mu; empty for no sweep
  double start = 0, stop = 0;
  int steps = 0;
  bool simulate = true;   // evolve each point and report a verdict

  std::vector<double> values() const {
    std::vector<double> v;
    for (int k = 0; k < steps; ++k) v.push_back(steps == 1 ? start : start + (stop - start) * k / (steps - 1.0));
    return v;
  }
};

struct DecaySpec {
  double t_lo = 0.0, t_hi = 0.0;  // 0: 10 w^4 and 200 w^4 for a Gaussian of width w
  int samples = 16;
  double sponge_strength = 1e3;
};

struct ScatteringSpec {
  double window = 20.0;
  std::vector<double> criterion_T;
  double linear_dt = 0.01;
};

struct ExperimentConfig {
  std::optional<int> N;
  double mu = 0.0;
  std::optional<double> alpha;
  std::size_t M = 4096;
  double R_max = 100.0;
  SolverConfig solver;
  InitialData initial;
  Mode mode = Mode::Simulate;
  SweepSpec sweep;
  PetviashviliOptions petviashvili;
  DecaySpec decay;
  ScatteringSpec scattering;
  bool write_checkpoint = false;
  int probe_trials = 20;
  double probe_epsilon = 1e-2;

  Params params() const { return derive_params(*N, mu, *alpha); }
};

inline std::string to_string(Mode m) {
  switch (m) {
    case Mode::Simulate: return "simulate";
    case Mode::GroundState: return "ground_state";
    case Mode::Classify: return "classify";
    case Mode::LinearDecay: return "linear_decay";
    case Mode::Sweep: return "sweep";
  }
  return "?";
}

inline std::string to_string(InitialKind k) {
  switch (k) {
    case InitialKind::Gaussian: return "gaussian";
    case InitialKind::GroundStateScaled: return "ground_state_scaled";
    case InitialKind::FromCheckpoint: return "from_checkpoint";
  }
  return "?";
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto s = trim(v);
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw ConfigError("config: " + key + " expects a number, got '" + v + "'");
  return x;
}

inline long parse_int(const std::string& key, const std::string& v) {
  long x = 0;
  const auto s = trim(v);
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw ConfigError("config: " + key + " expects an integer, got '" + v + "'");
  return x;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  const auto s = trim(v);
  if (s == "true" || s == "1" || s == "on" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "off" || s == "no") return false;
  throw ConfigError("config: " + key + " expects a boolean, got '" + v + "'");
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(parse_double(key, item));
  }
  return out;
}

inline std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) s += ",";
    std::ostringstream o;
    o.precision(17);
    o << v[k];
    s += o.str();
  }
  return s;
}

template <class E>
E parse_enum(const std::string& key, const std::string& v, const std::map<std::string, E>& names) {
  const auto it = names.find(trim(v));
  if (it == names.end()) throw ConfigError("config: unknown value '" + v + "' for " + key);
  return it->second;
}

struct Field {
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<nlohmann::json(const ExperimentConfig&)> get;
};

inline const std::map<std::string, Field>& fields() {
  using C = ExperimentConfig;
  using J = nlohmann::json;
  static const std::map<std::string, Field> f = [] {
    std::map<std::string, Field> m;
    auto num = [&m](const std::string& k, double C::*ptr) {
      m[k] = {[k, ptr](C& c, const std::string& v) { c.*ptr = parse_double(k, v); }, [ptr](const C& c) { return J(c.*ptr); }};
    };
    auto sol = [&m](const std::string& k, double SolverConfig::*ptr) {
      m[k] = {[k, ptr](C& c, const std::string& v) { c.solver.*ptr = parse_double(k, v); },
              [ptr](const C& c) { return J(c.solver.*ptr); }};
    };
    auto soli = [&m](const std::string& k, int SolverConfig::*ptr) {
      m[k] = {[k, ptr](C& c, const std::string& v) { c.solver.*ptr = static_cast<int>(parse_int(k, v)); },
              [ptr](const C& c) { return J(c.solver.*ptr); }};
    };
    auto solb = [&m](const std::string& k, bool SolverConfig::*ptr) {
      m[k] = {[k, ptr](C& c, const std::string& v) { c.solver.*ptr = parse_bool(k, v); },
              [ptr](const C& c) { return J(c.solver.*ptr); }};
    };

    m["params.N"] = {[](C& c, const std::string& v) { c.N = static_cast<int>(parse_int("params.N", v)); },
                     [](const C& c) { return c.N ? J(*c.N) : J(nullptr); }};
    num("params.mu", &C::mu);
    m["params.alpha"] = {[](C& c, const std::string& v) { c.alpha = parse_double("params.alpha", v); },
                         [](const C& c) { return c.alpha ? J(*c.alpha) : J(nullptr); }};
    m["grid.M"] = {[](C& c, const std::string& v) {
                     const long M = parse_int("grid.M", v);
                     if (M < 4) throw ConfigError("config: grid.M must be >= 4");
                     c.M = static_cast<std::size_t>(M);
                   },
                   [](const C& c) { return J(c.M); }};
    num("grid.R_max", &C::R_max);

    sol("solver.dt0", &SolverConfig::dt0);
    sol("solver.dt_min", &SolverConfig::dt_min);
    sol("solver.t_max", &SolverConfig::t_max);
    soli("solver.record_every", &SolverConfig::record_every);
    soli("solver.snapshot_every", &SolverConfig::snapshot_every);
    sol("solver.blowup_factor", &SolverConfig::blowup_factor);
    sol("solver.drift_tol", &SolverConfig::drift_tol);
    solb("solver.adaptive", &SolverConfig::adaptive);
    sol("solver.dt_cap", &SolverConfig::dt_cap);
    solb("solver.nonlinear", &SolverConfig::nonlinear);
    sol("solver.weight_R", &SolverConfig::weight_R);
    sol("solver.ball_R", &SolverConfig::ball_R);
    sol("solver.fp_tol", &SolverConfig::fp_tol);
    soli("solver.fp_max_iter", &SolverConfig::fp_max_iter);
    soli("solver.min_core_nodes", &SolverConfig::min_core_nodes);
    m["solver.integrator"] = {
        [](C& c, const std::string& v) {
          c.solver.integrator = parse_enum<Integrator>("solver.integrator", v,
                                                       {{"midpoint", Integrator::Midpoint}, {"strang", Integrator::Strang}});
        },
        [](const C& c) { return J(c.solver.integrator == Integrator::Midpoint ? "midpoint" : "strang"); }};
    m["solver.probe_radii"] = {[](C& c, const std::string& v) { c.solver.probe_radii = parse_list("solver.probe_radii", v); },
                               [](const C& c) { return J(join(c.solver.probe_radii)); }};

    m["sponge.on"] = {[](C& c, const std::string& v) { c.solver.sponge.on = parse_bool("sponge.on", v); },
                      [](const C& c) { return J(c.solver.sponge.on); }};
    m["sponge.width_fraction"] = {
        [](C& c, const std::string& v) { c.solver.sponge.width_fraction = parse_double("sponge.width_fraction", v); },
        [](const C& c) { return J(c.solver.sponge.width_fraction); }};
    m["sponge.strength"] = {[](C& c, const std::string& v) { c.solver.sponge.strength = parse_double("sponge.strength", v); },
                            [](const C& c) { return J(c.solver.sponge.strength); }};

    m["initial.kind"] = {[](C& c, const std::string& v) {
                           c.initial.kind = parse_enum<InitialKind>("initial.kind", v,
                                                                    {{"gaussian", InitialKind::Gaussian},
                                                                     {"ground_state_scaled", InitialKind::GroundStateScaled},
                                                                     {"from_checkpoint", InitialKind::FromCheckpoint}});
                         },
                         [](const C& c) { return J(to_string(c.initial.kind)); }};
    m["initial.amplitude"] = {[](C& c, const std::string& v) { c.initial.amplitude = parse_double("initial.amplitude", v); },
                              [](const C& c) { return J(c.initial.amplitude); }};
    m["initial.width"] = {[](C& c, const std::string& v) { c.initial.width = parse_double("initial.width", v); },
                          [](const C& c) { return J(c.initial.width); }};
    m["initial.c"] = {[](C& c, const std::string& v) { c.initial.c = parse_double("initial.c", v); },
                      [](const C& c) { return J(c.initial.c); }};
    m["initial.path"] = {[](C& c, const std::string& v) { c.initial.path = trim(v); },
                         [](const C& c) { return J(c.initial.path); }};

    m["mode"] = {[](C& c, const std::string& v) {
                   c.mode = parse_enum<Mode>("mode", v,
                                             {{"simulate", Mode::Simulate},
                                              {"ground_state", Mode::GroundState},
                                              {"classify", Mode::Classify},
                                              {"linear_decay", Mode::LinearDecay},
                                              {"sweep", Mode::Sweep}});
                 },
                 [](const C& c) { return J(to_string(c.mode)); }};

    m["sweep.parameter"] = {[](C& c, const std::string& v) {
                              const auto s = trim(v);
                              if (!s.empty() && s != "c" && s != "amplitude" && s != "alpha" && s != "mu")
                                throw ConfigError("config: sweep.parameter must be one of c, amplitude, alpha, mu");
                              c.sweep.parameter = s;
                            },
                            [](const C& c) { return J(c.sweep.parameter); }};
    m["sweep.start"] = {[](C& c, const std::string& v) { c.sweep.start = parse_double("sweep.start", v); },
                        [](const C& c) { return J(c.sweep.start); }};
    m["sweep.stop"] = {[](C& c, const std::string& v) { c.sweep.stop = parse_double("sweep.stop", v); },
                       [](const C& c) { return J(c.sweep.stop); }};
    m["sweep.steps"] = {[](C& c, const std::string& v) {
                          const long n = parse_int("sweep.steps", v);
                          if (n < 0) throw ConfigError("config: sweep.steps must be >= 0");
                          c.sweep.steps = static_cast<int>(n);
                        },
                        [](const C& c) { return J(c.sweep.steps); }};
    m["sweep.simulate"] = {[](C& c, const std::string& v) { c.sweep.simulate = parse_bool("sweep.simulate", v); },
                           [](const C& c) { return J(c.sweep.simulate); }};

    m["ground_state.tol"] = {[](C& c, const std::string& v) { c.petviashvili.tol = parse_double("ground_state.tol", v); },
                             [](const C& c) { return J(c.petviashvili.tol); }};
    m["ground_state.max_iter"] = {
        [](C& c, const std::string& v) { c.petviashvili.max_iter = static_cast<int>(parse_int("ground_state.max_iter", v)); },
        [](const C& c) { return J(c.petviashvili.max_iter); }};
    m["ground_state.seed_width"] = {
        [](C& c, const std::string& v) { c.petviashvili.seed_width = parse_double("ground_state.seed_width", v); },
        [](const C& c) { return J(c.petviashvili.seed_width); }};
    m["ground_state.probe_trials"] = {
        [](C& c, const std::string& v) { c.probe_trials = static_cast<int>(parse_int("ground_state.probe_trials", v)); },
        [](const C& c) { return J(c.probe_trials); }};
    num("ground_state.probe_epsilon", &C::probe_epsilon);

    m["decay.t_lo"] = {[](C& c, const std::string& v) { c.decay.t_lo = parse_double("decay.t_lo", v); },
                       [](const C& c) { return J(c.decay.t_lo); }};
    m["decay.t_hi"] = {[](C& c, const std::string& v) { c.decay.t_hi = parse_double("decay.t_hi", v); },
                       [](const C& c) { return J(c.decay.t_hi); }};
    m["decay.samples"] = {[](C& c, const std::string& v) { c.decay.samples = static_cast<int>(parse_int("decay.samples", v)); },
                          [](const C& c) { return J(c.decay.samples); }};
    m["decay.sponge_strength"] = {
        [](C& c, const std::string& v) { c.decay.sponge_strength = parse_double("decay.sponge_strength", v); },
        [](const C& c) { return J(c.decay.sponge_strength); }};

    m["scattering.window"] = {[](C& c, const std::string& v) { c.scattering.window = parse_double("scattering.window", v); },
                              [](const C& c) { return J(c.scattering.window); }};
    m["scattering.criterion_T"] = {
        [](C& c, const std::string& v) { c.scattering.criterion_T = parse_list("scattering.criterion_T", v); },
        [](const C& c) { return J(join(c.scattering.criterion_T)); }};
    m["scattering.linear_dt"] = {
        [](C& c, const std::string& v) { c.scattering.linear_dt = parse_double("scattering.linear_dt", v); },
        [](const C& c) { return J(c.scattering.linear_dt); }};

    m["output.checkpoint"] = {[](C& c, const std::string& v) { c.write_checkpoint = parse_bool("output.checkpoint", v); },
                              [](const C& c) { return J(c.write_checkpoint); }};
    return m;
  }();
  return f;
}

inline std::string env_name(const std::string& key) {
  std::string s = "BNLS_";
  for (char ch : key) s += ch == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return s;
}

inline void flatten_json(const nlohmann::json& j, const std::string& prefix, std::map<std::string, std::string>& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) flatten_json(v, prefix.empty() ? k : prefix + "." + k, out);
    return;
  }
  if (j.is_string()) {
    out[prefix] = j.get<std::string>();
  } else if (j.is_array()) {
    std::vector<double> v;
    for (const auto& x : j) {
      if (!x.is_number()) throw ConfigError("config: " + prefix + " must be a list of numbers");
      v.push_back(x.get<double>());
    }
    out[prefix] = join(v);
  } else if (j.is_boolean()) {
    out[prefix] = j.get<bool>() ? "true" : "false";
  } else if (j.is_number_integer()) {
    out[prefix] = std::to_string(j.get<long long>());
  } else if (j.is_number()) {
    out[prefix] = join({j.get<double>()});
  } else {
    throw ConfigError("config: unsupported value for " + prefix);
  }
}

}  // namespace detail

/// Flat `section.key = value` lines; `#` starts a comment.
inline std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config: line " + std::to_string(lineno) + ": expected key = value");
    const auto key = detail::trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config: line " + std::to_string(lineno) + ": empty key");
    if (kv.count(key)) throw ConfigError("config: duplicate key " + key);
    kv[key] = detail::trim(line.substr(eq + 1));
  }
  return kv;
}

inline std::map<std::string, std::string> parse_config_text(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    std::map<std::string, std::string> kv;
    detail::flatten_json(j, "", kv);
    return kv;
  }
  return parse_key_values(text);
}

/// Replaces values with BNLS_<KEY> environment variables ('.' becomes '_', upper case).
inline void apply_env_overrides(std::map<std::string, std::string>& kv,
                                const std::function<const char*(const char*)>& getenv_fn = [](const char* n) {
                                  return std::getenv(n);
                                }) {
  for (const auto& [key, field] : detail::fields()) {
    (void)field;
    if (const char* v = getenv_fn(detail::env_name(key).c_str())) kv[key] = v;
  }
}

inline ExperimentConfig build_config(const std::map<std::string, std::string>& kv) {
  ExperimentConfig c;
  const auto& f = detail::fields();
  for (const auto& [k, v] : kv) {
    const auto it = f.find(k);
    if (it == f.end()) throw ConfigError("config: unknown key " + k);
    it->second.set(c, v);
  }
  if (!c.N) throw ConfigError("config: params.N is required");
  if (!c.alpha) throw ConfigError("config: params.alpha is required");
  try {
    (void)c.params();
    (void)Grid(*c.N, c.M, c.R_max);
    c.solver.validate();
  } catch (const InvalidParameter& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (c.initial.kind == InitialKind::FromCheckpoint && c.initial.path.empty())
    throw ConfigError("config: initial.path is required for from_checkpoint");
  if (c.mode == Mode::Sweep && c.sweep.parameter.empty()) throw ConfigError("config: sweep mode needs sweep.parameter");
  if (!c.sweep.parameter.empty() && c.sweep.steps > 0 && c.sweep.parameter == "c" &&
      c.initial.kind != InitialKind::GroundStateScaled)
    throw ConfigError("config: a c-sweep needs initial.kind = ground_state_scaled");
  if (c.sweep.parameter == "amplitude" && c.initial.kind != InitialKind::Gaussian)
    throw ConfigError("config: an amplitude sweep needs initial.kind = gaussian");
  return c;
}

inline ExperimentConfig load_config(const std::string& path, bool use_env = true) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  auto kv = parse_config_text(ss.str());
  if (use_env) apply_env_overrides(kv);
  return build_config(kv);
}

/// Every key with its effective value, sorted.
inline nlohmann::json config_echo(const ExperimentConfig& c) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, f] : detail::fields()) j[k] = f.get(c);
  return j;
}

}  // namespace bnls

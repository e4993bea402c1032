#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "bnls/checkpoint.hpp"
#include "bnls/config.hpp"
#include "bnls/csv.hpp"
#include "bnls/diagnostics.hpp"
#include "bnls/dynamics.hpp"
#include "bnls/ground_state.hpp"

namespace bnls {

using nlohmann::json;

struct RunOptions {
  int threads = 1;
  std::uint64_t seed = 1;
};

/// A file produced by a run, written only after the whole run succeeds.
struct Artifact {
  std::string name;
  std::string content;
};

struct RunOutput {
  json report;
  json timings;
  std::vector<Artifact> files;
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// Ground-state profile and thresholds matching the regime, if the regime has any.
struct Reference {
  std::optional<GroundState> gs;
  std::optional<Thresholds> thr;
};

inline Reference reference_for(const Params& p, const GridPtr& g, const PetviashviliOptions& o) {
  Reference ref;
  const auto tag = classify_regime(p).tag;
  if (tag == RegimeTag::Intercritical) {
    ref.gs = solve_Q(p, g, o);
  } else if (tag == RegimeTag::EnergyCritical) {
    ref.gs = explicit_W(p.N, g);
  } else {
    return ref;
  }
  ref.thr = compute_thresholds(*ref.gs, p);
  return ref;
}

inline RadialField initial_field(const ExperimentConfig& c, const GridPtr& g, const Reference& ref) {
  switch (c.initial.kind) {
    case InitialKind::Gaussian: {
      const double a = c.initial.amplitude, w = c.initial.width;
      if (!(w > 0.0)) throw ConfigError("config: initial.width must be positive");
      return RadialField::sample(g, [&](double r) { return cplx(a * std::exp(-r * r / (2.0 * w * w))); });
    }
    case InitialKind::GroundStateScaled: {
      if (!ref.gs) throw ConfigError("config: ground_state_scaled needs an intercritical or energy-critical regime");
      RadialField u = ref.gs->profile;
      u *= cplx(c.initial.c);
      return u;
    }
    case InitialKind::FromCheckpoint: {
      const auto ck = checkpoint_load(c.initial.path);
      if (ck.N != g->dim() || ck.M != g->size() || ck.R_max != g->R_max())
        throw ConfigError("config: checkpoint grid does not match grid.M, grid.R_max and params.N");
      RadialField u(g);
      u.values = ck.values;
      return u;
    }
  }
  throw ConfigError("config: unknown initial data");
}

inline json to_json(const Prediction& p) {
  return {{"tag", std::string(to_string(p.tag))},
          {"regime", std::string(to_string(p.regime))},
          {"energy_margin", p.energy_margin},
          {"gradient_margin", p.gradient_margin},
          {"energy_quantity", p.energy_quantity},
          {"gradient_quantity", p.gradient_quantity}};
}

inline json to_json(const Verdict& v) {
  json e = json::object();
  for (const auto& [k, x] : v.evidence) e[k] = x;
  return {{"tag", std::string(to_string(v.tag))}, {"evidence", e}};
}

inline json to_json(const Thresholds& t) {
  return {{"kind", t.kind == GroundKind::Q ? "Q" : "W"},
          {"E_thr", t.E_thr},
          {"G_thr", t.G_thr},
          {"C_opt", t.C_opt},
          {"C_quotient", t.C_quot},
          {"E_direct", t.E_direct},
          {"g_at_G", t.g_at_G},
          {"identity_residual", t.identity_residual}};
}

inline json optional_json(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

inline std::string observables_csv(const std::vector<Observables>& obs) {
  std::ostringstream o;
  write_observables_csv(o, obs);
  return o.str();
}

struct PointResult {
  json report;
  Trajectory trajectory;
  std::optional<Prediction> prediction;
  std::optional<Verdict> verdict;
};

/// Evolves u0 and assembles prediction, verdict and certificates.
inline PointResult simulate(const ExperimentConfig& c, const Params& p, const RadialField& u0, const Reference& ref) {
  PointResult r;
  json& rep = r.report;
  if (ref.thr) {
    r.prediction = classify(p, *ref.thr, u0);
    rep["prediction"] = to_json(*r.prediction);
  } else {
    rep["prediction"] = nullptr;
  }

  const SolverConfig& sc = c.solver;
  r.trajectory = evolve(p, sc, u0);
  const Trajectory& tr = r.trajectory;

  rep["event"] = {{"kind", std::string(to_string(tr.event.kind))}, {"t", tr.event.t}};
  rep["steps"] = tr.steps;
  rep["rejected_steps"] = tr.rejected;
  rep["t_final"] = tr.t_final;
  json cons;
  cons["sponge_active"] = sc.sponge.on;
  if (sc.sponge.on) {
    // the layer removes mass and energy by design; report what it absorbed instead
    const double m0 = tr.observables.front().mass;
    cons["absorbed_mass_fraction"] = m0 > 0.0 ? 1.0 - tr.observables.back().mass / m0 : 0.0;
    cons["max_mass_drift"] = nullptr;
    cons["max_energy_drift"] = nullptr;
  } else {
    cons["max_mass_drift"] = tr.max_mass_drift;
    cons["max_energy_drift"] = tr.max_energy_drift;
  }
  rep["conservation"] = cons;

  json cert = json::object();
  if (tr.event.kind == EventKind::BlowUpDetected) {
    r.verdict = blowup_verdict(tr);
    const auto w = blowup_ode_witness(tr);
    cert["ode_witness"] = {{"conclusive", w.conclusive}, {"degenerate", w.degenerate}, {"t0", w.t0},
                           {"t1", w.t1},                 {"A", w.A},                   {"t_star", w.t_star},
                           {"t_detected", w.t_detected}, {"note", w.note}};
    cert["kmu_ceiling"] = kmu_ceiling(tr);
    cert["delta_norm_floor"] = delta_norm_floor(tr);
    if (r.prediction && r.prediction->tag == PredictionTag::BlowUp) {
      const auto d = delta_certificate(p, *ref.thr, u0);
      cert["delta"] = {{"theta", d.theta}, {"delta", d.delta}, {"kmu_ceiling_over_minus_delta", kmu_ceiling(tr) / -d.delta}};
    }
  } else if (tr.event.reached_horizon() && classify_regime(p).tag == RegimeTag::Intercritical) {
    ScatteringOptions so;
    so.window = c.scattering.window;
    so.linear_dt = c.scattering.linear_dt;
    for (double T : c.scattering.criterion_T)
      if (T + so.window <= tr.t_final) so.criterion_T.push_back(T);
    const auto s = scattering_certificates(p, tr, so);
    r.verdict = scattering_verdict(tr, s, norms(u0).H2);
    json crit = json::array();
    for (const auto& [T, v] : s.criterion) crit.push_back({{"T", T}, {"value", v}});
    json scan = json::array();
    for (const auto& [R, nu] : s.coercivity_scan) scan.push_back({{"R", R}, {"nu", nu}});
    cert["scattering"] = {{"decay_factor", s.decay_factor},
                          {"cauchy_H2", optional_json(s.cauchy_H2)},
                          {"cauchy_t1", s.t1},
                          {"cauchy_t2", s.t2},
                          {"criterion_window", s.window},
                          {"criterion_norm", crit},
                          {"ball_R", s.ball_R},
                          {"ball_mass_min", s.ball_mass_min},
                          {"coercivity_R", s.coercivity_R},
                          {"coercivity_nu", s.coercivity_nu},
                          {"coercivity_scan", scan}};
    json mw = json::array();
    std::vector<std::pair<double, double>> windows;
    for (double L : {10.0, 20.0, 40.0, 80.0})
      if (L <= tr.t_final) windows.emplace_back(0.0, L);
    if (!windows.empty())
      for (const auto& w : morawetz_ratio(tr, windows)) mw.push_back({{"length", w.t1 - w.t0}, {"ratio", w.ratio}});
    cert["morawetz"] = mw;
  } else if (tr.event.reached_horizon() && classify_regime(p).tag == RegimeTag::MassCritical && p.mu == 0.0 &&
             tr.observables.size() >= 6) {
    const auto gf = growth_exponent_fit(tr);
    cert["growth"] = {{"exponent", gf.exponent}, {"t_lo", gf.t_lo}, {"t_hi", gf.t_hi}, {"points", gf.points}};
  }
  rep["certificates"] = cert;
  rep["verdict"] = r.verdict ? to_json(*r.verdict) : json(nullptr);
  if (r.prediction && r.verdict) rep["agreement"] = agrees(*r.prediction, *r.verdict);
  return r;
}

inline json ground_state_report(const GroundState& gs, const Thresholds& thr, const Params& p, const RunOptions& ro,
                                const ExperimentConfig& c) {
  const double N = p.N, a = p.alpha;
  const double dsq = gs.deltaL2 * gs.deltaL2;
  json j;
  j["kind"] = gs.kind == GroundKind::Q ? "Q" : "W";
  j["path"] = gs.path;
  j["iterations"] = gs.iterations;
  j["converged"] = gs.converged;
  j["multiplier"] = gs.multiplier;
  j["pohozaev_residuals"] = {gs.pohozaev[0], gs.pohozaev[1]};
  j["L2"] = gs.L2;
  j["deltaL2"] = gs.deltaL2;
  j["Lalpha2"] = gs.Lalpha2;
  j["C_opt"] = gs.C_opt;
  if (gs.kind == GroundKind::Q) {
    j["K0_relative"] = std::abs(K_functional(p, gs.profile, false)) / dsq;
    j["ratio_deltaL2_sq_over_L2_sq"] = dsq / (gs.L2 * gs.L2);
    j["ratio_expected"] = N * a / (8.0 - (N - 4.0) * a);
    if (c.probe_trials > 0) {
      const auto w = weinstein_maximality_probe(gs, p, c.probe_trials, c.probe_epsilon, ro.seed);
      j["weinstein_probe"] = {{"trials", w.trials}, {"epsilon", w.epsilon}, {"worst_ratio", w.worst_ratio}, {"all_pass", w.all_pass}};
    }
  } else {
    j["elliptic_residual"] = gs.elliptic_residual;
    j["deltaL2_raw"] = gs.deltaL2_raw;
    j["Lcrit_raw"] = gs.Lalpha2_raw;
  }
  j["thresholds"] = to_json(thr);
  return j;
}

inline std::string profile_csv(const GroundState& gs) {
  std::ostringstream o;
  o << "r,profile\n";
  const auto r = gs.profile.grid->r();
  for (std::size_t k = 0; k < gs.profile.size(); ++k)
    o << format_double(r[k]) << ',' << format_double(gs.profile[k].real()) << '\n';
  return o.str();
}

struct SweepRow {
  double value = 0;
  std::string regime, prediction, verdict, event, error;
  std::optional<double> energy_margin, gradient_margin, t_event;
  std::optional<bool> agree;
};

inline std::string sweep_csv(const std::string& parameter, const std::vector<SweepRow>& rows) {
  std::ostringstream o;
  o << "index,parameter,value,regime,prediction,energy_margin,gradient_margin,verdict,event,t_event,agree,error\n";
  auto opt = [](const std::optional<double>& x) { return x ? format_double(*x) : std::string(); };
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k];
    o << k << ',' << parameter << ',' << format_double(r.value) << ',' << r.regime << ',' << r.prediction << ','
      << opt(r.energy_margin) << ',' << opt(r.gradient_margin) << ',' << r.verdict << ',' << r.event << ','
      << opt(r.t_event) << ',' << (r.agree ? (*r.agree ? "true" : "false") : "") << ',' << csv_escape(r.error) << '\n';
  }
  return o.str();
}

/// Runs f(k) for k in [0, n) on a pool of workers; results are placed by index.
template <class F>
void parallel_for(std::size_t n, int threads, F f) {
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(n)));
  if (workers <= 1) {
    for (std::size_t k = 0; k < n; ++k) f(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t k; (k = next.fetch_add(1)) < n;) f(k);
    });
  for (auto& t : pool) t.join();
}

inline std::vector<SweepRow> run_sweep(const ExperimentConfig& c, const GridPtr& g, bool simulate_points, int threads) {
  const auto values = c.sweep.values();
  std::vector<SweepRow> rows(values.size());
  const bool reference_shared = c.sweep.parameter != "alpha";
  std::optional<Reference> shared;
  if (reference_shared && !values.empty()) shared = reference_for(c.params(), g, c.petviashvili);

  parallel_for(values.size(), threads, [&](std::size_t k) {
    SweepRow& row = rows[k];
    row.value = values[k];
    try {
      ExperimentConfig pc = c;
      if (c.sweep.parameter == "c") pc.initial.c = values[k];
      if (c.sweep.parameter == "amplitude") pc.initial.amplitude = values[k];
      if (c.sweep.parameter == "alpha") pc.alpha = values[k];
      if (c.sweep.parameter == "mu") pc.mu = values[k];
      const Params p = pc.params();
      row.regime = std::string(to_string(classify_regime(p).tag));
      const Reference ref = shared ? *shared : reference_for(p, g, pc.petviashvili);
      const RadialField u0 = initial_field(pc, g, ref);
      if (ref.thr) {
        const auto pr = classify(p, *ref.thr, u0);
        row.prediction = std::string(to_string(pr.tag));
        row.energy_margin = pr.energy_margin;
        row.gradient_margin = pr.gradient_margin;
      } else {
        row.prediction = std::string(to_string(PredictionTag::OutOfTheory));
      }
      if (simulate_points) {
        const auto res = simulate(pc, p, u0, ref);
        row.event = std::string(to_string(res.trajectory.event.kind));
        row.t_event = res.trajectory.event.t;
        row.verdict = res.verdict ? std::string(to_string(res.verdict->tag)) : std::string(to_string(VerdictTag::Undecided));
        if (res.prediction && res.verdict) row.agree = agrees(*res.prediction, *res.verdict);
      }
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  });
  return rows;
}

inline json sweep_summary(const std::vector<SweepRow>& rows) {
  std::vector<PredictionTag> tags;
  for (const auto& r : rows) {
    if (r.prediction == "Scatter") tags.push_back(PredictionTag::Scatter);
    else if (r.prediction == "BlowUp") tags.push_back(PredictionTag::BlowUp);
    else tags.push_back(PredictionTag::OutOfTheory);
  }
  json rows_json = json::array();
  int failures = 0;
  for (const auto& r : rows) {
    failures += !r.error.empty();
    json x = {{"value", r.value}, {"regime", r.regime}, {"prediction", r.prediction}};
    x["energy_margin"] = optional_json(r.energy_margin);
    x["gradient_margin"] = optional_json(r.gradient_margin);
    if (!r.verdict.empty()) x["verdict"] = r.verdict;
    if (!r.event.empty()) x["event"] = r.event;
    if (r.agree) x["agreement"] = *r.agree;
    if (!r.error.empty()) x["error"] = r.error;
    rows_json.push_back(x);
  }
  const int flips = count_flips(tags);
  bool scatter_first = true;
  for (auto t : tags) {
    if (t == PredictionTag::Scatter || t == PredictionTag::BlowUp) {
      scatter_first = t == PredictionTag::Scatter;
      break;
    }
  }
  return {{"rows", rows_json},
          {"flips", flips},
          {"single_flip_scatter_to_blowup", flips == 1 && scatter_first},
          {"failed_points", failures}};
}

}  // namespace detail

/// Executes the configured mode and returns the report and files to write.
inline RunOutput run_experiment(const ExperimentConfig& c, const RunOptions& ro = {}) {
  using namespace detail;
  const auto t_start = Clock::now();
  RunOutput out;
  json& rep = out.report;
  rep["config"] = config_echo(c);
  rep["mode"] = to_string(c.mode);
  const Params p = c.params();
  rep["regime"] = std::string(to_string(classify_regime(p).tag));
  const GridPtr g = make_grid(p.N, c.M, c.R_max);

  switch (c.mode) {
    case Mode::GroundState: {
      const auto t0 = Clock::now();
      const Reference ref = reference_for(p, g, c.petviashvili);
      if (!ref.gs) throw ConfigError("config: ground_state mode needs an intercritical or energy-critical regime");
      rep["ground_state"] = ground_state_report(*ref.gs, *ref.thr, p, ro, c);
      out.files.push_back({"profile.csv", profile_csv(*ref.gs)});
      out.timings["ground_state_s"] = seconds_since(t0);
      break;
    }
    case Mode::Simulate: {
      auto t0 = Clock::now();
      const Reference ref = reference_for(p, g, c.petviashvili);
      out.timings["ground_state_s"] = seconds_since(t0);
      const RadialField u0 = initial_field(c, g, ref);
      if (ref.thr) rep["thresholds"] = to_json(*ref.thr);
      t0 = Clock::now();
      auto res = simulate(c, p, u0, ref);
      out.timings["simulate_s"] = seconds_since(t0);
      for (auto& [k, v] : res.report.items()) rep[k] = v;
      out.files.push_back({"observables.csv", observables_csv(res.trajectory.observables)});
      if (c.write_checkpoint) {
        const auto bytes = serialize(make_checkpoint(res.trajectory));
        out.files.push_back({"checkpoint.bin", std::string(bytes.begin(), bytes.end())});
      }
      break;
    }
    case Mode::Classify:
    case Mode::Sweep: {
      const bool table = !c.sweep.parameter.empty();
      const auto t0 = Clock::now();
      if (!table) {
        const Reference ref = reference_for(p, g, c.petviashvili);
        const RadialField u0 = initial_field(c, g, ref);
        rep["prediction"] = ref.thr ? to_json(classify(p, *ref.thr, u0)) : json(nullptr);
        if (ref.thr) rep["thresholds"] = to_json(*ref.thr);
      } else {
        const bool sim = c.mode == Mode::Sweep && c.sweep.simulate;
        const auto rows = run_sweep(c, g, sim, ro.threads);
        rep["sweep"] = sweep_summary(rows);
        rep["sweep"]["parameter"] = c.sweep.parameter;
        out.files.push_back({"sweep.csv", sweep_csv(c.sweep.parameter, rows)});
      }
      out.timings["classify_s"] = seconds_since(t0);
      break;
    }
    case Mode::LinearDecay: {
      if (c.initial.kind != InitialKind::Gaussian) throw ConfigError("config: linear_decay needs initial.kind = gaussian");
      const double w4 = std::pow(c.initial.width, 4);
      const double lo = c.decay.t_lo > 0.0 ? c.decay.t_lo : 10.0 * w4;
      const double hi = c.decay.t_hi > 0.0 ? c.decay.t_hi : 200.0 * w4;
      const RadialField f = initial_field(c, g, {});
      DecayOptions o;
      o.samples = c.decay.samples;
      o.sponge.strength = c.decay.sponge_strength;
      const auto t0 = Clock::now();
      const auto fit = dispersive_decay_fit(p, f, lo, hi, o);
      out.timings["decay_s"] = seconds_since(t0);
      rep["decay"] = {{"t_lo", lo},
                      {"t_hi", hi},
                      {"exponent", fit.exponent},
                      {"expected", fit.expected},
                      {"relative_error", std::abs(fit.exponent / fit.expected - 1.0)},
                      {"boundary_deviation", fit.boundary_deviation}};
      std::ostringstream csv;
      csv << "t,sup\n";
      for (std::size_t k = 0; k < fit.t.size(); ++k) csv << format_double(fit.t[k]) << ',' << format_double(fit.sup[k]) << '\n';
      out.files.push_back({"decay.csv", csv.str()});
      break;
    }
  }
  out.timings["total_s"] = seconds_since(t_start);
  out.timings["threads"] = ro.threads;
  out.files.push_back({"report.json", rep.dump(2) + "\n"});
  out.files.push_back({"timings.json", out.timings.dump(2) + "\n"});
  return out;
}

inline void write_artifacts(const RunOutput& out, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& f : out.files) {
    std::ofstream o(dir / f.name, std::ios::binary | std::ios::trunc);
    if (!o) throw std::runtime_error("cannot write " + (dir / f.name).string());
    o << f.content;
  }
}

}  // namespace bnls

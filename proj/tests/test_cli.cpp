#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "bnls/bnls.hpp"

using namespace bnls;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("bnls_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(BNLS_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kSmallGroundState = R"(
params.N = 2
params.alpha = 8
grid.M = 1024
grid.R_max = 40
mode = ground_state
ground_state.probe_trials = 4
)";


}  // namespace

TEST_CASE("key-value and JSON configs are equivalent") {
  const auto a = build_config(parse_config_text(R"(
# comment
params.N = 2
params.mu = 0.5   # trailing comment
params.alpha = 8
grid.M = 2048
solver.probe_radii = 4, 8
sponge.on = true
initial.kind = ground_state_scaled
initial.c = 0.75
)"));
  const auto b = build_config(parse_config_text(R"({"params": {"N": 2, "mu": 0.5, "alpha": 8}, "grid": {"M": 2048},
    "solver": {"probe_radii": [4, 8]}, "sponge": {"on": true},
    "initial": {"kind": "ground_state_scaled", "c": 0.75}})"));
  CHECK(config_echo(a) == config_echo(b));
  CHECK(*a.N == 2);
  CHECK(a.mu == 0.5);
  CHECK(a.M == 2048);
  CHECK(a.solver.sponge.on);
  CHECK(a.solver.probe_radii == std::vector<double>{4, 8});
  CHECK(a.initial.kind == InitialKind::GroundStateScaled);
  CHECK(a.initial.c == 0.75);
}

TEST_CASE("config echo round-trips through the parser") {
  const auto a = build_config(parse_config_text(kSmallGroundState));
  std::map<std::string, std::string> kv;
  detail::flatten_json(config_echo(a), "", kv);
  // the echo is flat: keys contain dots, so re-nest it through the key-value form
  std::string text;
  for (const auto& [k, v] : kv) text += k + " = " + v + "\n";
  const auto b = build_config(parse_key_values(text));
  CHECK(config_echo(b) == config_echo(a));
}

TEST_CASE("malformed configs are rejected") {
  auto bad = [](const std::string& text) { return build_config(parse_config_text(text)); };
  CHECK_THROWS_AS(bad("params.N = 2\n"), ConfigError);                                 // alpha missing
  CHECK_THROWS_AS(bad("params.alpha = 8\n"), ConfigError);                             // N missing
  CHECK_THROWS_AS(bad("params.N = 2\nparams.alpha = 8\nparams.mu = -1\n"), ConfigError);
  CHECK_THROWS_AS(bad("params.N = 2\nparams.alpha = 8\nparams.typo = 1\n"), ConfigError);
  CHECK_THROWS_AS(bad("params.N = 2\nparams.alpha = eight\n"), ConfigError);
  CHECK_THROWS_AS(bad("params.N = 2\nparams.N = 3\nparams.alpha = 8\n"), ConfigError);
  CHECK_THROWS_AS(bad("params.N = 2\nparams.alpha\n"), ConfigError);
  CHECK_THROWS_AS(bad("params.N = 2\nparams.alpha = 8\nmode = dance\n"), ConfigError);
  CHECK_THROWS_AS(bad("params.N = 2\nparams.alpha = 8\nsolver.dt0 = 0\n"), ConfigError);
  CHECK_THROWS_AS(bad("params.N = 2\nparams.alpha = 8\ninitial.kind = from_checkpoint\n"), ConfigError);
  CHECK_THROWS_AS(bad("params.N = 2\nparams.alpha = 8\nmode = sweep\n"), ConfigError);
  CHECK_THROWS_AS(bad("params.N = 2\nparams.alpha = 8\nsweep.parameter = c\nsweep.steps = 3\n"), ConfigError);
  CHECK_THROWS_AS(bad("{\"params\": {\"N\": 2,}}"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/bnls.conf"), ConfigError);
}

TEST_CASE("environment overrides any key") {
  auto kv = parse_config_text(kSmallGroundState);
  const std::map<std::string, std::string> env = {{"BNLS_PARAMS_MU", "0.25"}, {"BNLS_GRID_M", "512"},
                                                  {"BNLS_SPONGE_ON", "true"}, {"BNLS_UNRELATED", "x"}};
  apply_env_overrides(kv, [&](const char* n) -> const char* {
    const auto it = env.find(n);
    return it == env.end() ? nullptr : it->second.c_str();
  });
  const auto c = build_config(kv);
  CHECK(c.mu == 0.25);
  CHECK(c.M == 512);
  CHECK(c.solver.sponge.on);
  CHECK(detail::env_name("solver.dt0") == "BNLS_SOLVER_DT0");
}

TEST_CASE("observables CSV round-trips losslessly") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-1e3, 1e3);
  std::vector<Observables> obs(50);
  for (auto& o : obs)
    for (double* x : {&o.t, &o.mass, &o.energy, &o.K_mu, &o.L_alpha2, &o.deltaL2, &o.gradL2, &o.M_phiR})
      *x = U(rng) * std::pow(10.0, static_cast<int>(U(rng)) % 20);
  obs[0].t = 0.1;
  obs[1].mass = 1.0 / 3.0;
  obs[2].energy = -0.0;
  obs[3].K_mu = 5e-324;
  std::stringstream ss;
  write_observables_csv(ss, obs);
  CHECK(ss.str().rfind("t,mass,energy,K_mu,L_alpha2,deltaL2,gradL2,M_phiR\n", 0) == 0);
  const auto back = read_observables_csv(ss);
  REQUIRE(back.size() == obs.size());
  for (std::size_t k = 0; k < obs.size(); ++k) {
    CHECK(back[k].t == obs[k].t);
    CHECK(back[k].mass == obs[k].mass);
    CHECK(back[k].energy == obs[k].energy);
    CHECK(back[k].K_mu == obs[k].K_mu);
    CHECK(back[k].L_alpha2 == obs[k].L_alpha2);
    CHECK(back[k].deltaL2 == obs[k].deltaL2);
    CHECK(back[k].gradL2 == obs[k].gradL2);
    CHECK(back[k].M_phiR == obs[k].M_phiR);
  }
  std::stringstream wrong("a,b\n1,2\n");
  CHECK_THROWS_AS(read_observables_csv(wrong), ConfigError);
}

TEST_CASE("CSV quoting") {
  for (const std::string s : {"plain", "with,comma", "with \"quote\"", ""}) {
    const auto cells = split_csv_line(csv_escape(s) + ",x");
    REQUIRE(cells.size() == 2);
    CHECK(cells[0] == s);
  }
  std::stringstream ragged("a,b\n1\n");
  CHECK_THROWS_AS(read_csv(ragged), ConfigError);
}

TEST_CASE("ground_state mode reports certificates") {
  const auto out = run_experiment(build_config(parse_config_text(kSmallGroundState)));
  const auto& gs = out.report["ground_state"];
  CHECK(gs["kind"] == "Q");
  CHECK(gs["pohozaev_residuals"][0].get<double>() < 1e-3);
  CHECK(gs["pohozaev_residuals"][1].get<double>() < 1e-3);
  const auto& t = gs["thresholds"];
  const double G = t["G_thr"], E = t["E_thr"];
  CHECK(E == Catch::Approx(8.0 / 32.0 * G * G).epsilon(1e-12));
  CHECK(t["identity_residual"].get<double>() < 1e-8);
  CHECK(gs["weinstein_probe"]["all_pass"] == true);
  std::vector<std::string> names;
  for (const auto& f : out.files) names.push_back(f.name);
  CHECK(names == std::vector<std::string>{"profile.csv", "report.json", "timings.json"});
}

TEST_CASE("c-sweep classification table") {
  auto kv = parse_config_text(kSmallGroundState);
  kv["mode"] = "classify";
  kv["initial.kind"] = "ground_state_scaled";
  kv["sweep.parameter"] = "c";
  kv["sweep.start"] = "0.5";
  kv["sweep.stop"] = "1.5";
  kv["sweep.steps"] = "11";
  const auto cfg = build_config(kv);
  const auto out = run_experiment(cfg);
  const auto& sw = out.report["sweep"];
  CHECK(sw["flips"] == 1);
  CHECK(sw["single_flip_scatter_to_blowup"] == true);
  std::stringstream csv(out.files.front().content);
  const auto table = read_csv(csv);
  REQUIRE(table.rows.size() == 11);
  // the gradient quantity of c Q is c^{1 + sigma_c} G_thr, so the margin falls with c
  const auto& rows = sw["rows"];
  for (std::size_t k = 1; k < rows.size(); ++k)
    CHECK(rows[k]["gradient_margin"].get<double>() < rows[k - 1]["gradient_margin"].get<double>());
  CHECK(rows[0]["prediction"] == "Scatter");
  CHECK(rows[10]["prediction"] == "BlowUp");

  // worker count does not change the output
  RunOptions three;
  three.threads = 3;
  CHECK(run_experiment(cfg, three).files.front().content == out.files.front().content);
}

TEST_CASE("alpha-sweep crosses the mass-critical line at the exact point") {
  auto kv = parse_config_text(kSmallGroundState);
  kv["mode"] = "classify";
  kv["initial.kind"] = "gaussian";
  kv["sweep.parameter"] = "alpha";
  kv["sweep.start"] = "3";
  kv["sweep.stop"] = "5";
  kv["sweep.steps"] = "5";
  const auto out = run_experiment(build_config(kv));
  const auto& rows = out.report["sweep"]["rows"];
  REQUIRE(rows.size() == 5);
  CHECK(rows[1]["regime"] == "OutOfTheory");
  CHECK(rows[2]["regime"] == "MassCritical");
  CHECK(rows[3]["regime"] == "Intercritical");
  CHECK(rows[4]["regime"] == "Intercritical");
}

TEST_CASE("empty sweep gives a header-only CSV") {
  auto kv = parse_config_text(kSmallGroundState);
  kv["mode"] = "sweep";
  kv["initial.kind"] = "ground_state_scaled";
  kv["sweep.parameter"] = "c";
  kv["sweep.steps"] = "0";
  const auto out = run_experiment(build_config(kv));
  const auto& csv = out.files.front();
  CHECK(csv.name == "sweep.csv");
  CHECK(std::count(csv.content.begin(), csv.content.end(), '\n') == 1);
  CHECK(out.report["sweep"]["rows"].empty());
}

TEST_CASE("per-point failures are recorded in the row") {
  auto kv = parse_config_text(kSmallGroundState);
  kv["mode"] = "classify";
  kv["initial.kind"] = "ground_state_scaled";
  kv["sweep.parameter"] = "mu";
  kv["sweep.start"] = "-1";
  kv["sweep.stop"] = "0";
  kv["sweep.steps"] = "2";
  const auto out = run_experiment(build_config(kv));
  const auto& rows = out.report["sweep"]["rows"];
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].contains("error"));
  CHECK_FALSE(rows[1].contains("error"));
  CHECK(out.report["sweep"]["failed_points"] == 1);
}

TEST_CASE("identical configs give bit-identical artifacts") {
  auto kv = parse_config_text(kSmallGroundState);
  kv["mode"] = "simulate";
  kv["initial.kind"] = "ground_state_scaled";
  kv["initial.c"] = "0.6";
  kv["solver.t_max"] = "0.05";
  kv["output.checkpoint"] = "true";
  const auto cfg = build_config(kv);
  const auto a = run_experiment(cfg), b = run_experiment(cfg);
  REQUIRE(a.files.size() == b.files.size());
  for (std::size_t k = 0; k < a.files.size(); ++k) {
    if (a.files[k].name == "timings.json") continue;
    INFO(a.files[k].name);
    CHECK(a.files[k].content == b.files[k].content);
  }
  CHECK(a.report["agreement"].is_boolean());
}

TEST_CASE("command line: exit codes, artifacts and overrides") {
  const auto dir = scratch("exit");
  write(dir / "missing_alpha.conf", "params.N = 2\nmode = ground_state\n");
  const auto out_bad = dir / "out_bad";
  CHECK(run_cli("run " + (dir / "missing_alpha.conf").string() + " --out-dir " + out_bad.string()) == 2);
  CHECK_FALSE(fs::exists(out_bad));

  CHECK(run_cli("run " + (dir / "absent.conf").string()) == 2);
  CHECK(run_cli("frobnicate") == 2);

  write(dir / "gs.conf", kSmallGroundState);
  const auto out_gs = dir / "out_gs";
  CHECK(run_cli("groundstate " + (dir / "gs.conf").string() + " --out-dir " + out_gs.string() + " --seed 5") == 0);
  CHECK(fs::exists(out_gs / "profile.csv"));
  const auto report = nlohmann::json::parse(slurp(out_gs / "report.json"));
  CHECK(report["mode"] == "ground_state");

  // the environment reaches the child process
  ::setenv("BNLS_PARAMS_ALPHA", "6", 1);
  const auto out_env = dir / "out_env";
  CHECK(run_cli("groundstate " + (dir / "gs.conf").string() + " --out-dir " + out_env.string()) == 0);
  ::unsetenv("BNLS_PARAMS_ALPHA");
  CHECK(nlohmann::json::parse(slurp(out_env / "report.json"))["config"]["params.alpha"] == 6.0);

  // a solver that cannot converge is a solver failure
  write(dir / "stuck.conf", std::string(kSmallGroundState) + "ground_state.max_iter = 1\n");
  CHECK(run_cli("groundstate " + (dir / "stuck.conf").string() + " --out-dir " + (dir / "o3").string()) == 3);
  CHECK_FALSE(fs::exists(dir / "o3"));
  fs::remove_all(dir);
}

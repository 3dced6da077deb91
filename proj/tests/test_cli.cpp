#include <chieq/cli.hpp>

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <sstream>

#include <unistd.h>

using namespace chieq;
using namespace chieq::cli;

namespace {

ParseOutcome parse(std::initializer_list<std::string> args) { return parse_config(std::vector<std::string>(args)); }

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("chieq_cli_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("empty argv prints usage") {
  const ParseOutcome out = parse_config({});
  CHECK_FALSE(out.config);
  CHECK(out.exit_code != 0);
  CHECK(out.message.find("Usage") != std::string::npos);
}

TEST_CASE("help exits cleanly") {
  const ParseOutcome out = parse({"converge", "--help"});
  CHECK_FALSE(out.config);
  CHECK(out.exit_code == 0);
  CHECK_FALSE(out.message.empty());
}

TEST_CASE("converge sine with one scheme") {
  const ParseOutcome out = parse({"converge", "--preset", "sine", "--scheme", "gauss4"});
  REQUIRE(out.config);
  const RunConfig& cfg = *out.config;
  CHECK(cfg.command == Subcommand::Converge);
  CHECK(cfg.scenario.N == 128);
  CHECK(cfg.scenario.T == 1.0);
  CHECK(cfg.scenario.L == doctest::Approx(2 * 3.141592653589793));
  REQUIRE(cfg.scenario.cells.size() == 3);
  const double taus[] = {1.0 / 30, 1.0 / 60, 1.0 / 120};
  for (int i = 0; i < 3; ++i) {
    CHECK(cfg.scenario.cells[i].scheme == Scheme::gauss(2));
    CHECK(cfg.scenario.cells[i].tau == taus[i]);
  }
}

TEST_CASE("run peakon with explicit T and tau") {
  const ParseOutcome out = parse({"run", "--preset", "peakon", "--T", "50", "--tau", "1e-4"});
  REQUIRE(out.config);
  const auto& sc = out.config->scenario;
  CHECK(sc.T == 50.0);
  CHECK(sc.L == 1.0);
  CHECK(sc.N == 128);
  REQUIRE(sc.cells.size() == 4);
  for (const auto& c : sc.cells) CHECK(c.tau == 1e-4);
  CHECK(sc.cells[0].scheme == Scheme::lcns());
}

TEST_CASE("scheme and tau lists form a cross product") {
  const ParseOutcome out = parse({"converge", "--scheme", "lcns,gauss6", "--tau", "1/50,0.01", "-s", "2"});
  REQUIRE(out.config);
  const auto& cells = out.config->scenario.cells;
  REQUIRE(cells.size() == 6);
  CHECK(cells[0].scheme == Scheme::lcns());
  CHECK(cells[0].tau == 1.0 / 50);
  CHECK(cells[5].scheme == Scheme::gauss(2));
  CHECK(cells[5].tau == 0.01);
}

TEST_CASE("solver flags reach the scenario") {
  const ParseOutcome out = parse({"run", "--solver", "newton", "--stage-tol", "1e-12", "--max-iters", "40",
                                  "--damping", "0.5", "--lcns-tol", "1e-13", "--cadence", "5", "--N", "64"});
  REQUIRE(out.config);
  const auto& sc = out.config->scenario;
  CHECK(sc.solver.solver == StageSolver::Newton);
  CHECK(sc.solver.stage_tol == 1e-12);
  CHECK(sc.solver.max_iters == 40);
  CHECK(sc.solver.damping == 0.5);
  CHECK(sc.solver.lcns_tol == 1e-13);
  CHECK(sc.cadence == 5);
  CHECK(sc.N == 64);
}

TEST_CASE("configuration errors exit with 2") {
  for (auto args : {std::vector<std::string>{"run", "--N", "7"}, std::vector<std::string>{"run", "--scheme", "rk4"},
                    std::vector<std::string>{"run", "--preset", "nope"},
                    std::vector<std::string>{"run", "--tau", "0.3"}, std::vector<std::string>{"run", "--format", "xml"},
                    std::vector<std::string>{"run", "--solver", "bfgs"}, std::vector<std::string>{"fly"},
                    std::vector<std::string>{"run", "--config", "/nonexistent/x.json"}}) {
    const ParseOutcome out = parse_config(args);
    CAPTURE(args[1 % args.size()]);
    CHECK_FALSE(out.config);
    CHECK(out.exit_code == 2);
    CHECK_FALSE(out.message.empty());
  }
}

TEST_CASE("scenario JSON") {
  const auto base = experiments::preset("sine");
  const auto sc = scenario_from_json(R"({"N": 64, "T": 0.5, "schemes": ["gauss4"], "taus": ["1/10", 0.05]})", base);
  CHECK(sc.N == 64);
  CHECK(sc.T == 0.5);
  REQUIRE(sc.cells.size() == 2);
  CHECK(sc.cells[0].tau == 0.1);
  CHECK_THROWS_AS(scenario_from_json(R"({"N": 64, "bogus": 1})", base), ConfigError);
  CHECK_THROWS_AS(scenario_from_json("{not json", base), ConfigError);
  CHECK_THROWS_AS(scenario_from_json(R"({"ic": {"type": "square"}})", base), ConfigError);
}

TEST_CASE("invariant rows") {
  const std::vector<InvariantRecordd> zero{{0, 0, 0, 0, 0}};
  CHECK(io::to_csv(zero) == "t,mass,momentum,hamiltonian,quad_energy\n0,0,0,0,0\n");
  CHECK_THROWS_AS(io::emit(std::vector<InvariantRecordd>{}, io::Format::Csv, "unused.csv"), std::invalid_argument);
}

TEST_CASE("JSON round trips") {
  const std::vector<InvariantRecordd> recs{{0, 0.1, 0.2, -0.3, 1.0 / 3}, {0.5, 1e-300, 2.5e10, -7, 0}};
  const auto back = io::invariants_from_json(io::to_json(recs));
  REQUIRE(back.size() == recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(back[i].t == recs[i].t);
    CHECK(back[i].mass == recs[i].mass);
    CHECK(back[i].momentum == recs[i].momentum);
    CHECK(back[i].hamiltonian == recs[i].hamiltonian);
    CHECK(back[i].quad_energy == recs[i].quad_energy);
  }

  experiments::ConvergenceReport report;
  report.rows = {{"lcns", 0.01, 2e-4, {}, "ok"}, {"lcns", 0.005, 5e-5, 2.0, "ok"}};
  const auto rb = io::convergence_from_json(io::to_json(report));
  REQUIRE(rb.rows.size() == 2);
  CHECK_FALSE(rb.rows[0].rate);
  CHECK(*rb.rows[1].rate == 2.0);
  CHECK(rb.rows[1].linf_error == 5e-5);
}

TEST_CASE("LCNS sweep as CSV") {
  const auto sc = experiments::preset("sine");
  experiments::Scenario lcns = sc;
  lcns.cells.clear();
  for (double tau : experiments::default_convergence_taus(Scheme::lcns())) lcns.cells.push_back({Scheme::lcns(), tau});
  const auto report = experiments::convergence_study(lcns, experiments::make_reference(sc).u);
  std::istringstream csv(io::to_csv(report));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "scheme,tau,linf_error,rate");
  int rows = 0;
  while (std::getline(csv, line)) {
    CHECK(line.rfind("lcns,", 0) == 0);
    CHECK((rows == 0) == (line.back() == ','));
    ++rows;
  }
  CHECK(rows == 4);
}

TEST_CASE("end-to-end run writes config and outputs") {
  const auto dir = scratch_dir("run");
  const ParseOutcome out = parse({"run", "--preset", "sine", "--scheme", "gauss4,lcns", "--tau", "0.1", "--T", "0.5",
                                  "--solver", "newton", "--out", dir.string(), "--gnuplot-script"});
  REQUIRE(out.config);
  std::ostringstream log;
  CHECK(execute(*out.config, log) == 0);
  for (const char* f : {"config.json", "summary.json", "plot.gp", "invariants_gauss4_tau0.1.csv",
                        "snapshot_gauss4_tau0.1.csv", "invariants_lcns_tau0.1.csv"})
    CHECK(std::filesystem::exists(dir / f));
  const auto summary = nlohmann::json::parse(io::read_text(dir / "summary.json"));
  CHECK(summary["status"] == "ok");

  // the echoed config reproduces the scenario
  const ParseOutcome again = parse({"run", "--config", (dir / "config.json").string()});
  REQUIRE(again.config);
  CHECK(nlohmann::json::parse(config_json(*again.config))["scenario"] ==
        nlohmann::json::parse(config_json(*out.config))["scenario"]);
  std::filesystem::remove_all(dir);
}

TEST_CASE("end-to-end converge in JSON") {
  const auto dir = scratch_dir("converge");
  const ParseOutcome out =
      parse({"converge", "--scheme", "gauss4", "--format", "json", "--out", dir.string(), "--cache-dir", (dir / "cache").string()});
  REQUIRE(out.config);
  std::ostringstream log;
  CHECK(execute(*out.config, log) == 0);
  const auto report = io::convergence_from_json(io::read_text(dir / "convergence.json"));
  REQUIRE(report.rows.size() == 3);
  CHECK(report.rows[0].linf_error == doctest::Approx(2.817e-7).epsilon(0.05));
  CHECK(std::filesystem::is_directory(dir / "cache"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("hard drift check fails the run") {
  const auto dir = scratch_dir("check");
  const ParseOutcome out = parse({"invariants", "--preset", "sine", "--scheme", "gauss2", "--tau", "0.1", "--T", "1",
                                  "--stage-tol", "1e-3", "--check-tol", "1e-15", "--solver", "newton", "--out", dir.string()});
  REQUIRE(out.config);
  std::ostringstream log;
  CHECK(execute(*out.config, log) == 1);
  const auto summary = nlohmann::json::parse(io::read_text(dir / "summary.json"));
  CHECK(summary["status"] == "failed");
  CHECK(std::filesystem::exists(dir / "drift_gauss2_tau0.1.csv"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("unwritable output directory fails the run") {
  const ParseOutcome out = parse({"reference", "--out", "/proc/chieq_forbidden"});
  REQUIRE(out.config);
  std::ostringstream log;
  CHECK(execute(*out.config, log) == 1);
  CHECK(log.str().find("error") != std::string::npos);
}

#include <chieq/cli.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace chieq::cli {

using nlohmann::json;
using experiments::Cell;
using experiments::Scenario;

namespace {

double parse_real(const std::string& field, const std::string& text) {
  // Accepts plain numbers and ratios such as "1/30".
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      throw ConfigError(field, "cannot parse '" + text + "' as a number");
    }
    if (used != s.size()) throw ConfigError(field, "cannot parse '" + text + "' as a number");
    return v;
  };
  const auto slash = text.find('/');
  if (slash == std::string::npos) return number(text);
  const double den = number(text.substr(slash + 1));
  if (den == 0) throw ConfigError(field, "zero denominator in '" + text + "'");
  return number(text.substr(0, slash)) / den;
}

StageSolver parse_solver(const std::string& text) {
  if (text == "fixed-point") return StageSolver::FixedPoint;
  if (text == "newton") return StageSolver::Newton;
  throw ConfigError("solver", "expected fixed-point or newton, got '" + text + "'");
}

std::string solver_name(StageSolver s) { return s == StageSolver::FixedPoint ? "fixed-point" : "newton"; }

json ic_to_json(const experiments::InitialCondition& ic) {
  json j{{"type", experiments::ic_name(ic)}};
  if (const auto* p = std::get_if<experiments::PeakonIC>(&ic)) {
    j["c"] = p->c;
    j["x0"] = p->x0;
  } else if (const auto* p = std::get_if<experiments::ThreePeakonIC>(&ic)) {
    j["speeds"] = p->speeds;
    j["centers"] = p->centers;
  }
  return j;
}

experiments::InitialCondition ic_from_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "sine") return experiments::SineIC{};
  if (type == "peakon") return experiments::PeakonIC{j.value("c", 1.0), j.value("x0", 0.0)};
  if (type == "three-peakon") {
    experiments::ThreePeakonIC ic;
    ic.speeds = j.at("speeds").get<std::array<double, 3>>();
    ic.centers = j.at("centers").get<std::array<double, 3>>();
    return ic;
  }
  throw ConfigError("ic.type", "unknown initial condition '" + type + "'");
}

json scenario_to_json(const Scenario& sc) {
  json cells = json::array();
  for (const Cell& c : sc.cells) cells.push_back({{"scheme", c.scheme.name()}, {"tau", c.tau}});
  return {{"name", sc.name},
          {"a", sc.a},
          {"L", sc.L},
          {"N", sc.N},
          {"T", sc.T},
          {"cadence", sc.cadence},
          {"ic", ic_to_json(sc.ic)},
          {"cells", cells},
          {"stage_tol", sc.solver.stage_tol},
          {"lcns_tol", sc.solver.lcns_tol},
          {"max_iters", sc.solver.max_iters},
          {"damping", sc.solver.damping},
          {"solver", solver_name(sc.solver.solver)}};
}

double json_real(const json& j, const std::string& field) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return parse_real(field, j.get<std::string>());
  throw ConfigError(field, "expected a number");
}

// Taus to pair with `scheme` when only schemes were overridden.
std::vector<double> taus_for(const Scheme& scheme, const Scenario& base) {
  std::vector<double> taus;
  for (const Cell& c : base.cells)
    if (c.scheme == scheme) taus.push_back(c.tau);
  if (!taus.empty()) return taus;
  if (std::holds_alternative<experiments::SineIC>(base.ic)) return experiments::default_convergence_taus(scheme);
  for (const Cell& c : base.cells)
    if (std::find(taus.begin(), taus.end(), c.tau) == taus.end()) taus.push_back(c.tau);
  return taus;
}

std::vector<Scheme> distinct_schemes(const Scenario& sc) {
  std::vector<Scheme> out;
  for (const Cell& c : sc.cells)
    if (std::find(out.begin(), out.end(), c.scheme) == out.end()) out.push_back(c.scheme);
  return out;
}

void override_cells(Scenario& sc, const std::vector<Scheme>& schemes, const std::vector<double>& taus) {
  if (schemes.empty() && taus.empty()) return;
  const Scenario base = sc;
  const std::vector<Scheme> use_schemes = schemes.empty() ? distinct_schemes(base) : schemes;
  sc.cells.clear();
  for (const Scheme& s : use_schemes)
    for (double tau : taus.empty() ? taus_for(s, base) : taus) sc.cells.push_back({s, tau});
}

std::string ext(io::Format f) { return "." + io::format_name(f); }

struct Summary {
  std::vector<std::pair<std::string, std::string>> failures;
  std::vector<std::string> outputs;

  void fail(const std::string& where, const std::string& reason) { failures.emplace_back(where, reason); }
};

void write_gnuplot(const RunConfig& cfg, const Summary& summary, std::ostream& log) {
  if (!cfg.gnuplot_script) return;
  if (cfg.format != io::Format::Csv) {
    log << "note: --gnuplot-script needs csv output, skipped\n";
    return;
  }
  std::ostringstream gp;
  gp << "set datafile separator ','\nset key autotitle columnhead\nset terminal pngcairo size 900,600\n";
  switch (cfg.command) {
    case Subcommand::Converge:
      gp << "set output 'convergence.png'\nset logscale xy\nset xlabel 'tau'\nset ylabel 'Linf error'\n"
            "plot 'convergence.csv' using 2:3 with linespoints title 'error'\n";
      break;
    case Subcommand::Frontier:
      gp << "set output 'frontier.png'\nset logscale xy\nset xlabel 'CPU seconds'\nset ylabel 'Linf error'\n"
            "plot 'frontier.csv' using 4:3 with points title 'cells'\n";
      break;
    case Subcommand::Reference:
      gp << "set output 'reference.png'\nplot 'reference.csv' using 1:2 with lines\n";
      break;
    default: {
      const char* names[] = {"mass", "momentum", "hamiltonian", "quad_energy"};
      for (int col = 0; col < 4; ++col) {
        gp << "set output '" << names[col] << ".png'\nset logscale y\nset xlabel 't'\nplot";
        bool first = true;
        for (const std::string& out : summary.outputs) {
          const bool drift = out.rfind("drift_", 0) == 0;
          const bool inv = out.rfind("invariants_", 0) == 0;
          if (!(cfg.command == Subcommand::Invariants ? drift : inv)) continue;
          gp << (first ? " " : ", ") << "'" << out << "' using 1:(abs($" << (col + 2) << ")) with lines title '"
             << out << "'";
          first = false;
        }
        gp << "\n";
      }
    }
  }
  io::write_text(cfg.out_dir / "plot.gp", gp.str());
}

double relative_drift_limit_check(const experiments::DriftSeries& s, const RunConfig& cfg, Summary& summary) {
  const InvariantRecordd worst = s.max_relative_drift();
  if (worst.mass > cfg.check_tol)
    summary.fail(s.cell.label(), "relative mass drift " + io::format_double(worst.mass) + " exceeds check tolerance");
  if (worst.quad_energy > cfg.check_tol)
    summary.fail(s.cell.label(),
                 "relative quadratic-energy drift " + io::format_double(worst.quad_energy) + " exceeds check tolerance");
  return std::max(worst.mass, worst.quad_energy);
}

void run_trajectories(const RunConfig& cfg, Summary& summary, std::ostream& log) {
  const experiments::StudyOptions opts{cfg.workers};
  const auto series = experiments::invariant_drift_study(cfg.scenario, opts);
  const Gridd grid = cfg.scenario.grid();
  for (const auto& s : series) {
    const std::string label = s.cell.label();
    if (s.status != "ok") {
      summary.fail(label, s.status);
      log << label << ": " << s.status << "\n";
      continue;
    }
    const InvariantRecordd worst = s.max_relative_drift();
    log << std::setprecision(3) << label << ": steps=" << std::llround(cfg.scenario.T / s.cell.tau)
        << " max rel drift mass=" << worst.mass << " momentum=" << worst.momentum
        << " hamiltonian=" << worst.hamiltonian << " quad_energy=" << worst.quad_energy << "\n";
    relative_drift_limit_check(s, cfg, summary);
    const std::string inv = "invariants_" + label + ext(cfg.format);
    io::emit(s.records, cfg.format, cfg.out_dir / inv);
    summary.outputs.push_back(inv);
    if (cfg.command == Subcommand::Invariants) {
      const std::string drift = "drift_" + label + ext(cfg.format);
      io::emit(s.drift, cfg.format, cfg.out_dir / drift);
      summary.outputs.push_back(drift);
    } else {
      const std::string snap = "snapshot_" + label + ext(cfg.format);
      io::emit_snapshot(grid, s.final_u, cfg.format, cfg.out_dir / snap);
      summary.outputs.push_back(snap);
    }
  }
}

experiments::Reference load_reference(const RunConfig& cfg, std::ostream& log) {
  experiments::ReferenceOptions ro = cfg.reference;
  ro.cache_dir = cfg.cache_dir;
  auto ref = experiments::make_reference(cfg.scenario, ro);
  log << "reference " << (ref.from_cache ? "loaded from " : "computed") << (ref.from_cache ? ref.path.string() : "")
      << " [" << ref.key << "]\n";
  return ref;
}

}  // namespace

std::string subcommand_name(Subcommand c) {
  switch (c) {
    case Subcommand::Run: return "run";
    case Subcommand::Converge: return "converge";
    case Subcommand::Invariants: return "invariants";
    case Subcommand::Frontier: return "frontier";
    case Subcommand::Reference: return "reference";
  }
  return "?";
}

Scenario scenario_from_json(const std::string& text, const Scenario& base) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("unparsable JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config", "top level must be an object");
  if (doc.contains("scenario")) return scenario_from_json(doc.at("scenario").dump(), base);

  static const std::set<std::string> known = {"preset", "name", "a", "L", "N", "T", "cadence", "ic", "cells",
                                              "schemes", "taus", "stage_tol", "lcns_tol", "max_iters", "damping",
                                              "solver"};
  for (const auto& item : doc.items())
    if (!known.count(item.key())) throw ConfigError(item.key(), "unknown key in config file");

  Scenario sc = base;
  try {
    if (doc.contains("name")) sc.name = doc["name"].get<std::string>();
    if (doc.contains("a")) sc.a = json_real(doc["a"], "a");
    if (doc.contains("L")) sc.L = json_real(doc["L"], "L");
    if (doc.contains("N")) sc.N = doc["N"].get<Eigen::Index>();
    if (doc.contains("T")) sc.T = json_real(doc["T"], "T");
    if (doc.contains("cadence")) sc.cadence = doc["cadence"].get<std::int64_t>();
    if (doc.contains("ic")) sc.ic = ic_from_json(doc["ic"]);
    if (doc.contains("stage_tol")) sc.solver.stage_tol = json_real(doc["stage_tol"], "stage_tol");
    if (doc.contains("lcns_tol")) sc.solver.lcns_tol = json_real(doc["lcns_tol"], "lcns_tol");
    if (doc.contains("max_iters")) sc.solver.max_iters = doc["max_iters"].get<int>();
    if (doc.contains("damping")) sc.solver.damping = json_real(doc["damping"], "damping");
    if (doc.contains("solver")) sc.solver.solver = parse_solver(doc["solver"].get<std::string>());
    if (doc.contains("cells")) {
      sc.cells.clear();
      for (const json& c : doc["cells"])
        sc.cells.push_back({Scheme::parse(c.at("scheme").get<std::string>()), json_real(c.at("tau"), "tau")});
    }
    std::vector<Scheme> schemes;
    std::vector<double> taus;
    if (doc.contains("schemes"))
      for (const json& s : doc["schemes"]) schemes.push_back(Scheme::parse(s.get<std::string>()));
    if (doc.contains("taus"))
      for (const json& t : doc["taus"]) taus.push_back(json_real(t, "taus"));
    override_cells(sc, schemes, taus);
  } catch (const json::exception& e) {
    throw ConfigError("config", std::string("bad value: ") + e.what());
  }
  return sc;
}

std::string config_json(const RunConfig& cfg) {
  json j{{"command", subcommand_name(cfg.command)},
         {"preset", cfg.preset},
         {"out", cfg.out_dir.string()},
         {"format", io::format_name(cfg.format)},
         {"cache_dir", cfg.cache_dir.string()},
         {"workers", cfg.workers},
         {"repetitions", cfg.repetitions},
         {"check_tol", cfg.check_tol},
         {"full_scale", cfg.full_scale},
         {"reference", {{"stages", cfg.reference.stages}, {"tau", cfg.reference.tau}}},
         {"scenario", scenario_to_json(cfg.scenario)}};
  return j.dump(2) + "\n";
}

ParseOutcome parse_config(const std::vector<std::string>& args) {
  CLI::App app{"Energy-preserving pseudo-spectral solver for the Camassa-Holm equation", "chieq"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");

  const std::pair<Subcommand, const char*> commands[] = {
      {Subcommand::Run, "integrate each cell and write invariant series plus the final snapshot"},
      {Subcommand::Converge, "error against a Gauss reference and observed convergence rates"},
      {Subcommand::Invariants, "drift |X(t) - X(0)| of mass, momentum, Hamiltonian and quadratic energy"},
      {Subcommand::Frontier, "error versus wall-clock time of the integration"},
      {Subcommand::Reference, "compute or load the cached reference solution"}};
  std::vector<std::pair<Subcommand, CLI::App*>> subs;
  for (const auto& [cmd, desc] : commands) subs.emplace_back(cmd, app.add_subcommand(subcommand_name(cmd), desc));

  std::string preset, config_file, out_dir = "out", format = "csv", cache_dir, solver;
  std::vector<std::string> scheme_names, tau_texts;
  std::string T_text;
  int stages = 0, max_iters = 0;
  long long N = 0, cadence = 0;
  double stage_tol = 0, lcns_tol = 0, damping = 0, check_tol = 1e-9;
  unsigned workers = 1;
  int repetitions = 3, ref_stages = 3;
  double ref_tau = 1e-3;
  bool full_scale = false, gnuplot = false;

  app.add_option("--preset", preset, "sine | peakon | three-peakon");
  auto* opt_config = app.add_option("--config", config_file, "JSON scenario file (flags take precedence)")
                         ->check(CLI::ExistingFile);
  app.add_option("--scheme", scheme_names, "lcns, gauss2, gauss4, gauss6, ... (comma separated)")->delimiter(',');
  auto* opt_stages = app.add_option("-s,--stages", stages, "Gauss stage count (same as --scheme gauss<2s>)");
  auto* opt_N = app.add_option("--N", N, "grid points (even)");
  app.add_option("--tau", tau_texts, "time step(s); ratios like 1/30 accepted")->delimiter(',');
  auto* opt_T = app.add_option("--T", T_text, "final time");
  auto* opt_stage_tol = app.add_option("--stage-tol", stage_tol, "Gauss stage residual tolerance");
  auto* opt_lcns_tol = app.add_option("--lcns-tol", lcns_tol, "LCNS iteration stopping tolerance");
  auto* opt_max_iters = app.add_option("--max-iters", max_iters, "iteration cap per step");
  auto* opt_damping = app.add_option("--damping", damping, "fixed-point relaxation in (0, 1]");
  auto* opt_solver = app.add_option("--solver", solver, "Gauss stage solver: fixed-point | newton");
  auto* opt_cadence = app.add_option("--cadence", cadence, "record invariants every n steps");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--format", format, "csv | json");
  auto* opt_cache = app.add_option("--cache-dir", cache_dir, "reference cache directory (default: $CH_CACHE_DIR)");
  app.add_option("--workers", workers, "parallel cells");
  app.add_option("--repetitions", repetitions, "timing repetitions for frontier");
  app.add_option("--check-tol", check_tol, "allowed relative drift of mass and quadratic energy");
  app.add_option("--ref-stages", ref_stages, "reference Gauss stage count");
  app.add_option("--ref-tau", ref_tau, "reference time step");
  app.add_flag("--full-scale", full_scale, "three-peakon at h = L/2048, T = 10");
  app.add_flag("--gnuplot-script", gnuplot, "also write plot.gp next to the data");

  ParseOutcome outcome;
  if (args.empty()) {
    outcome.exit_code = 2;
    outcome.message = app.help() + "\nerror: a subcommand is required\n";
    return outcome;
  }
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    std::ostringstream out, err;
    outcome.exit_code = app.exit(e, out, err) == 0 ? 0 : 2;
    outcome.message = out.str() + err.str();
    return outcome;
  }

  try {
    RunConfig cfg;
    for (const auto& [cmd, sub] : subs)
      if (sub->parsed()) cfg.command = cmd;
    cfg.preset = preset;
    cfg.full_scale = full_scale;
    cfg.config_file = config_file;
    cfg.out_dir = out_dir;
    cfg.format = io::parse_format(format);
    cfg.gnuplot_script = gnuplot;
    cfg.check_tol = check_tol;
    cfg.repetitions = repetitions;
    cfg.workers = std::max(1u, workers);
    cfg.reference.stages = ref_stages;
    cfg.reference.tau = ref_tau;
    cfg.cache_dir = opt_cache->count() ? std::filesystem::path(cache_dir) : experiments::cache_dir_from_env();
    if (!(check_tol > 0)) throw ConfigError("check-tol", "must be positive");
    if (repetitions < 1) throw ConfigError("repetitions", "must be >= 1");
    if (ref_stages < 1) throw ConfigError("ref-stages", "must be >= 1");
    if (!(ref_tau > 0)) throw ConfigError("ref-tau", "must be positive");

    std::string base_preset = preset;
    std::string file_text;
    if (opt_config->count()) {
      file_text = io::read_text(config_file);
      if (base_preset.empty()) {
        try {
          const json doc = json::parse(file_text);
          if (doc.contains("preset") && doc["preset"].is_string()) base_preset = doc["preset"].get<std::string>();
        } catch (const json::exception&) {
          // reported by scenario_from_json below
        }
      }
    }
    if (base_preset.empty()) base_preset = "sine";
    if (cfg.preset.empty()) cfg.preset = base_preset;
    Scenario sc = experiments::preset(base_preset, full_scale);
    if (!file_text.empty()) sc = scenario_from_json(file_text, sc);

    if (opt_N->count()) sc.N = static_cast<Eigen::Index>(N);
    if (opt_T->count()) sc.T = parse_real("T", T_text);
    if (opt_cadence->count()) sc.cadence = cadence;
    if (opt_stage_tol->count()) sc.solver.stage_tol = stage_tol;
    if (opt_lcns_tol->count()) sc.solver.lcns_tol = lcns_tol;
    if (opt_max_iters->count()) sc.solver.max_iters = max_iters;
    if (opt_damping->count()) sc.solver.damping = damping;
    if (opt_solver->count()) sc.solver.solver = parse_solver(solver);

    std::vector<Scheme> schemes;
    for (const std::string& name : scheme_names) schemes.push_back(Scheme::parse(name));
    if (opt_stages->count()) {
      if (stages < 1) throw ConfigError("stages", "must be >= 1");
      schemes.push_back(Scheme::gauss(stages));
    }
    std::vector<double> taus;
    for (const std::string& t : tau_texts) taus.push_back(parse_real("tau", t));
    override_cells(sc, schemes, taus);
    if (sc.cells.empty()) throw ConfigError("scheme", "no (scheme, tau) cells to run");
    sc.validate();
    cfg.scenario = std::move(sc);
    outcome.config = std::move(cfg);
  } catch (const ConfigError& e) {
    outcome.exit_code = 2;
    outcome.message = std::string("configuration error: ") + e.what() + "\n";
  } catch (const std::runtime_error& e) {
    outcome.exit_code = 2;
    outcome.message = std::string("configuration error: ") + e.what() + "\n";
  }
  return outcome;
}

int execute(const RunConfig& cfg, std::ostream& log) {
  Summary summary;
  try {
    io::write_text(cfg.out_dir / "config.json", config_json(cfg));
    const Gridd grid = cfg.scenario.grid();
    const experiments::StudyOptions opts{cfg.workers};
    switch (cfg.command) {
      case Subcommand::Run:
      case Subcommand::Invariants:
        run_trajectories(cfg, summary, log);
        break;
      case Subcommand::Converge: {
        const auto ref = load_reference(cfg, log);
        const auto report = experiments::convergence_study(cfg.scenario, ref.u, opts);
        for (const auto& row : report.rows) {
          log << std::left << std::setw(8) << row.scheme << " tau=" << std::setw(10) << std::setprecision(6) << row.tau
              << " Linf=" << std::scientific << std::setprecision(3) << row.linf_error << std::defaultfloat;
          if (row.rate) log << " rate=" << std::fixed << std::setprecision(2) << *row.rate << std::defaultfloat;
          if (row.status != "ok") log << " [" << row.status << "]";
          log << "\n";
          if (row.status.rfind("diverged", 0) == 0) summary.fail(row.scheme + "@" + io::format_double(row.tau), row.status);
        }
        const std::string name = "convergence" + ext(cfg.format);
        io::emit(report, cfg.format, cfg.out_dir / name);
        summary.outputs.push_back(name);
        break;
      }
      case Subcommand::Frontier: {
        const auto ref = load_reference(cfg, log);
        const auto rows = experiments::cpu_frontier_study(cfg.scenario, ref.u, cfg.repetitions, opts);
        for (const auto& row : rows) {
          log << row.scheme << " tau=" << row.tau << " Linf=" << row.linf_error << " seconds=" << row.seconds << "\n";
          if (row.status != "ok") summary.fail(row.scheme + "@" + io::format_double(row.tau), row.status);
        }
        const std::string name = "frontier" + ext(cfg.format);
        io::emit(rows, cfg.format, cfg.out_dir / name);
        summary.outputs.push_back(name);
        break;
      }
      case Subcommand::Reference: {
        const auto ref = load_reference(cfg, log);
        const std::string name = "reference" + ext(cfg.format);
        io::emit_snapshot(grid, ref.u, cfg.format, cfg.out_dir / name);
        summary.outputs.push_back(name);
        break;
      }
    }
    write_gnuplot(cfg, summary, log);
  } catch (const std::exception& e) {
    summary.fail(subcommand_name(cfg.command), e.what());
    log << "error: " << e.what() << "\n";
  }

  json failures = json::array();
  for (const auto& [where, reason] : summary.failures) failures.push_back({{"cell", where}, {"reason", reason}});
  const json doc{{"command", subcommand_name(cfg.command)},
                 {"status", summary.failures.empty() ? "ok" : "failed"},
                 {"failures", failures},
                 {"outputs", summary.outputs}};
  try {
    io::write_text(cfg.out_dir / "summary.json", doc.dump(2) + "\n");
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }
  return summary.failures.empty() ? 0 : 1;
}

}  // namespace chieq::cli

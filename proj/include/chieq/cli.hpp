// Command-line configuration and orchestration.
#ifndef CHIEQ_CLI_HPP
#define CHIEQ_CLI_HPP

#include <chieq/emit.hpp>
#include <chieq/experiments.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace chieq::cli {

enum class Subcommand { Run, Converge, Invariants, Frontier, Reference };

std::string subcommand_name(Subcommand c);

struct RunConfig {
  Subcommand command{Subcommand::Run};
  std::string preset;
  std::filesystem::path config_file;
  std::filesystem::path out_dir{"out"};
  io::Format format{io::Format::Csv};
  std::filesystem::path cache_dir;
  bool gnuplot_script{false};
  bool full_scale{false};
  unsigned workers{1};
  int repetitions{3};
  /// Hard limit on relative drift of mass and quadratic energy for run/invariants.
  double check_tol{1e-9};
  experiments::ReferenceOptions reference{};
  experiments::Scenario scenario;
};

/// Fully resolved parameters as JSON text; accepted back by --config.
std::string config_json(const RunConfig& cfg);

/// Applies a JSON scenario document on top of `base`. Throws ConfigError.
experiments::Scenario scenario_from_json(const std::string& text, const experiments::Scenario& base);

struct ParseOutcome {
  std::optional<RunConfig> config;
  int exit_code{0};
  std::string message;
};

/// `args` excludes the program name. Help and usage errors come back as a
/// message with exit code (0 for --help, 2 otherwise).
ParseOutcome parse_config(const std::vector<std::string>& args);

/// Executes the configured study, writing outputs, config.json and
/// summary.json under out_dir. Returns 0 iff every cell completed and every
/// hard check passed.
int execute(const RunConfig& cfg, std::ostream& log);

}  // namespace chieq::cli

#endif  // CHIEQ_CLI_HPP

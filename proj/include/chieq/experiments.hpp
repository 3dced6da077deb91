// Numerical studies: reference solutions, convergence tables, invariant
// drift series and cost-versus-error measurements.
#ifndef CHIEQ_EXPERIMENTS_HPP
#define CHIEQ_EXPERIMENTS_HPP

#include <chieq/chieq.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace chieq::experiments {

struct SineIC {};
struct PeakonIC {
  double c{1};
  double x0{0};
};
struct ThreePeakonIC {
  std::array<double, 3> speeds{};
  std::array<double, 3> centers{};
};
using InitialCondition = std::variant<SineIC, PeakonIC, ThreePeakonIC>;

std::string ic_name(const InitialCondition& ic);

struct Cell {
  Scheme scheme;
  double tau{0};

  std::string label() const;
};

struct Scenario {
  std::string name;
  double a{0};
  double L{1};
  Eigen::Index N{128};
  InitialCondition ic{SineIC{}};
  double T{1};
  std::vector<Cell> cells;
  std::int64_t cadence{1};
  /// Solver settings shared by all cells; tau is taken from each cell.
  StepperConfigd solver{};

  Gridd grid() const { return make_grid(a, L, N); }
  FieldXd initial_u(const Gridd& grid) const;
  Stated initial_state(const SpectralOpsd& ops) const;
  StepperConfigd config_for(const Cell& cell) const;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
};

/// Default step sizes of the accuracy study for a scheme: 1/100..1/800 for
/// second-order schemes, 1/30, 1/60, 1/120 for higher order.
std::vector<double> default_convergence_taus(const Scheme& scheme);

/// Named setups: "sine", "peakon", "three-peakon". `full_scale` switches the
/// three-peakon preset from h = L/1024, T = 4 to h = L/2048, T = 10.
Scenario preset(const std::string& name, bool full_scale = false);

struct ReferenceOptions {
  int stages{3};
  double tau{1e-3};
  /// Empty disables the on-disk cache.
  std::filesystem::path cache_dir;
};

struct Reference {
  FieldXd u;
  std::string key;
  bool from_cache{false};
  std::filesystem::path path;
};

/// Canonical text describing the reference run; its hash names the cache file.
std::string reference_key(const Scenario& scenario, const ReferenceOptions& options);
std::uint64_t fnv1a64(const std::string& text);

/// Terminal U of the Gauss reference run, loaded from or stored into the cache.
Reference make_reference(const Scenario& scenario, const ReferenceOptions& options = {});

/// Directory from CH_CACHE_DIR, or `fallback` when unset.
std::filesystem::path cache_dir_from_env(const std::filesystem::path& fallback = {});

/// max_j |u_j - ref_j|.
double linf_error(const FieldXd& u, const FieldXd& ref);

/// ln(e1 / e2) / ln(tau1 / tau2).
double convergence_rate(double error1, double error2, double tau1, double tau2);

/// Rows with errors under this value are kept but excluded from rate fitting.
inline constexpr double kRoundoffFloor = 1e-13;

struct ConvergenceRow {
  std::string scheme;
  double tau{0};
  double linf_error{0};
  std::optional<double> rate;
  /// "ok", "roundoff_floor" or "diverged: <reason>".
  std::string status{"ok"};
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  bool all_ok() const;
};

struct StudyOptions {
  unsigned workers{1};
};

/// Runs each cell from the scenario's initial state to T and compares with `reference`.
ConvergenceReport convergence_study(const Scenario& scenario, const FieldXd& reference, const StudyOptions& options = {});

/// Fills in rates between consecutive valid rows of the same scheme.
void assign_rates(ConvergenceReport& report);

struct DriftSeries {
  Cell cell;
  std::vector<InvariantRecordd> records;
  /// |X(t) - X(0)| for every recorded time.
  std::vector<InvariantRecordd> drift;
  FieldXd final_u;
  std::string status{"ok"};

  /// max over the series of |X(t) - X(0)| / |X(0)| (absolute when |X(0)| < 1e-8).
  InvariantRecordd max_relative_drift() const;
};

std::vector<InvariantRecordd> drift_series(const std::vector<InvariantRecordd>& records);

std::vector<DriftSeries> invariant_drift_study(const Scenario& scenario, const StudyOptions& options = {});

struct FrontierRow {
  std::string scheme;
  double tau{0};
  double linf_error{0};
  double seconds{0};
  std::string status{"ok"};
};

/// Best-of-`repetitions` wall time of the integration call alone.
std::vector<FrontierRow> cpu_frontier_study(const Scenario& scenario, const FieldXd& reference, int repetitions = 3,
                                            const StudyOptions& options = {});

/// Runs job(i) for i in [0, count) on at most `workers` threads.
void run_parallel(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& job);

/// Indices of local maxima of a periodic field that exceed `min_height` and
/// dominate their +-`half_window` neighbours.
std::vector<Eigen::Index> local_maxima(const FieldXd& u, double min_height, Eigen::Index half_window);

}  // namespace chieq::experiments

#endif  // CHIEQ_EXPERIMENTS_HPP

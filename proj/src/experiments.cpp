#include <chieq/experiments.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace chieq::experiments {

namespace {

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

constexpr char kCacheMagic[8] = {'C', 'H', 'I', 'E', 'Q', 'R', 'E', 'F'};

std::optional<FieldXd> read_cached(const std::filesystem::path& path, Eigen::Index n) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  char magic[8];
  std::uint64_t count = 0;
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(&count), sizeof count);
  if (!in || std::memcmp(magic, kCacheMagic, sizeof magic) != 0 || count != static_cast<std::uint64_t>(n))
    return std::nullopt;
  FieldXd u(n);
  in.read(reinterpret_cast<char*>(u.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) return std::nullopt;
  return u;
}

void write_cached(const std::filesystem::path& path, const FieldXd& u) {
  std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write reference cache " + tmp.string());
    const std::uint64_t count = static_cast<std::uint64_t>(u.size());
    out.write(kCacheMagic, sizeof kCacheMagic);
    out.write(reinterpret_cast<const char*>(&count), sizeof count);
    out.write(reinterpret_cast<const char*>(u.data()), static_cast<std::streamsize>(u.size() * sizeof(double)));
    if (!out) throw std::runtime_error("short write to reference cache " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

std::string ic_name(const InitialCondition& ic) {
  struct {
    std::string operator()(const SineIC&) const { return "sine"; }
    std::string operator()(const PeakonIC&) const { return "peakon"; }
    std::string operator()(const ThreePeakonIC&) const { return "three-peakon"; }
  } visitor;
  return std::visit(visitor, ic);
}

std::string Cell::label() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_tau%.6g", scheme.name().c_str(), tau);
  return buf;
}

FieldXd Scenario::initial_u(const Gridd& grid) const {
  if (const auto* p = std::get_if<PeakonIC>(&ic)) return peakon_ic(grid, p->c, p->x0);
  if (const auto* p = std::get_if<ThreePeakonIC>(&ic)) return three_peakon_ic(grid, p->speeds, p->centers);
  return sine_ic(grid);
}

Stated Scenario::initial_state(const SpectralOpsd& ops) const { return consistent_state(ops, initial_u(ops.grid())); }

StepperConfigd Scenario::config_for(const Cell& cell) const {
  StepperConfigd cfg = solver;
  cfg.tau = cell.tau;
  return cfg;
}

void Scenario::validate() const {
  (void)grid();
  if (!(T >= 0) || !std::isfinite(T)) throw ConfigError("T", "must be finite and non-negative");
  if (cadence < 1) throw ConfigError("cadence", "must be >= 1");
  for (const Cell& cell : cells) {
    if (cell.scheme.kind == Scheme::Kind::Gauss && cell.scheme.stages < 1)
      throw ConfigError("scheme", "Gauss scheme needs at least one stage");
    StepperConfigd cfg = config_for(cell);
    cfg.validate();
    (void)step_count(T, cell.tau);
  }
}

std::vector<double> default_convergence_taus(const Scheme& scheme) {
  if (scheme.order() <= 2) return {1.0 / 100, 1.0 / 200, 1.0 / 400, 1.0 / 800};
  return {1.0 / 30, 1.0 / 60, 1.0 / 120};
}

Scenario preset(const std::string& name, bool full_scale) {
  Scenario sc;
  sc.name = name;
  if (name == "sine") {
    sc.a = 0;
    sc.L = 2 * std::numbers::pi;
    sc.N = 128;
    sc.ic = SineIC{};
    sc.T = 1;
    for (const Scheme& scheme : {Scheme::lcns(), Scheme::gauss(2), Scheme::gauss(3)})
      for (double tau : default_convergence_taus(scheme)) sc.cells.push_back({scheme, tau});
    sc.cadence = 1;
  } else if (name == "peakon") {
    sc.a = 0;
    sc.L = 1;
    sc.N = 128;
    sc.ic = PeakonIC{1.0, 0.0};
    sc.T = 50;
    for (const Scheme& scheme : {Scheme::lcns(), Scheme::gauss(1), Scheme::gauss(2), Scheme::gauss(3)})
      sc.cells.push_back({scheme, 1e-4});
    sc.cadence = 100;
  } else if (name == "three-peakon") {
    sc.a = 0;
    sc.L = 30;
    sc.N = full_scale ? 2048 : 1024;
    sc.ic = ThreePeakonIC{{2.0, 1.0, 0.8}, {-5.0, -3.0, -1.0}};
    sc.T = full_scale ? 10 : 4;
    sc.cells.push_back({Scheme::gauss(2), 1e-4});
    sc.cadence = 100;
  } else {
    throw ConfigError("preset", "unknown preset '" + name + "' (expected sine, peakon or three-peakon)");
  }
  return sc;
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::string reference_key(const Scenario& scenario, const ReferenceOptions& options) {
  std::ostringstream os;
  os << "scheme=" << Scheme::gauss(options.stages).name() << ";a=" << fmt17(scenario.a) << ";L=" << fmt17(scenario.L)
     << ";N=" << scenario.N << ";tau=" << fmt17(options.tau) << ";T=" << fmt17(scenario.T)
     << ";ic=" << ic_name(scenario.ic);
  if (const auto* p = std::get_if<PeakonIC>(&scenario.ic)) os << ":" << fmt17(p->c) << ":" << fmt17(p->x0);
  if (const auto* p = std::get_if<ThreePeakonIC>(&scenario.ic))
    for (int i = 0; i < 3; ++i) os << ":" << fmt17(p->speeds[i]) << "@" << fmt17(p->centers[i]);
  return os.str();
}

std::filesystem::path cache_dir_from_env(const std::filesystem::path& fallback) {
  if (const char* env = std::getenv("CH_CACHE_DIR"); env && *env) return env;
  return fallback;
}

Reference make_reference(const Scenario& scenario, const ReferenceOptions& options) {
  const Gridd grid = scenario.grid();
  Reference ref;
  ref.key = reference_key(scenario, options);
  if (!options.cache_dir.empty()) {
    char name[40];
    std::snprintf(name, sizeof name, "ref_%016llx.bin", static_cast<unsigned long long>(fnv1a64(ref.key)));
    ref.path = options.cache_dir / name;
    if (auto cached = read_cached(ref.path, grid.N)) {
      ref.u = std::move(*cached);
      ref.from_cache = true;
      return ref;
    }
  }
  const SpectralOpsd ops(grid);
  StepperConfigd cfg = scenario.solver;
  cfg.tau = options.tau;
  IntegrateOptions<double> io;
  io.record_invariants = false;
  ref.u = integrate(Scheme::gauss(options.stages), ops, cfg, scenario.initial_state(ops), scenario.T, io).final_state.u;
  if (!ref.path.empty()) write_cached(ref.path, ref.u);
  return ref;
}

double linf_error(const FieldXd& u, const FieldXd& ref) {
  if (u.size() != ref.size())
    throw std::invalid_argument("linf_error: grid mismatch (" + std::to_string(u.size()) + " vs " +
                                std::to_string(ref.size()) + " points)");
  return linf_norm(u - ref);
}

double convergence_rate(double error1, double error2, double tau1, double tau2) {
  return std::log(error1 / error2) / std::log(tau1 / tau2);
}

bool ConvergenceReport::all_ok() const {
  return std::all_of(rows.begin(), rows.end(), [](const ConvergenceRow& r) { return r.status.rfind("diverged", 0) != 0; });
}

void assign_rates(ConvergenceReport& report) {
  for (std::size_t k = 0; k < report.rows.size(); ++k) {
    ConvergenceRow& row = report.rows[k];
    row.rate.reset();
    if (k == 0 || row.status != "ok") continue;
    const ConvergenceRow& prev = report.rows[k - 1];
    if (prev.scheme != row.scheme || prev.status != "ok") continue;
    row.rate = convergence_rate(prev.linf_error, row.linf_error, prev.tau, row.tau);
  }
}

void run_parallel(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& job) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

ConvergenceReport convergence_study(const Scenario& scenario, const FieldXd& reference, const StudyOptions& options) {
  scenario.validate();
  const SpectralOpsd ops(scenario.grid());
  const Stated s0 = scenario.initial_state(ops);
  ConvergenceReport report;
  report.rows.resize(scenario.cells.size());
  run_parallel(scenario.cells.size(), options.workers, [&](std::size_t i) {
    const Cell& cell = scenario.cells[i];
    ConvergenceRow& row = report.rows[i];
    row.scheme = cell.scheme.name();
    row.tau = cell.tau;
    IntegrateOptions<double> io;
    io.record_invariants = false;
    try {
      const auto traj = integrate(cell.scheme, ops, scenario.config_for(cell), s0, scenario.T, io);
      row.linf_error = linf_error(traj.final_state.u, reference);
      row.status = row.linf_error < kRoundoffFloor ? "roundoff_floor" : "ok";
    } catch (const StepError& e) {
      row.linf_error = std::numeric_limits<double>::quiet_NaN();
      row.status = std::string("diverged: ") + e.what();
    }
  });
  assign_rates(report);
  return report;
}

std::vector<InvariantRecordd> drift_series(const std::vector<InvariantRecordd>& records) {
  std::vector<InvariantRecordd> out;
  if (records.empty()) return out;
  const InvariantRecordd& r0 = records.front();
  out.reserve(records.size());
  for (const InvariantRecordd& r : records)
    out.push_back({r.t, std::abs(r.mass - r0.mass), std::abs(r.momentum - r0.momentum),
                   std::abs(r.hamiltonian - r0.hamiltonian), std::abs(r.quad_energy - r0.quad_energy)});
  return out;
}

InvariantRecordd DriftSeries::max_relative_drift() const {
  InvariantRecordd worst;
  if (records.empty()) return worst;
  const InvariantRecordd& r0 = records.front();
  auto rel = [](double d, double base) { return std::abs(base) < 1e-8 ? d : d / std::abs(base); };
  for (const InvariantRecordd& d : drift) {
    worst.t = d.t;
    worst.mass = std::max(worst.mass, rel(d.mass, r0.mass));
    worst.momentum = std::max(worst.momentum, rel(d.momentum, r0.momentum));
    worst.hamiltonian = std::max(worst.hamiltonian, rel(d.hamiltonian, r0.hamiltonian));
    worst.quad_energy = std::max(worst.quad_energy, rel(d.quad_energy, r0.quad_energy));
  }
  return worst;
}

std::vector<DriftSeries> invariant_drift_study(const Scenario& scenario, const StudyOptions& options) {
  scenario.validate();
  const SpectralOpsd ops(scenario.grid());
  const Stated s0 = scenario.initial_state(ops);
  std::vector<DriftSeries> out(scenario.cells.size());
  run_parallel(scenario.cells.size(), options.workers, [&](std::size_t i) {
    DriftSeries& series = out[i];
    series.cell = scenario.cells[i];
    IntegrateOptions<double> io;
    io.cadence = scenario.cadence;
    try {
      auto traj = integrate(series.cell.scheme, ops, scenario.config_for(series.cell), s0, scenario.T, io);
      series.records = std::move(traj.records);
      series.final_u = std::move(traj.final_state.u);
    } catch (const StepError& e) {
      series.status = std::string("diverged: ") + e.what();
    }
    series.drift = drift_series(series.records);
  });
  return out;
}

std::vector<FrontierRow> cpu_frontier_study(const Scenario& scenario, const FieldXd& reference, int repetitions,
                                            const StudyOptions& options) {
  scenario.validate();
  if (repetitions < 1) throw ConfigError("repetitions", "must be >= 1");
  const SpectralOpsd ops(scenario.grid());
  const Stated s0 = scenario.initial_state(ops);
  std::vector<FrontierRow> rows(scenario.cells.size());
  run_parallel(scenario.cells.size(), options.workers, [&](std::size_t i) {
    const Cell& cell = scenario.cells[i];
    FrontierRow& row = rows[i];
    row.scheme = cell.scheme.name();
    row.tau = cell.tau;
    IntegrateOptions<double> io;
    io.record_invariants = false;
    row.seconds = std::numeric_limits<double>::infinity();
    try {
      for (int rep = 0; rep < repetitions; ++rep) {
        const auto start = std::chrono::steady_clock::now();
        const auto traj = integrate(cell.scheme, ops, scenario.config_for(cell), s0, scenario.T, io);
        const auto stop = std::chrono::steady_clock::now();
        row.seconds = std::min(row.seconds, std::chrono::duration<double>(stop - start).count());
        row.linf_error = linf_error(traj.final_state.u, reference);
      }
    } catch (const StepError& e) {
      row.linf_error = std::numeric_limits<double>::quiet_NaN();
      row.status = std::string("diverged: ") + e.what();
    }
  });
  return rows;
}

std::vector<Eigen::Index> local_maxima(const FieldXd& u, double min_height, Eigen::Index half_window) {
  std::vector<Eigen::Index> peaks;
  const Eigen::Index n = u.size();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (u[j] < min_height) continue;
    bool is_peak = true;
    for (Eigen::Index d = 1; d <= half_window && is_peak; ++d) {
      const double left = u[(j - d + n) % n];
      const double right = u[(j + d) % n];
      // strict on the left so a flat top yields one index
      is_peak = u[j] > left && u[j] >= right;
    }
    if (is_peak) peaks.push_back(j);
  }
  return peaks;
}

}  // namespace chieq::experiments

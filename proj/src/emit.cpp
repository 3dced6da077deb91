#include <chieq/emit.hpp>

#include <json.hpp>

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace chieq::io {

using nlohmann::json;

namespace {

void require_nonempty(std::size_t n, const char* what) {
  if (n == 0) throw std::invalid_argument(std::string("emit: no ") + what + " to write");
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// JSON has no NaN; diverged cells serialize their error as null.
json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

Format parse_format(const std::string& text) {
  if (text == "csv") return Format::Csv;
  if (text == "json") return Format::Json;
  throw ConfigError("format", "expected csv or json, got '" + text + "'");
}

std::string format_name(Format f) { return f == Format::Csv ? "csv" : "json"; }

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string to_csv(const std::vector<InvariantRecordd>& records) {
  std::ostringstream os;
  os << kInvariantsHeader << '\n';
  for (const auto& r : records)
    os << format_double(r.t) << ',' << format_double(r.mass) << ',' << format_double(r.momentum) << ','
       << format_double(r.hamiltonian) << ',' << format_double(r.quad_energy) << '\n';
  return os.str();
}

std::string to_csv(const experiments::ConvergenceReport& report) {
  std::ostringstream os;
  os << kConvergenceHeader << '\n';
  for (const auto& row : report.rows)
    os << row.scheme << ',' << format_double(row.tau) << ',' << format_double(row.linf_error) << ','
       << (row.rate ? format_double(*row.rate) : std::string()) << '\n';
  return os.str();
}

std::string to_csv(const std::vector<experiments::FrontierRow>& rows) {
  std::ostringstream os;
  os << kFrontierHeader << '\n';
  for (const auto& row : rows)
    os << row.scheme << ',' << format_double(row.tau) << ',' << format_double(row.linf_error) << ','
       << format_double(row.seconds) << '\n';
  return os.str();
}

std::string snapshot_csv(const Gridd& grid, const FieldXd& u) {
  std::ostringstream os;
  os << kSnapshotHeader << '\n';
  for (Eigen::Index j = 0; j < u.size(); ++j) os << format_double(grid.node(j)) << ',' << format_double(u[j]) << '\n';
  return os.str();
}

std::string to_json(const std::vector<InvariantRecordd>& records) {
  json arr = json::array();
  for (const auto& r : records)
    arr.push_back({{"t", r.t},
                   {"mass", r.mass},
                   {"momentum", r.momentum},
                   {"hamiltonian", r.hamiltonian},
                   {"quad_energy", r.quad_energy}});
  return arr.dump(2) + "\n";
}

std::string to_json(const experiments::ConvergenceReport& report) {
  json arr = json::array();
  for (const auto& row : report.rows)
    arr.push_back({{"scheme", row.scheme},
                   {"tau", row.tau},
                   {"linf_error", finite_or_null(row.linf_error)},
                   {"rate", optional_number(row.rate)},
                   {"status", row.status}});
  return arr.dump(2) + "\n";
}

std::string to_json(const std::vector<experiments::FrontierRow>& rows) {
  json arr = json::array();
  for (const auto& row : rows)
    arr.push_back({{"scheme", row.scheme},
                   {"tau", row.tau},
                   {"linf_error", finite_or_null(row.linf_error)},
                   {"seconds", row.seconds},
                   {"status", row.status}});
  return arr.dump(2) + "\n";
}

std::string snapshot_json(const Gridd& grid, const FieldXd& u) {
  json x = json::array(), v = json::array();
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    x.push_back(grid.node(j));
    v.push_back(u[j]);
  }
  return json{{"x", x}, {"u", v}}.dump() + "\n";
}

std::vector<InvariantRecordd> invariants_from_json(const std::string& text) {
  std::vector<InvariantRecordd> out;
  for (const json& j : json::parse(text))
    out.push_back({j.at("t").get<double>(), j.at("mass").get<double>(), j.at("momentum").get<double>(),
                   j.at("hamiltonian").get<double>(), j.at("quad_energy").get<double>()});
  return out;
}

experiments::ConvergenceReport convergence_from_json(const std::string& text) {
  experiments::ConvergenceReport report;
  for (const json& j : json::parse(text)) {
    experiments::ConvergenceRow row;
    row.scheme = j.at("scheme").get<std::string>();
    row.tau = j.at("tau").get<double>();
    row.linf_error = j.at("linf_error").is_null() ? std::nan("") : j.at("linf_error").get<double>();
    if (!j.at("rate").is_null()) row.rate = j.at("rate").get<double>();
    row.status = j.value("status", "ok");
    report.rows.push_back(row);
  }
  return report;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw std::runtime_error("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing: " + std::strerror(errno));
  out << content;
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string() + " for reading: " + std::strerror(errno));
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void emit(const std::vector<InvariantRecordd>& records, Format format, const std::filesystem::path& path) {
  require_nonempty(records.size(), "invariant records");
  write_text(path, format == Format::Csv ? to_csv(records) : to_json(records));
}

void emit(const experiments::ConvergenceReport& report, Format format, const std::filesystem::path& path) {
  require_nonempty(report.rows.size(), "convergence rows");
  write_text(path, format == Format::Csv ? to_csv(report) : to_json(report));
}

void emit(const std::vector<experiments::FrontierRow>& rows, Format format, const std::filesystem::path& path) {
  require_nonempty(rows.size(), "frontier rows");
  write_text(path, format == Format::Csv ? to_csv(rows) : to_json(rows));
}

void emit_snapshot(const Gridd& grid, const FieldXd& u, Format format, const std::filesystem::path& path) {
  require_nonempty(static_cast<std::size_t>(u.size()), "snapshot values");
  write_text(path, format == Format::Csv ? snapshot_csv(grid, u) : snapshot_json(grid, u));
}

}  // namespace chieq::io

// CSV / JSON writers for study results. Floats carry 17 significant digits.
#ifndef CHIEQ_EMIT_HPP
#define CHIEQ_EMIT_HPP

#include <chieq/experiments.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace chieq::io {

enum class Format { Csv, Json };

Format parse_format(const std::string& text);
std::string format_name(Format f);

/// Shortest "%.17g" rendering; 0 prints as "0".
std::string format_double(double x);

inline constexpr const char* kInvariantsHeader = "t,mass,momentum,hamiltonian,quad_energy";
inline constexpr const char* kConvergenceHeader = "scheme,tau,linf_error,rate";
inline constexpr const char* kFrontierHeader = "scheme,tau,linf_error,seconds";
inline constexpr const char* kSnapshotHeader = "x,u";

std::string to_csv(const std::vector<InvariantRecordd>& records);
std::string to_csv(const experiments::ConvergenceReport& report);
std::string to_csv(const std::vector<experiments::FrontierRow>& rows);
std::string snapshot_csv(const Gridd& grid, const FieldXd& u);

std::string to_json(const std::vector<InvariantRecordd>& records);
std::string to_json(const experiments::ConvergenceReport& report);
std::string to_json(const std::vector<experiments::FrontierRow>& rows);
std::string snapshot_json(const Gridd& grid, const FieldXd& u);

std::vector<InvariantRecordd> invariants_from_json(const std::string& text);
experiments::ConvergenceReport convergence_from_json(const std::string& text);

/// Writes `content` to `path`, creating parent directories. I/O failures
/// raise std::runtime_error naming the path.
void write_text(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

void emit(const std::vector<InvariantRecordd>& records, Format format, const std::filesystem::path& path);
void emit(const experiments::ConvergenceReport& report, Format format, const std::filesystem::path& path);
void emit(const std::vector<experiments::FrontierRow>& rows, Format format, const std::filesystem::path& path);
void emit_snapshot(const Gridd& grid, const FieldXd& u, Format format, const std::filesystem::path& path);

}  // namespace chieq::io

#endif  // CHIEQ_EMIT_HPP

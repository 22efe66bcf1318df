#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gsw/fueter_quotient.hpp"
#include "gsw/snapshot.hpp"
#include "gsw/swsolver.hpp"

namespace gsw {

inline constexpr const char* kVersion = "0.1.0";

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int check_failed = 1;
inline constexpr int invalid_config = 2;
inline constexpr int solver_failure = 3;
inline constexpr int partial_continuation = 4;
inline constexpr int bad_snapshot = 5;
}  // namespace exit_code

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AnalysisConfig {
  /// Absolute zero-set threshold; when unset, delta_relative * max|Psi| is used.
  std::optional<double> delta;
  double delta_relative = 1e-3;
  /// Hölder annulus in units of the lattice spacing.
  double holder_inner = 2.0;
  double holder_outer = 6.0;
  double holder_min_r_squared = 0.9;
  /// Closed site loops for the Z/2 monodromy (n = 2 only).
  std::vector<std::vector<Index>> loops;
  /// Per component, in report order. Empty orientations skip the homology class.
  std::vector<int> multiplicities;
  std::vector<int> orientations;
  double mu_tolerance = 1e-8;
};

struct RunConfig {
  int sites_per_axis = 0;
  double length = 0.0;
  int rank = 0;
  /// "identity" or a snapshot path whose B is used.
  std::string background = "identity";
  /// "random", "constant", or a snapshot path.
  std::string init = "random";
  double link_amplitude = 0.0;
  std::vector<double> schedule;
  SolverOptions solver;
  std::optional<std::uint64_t> seed;
  std::filesystem::path output;
  AnalysisConfig analysis;

  LatticeGeometry geometry() const { return {sites_per_axis, length}; }
};

/// Parses key = value sections. Relative paths resolve against `base_dir`.
/// Throws ConfigError naming the offending key.
RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Only the [analysis] section (used by analyze).
AnalysisConfig load_analysis_config(const std::filesystem::path& path);

/// Throws ConfigError for N < 4, L <= 0, a bad schedule, a missing seed, etc.
void validate(const RunConfig& config);

/// Canonical INI form of the effective configuration (re-runnable as is).
std::string format_config(const RunConfig& config);

struct CommandIo {
  std::ostream& out;
  std::ostream& err;
  bool quiet = false;
};

int cmd_solve(const RunConfig& config, CommandIo io);
int cmd_continue(const RunConfig& config, CommandIo io);
int cmd_analyze(const std::filesystem::path& snapshot, const AnalysisConfig& analysis, const std::filesystem::path& out_dir, CommandIo io);

struct CheckOptions {
  /// Test hook: replaces the moment map with 1/2 sum psi j conj(psi).
  bool perturb_moment_map = false;
  std::uint64_t seed = 20240613;
};

struct CheckResult {
  std::string name;
  double measured;
  double tolerance;
  bool passed;
};

std::vector<CheckResult> run_checks(const CheckOptions& options = {});
int cmd_check(const CheckOptions& options, CommandIo io);

/// Analysis of a loaded state; shared by analyze and continue.
ZeroSetReport analyze_state(const Snapshot& snap, const AnalysisConfig& analysis, std::vector<std::string>* notes = nullptr);

/// Writes `points` (x, y) as a standalone SVG line chart.
void write_line_chart_svg(const std::filesystem::path& path, const std::vector<std::pair<double, double>>& points, const std::string& title,
                          const std::string& x_label, const std::string& y_label);

/// argv-style entry point of the gsw tool.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gsw

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cfqp/datasets.hpp"
#include "cfqp/dcopf.hpp"
#include "cfqp/discovery.hpp"
#include "cfqp/report.hpp"

namespace cfqp::cli {

/// A run configuration: which problem, where discovery starts, and how it
/// searches. JSON keys (paths relative to the config file):
///   "problem": mp-QP file, or "case": power case file (+ "line_limits": bool)
///   "theta0": parameter point object (default zeros)
///   "pattern": {"kind": "axis", "axes": ["theta_C2", ...], "extent_cap", "shrink"}
///            | {"kind": "demand_scaled", "shrink"}   (cases only)
///   "precision": 32|64, "tol", "seed", "steps", "scales": [...]
///   "renewable_buses": [...], "unit_mw"   (planning data)
struct Config {
  std::filesystem::path source;
  std::shared_ptr<const MpQpProblem> problem;
  std::optional<Dcopf> dcopf;
  ParameterPoint theta0;
  json pattern = json::object();
  /// Unset: 64-bit for discovery, the model file's own precision elsewhere.
  std::optional<Precision> precision;
  double tol = 0.0;
  std::uint64_t seed = 1;
  std::size_t steps = 100;
  std::vector<double> scales{1.0};
  std::vector<int> renewable_buses;
  double unit_mw = 10.0;
};

[[nodiscard]] Config load_config(const std::filesystem::path& path);

/// Search pattern described by the config.
[[nodiscard]] SearchPattern build_pattern(const Config& cfg);

struct DiscoverOutcome {
  DiscoveryResult result;
  double seconds = 0.0;
};

/// Runs discovery, writes the model to `model_out` and the event log (JSON
/// lines) to `log_out`, and prints a summary.
DiscoverOutcome cmd_discover(const Config& cfg, const std::filesystem::path& model_out,
                             const std::filesystem::path& log_out, std::ostream& summary);

/// Loads a model and checks it belongs to the config's problem.
[[nodiscard]] ClosedFormModel load_model(const Config& cfg, const std::filesystem::path& path);

/// One CSV row per θ: index, objective, KKT columns, then x, λ, μ.
/// Returns the batch wall time in seconds.
double cmd_predict(const Config& cfg, const std::filesystem::path& model_path,
                   const std::filesystem::path& thetas_path, const std::filesystem::path& out, std::ostream& info);

struct KktReportOptions {
  std::vector<Precision> modes{Precision::f64, Precision::f32};
  /// Drop points whose oracle active set is not a model region.
  bool discovered_only = false;
};

struct KktReportOutcome {
  std::vector<std::pair<Precision, KktTable>> tables;
  std::size_t total = 0;
  std::size_t infeasible = 0;
  std::size_t undiscovered = 0;
  std::size_t evaluated = 0;
};

/// Mean and worst rows per precision mode; CSV to `out` when given.
KktReportOutcome cmd_kkt_report(const Config& cfg, const std::filesystem::path& model_path,
                                const std::filesystem::path& dataset_path, const std::filesystem::path& out,
                                const KktReportOptions& opts, std::ostream& text);

/// kind: local | extreme | scaled | planning. Writes CSV or JSON lines by extension.
std::vector<DataPoint> cmd_gen_data(const Config& cfg, const std::string& kind, std::size_t count,
                                    const std::filesystem::path& out, std::ostream& info);

struct BenchReport {
  std::size_t count = 0;
  double model_seconds = 0.0;
  std::optional<double> oracle_seconds;
  std::optional<double> speedup;
  std::string notice;
};

/// Medians over five repetitions of the model batch and of per-instance
/// oracle solves on `count` θ.
BenchReport cmd_bench(const Config& cfg, const std::filesystem::path& model_path, std::size_t count,
                      std::ostream& text);

/// θ sample for benchmarking: local perturbations for cases, otherwise
/// random convex combinations of region witnesses.
[[nodiscard]] std::vector<ParameterPoint> bench_thetas(const Config& cfg, const ClosedFormModel& model,
                                                       std::size_t count);

/// MATPOWER text in, JSON case out.
PowerCase cmd_import_case(const std::filesystem::path& in, const std::filesystem::path& out, std::ostream& info);

/// Exit code for an error family.
[[nodiscard]] int exit_code(ErrorKind kind) noexcept;

}  // namespace cfqp::cli

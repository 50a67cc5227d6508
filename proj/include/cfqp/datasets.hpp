#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cfqp/dcopf.hpp"
#include "cfqp/discovery.hpp"

namespace cfqp {

struct DataPoint {
  ParameterPoint theta;
  double scale = 1.0;
  /// Oracle verdict; empty when the problem is beyond the oracle's reach.
  std::optional<bool> feasible;
};

/// Independent engine for item `index` of stream `stream`: results do not
/// depend on generation order.
[[nodiscard]] std::mt19937_64 engine_for(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

/// Oracle feasibility, or empty if m2 exceeds the enumeration guard.
[[nodiscard]] std::optional<bool> oracle_feasible(const MpQpProblem& p, const ParameterPoint& theta);

/// Per-bus demand P_d · U(0.6, 1.4).
[[nodiscard]] std::vector<DataPoint> local_perturbation_dataset(const Dcopf& m, std::size_t count, std::uint64_t seed,
                                                                bool check_feasibility = true);

/// For each bus in turn, its demand swept over [0, ΣP⁺] in `steps` points
/// with every other bus at 0.01 MW.
[[nodiscard]] std::vector<DataPoint> extreme_dataset(const Dcopf& m, std::size_t steps = 100,
                                                     bool check_feasibility = true);

/// For each scale k, `per_scale` draws of demand r · k · P_d with one
/// r ~ U(0.6, 1.4) per draw. Draw i uses the same r at every scale.
[[nodiscard]] std::vector<DataPoint> scaled_dataset(const Dcopf& m, std::span<const double> scales,
                                                    std::size_t per_scale, std::uint64_t seed,
                                                    bool check_feasibility = true);

/// Search pattern anchored at scaled demand: for each k, sweeps start at
/// demand k·P_d and run both ways along every load bus's θ_e axis and along
/// P_d itself, out to shrink × the oracle feasibility boundary. Starts the
/// oracle rejects are skipped.
[[nodiscard]] SearchPattern demand_scaled_pattern(const Dcopf& m, std::span<const double> scales, std::size_t steps,
                                                  double shrink = 0.999);

/// Renewable output in units: exponential with the given rate, capped.
[[nodiscard]] double sample_renewable(std::mt19937_64& rng, double rate = 1.25, double cap = 1.5);
/// Mean of min(X, cap) for X ~ Exp(rate).
[[nodiscard]] double capped_exponential_mean(double rate, double cap);

/// Hourly demand multipliers in [0.6, 1.0], low at night and peaking in the evening.
[[nodiscard]] std::vector<double> diurnal_profile(std::size_t hours = 24);

struct PlanningOptions {
  std::size_t hours = 24;
  std::size_t samples = 500;
  /// MW per renewable unit at each bus listed in `renewable_buses`.
  double unit_mw = 10.0;
  std::vector<int> renewable_buses;
  std::uint64_t seed = 1;
};

/// hours × samples scenarios: demand follows the diurnal profile, each
/// renewable bus subtracts unit_mw · sample_renewable().
[[nodiscard]] std::vector<DataPoint> renewable_planning_dataset(const Dcopf& m, const PlanningOptions& opts);

/// CSV: header "scale,feasible,<stacked θ names>", one point per row;
/// feasible is 1, 0 or empty.
void write_dataset_csv(const std::vector<DataPoint>& pts, const MpQpProblem& p, const std::filesystem::path& path);
[[nodiscard]] std::vector<DataPoint> read_dataset_csv(const MpQpProblem& p, const std::filesystem::path& path);
void write_dataset_jsonl(const std::vector<DataPoint>& pts, const std::filesystem::path& path);
[[nodiscard]] std::vector<DataPoint> read_dataset_jsonl(const MpQpProblem& p, const std::filesystem::path& path);
/// Picks the reader by extension (.csv, otherwise JSON lines).
[[nodiscard]] std::vector<DataPoint> read_dataset(const MpQpProblem& p, const std::filesystem::path& path);

[[nodiscard]] std::vector<std::string> theta_column_names(const MpQpProblem& p);

}  // namespace cfqp

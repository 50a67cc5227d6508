#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cfqp/io.hpp"
#include "cfqp/model.hpp"
#include "cfqp/oracle.hpp"

namespace cfqp {

/// One sweep: points start + i·step for i = 0 … max_steps−1. `step` is in
/// the stacked θ layout of length d.
struct Direction {
  ParameterPoint start;
  Vector step;
  std::size_t max_steps = 1;
};

struct SearchPattern {
  std::vector<Direction> directions;
};

enum class TransitionKind { Add, Drop };

[[nodiscard]] std::string_view to_string(TransitionKind k) noexcept;

struct Transition {
  TransitionKind kind;
  std::size_t constraint;  ///< zero-based inequality index
  double magnitude = 0.0;  ///< normalized residual or |μ|
};

/// A change of the region in force between two consecutive evaluations.
struct RegionChange {
  std::size_t direction;
  std::size_t point;
  std::size_t from;
  std::size_t to;
  std::size_t distance;  ///< |ℬ_from Δ ℬ_to|
  bool discovered;       ///< true when `to` was created by this change
};

struct DiscoveryWarning {
  std::string kind;
  std::size_t direction;
  std::size_t point;
  std::string detail;
};

struct DiscoveryOptions {
  Precision precision = Precision::f64;
  /// KKT scalar threshold; 0 selects the precision default (1e-10 or 1e-4).
  double tol = 0.0;
  std::size_t max_halvings = 20;
  /// Ends a direction at the first point for which this returns false.
  std::function<bool(const ParameterPoint&)> feasible;
  /// Receives every log record as it is produced.
  std::function<void(const json&)> on_event;
};

[[nodiscard]] double default_tol(Precision p) noexcept;

struct DiscoveryResult {
  ClosedFormModel model;
  std::vector<json> events;
  std::vector<RegionChange> changes;
  std::vector<DiscoveryWarning> warnings;
  std::size_t points_visited = 0;
  /// Points where the region law in force is optimal but the composed network is not.
  std::size_t points_unresolved = 0;
  /// Sweep points skipped because no single add/drop crossed into their region.
  std::size_t points_unreached = 0;
  bool root_degenerate = false;
};

/// Learning via Discovery. The oracle is consulted once, at theta0; every
/// later region follows from an Add/Drop transition validated by the KKT
/// conditions of its own affine law. A crossing no single add/drop can make
/// ends its direction with an "unresolvable_transition" warning. Throws
/// InfeasibleStart.
[[nodiscard]] DiscoveryResult discover(std::shared_ptr<const MpQpProblem> problem, const ParameterPoint& theta0,
                                       const SearchPattern& pattern, const DiscoveryOptions& opts = {});

/// KKT scalar of a region's affine law at theta.
[[nodiscard]] double region_kkt(const MpQpProblem& problem, const RegionSlopes& slopes, const ParameterPoint& theta);

/// How deep theta sits inside a region: the smallest of the normalized active
/// duals and the normalized slacks of inactive rows. Negative outside.
[[nodiscard]] double region_margin(const MpQpProblem& problem, const RegionSlopes& slopes,
                                   const ParameterPoint& theta);

/// Next active set per the residuals of the current region's law at theta:
/// Add the inactive row with the largest normalized violation, or Drop the
/// active row with the most negative μ; when both exist the larger
/// normalized magnitude wins. Throws UnresolvableTransition when neither exists.
[[nodiscard]] Transition identify_transition(const MpQpProblem& problem, const RegionEntry& current,
                                             const ParameterPoint& theta);

[[nodiscard]] ActiveSet apply(const Transition& t, const ActiveSet& b, std::size_t m2);

/// One direction per nonzero entry of `extent` (stacked layout), from theta0
/// to theta0 + extent in `steps` uniform points.
[[nodiscard]] SearchPattern axis_sweep_pattern(const ParameterPoint& theta0, std::span<const double> extent,
                                               std::size_t steps);

/// Extent of a sweep along one stacked axis from a start point.
using ExtentFn = std::function<double(const ParameterPoint& start, std::size_t axis)>;

/// For each scale k and axis, a sweep starting at k·base along the axis out to
/// extent(k·base, axis). Directions with zero extent are omitted.
[[nodiscard]] SearchPattern scaled_base_pattern(const ParameterPoint& base, std::span<const double> scales,
                                                std::span<const std::size_t> axes, std::size_t steps,
                                                const ExtentFn& extent);

/// Largest t ∈ [0, cap] with theta0 + t·direction feasible, by bisection to
/// relative resolution 1e-6. Throws InfeasibleStart.
[[nodiscard]] double feasible_extent(const MpQpProblem& problem, const ParameterPoint& theta0,
                                     std::span<const double> direction, double cap);

/// ExtentFn backed by feasible_extent along the positive unit axis, scaled by
/// `shrink` so the last sweep point stays strictly inside.
[[nodiscard]] ExtentFn oracle_extent(const MpQpProblem& problem, double cap, double shrink = 1.0);

/// Two-sided continuity probe across the facet shared by two regions.
struct FacetCheck {
  std::size_t first = 0;
  std::size_t second = 0;
  ParameterPoint facet;
  double eps = 0.0;
  double jump = 0.0;   ///< ‖x(facet + eps·d) − x(facet − eps·d)‖∞ from the network
  double bound = 0.0;  ///< 2·eps·‖d‖∞·max of the two ‖∂x/∂θ‖∞, plus rounding slack
  [[nodiscard]] bool pass() const noexcept { return jump <= bound; }
};

/// For every pair of regions one add/drop apart, finds their shared facet on
/// the segment between the two witnesses (where the differing row's residual
/// or dual under the first law reaches zero) and probes the network at
/// ±eps along the segment. Pairs whose facet point is not certified by both
/// laws at `tol` are listed in `unlocated`.
struct ContinuityReport {
  std::vector<FacetCheck> checks;
  std::vector<std::pair<std::size_t, std::size_t>> unlocated;
};
[[nodiscard]] ContinuityReport facet_continuity(const ClosedFormModel& model, std::span<const double> eps,
                                                double tol = 1e-8);

[[nodiscard]] json to_json(const RegionChange& c);

}  // namespace cfqp
